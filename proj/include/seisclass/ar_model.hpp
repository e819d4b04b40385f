#pragma once

// AR(p) noise model: least-squares fit with AIC order selection, one-step
// prediction on observed lags, and the prediction-error filter built on it.

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "seisclass/error.hpp"
#include "seisclass/text.hpp"
#include "seisclass/timeseries.hpp"

namespace seisclass {

/// X_t = intercept + sum_i coeffs[i-1] * X_{t-i} + e_t
struct ArModel {
  int order = 0;
  double intercept = 0.0;
  std::vector<double> coeffs;
  double sigma2 = 0.0;
  std::size_t n_train = 0;
  double aic = std::numeric_limits<double>::quiet_NaN();

  friend bool operator==(const ArModel& a, const ArModel& b) {
    const auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
    return a.order == b.order && a.intercept == b.intercept && a.coeffs == b.coeffs && a.sigma2 == b.sigma2 &&
           a.n_train == b.n_train && same(a.aic, b.aic);
  }
};

struct ArOrderCriterion {
  std::optional<int> fixed_order;  // empty: AIC search over 1..max_order

  static ArOrderCriterion aic() { return {}; }
  static ArOrderCriterion fixed(int p) { return {p}; }
};

/// Backward-error bound the least-squares solution must meet.
inline constexpr double kArSolveTolerance = 1e-8;

namespace detail {

struct OlsResult {
  Eigen::VectorXd beta;
  double rss = 0.0;
};

/// Regress x_t on [1, x_{t-1}, ..., x_{t-p}] for t = p..n-1 via Householder QR.
inline OlsResult ar_least_squares(std::span<const double> x, int p) {
  const auto n = static_cast<Eigen::Index>(x.size());
  const Eigen::Index rows = n - p;
  Eigen::MatrixXd design(rows, p + 1);
  Eigen::VectorXd target(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index t = r + p;
    design(r, 0) = 1.0;
    for (int i = 1; i <= p; ++i) design(r, i) = x[static_cast<std::size_t>(t - i)];
    target(r) = x[static_cast<std::size_t>(t)];
  }

  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(design);
  const auto& packed = qr.matrixQR();
  double max_diag = 0.0;
  for (Eigen::Index i = 0; i <= p; ++i) max_diag = std::max(max_diag, std::abs(packed(i, i)));
  for (Eigen::Index i = 0; i <= p; ++i)
    if (!(std::abs(packed(i, i)) > 1e-10 * max_diag)) throw NumericError("degenerate signal: AR regression matrix is singular");

  OlsResult out;
  out.beta = qr.solve(target);
  const Eigen::VectorXd resid = target - design * out.beta;
  out.rss = resid.squaredNorm();

  const double scale = design.norm() * std::max(resid.norm(), std::numeric_limits<double>::epsilon() * target.norm());
  const double backward = scale > 0.0 ? (design.transpose() * resid).norm() / scale : 0.0;
  if (!std::isfinite(backward) || backward > kArSolveTolerance)
    throw NumericError("AR least-squares solve missed tolerance (relative residual " + text::format_exact(backward) + ")");
  return out;
}

}  // namespace detail

inline double ar_aic(double rss, std::size_t n, int p) {
  const double m = static_cast<double>(n - static_cast<std::size_t>(p));
  return m * std::log(rss / m) + 2.0 * (p + 1);
}

inline ArModel fit_ar(std::span<const double> x, int max_order, ArOrderCriterion criterion = ArOrderCriterion::aic()) {
  if (max_order < 1) throw ConfigError("AR max order must be at least 1");
  if (static_cast<std::size_t>(max_order) >= x.size()) throw ConfigError("AR max order must be below the series length");
  if (x.size() <= static_cast<std::size_t>(max_order) + 10)
    throw DataError("series of " + std::to_string(x.size()) + " samples is too short for AR order " + std::to_string(max_order));
  for (double v : x)
    if (!std::isfinite(v)) throw DataError("non-finite sample in AR training data");

  int lo = 1, hi = max_order;
  if (criterion.fixed_order) {
    if (*criterion.fixed_order < 1 || *criterion.fixed_order > max_order)
      throw ConfigError("fixed AR order must lie in [1, max_order]");
    lo = hi = *criterion.fixed_order;
  }

  ArModel best;
  for (int p = lo; p <= hi; ++p) {
    const auto fit = detail::ar_least_squares(x, p);
    if (!(fit.rss > 0.0)) {
      // exact fit; AIC is -inf, nothing can beat it
      best = {p, fit.beta(0), {}, 0.0, x.size(), -std::numeric_limits<double>::infinity()};
      for (int i = 1; i <= p; ++i) best.coeffs.push_back(fit.beta(i));
      break;
    }
    const double aic = ar_aic(fit.rss, x.size(), p);
    if (best.order == 0 || aic < best.aic) {
      best.order = p;
      best.intercept = fit.beta(0);
      best.coeffs.assign(fit.beta.data() + 1, fit.beta.data() + 1 + p);
      best.sigma2 = fit.rss / static_cast<double>(x.size() - static_cast<std::size_t>(p));
      best.n_train = x.size();
      best.aic = aic;
    }
  }
  for (double a : best.coeffs)
    if (!std::isfinite(a)) throw NumericError("AR fit produced non-finite coefficients");
  return best;
}

inline ArModel fit_ar(const TimeSeries& ts, int max_order, ArOrderCriterion criterion = ArOrderCriterion::aic()) {
  return fit_ar(ts.view(), max_order, criterion);
}

/// One-step predictions from observed lags. The first `order` outputs have no
/// complete lag vector and are copies of the input.
inline std::vector<double> ar_predict_one_step(const ArModel& model, std::span<const double> x) {
  const auto p = static_cast<std::size_t>(model.order);
  if (model.order < 1 || model.coeffs.size() != p) throw ConfigError("AR model is incomplete");
  if (x.size() <= p)
    throw DataError("series of " + std::to_string(x.size()) + " samples is too short for an AR(" + std::to_string(p) + ") prediction");
  std::vector<double> pred(x.begin(), x.end());
  for (std::size_t t = p; t < x.size(); ++t) {
    double acc = model.intercept;
    for (std::size_t i = 1; i <= p; ++i) acc += model.coeffs[i - 1] * x[t - i];
    pred[t] = acc;
  }
  return pred;
}

inline TimeSeries ar_predict_one_step(const ArModel& model, const TimeSeries& ts) {
  return ts.with_samples(ar_predict_one_step(model, ts.view()));
}

/// Prediction error: x minus its one-step prediction; zero for the first `order` samples.
inline std::vector<double> pef(std::span<const double> x, const ArModel& model) {
  const auto pred = ar_predict_one_step(model, x);
  std::vector<double> out(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) out[t] = x[t] - pred[t];
  for (std::size_t t = 0; t < static_cast<std::size_t>(model.order); ++t) out[t] = 0.0;
  return out;
}

inline TimeSeries pef(const TimeSeries& x_h, const ArModel& model) { return x_h.with_samples(pef(x_h.view(), model)); }

inline double r2_score(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw DataError("r2_score: length mismatch");
  if (actual.size() < 2) throw DataError("r2_score needs at least two samples");
  double mean = 0.0;
  for (double a : actual) mean += a;
  mean /= static_cast<double>(actual.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
  }
  if (!(ss_tot > 0.0)) throw DataError("r2_score: actual values have zero variance");
  return 1.0 - ss_res / ss_tot;
}

inline std::string serialize_ar_model(const ArModel& m) {
  std::string s;
  s += "p=" + std::to_string(m.order) + '\n';
  s += "c=" + text::format_exact(m.intercept) + '\n';
  s += "alpha=" + text::join_exact(m.coeffs) + '\n';
  s += "sigma2=" + text::format_exact(m.sigma2) + '\n';
  s += "n_train=" + std::to_string(m.n_train) + '\n';
  s += "aic=" + text::format_exact(m.aic) + '\n';
  return s;
}

inline ArModel parse_ar_model(const std::string& body) {
  ArModel m;
  bool has_p = false, has_c = false, has_alpha = false, has_sigma = false;
  std::size_t line_no = 0;
  for (auto line : text::split(body, '\n')) {
    ++line_no;
    line = text::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw DataError("AR model: expected key=value at line " + std::to_string(line_no));
    const auto key = text::trim(line.substr(0, eq));
    const auto val = text::trim(line.substr(eq + 1));
    const auto num = [&] {
      auto v = text::parse_double(val);
      if (!v) throw DataError("AR model: bad number at line " + std::to_string(line_no));
      return *v;
    };
    if (key == "p") {
      const auto p = text::parse_int<int>(val);
      if (!p || *p < 1) throw DataError("AR model: bad order at line " + std::to_string(line_no));
      m.order = *p;
      has_p = true;
    } else if (key == "c") {
      m.intercept = num();
      has_c = true;
    } else if (key == "alpha") {
      m.coeffs = text::parse_double_list(val);
      has_alpha = true;
    } else if (key == "sigma2") {
      m.sigma2 = num();
      has_sigma = true;
    } else if (key == "n_train") {
      m.n_train = text::parse_int<std::size_t>(val).value_or(0);
    } else if (key == "aic") {
      m.aic = num();
    }
  }
  if (!(has_p && has_c && has_alpha && has_sigma)) throw DataError("AR model: missing p, c, alpha or sigma2");
  if (m.coeffs.size() != static_cast<std::size_t>(m.order)) throw DataError("AR model: alpha length differs from p");
  if (!(m.sigma2 >= 0.0)) throw DataError("AR model: sigma2 must be non-negative");
  return m;
}

inline void save_ar_model(const ArModel& m, const std::string& path) {
  auto out = text::open_output(path);
  out << serialize_ar_model(m);
}

inline ArModel load_ar_model(const std::string& path) { return parse_ar_model(text::read_file(path)); }

}  // namespace seisclass
