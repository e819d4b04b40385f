#include "seisclass/ar_model.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "seisclass/rng.hpp"

namespace seisclass {
namespace {

std::vector<double> simulate_ar(const std::vector<double>& alpha, double c, std::size_t n, std::uint64_t seed,
                                double sigma = 1.0) {
  Rng rng(seed);
  const std::size_t burn = 2000;
  std::vector<double> x(n + burn, 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    double v = c + sigma * rng.normal();
    for (std::size_t i = 1; i <= alpha.size() && i <= t; ++i) v += alpha[i - 1] * x[t - i];
    x[t] = v;
  }
  return {x.begin() + burn, x.end()};
}

double variance(const std::vector<double>& x) {
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size());
}

// Least squares through the normal equations with an LDLT solve: an independent route to the same estimate.
struct NormalFit {
  Eigen::VectorXd beta;
  double rss;
};
NormalFit normal_equation_fit(const std::vector<double>& x, int p) {
  const int k = p + 1;
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd row(k);
  for (std::size_t t = static_cast<std::size_t>(p); t < x.size(); ++t) {
    row(0) = 1.0;
    for (int i = 1; i <= p; ++i) row(i) = x[t - static_cast<std::size_t>(i)];
    xtx += row * row.transpose();
    xty += row * x[t];
  }
  NormalFit f{xtx.ldlt().solve(xty), 0.0};
  for (std::size_t t = static_cast<std::size_t>(p); t < x.size(); ++t) {
    double pred = f.beta(0);
    for (int i = 1; i <= p; ++i) pred += f.beta(i) * x[t - static_cast<std::size_t>(i)];
    f.rss += (x[t] - pred) * (x[t] - pred);
  }
  return f;
}

TEST(ArFit, RecoversKnownAr2) {
  const auto x = simulate_ar({0.6, -0.2}, 0.0, 50000, 17);
  const auto m = fit_ar(x, 12);
  ASSERT_GE(m.order, 2);
  EXPECT_NEAR(m.coeffs[0], 0.6, 0.02);
  EXPECT_NEAR(m.coeffs[1], -0.2, 0.02);
  for (std::size_t i = 2; i < m.coeffs.size(); ++i) EXPECT_NEAR(m.coeffs[i], 0.0, 0.02);
  EXPECT_NEAR(m.sigma2, 1.0, 0.03);
}

TEST(ArFit, FixedOrderMatchesNormalEquations) {
  const auto x = simulate_ar({0.6, -0.2}, 0.3, 50000, 18);
  const auto m = fit_ar(x, 8, ArOrderCriterion::fixed(2));
  const auto ne = normal_equation_fit(x, 2);
  ASSERT_EQ(m.order, 2);
  EXPECT_NEAR(m.intercept, ne.beta(0), 1e-9);
  EXPECT_NEAR(m.coeffs[0], ne.beta(1), 1e-9);
  EXPECT_NEAR(m.coeffs[1], ne.beta(2), 1e-9);
  EXPECT_NEAR(m.sigma2, ne.rss / (x.size() - 2.0), 1e-9);
}

TEST(ArFit, SelectedOrderMinimizesAic) {
  const auto x = simulate_ar({0.5, -0.3, 0.2}, 0.0, 20000, 19);
  const int max_order = 10;
  const auto m = fit_ar(x, max_order);
  double best = std::numeric_limits<double>::infinity();
  int best_p = 0;
  for (int p = 1; p <= max_order; ++p) {
    const auto ne = normal_equation_fit(x, p);
    const double n_eff = static_cast<double>(x.size() - static_cast<std::size_t>(p));
    const double aic = n_eff * std::log(ne.rss / n_eff) + 2.0 * (p + 1);
    if (aic < best) {
      best = aic;
      best_p = p;
    }
  }
  EXPECT_EQ(m.order, best_p);
  EXPECT_NEAR(m.aic, best, 1e-6 * std::abs(best));
}

TEST(ArFit, WhiteNoise) {
  Rng rng(20);
  std::vector<double> x(40000);
  for (auto& v : x) v = 2.0 * rng.normal();
  const auto m = fit_ar(x, 16);
  for (double a : m.coeffs) EXPECT_LT(std::abs(a), 0.02);
  EXPECT_NEAR(m.sigma2, variance(x), 0.05 * variance(x));
}

TEST(ArFit, DegenerateAndShortInputs) {
  try {
    fit_ar(std::vector<double>(1000, 3.0), 4);
    FAIL() << "constant input accepted";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("degenerate signal"), std::string::npos);
  }
  EXPECT_THROW(fit_ar(std::vector<double>(10, 1.0), 10), ConfigError);
  EXPECT_THROW(fit_ar(std::vector<double>(15, 1.0), 10), DataError);
  EXPECT_THROW(fit_ar(std::vector<double>(100, 1.0), 0), ConfigError);
}

TEST(ArFit, RefitOnOwnSimulationStaysWithinThreeStandardErrors) {
  const auto x = simulate_ar({1.2, -0.5}, 0.0, 30000, 21);
  const auto first = fit_ar(x, 2, ArOrderCriterion::fixed(2));
  const std::size_t n = 30000;
  const auto path = simulate_ar(first.coeffs, first.intercept, n, 22, std::sqrt(first.sigma2));
  const auto second = fit_ar(path, 2, ArOrderCriterion::fixed(2));
  // asymptotic standard error of AR(2) coefficients: sqrt((1 - a2^2) / n)
  const double se = std::sqrt((1.0 - first.coeffs[1] * first.coeffs[1]) / static_cast<double>(n));
  EXPECT_NEAR(second.coeffs[0], first.coeffs[0], 3.0 * se);
  EXPECT_NEAR(second.coeffs[1], first.coeffs[1], 3.0 * se);
}

TEST(ArPredict, HandEvaluatedExamples) {
  ArModel ar1{1, 0.0, {1.0}, 1.0, 0, 0.0};
  const std::vector<double> x{3, 5, 7};
  const auto p1 = ar_predict_one_step(ar1, x);
  EXPECT_EQ(p1[1], 3.0);
  EXPECT_EQ(p1[2], 5.0);

  ArModel ar2{2, 1.0, {0.5, 0.25}, 1.0, 0, 0.0};
  const std::vector<double> y{4, 8, 100};
  EXPECT_EQ(ar_predict_one_step(ar2, y)[2], 6.0);
  EXPECT_THROW(ar_predict_one_step(ar2, std::vector<double>{1, 2}), DataError);
}

TEST(ArPredict, GoodFitOnLongArPath) {
  const std::vector<double> alpha{1.6, -0.8};
  const auto x = simulate_ar(alpha, 0.0, 100000, 23);
  const ArModel truth{2, 0.0, alpha, 1.0, 0, 0.0};
  const auto pred = ar_predict_one_step(truth, x);
  const std::vector<double> a(x.begin() + 2, x.end()), p(pred.begin() + 2, pred.end());
  const double r2 = r2_score(a, p);
  // theoretical value 1 - sigma^2 / var(x) for this AR(2) is about 0.924
  EXPECT_GE(r2, 0.85);
  EXPECT_NEAR(r2, 1.0 - 1.0 / variance(x), 0.005);
}

TEST(Pef, WhitensItsGenerator) {
  const std::vector<double> alpha{1.6, -0.8};
  const auto x = simulate_ar(alpha, 0.0, 100000, 24);
  const auto m = fit_ar(x, 16);
  const auto e = pef(x, m);
  const double ratio = variance(e) / variance(x);
  const double theory = m.sigma2 / variance(x);
  EXPECT_NEAR(ratio, theory, 0.1 * theory);
  EXPECT_LE(variance(e), variance(x));
}

TEST(Pef, DecompositionAndLeadingZeros) {
  const auto x = simulate_ar({0.7}, 0.5, 5000, 25);
  const auto m = fit_ar(x, 4);
  const auto pred = ar_predict_one_step(m, x);
  const auto e = pef(x, m);
  for (int t = 0; t < m.order; ++t) EXPECT_EQ(e[static_cast<std::size_t>(t)], 0.0);
  for (std::size_t t = static_cast<std::size_t>(m.order); t < x.size(); ++t) ASSERT_EQ(e[t], x[t] - pred[t]);
}

TEST(Pef, KeepsAnIsolatedSpike) {
  auto x = simulate_ar({1.6, -0.8}, 0.0, 20000, 26);
  const auto m = fit_ar(std::vector<double>(x.begin(), x.begin() + 10000), 16);
  const double amplitude = 50.0;
  const std::size_t at = 15000;
  x[at] += amplitude;
  const auto e = pef(x, m);
  EXPECT_GE(std::abs(e[at]), 0.8 * amplitude);
}

TEST(Pef, ZeroInZeroOut) {
  const ArModel m{3, 0.0, {0.3, -0.2, 0.1}, 1.0, 0, 0.0};
  for (double v : pef(std::vector<double>(100, 0.0), m)) EXPECT_EQ(v, 0.0);
}

TEST(R2, Examples) {
  const std::vector<double> a{1, 2, 3};
  EXPECT_EQ(r2_score(a, a), 1.0);
  EXPECT_EQ(r2_score(a, std::vector<double>{2, 2, 2}), 0.0);
  EXPECT_DOUBLE_EQ(r2_score(a, std::vector<double>{1, 2, 4}), 0.5);
  EXPECT_THROW(r2_score(std::vector<double>{1, 1}, std::vector<double>{1, 2}), DataError);
}

TEST(ArPersistence, RoundTripIsBitExact) {
  const auto x = simulate_ar({0.6, -0.2}, 0.1, 3000, 27);
  const auto m = fit_ar(x, 6);
  EXPECT_EQ(parse_ar_model(serialize_ar_model(m)), m);
  EXPECT_THROW(parse_ar_model("p=2\nc=0\nalpha=1\nsigma2=1\n"), DataError);
  EXPECT_THROW(parse_ar_model("garbage"), DataError);
}

}  // namespace
}  // namespace seisclass
