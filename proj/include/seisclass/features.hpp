#pragma once

// Per-window feature extraction over a fixed, versioned catalog.
//
// Undefined features (moments of a constant window, the centroid of an empty
// spectrum, ...) are emitted as NaN. Callers impute them before training.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "seisclass/error.hpp"
#include "seisclass/fft.hpp"
#include "seisclass/text.hpp"

namespace seisclass {

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

inline bool is_undefined(double v) { return std::isnan(v); }

// ---------------------------------------------------------------------------
// Individual features

/// mean_t (x_{t+2lag}^2 x_{t+lag} - x_{t+lag} x_t^2), t over 0..n-2lag-1.
inline double feature_time_reversal_asymmetry(std::span<const double> x, int lag) {
  if (lag < 1) throw ConfigError("time-reversal asymmetry lag must be positive");
  const auto l = static_cast<std::size_t>(lag);
  if (x.size() <= 2 * l) throw DataError("time-reversal asymmetry lag " + std::to_string(lag) + " too large for series");
  const std::size_t m = x.size() - 2 * l;
  double acc = 0.0;
  for (std::size_t t = 0; t < m; ++t) acc += x[t + 2 * l] * x[t + 2 * l] * x[t + l] - x[t + l] * x[t] * x[t];
  return acc / static_cast<double>(m);
}

/// Smallest relative index i/n at which the cumulative |x| mass reaches q of the total.
inline double feature_index_mass_quantile(std::span<const double> x, double q) {
  if (!(q > 0.0 && q < 1.0)) throw ConfigError("index mass quantile q must lie in (0, 1)");
  double total = 0.0;
  for (double v : x) total += std::abs(v);
  if (!(total > 0.0)) throw DataError("index mass quantile of an all-zero series");
  double cum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cum += std::abs(x[i]);
    if (cum >= q * total) return static_cast<double>(i + 1) / static_cast<double>(x.size());
  }
  return 1.0;
}

/// Biased sample autocovariances gamma(0..max_lag).
inline std::vector<double> autocovariance(std::span<const double> x, std::size_t max_lag) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> gamma(max_lag + 1, 0.0);
  for (std::size_t k = 0; k <= max_lag && k < n; ++k) {
    double acc = 0.0;
    for (std::size_t t = 0; t + k < n; ++t) acc += (x[t] - mean) * (x[t + k] - mean);
    gamma[k] = acc / static_cast<double>(n);
  }
  return gamma;
}

/// Partial autocorrelations 1..max_lag from autocovariances (Durbin-Levinson).
inline std::vector<double> partial_autocorrelations(const std::vector<double>& gamma, std::size_t max_lag) {
  if (!(gamma[0] > 0.0)) throw DataError("partial autocorrelation of a zero-variance series");
  std::vector<double> pacf(max_lag + 1, 0.0);
  std::vector<double> phi(max_lag + 1, 0.0), prev(max_lag + 1, 0.0);
  double v = gamma[0];
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double num = gamma[k];
    for (std::size_t j = 1; j < k; ++j) num -= prev[j] * gamma[k - j];
    const double reflection = v > 0.0 ? num / v : 0.0;
    phi[k] = reflection;
    for (std::size_t j = 1; j < k; ++j) phi[j] = prev[j] - reflection * prev[k - j];
    v *= (1.0 - reflection * reflection);
    pacf[k] = reflection;
    prev = phi;
  }
  return pacf;
}

inline double feature_partial_autocorrelation(std::span<const double> x, int lag) {
  if (lag < 1) throw ConfigError("partial autocorrelation lag must be positive");
  const auto l = static_cast<std::size_t>(lag);
  if (x.size() <= 4 * l) throw DataError("series too short for partial autocorrelation at lag " + std::to_string(lag));
  return partial_autocorrelations(autocovariance(x, l), l)[l];
}

enum class ChunkAggregator { mean, var, min, max };

struct LinearTrend {
  double slope = 0.0;
  double intercept = 0.0;
  double r_value = kUndefined;
};

/// Aggregates consecutive full chunks, then fits a least-squares line over chunk index.
inline LinearTrend feature_aggregated_linear_trend(std::span<const double> x, std::size_t chunk_len,
                                                   ChunkAggregator aggregator) {
  if (chunk_len < 2) throw ConfigError("aggregated linear trend needs chunk_len >= 2");
  const std::size_t chunks = x.size() / chunk_len;
  if (chunks < 2) throw DataError("aggregated linear trend needs at least two chunks");
  std::vector<double> agg(chunks);
  for (std::size_t c = 0; c < chunks; ++c) {
    const auto part = x.subspan(c * chunk_len, chunk_len);
    double mean = 0.0;
    for (double v : part) mean += v;
    mean /= static_cast<double>(chunk_len);
    switch (aggregator) {
      case ChunkAggregator::mean: agg[c] = mean; break;
      case ChunkAggregator::var: {
        double ss = 0.0;
        for (double v : part) ss += (v - mean) * (v - mean);
        agg[c] = ss / static_cast<double>(chunk_len);
        break;
      }
      case ChunkAggregator::min: agg[c] = *std::min_element(part.begin(), part.end()); break;
      case ChunkAggregator::max: agg[c] = *std::max_element(part.begin(), part.end()); break;
    }
  }
  const double m = static_cast<double>(chunks);
  const double xbar = (m - 1.0) / 2.0;
  double ybar = 0.0;
  for (double v : agg) ybar += v;
  ybar /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    const double dx = static_cast<double>(c) - xbar, dy = agg[c] - ybar;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  LinearTrend out;
  out.slope = sxy / sxx;
  out.intercept = ybar - out.slope * xbar;
  out.r_value = syy > 0.0 ? sxy / std::sqrt(sxx * syy) : kUndefined;
  return out;
}

/// Linear-interpolation quantile of unsorted data.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw DataError("quantile of an empty sequence");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

enum class ChangeAggregator { mean, var };

/// Aggregate of |x_{t+1} - x_t| over consecutive pairs lying inside the
/// [ql, qh] quantile corridor. An empty corridor yields 0.
inline double feature_change_quantiles(std::span<const double> x, double ql, double qh, ChangeAggregator aggregator) {
  if (!(ql < qh) || ql < 0.0 || qh > 1.0) throw ConfigError("change quantiles need 0 <= ql < qh <= 1");
  if (x.size() < 2) return 0.0;
  const std::vector<double> copy(x.begin(), x.end());
  const double lo = quantile(copy, ql), hi = quantile(copy, qh);
  std::vector<double> changes;
  for (std::size_t t = 0; t + 1 < x.size(); ++t) {
    const bool a = x[t] >= lo && x[t] <= hi, b = x[t + 1] >= lo && x[t + 1] <= hi;
    if (a && b) changes.push_back(std::abs(x[t + 1] - x[t]));
  }
  if (changes.empty()) return 0.0;
  double mean = 0.0;
  for (double c : changes) mean += c;
  mean /= static_cast<double>(changes.size());
  if (aggregator == ChangeAggregator::mean) return mean;
  double ss = 0.0;
  for (double c : changes) ss += (c - mean) * (c - mean);
  return ss / static_cast<double>(changes.size());
}

/// |FFT| bins 1..k_max followed by centroid, variance, skew and kurtosis of the
/// magnitude spectrum treated as a distribution over frequency (Hz).
struct FftPack {
  std::vector<double> magnitudes;
  double centroid_hz = kUndefined;
  double variance = kUndefined;
  double skew = kUndefined;
  double kurtosis = kUndefined;
};

inline FftPack spectrum_pack(const std::vector<double>& mag, std::size_t n, double fs_hz, std::size_t k_max) {
  FftPack out;
  out.magnitudes.assign(mag.begin() + 1, mag.begin() + 1 + static_cast<std::ptrdiff_t>(k_max));
  double total = 0.0;
  for (double m : mag) total += m;
  if (!(total > 0.0)) return out;
  const double df = fs_hz / static_cast<double>(n);
  double m1 = 0.0;
  for (std::size_t k = 0; k < mag.size(); ++k) m1 += static_cast<double>(k) * df * mag[k];
  m1 /= total;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (std::size_t k = 0; k < mag.size(); ++k) {
    const double d = static_cast<double>(k) * df - m1;
    const double w = mag[k] / total;
    m2 += w * d * d;
    m3 += w * d * d * d;
    m4 += w * d * d * d * d;
  }
  out.centroid_hz = m1;
  out.variance = m2;
  if (m2 > 0.0) {
    out.skew = m3 / std::pow(m2, 1.5);
    out.kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return out;
}

inline FftPack feature_fft_pack(std::span<const double> x, std::size_t k_max, double fs_hz) {
  if (k_max < 1 || x.size() < 2 * k_max) throw DataError("series too short for " + std::to_string(k_max) + " FFT bins");
  return spectrum_pack(rfft_magnitude(x), x.size(), fs_hz, k_max);
}

// ---------------------------------------------------------------------------
// Catalog

enum class FeatureKind {
  mean,
  variance,
  standard_deviation,
  root_mean_square,
  skewness,
  kurtosis,
  abs_energy,
  absolute_sum_of_changes,
  zero_crossing_rate,
  binned_entropy,
  autocorrelation,
  partial_autocorrelation,
  time_reversal_asymmetry,
  index_mass_quantile,
  agg_trend_slope,
  agg_trend_rvalue,
  change_quantiles,
  fft_coefficient,
  spectral_centroid,
  spectral_variance,
  spectral_skew,
  spectral_kurtosis,
};

struct FeatureSpec {
  std::string name;
  FeatureKind kind;
  int lag = 0;       // lags, bin index, bin count, chunk count
  double q_lo = 0.0; // quantiles
  double q_hi = 0.0;
  int aggregator = 0;
};

struct FeatureCatalog {
  std::string version;
  std::vector<FeatureSpec> entries;

  std::size_t size() const noexcept { return entries.size(); }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& e : entries) out.push_back(e.name);
    return out;
  }
};

inline constexpr std::size_t kMinWindowSamples = 64;
inline constexpr std::size_t kFftBins = 32;
inline constexpr int kTrendChunks = 20;

inline FeatureCatalog default_catalog() {
  FeatureCatalog c;
  c.version = "curated-v1";
  auto add = [&](std::string name, FeatureKind kind, int lag = 0, double ql = 0.0, double qh = 0.0, int agg = 0) {
    c.entries.push_back({std::move(name), kind, lag, ql, qh, agg});
  };
  add("mean", FeatureKind::mean);
  add("variance", FeatureKind::variance);
  add("standard_deviation", FeatureKind::standard_deviation);
  add("root_mean_square", FeatureKind::root_mean_square);
  add("skewness", FeatureKind::skewness);
  add("kurtosis", FeatureKind::kurtosis);
  add("abs_energy", FeatureKind::abs_energy);
  add("absolute_sum_of_changes", FeatureKind::absolute_sum_of_changes);
  add("zero_crossing_rate", FeatureKind::zero_crossing_rate);
  add("binned_entropy__bins_10", FeatureKind::binned_entropy, 10);
  for (int lag : {1, 2, 5, 10}) add("autocorrelation__lag_" + std::to_string(lag), FeatureKind::autocorrelation, lag);
  for (int lag : {1, 2, 3, 5})
    add("partial_autocorrelation__lag_" + std::to_string(lag), FeatureKind::partial_autocorrelation, lag);
  for (int lag : {1, 2, 3})
    add("time_reversal_asymmetry__lag_" + std::to_string(lag), FeatureKind::time_reversal_asymmetry, lag);
  add("index_mass_quantile__q_0.1", FeatureKind::index_mass_quantile, 0, 0.1);
  add("index_mass_quantile__q_0.5", FeatureKind::index_mass_quantile, 0, 0.5);
  add("index_mass_quantile__q_0.9", FeatureKind::index_mass_quantile, 0, 0.9);
  const char* agg_names[] = {"mean", "var", "min", "max"};
  for (int a = 0; a < 4; ++a) {
    const std::string stem = std::string("agg_linear_trend__chunks_20__f_") + agg_names[a];
    add(stem + "__attr_slope", FeatureKind::agg_trend_slope, kTrendChunks, 0, 0, a);
    add(stem + "__attr_rvalue", FeatureKind::agg_trend_rvalue, kTrendChunks, 0, 0, a);
  }
  add("change_quantiles__ql_0.0__qh_0.8__f_mean", FeatureKind::change_quantiles, 0, 0.0, 0.8, 0);
  add("change_quantiles__ql_0.2__qh_0.8__f_mean", FeatureKind::change_quantiles, 0, 0.2, 0.8, 0);
  add("change_quantiles__ql_0.2__qh_0.8__f_var", FeatureKind::change_quantiles, 0, 0.2, 0.8, 1);
  add("change_quantiles__ql_0.4__qh_1.0__f_mean", FeatureKind::change_quantiles, 0, 0.4, 1.0, 0);
  for (int k = 1; k <= static_cast<int>(kFftBins); ++k)
    add("fft_coefficient__k_" + std::to_string(k) + "__abs", FeatureKind::fft_coefficient, k);
  add("spectral_centroid", FeatureKind::spectral_centroid);
  add("spectral_variance", FeatureKind::spectral_variance);
  add("spectral_skew", FeatureKind::spectral_skew);
  add("spectral_kurtosis", FeatureKind::spectral_kurtosis);
  return c;
}

struct FeatureVector {
  std::vector<double> values;
  double window_start_s = 0.0;
};

namespace detail {

// Per-window quantities reused by several catalog entries.
struct WindowStats {
  std::span<const double> x;
  std::vector<double> centered;
  double mean = 0.0;
  double var = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  std::vector<double> gamma;
  std::vector<double> pacf;
  FftPack spectrum;
};

inline WindowStats window_stats(std::span<const double> x, double fs_hz, std::size_t max_lag) {
  WindowStats s;
  s.x = x;
  const auto n = static_cast<double>(x.size());
  for (double v : x) s.mean += v;
  s.mean /= n;
  s.centered.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - s.mean;
    s.centered[i] = d;
    s.var += d * d;
    s.m3 += d * d * d;
    s.m4 += d * d * d * d;
  }
  s.var /= n;
  s.m3 /= n;
  s.m4 /= n;
  s.gamma = autocovariance(x, max_lag);
  if (s.var > 0.0) s.pacf = partial_autocorrelations(s.gamma, max_lag);
  s.spectrum = feature_fft_pack(x, kFftBins, fs_hz);
  return s;
}

inline double binned_entropy(std::span<const double> x, int bins) {
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return 0.0;
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  for (double v : x) {
    auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * bins);
    ++counts[std::min(b, static_cast<std::size_t>(bins - 1))];
  }
  double h = 0.0;
  for (auto c : counts)
    if (c) {
      const double p = static_cast<double>(c) / static_cast<double>(x.size());
      h -= p * std::log(p);
    }
  return h;
}

inline double evaluate(const FeatureSpec& f, const WindowStats& s) {
  const auto x = s.x;
  const auto n = x.size();
  switch (f.kind) {
    case FeatureKind::mean: return s.mean;
    case FeatureKind::variance: return s.var;
    case FeatureKind::standard_deviation: return std::sqrt(s.var);
    case FeatureKind::root_mean_square: {
      double ss = 0.0;
      for (double v : x) ss += v * v;
      return std::sqrt(ss / static_cast<double>(n));
    }
    case FeatureKind::skewness: return s.var > 0.0 ? s.m3 / std::pow(s.var, 1.5) : kUndefined;
    case FeatureKind::kurtosis: return s.var > 0.0 ? s.m4 / (s.var * s.var) - 3.0 : kUndefined;
    case FeatureKind::abs_energy: {
      double ss = 0.0;
      for (double v : x) ss += v * v;
      return ss;
    }
    case FeatureKind::absolute_sum_of_changes: {
      double acc = 0.0;
      for (std::size_t t = 0; t + 1 < n; ++t) acc += std::abs(x[t + 1] - x[t]);
      return acc;
    }
    case FeatureKind::zero_crossing_rate: {
      std::size_t crossings = 0;
      for (std::size_t t = 0; t + 1 < n; ++t)
        if ((x[t] < 0.0 && x[t + 1] >= 0.0) || (x[t] >= 0.0 && x[t + 1] < 0.0)) ++crossings;
      return static_cast<double>(crossings) / static_cast<double>(n - 1);
    }
    case FeatureKind::binned_entropy: return binned_entropy(x, f.lag);
    case FeatureKind::autocorrelation:
      return s.var > 0.0 ? s.gamma[static_cast<std::size_t>(f.lag)] / s.gamma[0] : kUndefined;
    case FeatureKind::partial_autocorrelation:
      return s.pacf.empty() ? kUndefined : s.pacf[static_cast<std::size_t>(f.lag)];
    case FeatureKind::time_reversal_asymmetry:
      // computed on the centered window so the value does not move with the DC level
      return feature_time_reversal_asymmetry(s.centered, f.lag);
    case FeatureKind::index_mass_quantile: {
      for (double v : x)
        if (v != 0.0) return feature_index_mass_quantile(x, f.q_lo);
      return kUndefined;
    }
    case FeatureKind::agg_trend_slope:
    case FeatureKind::agg_trend_rvalue: {
      const auto trend = feature_aggregated_linear_trend(x, n / static_cast<std::size_t>(f.lag),
                                                         static_cast<ChunkAggregator>(f.aggregator));
      return f.kind == FeatureKind::agg_trend_slope ? trend.slope : trend.r_value;
    }
    case FeatureKind::change_quantiles:
      return feature_change_quantiles(x, f.q_lo, f.q_hi, static_cast<ChangeAggregator>(f.aggregator));
    case FeatureKind::fft_coefficient: return s.spectrum.magnitudes[static_cast<std::size_t>(f.lag - 1)];
    case FeatureKind::spectral_centroid: return s.spectrum.centroid_hz;
    case FeatureKind::spectral_variance: return s.spectrum.variance;
    case FeatureKind::spectral_skew: return s.spectrum.skew;
    case FeatureKind::spectral_kurtosis: return s.spectrum.kurtosis;
  }
  return kUndefined;
}

}  // namespace detail

inline FeatureVector extract_features(std::span<const double> window, const FeatureCatalog& catalog, double fs_hz,
                                      double window_start_s = 0.0) {
  if (window.size() < kMinWindowSamples)
    throw DataError("window of " + std::to_string(window.size()) + " samples is shorter than the minimum of " +
                    std::to_string(kMinWindowSamples));
  for (double v : window)
    if (!std::isfinite(v)) throw DataError("non-finite sample in feature window");
  std::size_t max_lag = 1;
  for (const auto& f : catalog.entries)
    if (f.kind == FeatureKind::autocorrelation || f.kind == FeatureKind::partial_autocorrelation)
      max_lag = std::max(max_lag, static_cast<std::size_t>(f.lag));
  const auto stats = detail::window_stats(window, fs_hz, max_lag);
  FeatureVector fv;
  fv.window_start_s = window_start_s;
  fv.values.reserve(catalog.size());
  for (const auto& f : catalog.entries) fv.values.push_back(detail::evaluate(f, stats));
  return fv;
}

}  // namespace seisclass
