#pragma once

// Seeded synthetic seismic record: seasonal trend, stationary AR ambient noise
// with daytime bursts, precursor chirps and eruption transients, plus the
// per-sample ground-truth classes.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "seisclass/error.hpp"
#include "seisclass/rng.hpp"
#include "seisclass/text.hpp"
#include "seisclass/timeseries.hpp"

namespace seisclass {

struct SeasonalSpec {
  double amplitude = 1200.0;
  double period_s = 2400.0;
  double phase = 0.0;
};

struct AmbientSpec {
  std::vector<double> coefficients;
  double innovation_sigma = 1.0;
};

/// Anthropogenic bursts: the ambient innovations are scaled up by a smooth
/// envelope, so bursts share the ambient spectrum. Bursts start only inside
/// the daytime fraction [day_start, day_end) of each synthetic day.
struct BurstSpec {
  double rate_per_hour = 40.0;
  double amplitude_min = 4.0;
  double amplitude_max = 20.0;
  double duration_min_s = 5.0;
  double duration_max_s = 30.0;
  double day_start = 7.0 / 24.0;
  double day_end = 16.0 / 24.0;
};

/// Coefficients of a stationary AR process whose spectrum peaks at the given
/// frequencies; each (frequency, pole radius) pair contributes a conjugate pole pair.
inline std::vector<double> resonant_ar(const std::vector<std::pair<double, double>>& peaks, double fs_hz) {
  std::vector<double> poly{1.0};  // 1 + c1 z^-1 + ...
  for (const auto& [f, r] : peaks) {
    const double w = 2.0 * std::numbers::pi * f / fs_hz;
    const double q[3] = {1.0, -2.0 * r * std::cos(w), r * r};
    std::vector<double> next(poly.size() + 2, 0.0);
    for (std::size_t i = 0; i < poly.size(); ++i)
      for (std::size_t j = 0; j < 3; ++j) next[i + j] += poly[i] * q[j];
    poly = std::move(next);
  }
  std::vector<double> alpha;
  for (std::size_t i = 1; i < poly.size(); ++i) alpha.push_back(-poly[i]);
  return alpha;
}

struct SynthConfig {
  double fs_hz = 200.0;
  double t0_s = 0.0;
  double days = 3.0;
  double day_len_s = 2400.0;  // one synthetic "day" of samples
  SeasonalSpec seasonal;
  AmbientSpec ambient{resonant_ar({{3.0, 0.98}}, 200.0), 1.0};
  BurstSpec bursts;
  std::vector<double> event_times_s{420.0, 960.0, 1560.0, 2160.0, 2820.0, 3360.0, 3960.0, 4560.0,
                                    5220.0, 5760.0, 6360.0, 6960.0};
  double precursor_lead_s = 180.0;
  double precursor_amplitude = 1.5;
  double precursor_f_lo = 20.0;
  double precursor_f_hi = 40.0;
  double eruption_amplitude = 10.0;
  double eruption_len_s = 120.0;
  double eruption_f_hz = 25.0;
  std::uint64_t seed = 42;

  double duration_s() const { return days * day_len_s; }

  LabelPolicy label_policy() const {
    LabelPolicy p;
    p.class2_start_s = precursor_lead_s;
    p.class2_end_s = 0.0;
    p.class3_len_s = eruption_len_s;
    return p;
  }
};

/// Largest modulus among the roots of z^p - a1 z^{p-1} - ... - ap.
inline double ar_spectral_radius(const std::vector<double>& coeffs) {
  const auto p = static_cast<Eigen::Index>(coeffs.size());
  if (p == 0) return 0.0;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) companion(0, i) = coeffs[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
  const Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  double rho = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) rho = std::max(rho, std::abs(solver.eigenvalues()(i)));
  return rho;
}

struct SynthComponents {
  std::vector<double> seasonal;
  std::vector<double> ambient;  // stationary AR noise including bursts
  std::vector<double> precursor;
  std::vector<double> eruption;
  std::vector<double> burst_envelope;
};

struct SynthResult {
  TimeSeries signal;
  EventLog events;
  std::vector<int> classes;
  SynthComponents components;
};

namespace detail {

/// Raised-cosine taper of `ramp` seconds at both ends of a segment of length `len`.
inline double taper(double t, double len, double ramp) {
  if (t < 0.0 || t >= len) return 0.0;
  if (t < ramp) return 0.5 * (1.0 - std::cos(std::numbers::pi * t / ramp));
  if (len - t < ramp) return 0.5 * (1.0 - std::cos(std::numbers::pi * (len - t) / ramp));
  return 1.0;
}

inline void validate(const SynthConfig& c) {
  if (!(c.fs_hz > 0.0)) throw ConfigError("synth: fs_hz must be positive");
  if (!(c.days > 0.0) || !(c.day_len_s > 0.0)) throw ConfigError("synth: days and day_len_s must be positive");
  if (c.ambient.coefficients.empty()) throw ConfigError("synth: ambient AR needs at least one coefficient");
  if (!(c.ambient.innovation_sigma >= 0.0)) throw ConfigError("synth: innovation sigma must be non-negative");
  const double rho = ar_spectral_radius(c.ambient.coefficients);
  if (!(rho < 1.0))
    throw ConfigError("synth: ambient AR coefficients are not stationary (companion spectral radius " +
                      text::format_exact(rho) + " >= 1)");
  if (c.bursts.rate_per_hour < 0.0 || c.bursts.amplitude_min < 0.0 || c.bursts.amplitude_max < c.bursts.amplitude_min ||
      !(c.bursts.duration_min_s > 0.0) || c.bursts.duration_max_s < c.bursts.duration_min_s ||
      !(c.bursts.day_start >= 0.0 && c.bursts.day_start < c.bursts.day_end && c.bursts.day_end <= 1.0))
    throw ConfigError("synth: invalid burst settings");
  if (!(c.precursor_lead_s > 0.0) || !(c.eruption_len_s > 0.0))
    throw ConfigError("synth: precursor lead and eruption length must be positive");
  const EventLog events(c.event_times_s);
  const auto policy = c.label_policy();
  try {
    check_event_separation(events, policy);
  } catch (const DataError& e) {
    throw ConfigError(std::string("synth: overlapping events: ") + e.what());
  }
  for (double e : c.event_times_s)
    if (e < c.t0_s || e > c.t0_s + c.duration_s())
      throw ConfigError("synth: event at " + text::format_exact(e) + " s lies outside the record");
}

}  // namespace detail

inline SynthResult generate(const SynthConfig& config) {
  detail::validate(config);
  const auto n = static_cast<std::size_t>(std::llround(config.duration_s() * config.fs_hz));
  const double fs = config.fs_hz;
  const double two_pi = 2.0 * std::numbers::pi;
  SynthResult out;
  auto& comp = out.components;
  comp.seasonal.assign(n, 0.0);
  comp.ambient.assign(n, 0.0);
  comp.precursor.assign(n, 0.0);
  comp.eruption.assign(n, 0.0);
  comp.burst_envelope.assign(n, 0.0);

  // Independent streams so that changing one component's settings leaves the others untouched.
  Rng burst_rng(derive_seed(config.seed, 1));
  Rng noise_rng(derive_seed(config.seed, 2));

  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    comp.seasonal[i] = config.seasonal.amplitude * std::sin(two_pi * t / config.seasonal.period_s + config.seasonal.phase);
  }

  // Bursts: Poisson arrivals during daytime.
  const auto& b = config.bursts;
  if (b.rate_per_hour > 0.0 && b.amplitude_max > 0.0) {
    const double rate = b.rate_per_hour / 3600.0;
    const double day_span = (b.day_end - b.day_start) * config.day_len_s;
    for (double day0 = 0.0; day0 < config.duration_s(); day0 += config.day_len_s) {
      double t = day0 + b.day_start * config.day_len_s + burst_rng.exponential(rate);
      while (t < day0 + b.day_start * config.day_len_s + day_span && t < config.duration_s()) {
        const double amp = burst_rng.uniform(b.amplitude_min, b.amplitude_max);
        const double len = burst_rng.uniform(b.duration_min_s, b.duration_max_s);
        const auto i0 = static_cast<std::size_t>(t * fs);
        const auto i1 = std::min(n, static_cast<std::size_t>((t + len) * fs));
        for (std::size_t i = i0; i < i1; ++i) {
          const double u = (static_cast<double>(i) / fs - t) / len;
          comp.burst_envelope[i] += amp * std::sin(std::numbers::pi * u) * std::sin(std::numbers::pi * u);
        }
        t += burst_rng.exponential(rate);
      }
    }
  }

  // Ambient AR noise, started from a burned-in state.
  const auto& a = config.ambient.coefficients;
  const std::size_t p = a.size();
  const std::size_t burn_in = 20000;
  std::vector<double> hist(p, 0.0);  // hist[0] = most recent
  for (std::size_t i = 0; i < burn_in + n; ++i) {
    const double gain = i >= burn_in ? 1.0 + comp.burst_envelope[i - burn_in] : 1.0;
    double v = config.ambient.innovation_sigma * gain * noise_rng.normal();
    for (std::size_t k = 0; k < p; ++k) v += a[k] * hist[k];
    for (std::size_t k = p - 1; k > 0; --k) hist[k] = hist[k - 1];
    hist[0] = v;
    if (i >= burn_in) comp.ambient[i - burn_in] = v;
  }

  // Precursor chirps and eruption transients.
  for (double e : config.event_times_s) {
    const double rel_e = e - config.t0_s;
    const double lead = config.precursor_lead_s;
    const double sweep = (config.precursor_f_hi - config.precursor_f_lo) / lead;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      const double tp = t - (rel_e - lead);
      if (tp >= 0.0 && tp < lead) {
        const double phase = two_pi * (config.precursor_f_lo * tp + 0.5 * sweep * tp * tp);
        comp.precursor[i] += config.precursor_amplitude * detail::taper(tp, lead, 5.0) * std::sin(phase);
      }
      const double te = t - rel_e;
      if (te >= 0.0 && te < config.eruption_len_s) {
        const double modulation = 0.7 + 0.3 * std::sin(two_pi * 0.2 * te);
        comp.eruption[i] += config.eruption_amplitude * modulation * detail::taper(te, config.eruption_len_s, 2.0) *
                            std::sin(two_pi * config.eruption_f_hz * te);
      }
    }
  }

  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = comp.seasonal[i] + comp.ambient[i] + comp.precursor[i] + comp.eruption[i];
  out.signal = TimeSeries(std::move(x), fs, config.t0_s);
  out.events = EventLog(config.event_times_s);
  const auto policy = config.label_policy();
  out.classes.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.classes[i] = class_of_sample(out.signal.time_at(i), out.events, policy);
  return out;
}

struct SplitPart {
  TimeSeries series;
  EventLog events;
};

struct TrainTestSplit {
  SplitPart train;
  SplitPart test;
  std::size_t boundary_index = 0;
};

inline constexpr double kDefaultSplitRatio = 14.0 / 18.0;

/// Chronological split near ratio * n, moved to the nearest index whose
/// neighbouring samples are both Class 1.
inline TrainTestSplit split_train_test(const TimeSeries& ts, const EventLog& events, double ratio = kDefaultSplitRatio,
                                       const LabelPolicy& policy = {}) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie in (0, 1)");
  const std::size_t n = ts.size();
  if (n < 2) throw DataError("series too short to split");
  const auto quiet = [&](std::size_t k) {
    return k > 0 && k < n && class_of_sample(ts.time_at(k - 1), events, policy) == 1 &&
           class_of_sample(ts.time_at(k), events, policy) == 1;
  };
  const auto wanted = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  std::size_t boundary = 0;
  bool found = false;
  for (std::size_t d = 0; d < n && !found; ++d) {
    if (wanted >= d && quiet(wanted - d)) {
      boundary = wanted - d;
      found = true;
    } else if (wanted + d < n && quiet(wanted + d)) {
      boundary = wanted + d;
      found = true;
    }
  }
  if (!found) throw DataError("no Class-1 region to place the train/test boundary in");
  TrainTestSplit out;
  out.boundary_index = boundary;
  const double boundary_s = ts.time_at(boundary);
  out.train = {ts.slice(0, boundary), events.within(-std::numeric_limits<double>::infinity(), boundary_s)};
  out.test = {ts.slice(boundary, n - boundary), events.within(boundary_s, std::numeric_limits<double>::infinity())};
  return out;
}

}  // namespace seisclass
