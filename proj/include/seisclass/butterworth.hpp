#pragma once

// Butterworth high-pass design (bilinear transform with pre-warping) and
// causal second-order-section filtering.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "seisclass/error.hpp"
#include "seisclass/text.hpp"
#include "seisclass/timeseries.hpp"

namespace seisclass {

/// One biquad: H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2).
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  std::complex<double> response(std::complex<double> z_inv) const {
    return (b0 + z_inv * (b1 + z_inv * b2)) / (1.0 + z_inv * (a1 + z_inv * a2));
  }

  /// Both poles strictly inside the unit circle (Jury conditions for a monic quadratic).
  bool stable(double margin = 1e-9) const {
    return std::abs(a2) < 1.0 - margin && std::abs(a1) < 1.0 + a2 - margin;
  }

  friend bool operator==(const Biquad&, const Biquad&) = default;
};

struct FilterCascade {
  std::vector<Biquad> sections;
  int order = 0;
  double corner_hz = 0.0;
  double fs_hz = 0.0;

  /// Complex response at a physical frequency.
  std::complex<double> response(double f_hz) const {
    const double w = 2.0 * std::numbers::pi * f_hz / fs_hz;
    const std::complex<double> z_inv = std::polar(1.0, -w);
    std::complex<double> h = 1.0;
    for (const auto& s : sections) h *= s.response(z_inv);
    return h;
  }

  double magnitude(double f_hz) const { return std::abs(response(f_hz)); }

  friend bool operator==(const FilterCascade&, const FilterCascade&) = default;
};

inline FilterCascade design_butterworth_highpass(int order, double corner_hz, double fs_hz) {
  if (order != 2 && order != 4 && order != 6 && order != 8)
    throw ConfigError("unsupported Butterworth order " + std::to_string(order) + " (expected 2, 4, 6 or 8)");
  if (!(fs_hz > 0.0)) throw ConfigError("sampling rate must be positive");
  if (!(corner_hz > 0.0) || !(corner_hz < fs_hz / 2.0))
    throw ConfigError("corner frequency " + text::format_exact(corner_hz) + " Hz must lie in (0, Nyquist = " +
                      text::format_exact(fs_hz / 2.0) + " Hz)");

  const double two_fs = 2.0 * fs_hz;
  const double warped = two_fs * std::tan(std::numbers::pi * corner_hz / fs_hz);

  FilterCascade cascade;
  cascade.order = order;
  cascade.corner_hz = corner_hz;
  cascade.fs_hz = fs_hz;

  // Low-pass prototype poles in the upper half plane; each pairs with its conjugate.
  for (int k = 0; k < order / 2; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + 1.0 + order) / (2.0 * order);
    const std::complex<double> proto = std::polar(1.0, theta);
    const std::complex<double> analog = warped / proto;  // s -> wc / s
    const std::complex<double> digital = (two_fs + analog) / (two_fs - analog);
    Biquad s;
    s.a1 = -2.0 * digital.real();
    s.a2 = std::norm(digital);
    // Double zero at z = 1; unit gain at Nyquist (z = -1).
    const double gain = (1.0 - s.a1 + s.a2) / 4.0;
    s.b0 = gain;
    s.b1 = -2.0 * gain;
    s.b2 = gain;
    cascade.sections.push_back(s);
  }
  return cascade;
}

/// Causal filtering, zero initial state, transposed direct form II per section.
inline std::vector<double> apply_filter(const FilterCascade& cascade, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  for (const auto& s : cascade.sections) {
    double z1 = 0.0, z2 = 0.0;
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

inline TimeSeries apply_filter(const FilterCascade& cascade, const TimeSeries& ts) {
  if (std::abs(ts.fs_hz() - cascade.fs_hz) > 1e-9 * cascade.fs_hz)
    throw ConfigError("filter designed for " + text::format_exact(cascade.fs_hz) + " Hz applied to a " +
                      text::format_exact(ts.fs_hz()) + " Hz series");
  return ts.with_samples(apply_filter(cascade, ts.view()));
}

/// One section per line: b0 b1 b2 1 a1 a2. A comment line carries the design.
inline void save_cascade(const FilterCascade& c, const std::string& path) {
  auto out = text::open_output(path);
  out << "# butterworth-highpass order=" << c.order << " corner_hz=" << text::format_exact(c.corner_hz)
      << " fs_hz=" << text::format_exact(c.fs_hz) << '\n';
  for (const auto& s : c.sections)
    out << text::format_exact(s.b0) << ' ' << text::format_exact(s.b1) << ' ' << text::format_exact(s.b2) << " 1 "
        << text::format_exact(s.a1) << ' ' << text::format_exact(s.a2) << '\n';
}

inline FilterCascade load_cascade(const std::string& path) {
  auto in = text::open_input(path);
  FilterCascade c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = text::trim(line);
    if (row.empty()) continue;
    if (row.front() == '#') {
      for (auto tok : text::split(row.substr(1), ' ')) {
        const auto eq = tok.find('=');
        if (eq == std::string_view::npos) continue;
        const auto key = tok.substr(0, eq);
        const auto val = tok.substr(eq + 1);
        if (key == "order") c.order = text::parse_int<int>(val).value_or(0);
        if (key == "corner_hz") c.corner_hz = text::parse_double(val).value_or(0.0);
        if (key == "fs_hz") c.fs_hz = text::parse_double(val).value_or(0.0);
      }
      continue;
    }
    std::vector<double> v;
    for (auto tok : text::split(row, ' ')) {
      if (text::trim(tok).empty()) continue;
      const auto d = text::parse_double(tok);
      if (!d) throw DataError("parse error at line " + std::to_string(line_no) + " of '" + path + "'");
      v.push_back(*d);
    }
    if (v.size() != 6 || v[3] != 1.0)
      throw DataError("expected six coefficients with a0 = 1 at line " + std::to_string(line_no) + " of '" + path + "'");
    c.sections.push_back({v[0], v[1], v[2], v[4], v[5]});
  }
  if (c.sections.empty() || !(c.fs_hz > 0.0)) throw DataError("incomplete filter file '" + path + "'");
  return c;
}

}  // namespace seisclass
