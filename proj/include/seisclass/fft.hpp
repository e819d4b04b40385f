#pragma once

// Real-input FFT magnitudes backed by FFTW. Plans are cached per length.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

#include "seisclass/error.hpp"

namespace seisclass {

namespace detail {

class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  /// Forward r2c transform of x; returns bins 0..n/2.
  std::vector<std::complex<double>> forward(std::span<const double> x) {
    const int n = static_cast<int>(x.size());
    const int bins = n / 2 + 1;
    auto* in = static_cast<double*>(fftw_malloc(sizeof(double) * static_cast<std::size_t>(n)));
    auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(bins)));
    if (!in || !out) {
      fftw_free(in);
      fftw_free(out);
      throw NumericError("FFT buffer allocation failed");
    }
    std::unique_ptr<double, decltype(&fftw_free)> in_guard(in, &fftw_free);
    std::unique_ptr<fftw_complex, decltype(&fftw_free)> out_guard(out, &fftw_free);
    fftw_plan plan;
    {
      // planner calls are not thread safe
      std::lock_guard lock(mutex_);
      auto it = plans_.find(n);
      if (it == plans_.end()) it = plans_.emplace(n, fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE)).first;
      plan = it->second;
    }
    std::copy(x.begin(), x.end(), in);
    fftw_execute_dft_r2c(plan, in, out);
    std::vector<std::complex<double>> result(static_cast<std::size_t>(bins));
    for (int k = 0; k < bins; ++k) result[static_cast<std::size_t>(k)] = {out[k][0], out[k][1]};
    return result;
  }

  ~FftPlanCache() {
    for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  FftPlanCache() = default;
  std::mutex mutex_;
  std::map<int, fftw_plan> plans_;
};

}  // namespace detail

/// Unnormalized DFT X_k = sum_t x_t exp(-2 pi i k t / n), k = 0..n/2.
inline std::vector<std::complex<double>> rfft(std::span<const double> x) {
  if (x.empty()) throw DataError("FFT of an empty sequence");
  return detail::FftPlanCache::instance().forward(x);
}

inline std::vector<double> rfft_magnitude(std::span<const double> x) {
  const auto spec = rfft(x);
  std::vector<double> mag(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) mag[k] = std::abs(spec[k]);
  return mag;
}

}  // namespace seisclass
