#include "seisclass/fft.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "seisclass/rng.hpp"

namespace seisclass {
namespace {

std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t) / static_cast<double>(n));
    out[k] = acc;
  }
  return out;
}

TEST(Fft, MatchesNaiveDft) {
  Rng rng(11);
  for (std::size_t n : {1u, 2u, 7u, 64u, 101u, 300u}) {
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal();
    const auto fast = rfft(x);
    const auto slow = naive_dft(x);
    ASSERT_EQ(fast.size(), slow.size());
    for (std::size_t k = 0; k < fast.size(); ++k) EXPECT_LT(std::abs(fast[k] - slow[k]), 1e-9 * static_cast<double>(n));
  }
}

TEST(Fft, SinusoidPeaksAtItsBin) {
  const std::size_t n = 256;
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t) x[t] = std::cos(2.0 * std::numbers::pi * 10.0 * static_cast<double>(t) / n);
  const auto mag = rfft_magnitude(x);
  EXPECT_NEAR(mag[10], n / 2.0, 1e-9);
  EXPECT_NEAR(mag[11], 0.0, 1e-9);
}

TEST(Fft, InputIsNotModified) {
  std::vector<double> x{1, 2, 3, 4, 5};
  const auto copy = x;
  (void)rfft(x);
  EXPECT_EQ(x, copy);
}

TEST(Fft, EmptyInputIsRejected) { EXPECT_THROW(rfft(std::vector<double>{}), DataError); }

}  // namespace
}  // namespace seisclass
