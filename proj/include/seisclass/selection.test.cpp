#include "seisclass/selection.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace seisclass;

namespace {

FeatureMatrix make_matrix(const std::vector<std::vector<double>>& columns, const std::vector<int>& labels) {
  FeatureMatrix m;
  m.catalog_version = "test";
  for (std::size_t j = 0; j < columns.size(); ++j) m.names.push_back("f" + std::to_string(j));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::vector<double> row;
    for (const auto& c : columns) row.push_back(c[i]);
    m.rows.push_back(row);
    m.window_starts.push_back(60.0 * static_cast<double>(i));
    m.labels.push_back(labels[i]);
  }
  return m;
}

std::vector<int> balanced_labels(std::size_t n) {
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % 3) + 1;
  return y;
}

// Exact two-sided Mann-Whitney p-value by enumerating every assignment of group membership.
double exact_mw_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> all(a);
  all.insert(all.end(), b.begin(), b.end());
  const std::size_t n = all.size(), n1 = a.size();
  auto u_of = [&](unsigned mask) {
    double u = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1u)
        for (std::size_t j = 0; j < n; ++j)
          if (!(mask >> j & 1u)) u += all[i] > all[j] ? 1.0 : all[i] == all[j] ? 0.5 : 0.0;
    return u;
  };
  const double mu = static_cast<double>(n1 * (n - n1)) / 2.0;
  const double observed = std::abs(u_of((1u << n1) - 1u) - mu);
  double hits = 0.0, total = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != n1) continue;
    total += 1.0;
    if (std::abs(u_of(mask) - mu) >= observed - 1e-12) hits += 1.0;
  }
  return hits / total;
}

}  // namespace

TEST(MannWhitney, NormalApproximationTracksExactPermutation) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(8), b(8);
    for (auto& v : a) v = z(gen) + 0.8;
    for (auto& v : b) v = z(gen);
    std::vector<double> values(a);
    values.insert(values.end(), b.begin(), b.end());
    std::vector<bool> in_group(16, false);
    for (int i = 0; i < 8; ++i) in_group[static_cast<std::size_t>(i)] = true;
    EXPECT_NEAR(mann_whitney_p(values, in_group), exact_mw_p(a, b), 0.03) << "trial " << trial;
  }
}

TEST(MannWhitney, EmptyGroupIsUninformative) {
  EXPECT_EQ(mann_whitney_p({1, 2, 3}, {false, false, false}), 1.0);
}

TEST(BenjaminiHochberg, StepUpHandExample) {
  // sorted p: .001 .008 .039 .041 .042 .06 .074 .205 ; thresholds q*i/m with q=.05, m=8
  const std::vector<double> p{0.039, 0.001, 0.205, 0.041, 0.008, 0.074, 0.042, 0.06};
  const auto keep = benjamini_hochberg(p, 0.05);
  const std::vector<bool> expected{false, true, false, false, true, false, false, false};
  EXPECT_EQ(keep, expected);
  const auto loose = benjamini_hochberg(p, 0.4);
  EXPECT_EQ(std::count(loose.begin(), loose.end(), true), 8);
}

TEST(SelectFeatures, PerfectSeparatorSelectedWithTinyP) {
  const auto y = balanced_labels(90);
  std::vector<double> exact(y.begin(), y.end());
  std::mt19937_64 gen(1);
  std::normal_distribution<double> z;
  std::vector<double> noise(90);
  for (auto& v : noise) v = z(gen);
  const auto mask = select_features(make_matrix({noise, exact}, y), 0.05);
  EXPECT_TRUE(mask.selected[1]);
  EXPECT_LT(mask.p_values[1], 1e-8);
}

TEST(SelectFeatures, ConstantFeatureNeverTested) {
  const auto y = balanced_labels(30);
  std::vector<double> exact(y.begin(), y.end()), flat(30, 4.2);
  const auto mask = select_features(make_matrix({flat, exact}, y), 0.05);
  EXPECT_FALSE(mask.selected[0]);
  EXPECT_EQ(mask.p_values[0], 1.0);
}

TEST(SelectFeatures, IidNoiseRejectedInMostTrials) {
  const auto y = balanced_labels(500);
  int rejected = 0;
  constexpr int trials = 100;
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 gen(1000 + static_cast<unsigned>(t));
    std::normal_distribution<double> z;
    std::vector<double> signal(y.begin(), y.end()), noise(500);
    for (auto& v : noise) v = z(gen);
    const auto mask = select_features(make_matrix({signal, noise}, y), 0.05);
    if (!mask.selected[1]) ++rejected;
  }
  EXPECT_GE(rejected, 95);
}

TEST(SelectFeatures, MonotoneInQ) {
  const auto y = balanced_labels(60);
  std::mt19937_64 gen(9);
  std::normal_distribution<double> z;
  std::vector<std::vector<double>> cols(20, std::vector<double>(60));
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < 60; ++i) cols[j][i] = z(gen) + 0.15 * static_cast<double>(j % 5) * y[i];
  const auto m = make_matrix(cols, y);
  FeatureMask prev;
  for (double q : {0.001, 0.01, 0.05, 0.1, 0.3, 0.6, 1.0}) {
    const auto cur = select_features(m, q);
    if (!prev.selected.empty()) {
      for (std::size_t j = 0; j < cols.size(); ++j) EXPECT_TRUE(!prev.selected[j] || cur.selected[j]) << "q=" << q;
    }
    prev = cur;
  }
}

TEST(SelectFeatures, CapKeepsSmallestP) {
  const auto y = balanced_labels(60);
  std::vector<std::vector<double>> cols;
  for (int j = 0; j < 6; ++j) {
    std::vector<double> c(60);
    // strength decreases with j by mixing in a label-free ramp
    for (std::size_t i = 0; i < 60; ++i) c[i] = y[i] + 0.4 * j * static_cast<double>((i * 37) % 11);
    cols.push_back(c);
  }
  const auto full = select_features(make_matrix(cols, y), 1.0);
  const auto capped = select_features(make_matrix(cols, y), 1.0, 2);
  EXPECT_EQ(capped.count(), 2u);
  for (auto j : capped.indices()) {
    for (std::size_t k = 0; k < cols.size(); ++k)
      if (!capped.selected[k] && full.selected[k]) {
        EXPECT_LE(full.p_values[j], full.p_values[k]);
      }
  }
}

TEST(SelectFeatures, Errors) {
  const auto y = balanced_labels(30);
  std::vector<double> c(y.begin(), y.end());
  EXPECT_THROW(select_features(make_matrix({c}, std::vector<int>(30, 2)), 0.05), DataError);
  EXPECT_THROW(select_features(make_matrix({std::vector<double>(5, 1.0)}, {1, 2, 1, 2, 1}), 0.05), DataError);
  EXPECT_THROW(select_features(make_matrix({c}, y), 0.0), ConfigError);
  auto bad = make_matrix({c}, y);
  bad.rows[3][0] = kUndefined;
  EXPECT_THROW(select_features(bad, 0.05), DataError);
}

TEST(Imputation, ColumnMediansIgnoreUndefined) {
  auto m = make_matrix({{1, kUndefined, 3, 10}, {kUndefined, kUndefined, kUndefined, kUndefined}}, {1, 2, 1, 2});
  const auto med = column_medians(m);
  EXPECT_EQ(med[0], 3.0);
  EXPECT_EQ(med[1], 0.0);
  impute(m, med);
  EXPECT_EQ(m.rows[1][0], 3.0);
  EXPECT_EQ(m.rows[2][1], 0.0);
}

TEST(Persistence, MatrixAndMaskRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "seisclass_selection_test";
  std::filesystem::create_directories(dir);
  const auto y = balanced_labels(30);
  std::vector<double> a(y.begin(), y.end()), b(30);
  for (std::size_t i = 0; i < 30; ++i) b[i] = std::sin(0.1 * static_cast<double>(i)) / 3.0;
  const auto m = make_matrix({a, b}, y);
  save_feature_matrix(m, (dir / "m.csv").string());
  EXPECT_EQ(load_feature_matrix((dir / "m.csv").string()), m);
  const auto mask = select_features(m, 0.05);
  save_feature_mask(mask, (dir / "mask.csv").string());
  EXPECT_EQ(load_feature_mask((dir / "mask.csv").string()), mask);
  std::filesystem::remove_all(dir);
}
