#pragma once

// Feature matrices, median imputation and relevance-based feature selection
// (Mann-Whitney U one-vs-rest, Bonferroni over classes, Benjamini-Hochberg over features).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "seisclass/error.hpp"
#include "seisclass/features.hpp"
#include "seisclass/text.hpp"

namespace seisclass {

/// Rows are windows, columns are catalog features.
struct FeatureMatrix {
  std::string catalog_version;
  std::vector<std::string> names;
  std::vector<double> window_starts;
  std::vector<int> labels;
  std::vector<std::vector<double>> rows;

  std::size_t n_rows() const noexcept { return rows.size(); }
  std::size_t n_cols() const noexcept { return names.size(); }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = rows[i][j];
    return out;
  }

  void add_row(const FeatureVector& fv, int label) {
    if (fv.values.size() != names.size()) throw DataError("feature vector length differs from matrix width");
    rows.push_back(fv.values);
    window_starts.push_back(fv.window_start_s);
    labels.push_back(label);
  }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

/// Column medians over defined (non-NaN) entries; 0 for all-undefined columns.
inline std::vector<double> column_medians(const FeatureMatrix& m) {
  std::vector<double> med(m.n_cols(), 0.0);
  for (std::size_t j = 0; j < m.n_cols(); ++j) {
    std::vector<double> col;
    for (const auto& r : m.rows)
      if (!is_undefined(r[j])) col.push_back(r[j]);
    if (col.empty()) continue;
    std::sort(col.begin(), col.end());
    const std::size_t h = col.size() / 2;
    med[j] = col.size() % 2 ? col[h] : 0.5 * (col[h - 1] + col[h]);
  }
  return med;
}

inline void impute(std::vector<double>& values, const std::vector<double>& medians) {
  if (values.size() != medians.size()) throw DataError("imputation vector length mismatch");
  for (std::size_t j = 0; j < values.size(); ++j)
    if (is_undefined(values[j])) values[j] = medians[j];
}

inline void impute(FeatureMatrix& m, const std::vector<double>& medians) {
  for (auto& r : m.rows) impute(r, medians);
}

struct FeatureMask {
  std::string catalog_version;
  std::vector<std::string> names;
  std::vector<bool> selected;
  std::vector<double> p_values;

  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < selected.size(); ++j)
      if (selected[j]) out.push_back(j);
    return out;
  }

  std::size_t count() const { return indices().size(); }

  std::vector<double> apply(const std::vector<double>& full) const {
    if (full.size() != selected.size()) throw DataError("feature vector length differs from mask");
    std::vector<double> out;
    for (std::size_t j = 0; j < full.size(); ++j)
      if (selected[j]) out.push_back(full[j]);
    return out;
  }

  friend bool operator==(const FeatureMask&, const FeatureMask&) = default;
};

/// Two-sided Mann-Whitney U p-value (normal approximation, tie and continuity corrected)
/// for values in `in_group` versus the rest.
inline double mann_whitney_p(const std::vector<double>& values, const std::vector<bool>& in_group) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> rank(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  double n1 = 0.0, r1 = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (in_group[i]) {
      n1 += 1.0;
      r1 += rank[i];
    }
  const double n2 = static_cast<double>(n) - n1;
  if (n1 == 0.0 || n2 == 0.0) return 1.0;
  const double big_n = n1 + n2;
  const double u1 = r1 - n1 * (n1 + 1.0) / 2.0;
  const double mu = n1 * n2 / 2.0;
  const double var = n1 * n2 / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
  if (!(var > 0.0)) return 1.0;
  const double z = std::max(0.0, std::abs(u1 - mu) - 0.5) / std::sqrt(var);
  return std::erfc(z / std::sqrt(2.0));
}

/// Benjamini-Hochberg step-up: which of the p-values are rejected at level q.
inline std::vector<bool> benjamini_hochberg(const std::vector<double>& p, double q) {
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] < p[b]; });
  std::size_t k = 0;
  for (std::size_t i = 0; i < m; ++i)
    if (p[order[i]] <= static_cast<double>(i + 1) / static_cast<double>(m) * q) k = i + 1;
  std::vector<bool> out(m, false);
  for (std::size_t i = 0; i < k; ++i) out[order[i]] = true;
  return out;
}

inline constexpr std::size_t kDefaultFeatureCap = 100;

inline FeatureMask select_features(const FeatureMatrix& matrix, double fdr_q, std::size_t cap = kDefaultFeatureCap) {
  if (!(fdr_q > 0.0 && fdr_q <= 1.0)) throw ConfigError("fdr_q must lie in (0, 1]");
  if (cap < 1) throw ConfigError("feature cap must be at least 1");
  if (matrix.labels.size() != matrix.n_rows()) throw DataError("label count differs from matrix rows");
  if (matrix.n_rows() < 10) throw DataError("feature selection needs at least 10 rows");
  const std::set<int> classes(matrix.labels.begin(), matrix.labels.end());
  if (classes.size() < 2) throw DataError("feature selection needs at least two classes");

  FeatureMask mask;
  mask.catalog_version = matrix.catalog_version;
  mask.names = matrix.names;
  mask.selected.assign(matrix.n_cols(), false);
  mask.p_values.assign(matrix.n_cols(), 1.0);

  std::vector<std::size_t> tested;
  std::vector<double> tested_p;
  for (std::size_t j = 0; j < matrix.n_cols(); ++j) {
    const auto col = matrix.column(j);
    for (double v : col)
      if (is_undefined(v)) throw DataError("feature '" + matrix.names[j] + "' has undefined entries; impute first");
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    if (*lo == *hi) continue;  // constant: never tested
    double best = 1.0;
    for (int c : classes) {
      std::vector<bool> in_group(col.size());
      for (std::size_t i = 0; i < col.size(); ++i) in_group[i] = matrix.labels[i] == c;
      best = std::min(best, mann_whitney_p(col, in_group));
    }
    const double p = std::min(1.0, best * static_cast<double>(classes.size()));
    mask.p_values[j] = p;
    tested.push_back(j);
    tested_p.push_back(p);
  }
  if (tested.empty()) throw DataError("every feature is constant; nothing to select");

  auto keep = benjamini_hochberg(tested_p, fdr_q);
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < tested.size(); ++i)
    if (keep[i]) chosen.push_back(i);
  if (chosen.empty()) {
    // at least one feature always survives: the most relevant one
    chosen.push_back(static_cast<std::size_t>(std::min_element(tested_p.begin(), tested_p.end()) - tested_p.begin()));
  }
  if (chosen.size() > cap) {
    std::stable_sort(chosen.begin(), chosen.end(), [&](auto a, auto b) { return tested_p[a] < tested_p[b]; });
    chosen.resize(cap);
  }
  for (auto i : chosen) mask.selected[tested[i]] = true;
  return mask;
}

// ---------------------------------------------------------------------------
// Files

inline void save_feature_matrix(const FeatureMatrix& m, const std::string& path, const std::string& comment = {}) {
  auto out = text::open_output(path);
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "# catalog=" << m.catalog_version << '\n';
  out << "window_start_s,label";
  for (const auto& n : m.names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < m.n_rows(); ++i) {
    out << text::format_exact(m.window_starts[i]) << ',' << m.labels[i];
    for (double v : m.rows[i]) out << ',' << text::format_exact(v);
    out << '\n';
  }
}

inline FeatureMatrix load_feature_matrix(const std::string& path) {
  auto in = text::open_input(path);
  FeatureMatrix m;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = text::trim(line);
    if (row.empty()) continue;
    if (row.front() == '#') {
      if (row.starts_with("# catalog=")) m.catalog_version = std::string(row.substr(10));
      continue;
    }
    const auto fields = text::split(row, ',');
    if (!header) {
      if (fields.size() < 3 || fields[0] != "window_start_s" || fields[1] != "label")
        throw DataError("feature matrix header must start with window_start_s,label");
      for (std::size_t j = 2; j < fields.size(); ++j) m.names.emplace_back(fields[j]);
      header = true;
      continue;
    }
    if (fields.size() != m.names.size() + 2) throw DataError("wrong column count at line " + std::to_string(line_no));
    const auto t = text::parse_double(fields[0]);
    const auto label = text::parse_int<int>(fields[1]);
    if (!t || !label) throw DataError("parse error at line " + std::to_string(line_no));
    std::vector<double> values;
    for (std::size_t j = 2; j < fields.size(); ++j) {
      const auto v = text::parse_double(fields[j]);
      if (!v) throw DataError("parse error at line " + std::to_string(line_no));
      values.push_back(*v);
    }
    m.window_starts.push_back(*t);
    m.labels.push_back(*label);
    m.rows.push_back(std::move(values));
  }
  if (!header) throw DataError("feature matrix '" + path + "' has no header");
  return m;
}

inline void save_feature_mask(const FeatureMask& mask, const std::string& path, const std::string& comment = {}) {
  auto out = text::open_output(path);
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "# catalog=" << mask.catalog_version << '\n';
  out << "feature_name,p_value,selected\n";
  for (std::size_t j = 0; j < mask.names.size(); ++j)
    out << mask.names[j] << ',' << text::format_exact(mask.p_values[j]) << ',' << (mask.selected[j] ? 1 : 0) << '\n';
}

inline FeatureMask load_feature_mask(const std::string& path) {
  auto in = text::open_input(path);
  FeatureMask mask;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = text::trim(line);
    if (row.empty()) continue;
    if (row.front() == '#') {
      if (row.starts_with("# catalog=")) mask.catalog_version = std::string(row.substr(10));
      continue;
    }
    if (row == "feature_name,p_value,selected") continue;
    const auto fields = text::split(row, ',');
    const auto p = fields.size() == 3 ? text::parse_double(fields[1]) : std::nullopt;
    if (!p || (fields[2] != "0" && fields[2] != "1")) throw DataError("mask parse error at line " + std::to_string(line_no));
    mask.names.emplace_back(fields[0]);
    mask.p_values.push_back(*p);
    mask.selected.push_back(fields[2] == "1");
  }
  if (mask.count() == 0) throw DataError("feature mask '" + path + "' selects nothing");
  return mask;
}

}  // namespace seisclass
