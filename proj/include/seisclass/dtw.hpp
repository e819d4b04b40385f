#pragma once

// Exact dynamic time warping and a k-nearest-neighbour classifier on top of it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seisclass/error.hpp"
#include "seisclass/text.hpp"
#include "seisclass/timeseries.hpp"

namespace seisclass {

enum class LocalCost { squared, absolute };

struct DtwParams {
  std::size_t k_neighbors = 1;
  LocalCost local_cost = LocalCost::squared;
  std::optional<std::size_t> band_radius;  // Sakoe-Chiba half width
  std::size_t downsample_to = 600;
  bool z_normalize = false;

  void validate() const {
    if (k_neighbors < 1) throw ConfigError("DTW needs k >= 1");
    if (downsample_to < 1) throw ConfigError("DTW downsample target must be positive");
  }
};

inline double local_cost(double a, double b, LocalCost kind) {
  const double d = a - b;
  return kind == LocalCost::squared ? d * d : std::abs(d);
}

/// D(i,j) = cost(a_i, b_j) + min(D(i-1,j), D(i,j-1), D(i-1,j-1)); returns D(|a|,|b|).
inline double dtw_distance(std::span<const double> a, std::span<const double> b, const DtwParams& params = {}) {
  if (a.empty() || b.empty()) throw DataError("DTW of an empty sequence");
  const std::size_t n = a.size(), m = b.size();
  const std::size_t diff = n > m ? n - m : m - n;
  if (params.band_radius && *params.band_radius < diff)
    throw ConfigError("Sakoe-Chiba radius " + std::to_string(*params.band_radius) +
                      " admits no warping path between lengths " + std::to_string(n) + " and " + std::to_string(m));
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    std::fill(cur.begin(), cur.end(), inf);
    std::size_t j_lo = 1, j_hi = m;
    if (params.band_radius) {
      const std::size_t r = *params.band_radius;
      j_lo = i > r ? std::max<std::size_t>(1, i - r) : 1;
      j_hi = std::min(m, i + r);
    }
    for (std::size_t j = j_lo; j <= j_hi; ++j) {
      const double best = std::min({prev[j], cur[j - 1], prev[j - 1]});
      cur[j] = local_cost(a[i - 1], b[j - 1], params.local_cost) + best;
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

/// Mean-pools x into `target` contiguous segments (segment boundaries at floor(i*n/target)).
inline std::vector<double> mean_pool(std::span<const double> x, std::size_t target) {
  if (x.empty()) throw DataError("cannot downsample an empty sequence");
  if (target >= x.size()) return {x.begin(), x.end()};
  std::vector<double> out(target);
  for (std::size_t i = 0; i < target; ++i) {
    const std::size_t lo = i * x.size() / target, hi = (i + 1) * x.size() / target;
    double acc = 0.0;
    for (std::size_t t = lo; t < hi; ++t) acc += x[t];
    out[i] = acc / static_cast<double>(hi - lo);
  }
  return out;
}

inline std::vector<double> z_normalize(std::vector<double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(x.size()));
  for (double& v : x) v = sd > 0.0 ? (v - mean) / sd : 0.0;
  return x;
}

/// DTW input representation: decimated, optionally z-normalized.
inline std::vector<double> dtw_representation(std::span<const double> window, const DtwParams& params) {
  auto rep = mean_pool(window, params.downsample_to);
  return params.z_normalize ? z_normalize(std::move(rep)) : rep;
}

struct DtwReference {
  std::vector<double> series;  // already in DTW representation
  double start_s = 0.0;
  int label = 1;
};

struct DtwNeighbor {
  std::size_t index = 0;
  double distance = 0.0;
  int label = 1;
};

struct DtwVote {
  int label = 1;
  std::vector<std::size_t> votes;  // index c-1 holds class c
  std::vector<DtwNeighbor> neighbors;
};

inline std::vector<DtwReference> make_dtw_references(const std::vector<LabeledWindow>& train, const DtwParams& params) {
  std::vector<DtwReference> refs;
  refs.reserve(train.size());
  for (const auto& w : train) refs.push_back({dtw_representation(w.samples, params), w.start_s, w.label});
  return refs;
}

/// k-NN vote over references. Majority wins; a vote tie goes to the tied class
/// whose nearest member is closest, then to the lowest class index.
inline DtwVote knn_dtw_vote(const std::vector<DtwReference>& refs, std::span<const double> query_rep,
                            const DtwParams& params) {
  params.validate();
  if (refs.empty()) throw DataError("DTW classifier has no training windows");
  std::vector<DtwNeighbor> all;
  all.reserve(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) all.push_back({i, dtw_distance(refs[i].series, query_rep, params), refs[i].label});
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.distance < b.distance; });
  const std::size_t k = std::min(params.k_neighbors, all.size());
  DtwVote out;
  out.neighbors.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
  int max_label = kNumClasses;
  for (const auto& r : refs) max_label = std::max(max_label, r.label);
  out.votes.assign(static_cast<std::size_t>(max_label), 0);
  for (const auto& nb : out.neighbors) ++out.votes[static_cast<std::size_t>(nb.label - 1)];
  const auto top = *std::max_element(out.votes.begin(), out.votes.end());
  // among the tied classes: nearest neighbour first, then lowest class id
  double best_distance = std::numeric_limits<double>::infinity();
  for (const auto& nb : out.neighbors) {
    if (out.votes[static_cast<std::size_t>(nb.label - 1)] != top) continue;
    if (nb.distance < best_distance || (nb.distance == best_distance && nb.label < out.label)) {
      best_distance = nb.distance;
      out.label = nb.label;
    }
  }
  return out;
}

inline int knn_dtw_classify(const std::vector<LabeledWindow>& train, std::span<const double> query,
                            const DtwParams& params) {
  if (train.empty()) throw DataError("DTW classifier has no training windows");
  const auto refs = make_dtw_references(train, params);
  return knn_dtw_vote(refs, dtw_representation(query, params), params).label;
}

// Reference set file: `window_start_s,label,v0,v1,...`.
inline void save_dtw_references(const std::vector<DtwReference>& refs, const std::string& path,
                                const std::string& comment = {}) {
  auto out = text::open_output(path);
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "window_start_s,label,values...\n";
  for (const auto& r : refs) out << text::format_exact(r.start_s) << ',' << r.label << ',' << text::join_exact(r.series) << '\n';
}

inline std::vector<DtwReference> load_dtw_references(const std::string& path) {
  auto in = text::open_input(path);
  std::vector<DtwReference> refs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = text::trim(line);
    if (row.empty() || row.front() == '#' || row.starts_with("window_start_s")) continue;
    const auto fields = text::split(row, ',');
    if (fields.size() < 3) throw DataError("DTW reference parse error at line " + std::to_string(line_no));
    DtwReference r;
    const auto t = text::parse_double(fields[0]);
    const auto label = text::parse_int<int>(fields[1]);
    if (!t || !label) throw DataError("DTW reference parse error at line " + std::to_string(line_no));
    r.start_s = *t;
    r.label = *label;
    for (std::size_t j = 2; j < fields.size(); ++j) {
      const auto v = text::parse_double(fields[j]);
      if (!v) throw DataError("DTW reference parse error at line " + std::to_string(line_no));
      r.series.push_back(*v);
    }
    refs.push_back(std::move(r));
  }
  if (refs.empty()) throw DataError("DTW reference file '" + path + "' is empty");
  return refs;
}

}  // namespace seisclass
