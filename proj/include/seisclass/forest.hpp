#pragma once

// CART classification trees (Gini) and a bootstrap random forest.
//
// Labels are 1..n_classes. Split candidates sit at midpoints between
// consecutive distinct sorted values; rows with x <= threshold go left.
// Split quality is compared in exact integer arithmetic so that ties resolve
// identically on every platform: lower feature index first, then lower threshold.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "seisclass/error.hpp"
#include "seisclass/rng.hpp"
#include "seisclass/text.hpp"

namespace seisclass {

using Row = std::vector<double>;

inline double gini_impurity(const std::vector<std::size_t>& class_counts) {
  std::size_t total = 0;
  for (auto c : class_counts) total += c;
  if (total == 0) throw DataError("gini impurity of an empty node");
  double sum_sq = 0.0;
  for (auto c : class_counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity_decrease = 0.0;
};

namespace detail {

using Wide = __int128;

/// Weighted child purity sum(cL^2)/nL + sum(cR^2)/nR kept as an exact fraction.
struct SplitScore {
  Wide num = 0;
  Wide den = 1;

  static SplitScore of(Wide sq_left, Wide n_left, Wide sq_right, Wide n_right) {
    return {sq_left * n_right + sq_right * n_left, n_left * n_right};
  }
  bool better_than(const SplitScore& o) const { return num * o.den > o.num * den; }
};

inline Wide sum_squares(const std::vector<std::size_t>& counts) {
  Wide s = 0;
  for (auto c : counts) s += static_cast<Wide>(c) * static_cast<Wide>(c);
  return s;
}

inline double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return (mid >= hi) ? lo : mid;
}

/// Best split on one feature; updates `best` only on strict improvement.
inline void scan_feature(const std::vector<Row>& X, const std::vector<int>& y, const std::vector<std::size_t>& rows,
                         std::size_t feature, std::size_t n_classes, std::size_t min_leaf,
                         const std::vector<std::size_t>& parent_counts, std::optional<Split>& best,
                         SplitScore& best_score) {
  std::vector<std::size_t> order(rows);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return X[a][feature] < X[b][feature]; });
  const std::size_t n = order.size();
  std::vector<std::size_t> left(n_classes, 0), right(parent_counts);
  Wide sq_left = 0, sq_right = sum_squares(parent_counts);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto c = static_cast<std::size_t>(y[order[i]] - 1);
    // incremental update of the sums of squares
    sq_left += 2 * static_cast<Wide>(left[c]) + 1;
    sq_right -= 2 * static_cast<Wide>(right[c]) - 1;
    ++left[c];
    --right[c];
    const double lo = X[order[i]][feature], hi = X[order[i + 1]][feature];
    if (!(lo < hi)) continue;
    const std::size_t n_left = i + 1, n_right = n - n_left;
    if (n_left < min_leaf || n_right < min_leaf) continue;
    const auto score = SplitScore::of(sq_left, static_cast<Wide>(n_left), sq_right, static_cast<Wide>(n_right));
    if (!score.better_than(best_score)) continue;
    best_score = score;
    const double nn = static_cast<double>(n);
    const double g_parent = 1.0 - static_cast<double>(sum_squares(parent_counts)) / (nn * nn);
    const double weighted_children =
        (static_cast<double>(n_left) - static_cast<double>(sq_left) / static_cast<double>(n_left) +
         static_cast<double>(n_right) - static_cast<double>(sq_right) / static_cast<double>(n_right)) /
        nn;
    best = Split{feature, midpoint(lo, hi), g_parent - weighted_children};
  }
}

inline std::vector<std::size_t> count_classes(const std::vector<int>& y, const std::vector<std::size_t>& rows,
                                              std::size_t n_classes) {
  std::vector<std::size_t> counts(n_classes, 0);
  for (auto r : rows) ++counts[static_cast<std::size_t>(y[r] - 1)];
  return counts;
}

}  // namespace detail

/// Exhaustive best Gini split of `rows` (indices into X/y, repeats allowed)
/// over `features`. Returns nothing when no candidate lowers impurity.
inline std::optional<Split> best_split(const std::vector<Row>& X, const std::vector<int>& y,
                                       const std::vector<std::size_t>& rows, std::vector<std::size_t> features,
                                       std::size_t n_classes, std::size_t min_samples_leaf = 1) {
  if (rows.size() < 2 || features.empty()) return std::nullopt;
  const auto parent = detail::count_classes(y, rows, n_classes);
  // the parent itself is the bar every split must clear
  detail::SplitScore best_score{detail::sum_squares(parent), static_cast<detail::Wide>(rows.size())};
  std::optional<Split> best;
  std::sort(features.begin(), features.end());
  for (auto f : features)
    detail::scan_feature(X, y, rows, f, n_classes, std::max<std::size_t>(1, min_samples_leaf), parent, best, best_score);
  return best;
}

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_features = 0;  // 0: floor(sqrt(d))
  std::size_t min_samples_leaf = 1;
  std::size_t max_depth = 0;     // 0: unlimited
  bool bootstrap = true;
  std::uint64_t seed = 0;

  std::size_t features_per_split(std::size_t d) const {
    const std::size_t m = max_features ? max_features : static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d))));
    return std::clamp<std::size_t>(m, 1, d);
  }

  void validate(std::size_t d) const {
    if (n_trees < 1) throw ConfigError("forest needs at least one tree");
    if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be at least 1");
    if (max_features > d) throw ConfigError("max_features exceeds the feature count");
  }
};

struct TreeNode {
  // internal node: feature >= 0 with both children; leaf: feature == -1
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<std::size_t> counts;

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

inline int majority_class(const std::vector<std::size_t>& counts) {
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin()) + 1;
}

struct Tree {
  std::vector<TreeNode> nodes;
  std::uint64_t seed = 0;

  const TreeNode& leaf_for(const Row& x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf())
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold ? nodes[i].left
                                                                                                         : nodes[i].right);
    return nodes[i];
  }

  int predict(const Row& x) const { return majority_class(leaf_for(x).counts); }

  std::size_t depth() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      best = std::max(best, d[i]);
      if (!nodes[i].is_leaf()) {
        d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
        d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
      }
    }
    return best;
  }

  friend bool operator==(const Tree&, const Tree&) = default;
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<Row>& X, const std::vector<int>& y, const ForestParams& params, std::size_t n_classes,
              Rng& rng)
      : X_(X), y_(y), params_(params), n_classes_(n_classes), rng_(rng), d_(X.front().size()) {}

  Tree build(const std::vector<std::size_t>& rows) {
    Tree t;
    nodes_ = &t.nodes;
    grow(rows, 0);
    return t;
  }

 private:
  int grow(const std::vector<std::size_t>& rows, std::size_t depth) {
    const int id = static_cast<int>(nodes_->size());
    nodes_->push_back({});
    auto counts = count_classes(y_, rows, n_classes_);
    const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
    const bool too_small = rows.size() < 2 * params_.min_samples_leaf;
    const bool too_deep = params_.max_depth && depth >= params_.max_depth;
    std::optional<Split> split;
    if (!pure && !too_small && !too_deep) split = choose_split(rows);
    if (!split) {
      (*nodes_)[static_cast<std::size_t>(id)].counts = std::move(counts);
      return id;
    }
    std::vector<std::size_t> left, right;
    for (auto r : rows) (X_[r][split->feature] <= split->threshold ? left : right).push_back(r);
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    auto& node = (*nodes_)[static_cast<std::size_t>(id)];
    node.feature = static_cast<int>(split->feature);
    node.threshold = split->threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  // A fresh random subset per node; when it yields nothing, further features
  // are tried one at a time in the same random order.
  std::optional<Split> choose_split(const std::vector<std::size_t>& rows) {
    std::vector<std::size_t> perm(d_);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i + 1 < d_; ++i) std::swap(perm[i], perm[i + rng_.below(d_ - i)]);
    const std::size_t m = params_.features_per_split(d_);
    std::vector<std::size_t> subset(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(m));
    auto split = best_split(X_, y_, rows, subset, n_classes_, params_.min_samples_leaf);
    for (std::size_t i = m; !split && i < d_; ++i)
      split = best_split(X_, y_, rows, {perm[i]}, n_classes_, params_.min_samples_leaf);
    return split;
  }

  const std::vector<Row>& X_;
  const std::vector<int>& y_;
  const ForestParams& params_;
  std::size_t n_classes_;
  Rng& rng_;
  std::size_t d_;
  std::vector<TreeNode>* nodes_ = nullptr;
};

inline std::size_t infer_classes(const std::vector<int>& y) {
  int hi = 0;
  for (int c : y) {
    if (c < 1) throw DataError("class labels must be positive integers");
    hi = std::max(hi, c);
  }
  return static_cast<std::size_t>(hi);
}

inline void check_training_data(const std::vector<Row>& X, const std::vector<int>& y) {
  if (X.empty()) throw DataError("no training rows");
  if (X.size() != y.size()) throw DataError("row count differs from label count");
  const std::size_t d = X.front().size();
  if (d == 0) throw DataError("training rows have no features");
  for (const auto& r : X) {
    if (r.size() != d) throw DataError("training rows differ in width");
    for (double v : r)
      if (!std::isfinite(v)) throw DataError("non-finite training feature");
  }
}

}  // namespace detail

/// Grows one tree on `rows` (indices into X/y). Deterministic given the seed.
inline Tree grow_tree(const std::vector<Row>& X, const std::vector<int>& y, const std::vector<std::size_t>& rows,
                      const ForestParams& params, std::uint64_t tree_seed, std::size_t n_classes = 0) {
  if (rows.empty()) throw DataError("cannot grow a tree on zero rows");
  detail::check_training_data(X, y);
  if (n_classes == 0) n_classes = detail::infer_classes(y);
  params.validate(X.front().size());
  Rng rng(tree_seed);
  auto tree = detail::TreeBuilder(X, y, params, n_classes, rng).build(rows);
  tree.seed = tree_seed;
  return tree;
}

struct ForestPrediction {
  int label = 0;
  std::vector<std::size_t> votes;  // index c-1 holds the votes for class c
};

struct Forest {
  std::vector<Tree> trees;
  ForestParams params;
  std::string catalog_version;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  double oob_error = std::numeric_limits<double>::quiet_NaN();  // not persisted

  ForestPrediction predict(const Row& x) const {
    if (x.size() != n_features)
      throw DataError("feature vector has " + std::to_string(x.size()) + " entries, forest expects " +
                      std::to_string(n_features));
    ForestPrediction out;
    out.votes.assign(n_classes, 0);
    for (const auto& t : trees) ++out.votes[static_cast<std::size_t>(t.predict(x) - 1)];
    out.label = majority_class(out.votes);
    return out;
  }
};

inline Forest train_forest(const std::vector<Row>& X, const std::vector<int>& y, const ForestParams& params,
                           const std::string& catalog_version = {}) {
  detail::check_training_data(X, y);
  const std::set<int> distinct(y.begin(), y.end());
  if (distinct.size() < 2) throw DataError("training labels contain a single class");
  const std::size_t n = X.size();
  Forest forest;
  forest.params = params;
  forest.catalog_version = catalog_version;
  forest.n_features = X.front().size();
  forest.n_classes = detail::infer_classes(y);
  params.validate(forest.n_features);

  std::vector<std::vector<std::size_t>> oob_votes(n, std::vector<std::size_t>(forest.n_classes, 0));
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    const std::uint64_t seed = derive_seed(params.seed, t);
    Rng rng(seed);
    std::vector<std::size_t> rows(n);
    std::vector<bool> in_bag(n, !params.bootstrap);
    if (params.bootstrap) {
      for (auto& r : rows) {
        r = static_cast<std::size_t>(rng.below(n));
        in_bag[r] = true;
      }
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    auto tree = detail::TreeBuilder(X, y, params, forest.n_classes, rng).build(rows);
    tree.seed = seed;
    for (std::size_t i = 0; i < n; ++i)
      if (!in_bag[i]) ++oob_votes[i][static_cast<std::size_t>(tree.predict(X[i]) - 1)];
    forest.trees.push_back(std::move(tree));
  }

  std::size_t scored = 0, wrong = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::accumulate(oob_votes[i].begin(), oob_votes[i].end(), std::size_t{0}) == 0) continue;
    ++scored;
    if (majority_class(oob_votes[i]) != y[i]) ++wrong;
  }
  if (scored) forest.oob_error = static_cast<double>(wrong) / static_cast<double>(scored);
  return forest;
}

// ---------------------------------------------------------------------------
// Persistence (text, versioned)

inline constexpr const char* kForestFormat = "seisclass-forest v1";

inline std::string serialize_forest(const Forest& f) {
  std::ostringstream out;
  out << kForestFormat << '\n';
  out << "catalog " << f.catalog_version << '\n';
  out << "features " << f.n_features << '\n';
  out << "classes " << f.n_classes << '\n';
  out << "params n_trees=" << f.params.n_trees << " max_features=" << f.params.max_features
      << " min_samples_leaf=" << f.params.min_samples_leaf << " max_depth=" << f.params.max_depth
      << " bootstrap=" << (f.params.bootstrap ? 1 : 0) << " seed=" << f.params.seed << '\n';
  for (std::size_t t = 0; t < f.trees.size(); ++t) {
    const auto& tree = f.trees[t];
    out << "tree " << t << " seed=" << tree.seed << " nodes=" << tree.nodes.size() << '\n';
    for (const auto& n : tree.nodes) {
      if (n.is_leaf()) {
        out << 'L';
        for (auto c : n.counts) out << ' ' << c;
      } else {
        out << "I " << n.feature << ' ' << text::format_exact(n.threshold) << ' ' << n.left << ' ' << n.right;
      }
      out << '\n';
    }
  }
  return out.str();
}

inline Forest parse_forest(const std::string& body) {
  std::istringstream in(body);
  std::string line;
  const auto fail = [](const std::string& why) { throw DataError("forest file: " + why); };
  if (!std::getline(in, line) || line != kForestFormat) fail("unsupported format header");
  Forest f;
  std::string key;
  {
    std::getline(in, line);
    if (!line.starts_with("catalog ")) fail("missing catalog line");
    f.catalog_version = line.substr(8);
  }
  if (!(in >> key >> f.n_features) || key != "features") fail("missing features line");
  if (!(in >> key >> f.n_classes) || key != "classes") fail("missing classes line");
  in >> key;
  if (key != "params") fail("missing params line");
  std::getline(in, line);
  for (auto tok : text::split(text::trim(line), ' ')) {
    const auto eq = tok.find('=');
    if (eq == std::string_view::npos) fail("bad params token");
    const auto k = tok.substr(0, eq);
    const auto v = text::parse_int<std::uint64_t>(tok.substr(eq + 1));
    if (!v) fail("bad params value");
    if (k == "n_trees") f.params.n_trees = *v;
    else if (k == "max_features") f.params.max_features = *v;
    else if (k == "min_samples_leaf") f.params.min_samples_leaf = *v;
    else if (k == "max_depth") f.params.max_depth = *v;
    else if (k == "bootstrap") f.params.bootstrap = *v != 0;
    else if (k == "seed") f.params.seed = *v;
  }
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    std::istringstream header(line);
    std::string word, seed_tok, nodes_tok;
    std::size_t index = 0;
    if (!(header >> word >> index >> seed_tok >> nodes_tok) || word != "tree" || !seed_tok.starts_with("seed=") ||
        !nodes_tok.starts_with("nodes="))
      fail("bad tree header '" + line + "'");
    Tree t;
    t.seed = text::parse_int<std::uint64_t>(std::string_view(seed_tok).substr(5)).value_or(0);
    const auto count = text::parse_int<std::size_t>(std::string_view(nodes_tok).substr(6));
    if (!count || *count == 0) fail("bad node count");
    for (std::size_t i = 0; i < *count; ++i) {
      if (!std::getline(in, line)) fail("truncated tree");
      std::istringstream row(line);
      char kind = 0;
      row >> kind;
      TreeNode n;
      if (kind == 'L') {
        n.counts.resize(f.n_classes);
        for (auto& c : n.counts)
          if (!(row >> c)) fail("bad leaf");
      } else if (kind == 'I') {
        std::string thr;
        if (!(row >> n.feature >> thr >> n.left >> n.right)) fail("bad internal node");
        const auto v = text::parse_double(thr);
        if (!v || !std::isfinite(*v)) fail("bad threshold");
        n.threshold = *v;
        if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= f.n_features) fail("feature index out of range");
        if (n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) ||
            n.left >= static_cast<int>(*count) || n.right >= static_cast<int>(*count))
          fail("child index out of range");
      } else {
        fail("bad node kind");
      }
      t.nodes.push_back(std::move(n));
    }
    f.trees.push_back(std::move(t));
  }
  if (f.trees.size() != f.params.n_trees) fail("tree count differs from params");
  return f;
}

inline void save_forest(const Forest& f, const std::string& path) {
  auto out = text::open_output(path);
  out << serialize_forest(f);
}

inline Forest load_forest(const std::string& path) { return parse_forest(text::read_file(path)); }

}  // namespace seisclass
