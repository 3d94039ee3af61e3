// Copyright 2026 The qphase Authors - All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef QPHASE_FOREST_HPP
#define QPHASE_FOREST_HPP

// Extremely randomized trees, used only to rank features by mean decrease in
// Gini impurity. No bootstrap: every tree sees the whole training set.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qphase/csv.hpp"
#include "qphase/dataset.hpp"
#include "qphase/error.hpp"
#include "qphase/parallel.hpp"

namespace qphase {

struct ForestConfig {
  int n_trees = 1000;
  std::optional<int> max_depth;
  /// 0 selects floor(sqrt(feature count)).
  int candidate_features_per_split = 0;
  std::uint64_t rng_seed = 20240229;
  unsigned threads = 1;
};

struct ImportanceVector {
  std::vector<double> scores;
};

/// Dense training matrix for the forest, stored column-major.
class FeatureMatrix {
 public:
  FeatureMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  static FeatureMatrix from_samples(std::span<const Sample> samples) {
    if (samples.empty()) throw DataError("empty training set");
    FeatureMatrix m(samples.size(), samples.front().features.size());
    for (std::size_t r = 0; r < samples.size(); ++r) {
      if (samples[r].features.size() != m.cols_)
        throw DataError("inconsistent feature count in training set");
      for (std::size_t c = 0; c < m.cols_; ++c) m(r, c) = samples[r].features[c];
    }
    return m;
  }

  double &operator()(std::size_t r, std::size_t c) { return data_[c * rows_ + r]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[c * rows_ + r]; }
  std::span<const double> column(std::size_t c) const {
    return {data_.data() + c * rows_, rows_};
  }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

 private:
  std::size_t rows_, cols_;
  std::vector<double> data_;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream per tree, fixed by (seed, tree index) alone.
inline std::uint64_t tree_seed(std::uint64_t seed, std::uint64_t tree) {
  return splitmix64(seed ^ splitmix64(tree));
}

inline std::uint64_t child_seed(std::uint64_t node, bool right) {
  return splitmix64(node ^ (right ? 0x6a09e667f3bcc909ULL : 0xbb67ae8584caa73bULL));
}

inline double uniform01(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Content key of each column, hashed over the distinct rows in order of first
/// appearance. Per-node draws are keyed on it rather than on the column index,
/// so permuting columns permutes the importances and duplicating rows is a
/// no-op.
inline std::vector<std::uint64_t> column_keys(const FeatureMatrix &x) {
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    for (std::size_t c = 0; c < x.cols(); ++c)
      if (x(a, c) != x(b, c)) return x(a, c) < x(b, c);
    return false;
  };
  std::stable_sort(rows.begin(), rows.end(), less);
  std::vector<std::size_t> distinct;
  for (std::size_t k = 0; k < rows.size(); ++k)
    if (k == 0 || less(rows[k - 1], rows[k])) distinct.push_back(rows[k]);
  std::sort(distinct.begin(), distinct.end());

  std::vector<std::uint64_t> keys(x.cols());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    std::uint64_t h = 0x3c6ef372fe94f82bULL;
    for (std::size_t r : distinct) {
      const double v = x(r, c) == 0.0 ? 0.0 : x(r, c);
      h = splitmix64(h ^ std::bit_cast<std::uint64_t>(v));
    }
    keys[c] = h;
  }
  return keys;
}

inline double gini(double n0, double n1) {
  const double n = n0 + n1;
  if (n <= 0.0) return 0.0;
  const double p0 = n0 / n, p1 = n1 / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

class ExtraTreeBuilder {
 public:
  ExtraTreeBuilder(const FeatureMatrix &x, std::span<const int> y,
                   std::span<const std::uint64_t> keys, int mtry,
                   std::optional<int> max_depth, std::uint64_t seed)
      : x_(x), y_(y), keys_(keys), mtry_(mtry), max_depth_(max_depth), seed_(seed),
        importance_(x.cols(), 0.0), order_(x.cols()), priority_(x.cols()) {}

  std::vector<double> grow() {
    std::vector<std::size_t> idx(x_.rows());
    std::iota(idx.begin(), idx.end(), 0);
    struct Task {
      std::size_t begin, end;
      int depth;
      std::uint64_t seed;
    };
    std::vector<Task> stack{{0, idx.size(), 0, seed_}};
    while (!stack.empty()) {
      const Task t = stack.back();
      stack.pop_back();
      const auto mid = split_node(idx, t.begin, t.end, t.depth, t.seed);
      if (mid) {
        stack.push_back({*mid, t.end, t.depth + 1, child_seed(t.seed, true)});
        stack.push_back({t.begin, *mid, t.depth + 1, child_seed(t.seed, false)});
      }
    }
    return importance_;
  }

 private:
  std::optional<std::size_t> split_node(std::vector<std::size_t> &idx, std::size_t begin,
                                        std::size_t end, int depth, std::uint64_t seed) {
    const std::size_t n = end - begin;
    double n1 = 0.0;
    for (std::size_t k = begin; k < end; ++k) n1 += y_[idx[k]];
    const double n0 = static_cast<double>(n) - n1;
    if (n < 2 || n0 == 0.0 || n1 == 0.0) return std::nullopt;
    if (max_depth_ && depth >= *max_depth_) return std::nullopt;

    // Random candidate order: sort by a per-node hash of the column key.
    // Identical columns share a key; an index hash breaks those ties fairly.
    for (std::size_t f = 0; f < order_.size(); ++f)
      priority_[f] = splitmix64(seed ^ keys_[f]);
    std::iota(order_.begin(), order_.end(), 0);
    std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      if (priority_[a] != priority_[b]) return priority_[a] < priority_[b];
      return splitmix64(seed + a) < splitmix64(seed + b);
    });

    const double parent = gini(n0, n1);
    int visited = 0;
    bool found = false;
    double best_gain = -1.0, best_threshold = 0.0;
    std::size_t best_feature = 0;

    // Constant features are skipped without counting toward mtry.
    for (std::size_t f : order_) {
      if (visited >= mtry_) break;
      const auto col = x_.column(f);
      double lo = col[idx[begin]], hi = lo;
      for (std::size_t k = begin + 1; k < end; ++k) {
        lo = std::min(lo, col[idx[k]]);
        hi = std::max(hi, col[idx[k]]);
      }
      if (!(hi > lo)) continue;
      ++visited;
      double threshold = lo + uniform01(splitmix64(priority_[f])) * (hi - lo);
      if (threshold >= hi) threshold = lo;

      double l0 = 0.0, l1 = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        if (col[idx[k]] <= threshold) {
          if (y_[idx[k]]) l1 += 1.0; else l0 += 1.0;
        }
      }
      const double nl = l0 + l1, nr = static_cast<double>(n) - nl;
      const double child = (nl * gini(l0, l1) + nr * gini(n0 - l0, n1 - l1)) /
                           static_cast<double>(n);
      const double gain = parent - child;
      if (gain > best_gain) {
        best_gain = gain;
        best_feature = f;
        best_threshold = threshold;
        found = true;
      }
    }
    if (!found) return std::nullopt;

    importance_[best_feature] +=
        static_cast<double>(n) / static_cast<double>(x_.rows()) * std::max(best_gain, 0.0);
    const auto col = x_.column(best_feature);
    auto mid = std::stable_partition(
        idx.begin() + static_cast<std::ptrdiff_t>(begin),
        idx.begin() + static_cast<std::ptrdiff_t>(end),
        [&](std::size_t r) { return col[r] <= best_threshold; });
    return static_cast<std::size_t>(mid - idx.begin());
  }

  const FeatureMatrix &x_;
  std::span<const int> y_;
  std::span<const std::uint64_t> keys_;
  int mtry_;
  std::optional<int> max_depth_;
  std::uint64_t seed_;
  std::vector<double> importance_;
  std::vector<std::size_t> order_;
  std::vector<std::uint64_t> priority_;
};

/// Sums in sorted order so the total does not depend on column order.
inline void normalize(std::vector<double> &v) {
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  const double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  if (total > 0.0)
    for (auto &s : v) s /= total;
}

}  // namespace detail

/// Mean decrease in Gini impurity, averaged over an extra-trees ensemble.
/// Each node contributes (share of samples reaching it) x (impurity decrease)
/// to its split feature; per-tree scores are normalized before averaging.
inline ImportanceVector fit_importances(const FeatureMatrix &x, std::span<const int> labels,
                                        const ForestConfig &config) {
  if (x.rows() == 0 || x.cols() == 0) throw DataError("empty training set");
  if (labels.size() != x.rows()) throw DataError("label count does not match rows");
  bool has0 = false, has1 = false;
  for (int l : labels) {
    if (l != 0 && l != 1) throw DataError("labels must be 0 or 1");
    (l ? has1 : has0) = true;
  }
  if (!(has0 && has1))
    throw DataError("training set has a single class; no split is possible");
  if (config.n_trees < 1) throw DataError("n_trees must be positive");

  const int mtry = config.candidate_features_per_split > 0
                       ? config.candidate_features_per_split
                       : std::max(1, static_cast<int>(std::floor(
                                         std::sqrt(static_cast<double>(x.cols())))));
  if (mtry > static_cast<int>(x.cols()))
    throw DataError("candidate_features_per_split exceeds feature count");

  const auto keys = detail::column_keys(x);
  std::vector<std::vector<double>> per_tree(static_cast<std::size_t>(config.n_trees));
  parallel_for(per_tree.size(), config.threads, [&](std::size_t t) {
    detail::ExtraTreeBuilder builder(x, labels, keys, mtry, config.max_depth,
                                     detail::tree_seed(config.rng_seed, t));
    per_tree[t] = builder.grow();
    detail::normalize(per_tree[t]);
  });

  ImportanceVector out;
  out.scores.assign(x.cols(), 0.0);
  for (const auto &tree : per_tree)
    for (std::size_t f = 0; f < x.cols(); ++f) out.scores[f] += tree[f];
  for (auto &s : out.scores) s /= static_cast<double>(config.n_trees);
  detail::normalize(out.scores);
  return out;
}

inline ImportanceVector fit_importances(std::span<const Sample> train,
                                        const ForestConfig &config) {
  std::vector<int> labels;
  labels.reserve(train.size());
  for (const auto &s : train) {
    if (!s.label) throw DataError("training sample without label");
    labels.push_back(*s.label);
  }
  return fit_importances(FeatureMatrix::from_samples(train), labels, config);
}

/// Indices of the k largest scores (ties to the lower index), ascending.
inline std::vector<int> select_top_k(const ImportanceVector &iv, int k) {
  const int n = static_cast<int>(iv.scores.size());
  if (k < 1 || k > n) throw DataError("k must be in [1, feature count]");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return iv.scores[static_cast<std::size_t>(a)] > iv.scores[static_cast<std::size_t>(b)];
  });
  order.resize(static_cast<std::size_t>(k));
  std::sort(order.begin(), order.end());
  return order;
}

/// `feature_name,score`, sorted by descending score.
inline void write_importances(const std::filesystem::path &path, const ImportanceVector &iv,
                              int n_sites, const std::vector<std::string> &comments = {}) {
  std::vector<int> order(iv.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return iv.scores[static_cast<std::size_t>(a)] > iv.scores[static_cast<std::size_t>(b)];
  });
  auto out = csv::open_for_write(path);
  csv::write_comments(out, comments);
  out << "feature_name,score\n";
  for (int f : order)
    out << feature_name(f, n_sites) << ',' << csv::format_double(iv.scores[static_cast<std::size_t>(f)])
        << '\n';
}

inline ImportanceVector read_importances(const std::filesystem::path &path, int n_sites) {
  const auto t = csv::read_table(path);
  const auto name_col = t.column("feature_name", path.string());
  const auto score_col = t.column("score", path.string());
  ImportanceVector iv;
  iv.scores.assign(static_cast<std::size_t>(feature_count(n_sites)), 0.0);
  std::vector<bool> seen(iv.scores.size(), false);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto where = path.filename().string() + ": row " + std::to_string(r + 1);
    int index = -1;
    for (int f = 0; f < feature_count(n_sites); ++f)
      if (feature_name(f, n_sites) == t.rows[r][name_col]) index = f;
    if (index < 0) throw DataError(where + ": unknown feature '" + t.rows[r][name_col] + "'");
    iv.scores[static_cast<std::size_t>(index)] = csv::parse_double(t.rows[r][score_col], where);
    seen[static_cast<std::size_t>(index)] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw DataError(path.string() + ": importance file does not list every feature");
  return iv;
}

}  // namespace qphase

#endif  // QPHASE_FOREST_HPP
