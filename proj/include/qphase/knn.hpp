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


#ifndef QPHASE_KNN_HPP
#define QPHASE_KNN_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "qphase/error.hpp"
#include "qphase/qnn.hpp"

namespace qphase {

enum class Metric { euclidean, hamming };

struct KnnConfig {
  int k = 7;
  Metric metric = Metric::euclidean;
};

/// Euclidean norm of the difference, or the count of differing binary entries.
inline double distance(std::span<const double> a, std::span<const double> b, Metric metric) {
  if (a.size() != b.size())
    throw DataError("distance between vectors of length " + std::to_string(a.size()) +
                    " and " + std::to_string(b.size()));
  double acc = 0.0;
  if (metric == Metric::hamming) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if ((a[i] != 0.0 && a[i] != 1.0) || (b[i] != 0.0 && b[i] != 1.0))
        throw DataError("Hamming distance requires binary entries");
      acc += a[i] != b[i] ? 1.0 : 0.0;
    }
    return acc;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

inline std::vector<double> to_reals(const Bits &bits) {
  return {bits.begin(), bits.end()};
}

struct LabeledPoint {
  std::vector<double> x;
  int label = 0;
};

/// p_y = (members of class y among the k nearest) / k. Distance ties keep
/// training-row order.
inline ClassProbabilities classify_knn(std::span<const double> input,
                                       std::span<const LabeledPoint> training,
                                       const KnnConfig &config) {
  if (training.empty()) throw DataError("KNN training set is empty");
  if (config.k < 1 || static_cast<std::size_t>(config.k) > training.size())
    throw DataError("k = " + std::to_string(config.k) + " must be in [1, " +
                    std::to_string(training.size()) + "]");
  std::vector<std::pair<double, std::size_t>> order(training.size());
  for (std::size_t i = 0; i < training.size(); ++i)
    order[i] = {distance(input, training[i].x, config.metric), i};
  std::stable_sort(order.begin(), order.end(),
                   [](const auto &a, const auto &b) { return a.first < b.first; });
  int ones = 0;
  for (int i = 0; i < config.k; ++i) ones += training[order[static_cast<std::size_t>(i)].second].label;
  ClassProbabilities p;
  p.p1 = static_cast<double>(ones) / config.k;
  p.p0 = static_cast<double>(config.k - ones) / config.k;
  p.p_postselect = 1.0;
  return p;
}

}  // namespace qphase

#endif  // QPHASE_KNN_HPP
