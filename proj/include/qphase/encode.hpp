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


#ifndef QPHASE_ENCODE_HPP
#define QPHASE_ENCODE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qphase/csv.hpp"
#include "qphase/dataset.hpp"
#include "qphase/error.hpp"

namespace qphase {

inline constexpr int kLevels = 3;
inline constexpr int kBitsPerFeature = kLevels - 1;

/// One-hot layout: level 0 -> 10, level 1 -> 01, level 2 -> 00.
inline constexpr std::array<std::array<std::uint8_t, 2>, kLevels> kOneHot{
    {{1, 0}, {0, 1}, {0, 0}}};
inline constexpr const char *kOneHotConvention = "level0=10,level1=01,level2=00";

using Bits = std::vector<std::uint8_t>;

inline std::string bits_to_string(const Bits &bits) {
  std::string s;
  s.reserve(bits.size());
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

inline Bits bits_from_string(std::string_view s) {
  Bits b;
  b.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') throw DataError("bit string contains '" + std::string(1, c) + "'");
    b.push_back(c == '1');
  }
  return b;
}

struct EncodedSample {
  Bits bits;
  std::optional<int> label;

  bool operator==(const EncodedSample &) const = default;
};

struct KMeansResult {
  std::array<double, kLevels> centroids{};
  int iterations = 0;
  /// Within-cluster sum of squares after each assignment step.
  std::vector<double> objective;
};

namespace detail {

/// Linear-interpolation quantile of sorted data.
inline double quantile_sorted(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

template <std::size_t K>
int nearest(const std::array<double, K> &centroids, double v) {
  int best = 0;
  double best_d = std::abs(v - centroids[0]);
  for (std::size_t t = 1; t < K; ++t) {
    const double d = std::abs(v - centroids[t]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(t);
    }
  }
  return best;
}

}  // namespace detail

/// 1-D Lloyd k-means with k = 3. Starts from the 1/6, 3/6, 5/6 quantiles and
/// stops when no centroid moves by 1e-9 or after 300 iterations.
inline KMeansResult kmeans_1d(std::span<const double> values, int max_iterations = 300,
                              double tolerance = 1e-9) {
  if (values.empty()) throw DataError("k-means on empty data");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());

  KMeansResult res;
  for (int t = 0; t < kLevels; ++t)
    res.centroids[static_cast<std::size_t>(t)] =
        detail::quantile_sorted(sorted, (2.0 * t + 1.0) / (2.0 * kLevels));

  for (int it = 0; it < max_iterations; ++it) {
    std::array<double, kLevels> sum{}, count{};
    double sse = 0.0;
    for (double v : sorted) {
      const int c = detail::nearest(res.centroids, v);
      const double d = v - res.centroids[static_cast<std::size_t>(c)];
      sse += d * d;
      sum[static_cast<std::size_t>(c)] += v;
      count[static_cast<std::size_t>(c)] += 1.0;
    }
    res.objective.push_back(sse);
    double moved = 0.0;
    for (std::size_t t = 0; t < kLevels; ++t) {
      if (count[t] == 0.0) continue;  // empty cluster keeps its centroid
      const double next = sum[t] / count[t];
      moved = std::max(moved, std::abs(next - res.centroids[t]));
      res.centroids[t] = next;
    }
    res.iterations = it + 1;
    if (moved < tolerance) break;
  }
  std::sort(res.centroids.begin(), res.centroids.end());
  return res;
}

struct FeatureEncoder {
  int feature_index = 0;
  std::array<double, kLevels> centroids{};
  std::array<double, kLevels - 1> bin_edges{};

  /// Nearest centroid, ties to the lower level.
  int level(double v) const { return detail::nearest(centroids, v); }
};

struct EncoderStack {
  std::vector<int> selected;
  std::vector<FeatureEncoder> encoders;

  int bit_width() const { return static_cast<int>(selected.size()) * kBitsPerFeature; }
};

inline FeatureEncoder fit_feature_encoder(std::span<const double> values, int feature_index,
                                          const std::string &name) {
  std::set<double> distinct(values.begin(), values.end());
  if (distinct.size() < static_cast<std::size_t>(kLevels))
    throw DataError("feature " + name + " has fewer than 3 distinct training values");
  const auto km = kmeans_1d(values);
  FeatureEncoder enc;
  enc.feature_index = feature_index;
  enc.centroids = km.centroids;
  for (std::size_t t = 0; t + 1 < kLevels; ++t) {
    if (!(enc.centroids[t] < enc.centroids[t + 1]))
      throw DataError("feature " + name + ": k-means produced coincident centroids");
    enc.bin_edges[t] = 0.5 * (enc.centroids[t] + enc.centroids[t + 1]);
  }
  return enc;
}

/// Fits one encoder per selected feature on training rows only.
inline EncoderStack fit_encoders(std::span<const Sample> train, std::vector<int> selected,
                                 int n_sites = 12) {
  if (train.empty()) throw DataError("cannot fit encoders on an empty training set");
  std::sort(selected.begin(), selected.end());
  EncoderStack stack;
  stack.selected = selected;
  for (int f : selected) {
    std::vector<double> column;
    column.reserve(train.size());
    for (const auto &s : train) {
      if (f < 0 || static_cast<std::size_t>(f) >= s.features.size())
        throw DataError("selected feature index out of range: " + std::to_string(f));
      column.push_back(s.features[static_cast<std::size_t>(f)]);
    }
    const auto name = static_cast<int>(train.front().features.size()) == feature_count(n_sites)
                          ? feature_name(f, n_sites)
                          : "#" + std::to_string(f);
    stack.encoders.push_back(fit_feature_encoder(column, f, name));
  }
  return stack;
}

/// Register width for encoded samples; shorter codes are zero-padded.
inline constexpr std::size_t kEncodedWidth = 8;

/// Right-pads with zeros to `width`.
inline Bits pad_to_width(Bits bits, std::size_t width = kEncodedWidth) {
  if (bits.size() > width)
    throw DataError("bit vector of length " + std::to_string(bits.size()) +
                    " exceeds width " + std::to_string(width));
  bits.resize(width, 0);
  return bits;
}

inline EncodedSample encode_sample(const Sample &raw, const EncoderStack &stack) {
  EncodedSample out;
  out.label = raw.label;
  out.bits.reserve(static_cast<std::size_t>(stack.bit_width()));
  for (const auto &enc : stack.encoders) {
    const double v = raw.features.at(static_cast<std::size_t>(enc.feature_index));
    const auto &code = kOneHot[static_cast<std::size_t>(enc.level(v))];
    out.bits.insert(out.bits.end(), code.begin(), code.end());
  }
  out.bits = pad_to_width(std::move(out.bits), std::max(kEncodedWidth, out.bits.size()));
  return out;
}

inline std::vector<EncodedSample> encode_all(std::span<const Sample> rows,
                                             const EncoderStack &stack) {
  std::vector<EncodedSample> out;
  out.reserve(rows.size());
  for (const auto &s : rows) out.push_back(encode_sample(s, stack));
  return out;
}

/// Bit positions that take a single value across the whole set. Non-empty
/// means some test features fell entirely into one bin.
inline std::vector<int> constant_bit_positions(std::span<const EncodedSample> rows) {
  std::vector<int> out;
  if (rows.empty()) return out;
  for (std::size_t b = 0; b < rows.front().bits.size(); ++b) {
    bool constant = true;
    for (const auto &r : rows) constant = constant && r.bits[b] == rows.front().bits[b];
    if (constant) out.push_back(static_cast<int>(b));
  }
  return out;
}

/// Unique (bits, label) pairs in first-occurrence order. Identical bits with
/// different labels are both kept and reported through warn().
inline std::vector<EncodedSample> dedup_training(std::span<const EncodedSample> encoded) {
  std::vector<EncodedSample> out;
  std::set<std::pair<Bits, int>> seen;
  std::map<Bits, int> first_label;
  for (const auto &e : encoded) {
    if (!e.label) throw DataError("dedup_training requires labeled samples");
    if (!seen.insert({e.bits, *e.label}).second) continue;
    auto [it, inserted] = first_label.emplace(e.bits, *e.label);
    if (!inserted && it->second != *e.label)
      warn("bits " + bits_to_string(e.bits) + " carry both labels after binarization");
    out.push_back(e);
  }
  return out;
}

inline void write_encoder_stack(const std::filesystem::path &path, const EncoderStack &stack,
                                int n_sites, const std::vector<std::string> &comments = {}) {
  auto out = csv::open_for_write(path);
  csv::write_comments(out, comments);
  out << "[encoder]\n";
  out << "levels=" << kLevels << '\n';
  out << "bit_width=" << stack.bit_width() << '\n';
  out << "one_hot=" << kOneHotConvention << '\n';
  out << "selected=";
  for (std::size_t i = 0; i < stack.selected.size(); ++i)
    out << (i ? "," : "") << stack.selected[i];
  out << '\n';
  for (const auto &enc : stack.encoders) {
    out << "\n[feature " << enc.feature_index << "]\n";
    out << "name=" << feature_name(enc.feature_index, n_sites) << '\n';
    out << "centroids=" << csv::format_double(enc.centroids[0]) << ','
        << csv::format_double(enc.centroids[1]) << ',' << csv::format_double(enc.centroids[2])
        << '\n';
    out << "edges=" << csv::format_double(enc.bin_edges[0]) << ','
        << csv::format_double(enc.bin_edges[1]) << '\n';
  }
}

inline EncoderStack read_encoder_stack(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  EncoderStack stack;
  std::string line, section;
  FeatureEncoder *current = nullptr;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto where = path.filename().string() + ": line " + std::to_string(lineno);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      section = line;
      current = nullptr;
      if (line.rfind("[feature ", 0) == 0) {
        stack.encoders.emplace_back();
        current = &stack.encoders.back();
        current->feature_index = static_cast<int>(
            csv::parse_int(std::string_view(line).substr(9, line.size() - 10), where));
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError(where + ": expected key=value");
    const auto key = line.substr(0, eq);
    const auto value = std::string_view(line).substr(eq + 1);
    if (section == "[encoder]") {
      if (key == "selected") {
        for (auto f : csv::split(value)) stack.selected.push_back(static_cast<int>(csv::parse_int(f, where)));
      } else if (key == "one_hot" && value != kOneHotConvention) {
        throw DataError(where + ": unsupported one-hot convention '" + std::string(value) + "'");
      } else if (key == "levels" && csv::parse_int(value, where) != kLevels) {
        throw DataError(where + ": only 3 levels are supported");
      }
    } else if (current) {
      if (key == "centroids") {
        const auto f = csv::split(value);
        if (f.size() != 3) throw DataError(where + ": need 3 centroids");
        for (std::size_t t = 0; t < 3; ++t) current->centroids[t] = csv::parse_double(f[t], where);
      } else if (key == "edges") {
        const auto f = csv::split(value);
        if (f.size() != 2) throw DataError(where + ": need 2 edges");
        for (std::size_t t = 0; t < 2; ++t) current->bin_edges[t] = csv::parse_double(f[t], where);
      }
    }
  }
  if (stack.selected.size() != stack.encoders.size())
    throw DataError(path.string() + ": selected list and feature sections disagree");
  for (std::size_t i = 0; i < stack.selected.size(); ++i)
    if (stack.selected[i] != stack.encoders[i].feature_index)
      throw DataError(path.string() + ": feature sections out of order");
  return stack;
}

/// Encoded dataset: `kappa,g,bits,label`; `bits` is a 0/1 string.
struct EncodedRow {
  double kappa = 0.0;
  double g = 0.0;
  EncodedSample sample;
};

inline void write_encoded(const std::filesystem::path &path, std::span<const EncodedRow> rows,
                          const std::vector<std::string> &comments = {}) {
  auto out = csv::open_for_write(path);
  csv::write_comments(out, comments);
  out << "kappa,g,bits,label\n";
  for (const auto &r : rows) {
    out << csv::format_double(r.kappa) << ',' << csv::format_double(r.g) << ','
        << bits_to_string(r.sample.bits) << ',';
    if (r.sample.label) out << *r.sample.label;
    out << '\n';
  }
}

inline std::vector<EncodedRow> read_encoded(const std::filesystem::path &path) {
  const auto t = csv::read_table(path);
  const auto file = path.filename().string();
  const auto ck = t.column("kappa", file), cg = t.column("g", file),
             cb = t.column("bits", file), cl = t.column("label", file);
  std::vector<EncodedRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto where = file + ": row " + std::to_string(r + 1);
    EncodedRow row;
    row.kappa = csv::parse_double(t.rows[r][ck], where + ", column kappa");
    row.g = csv::parse_double(t.rows[r][cg], where + ", column g");
    row.sample.bits = bits_from_string(t.rows[r][cb]);
    if (!t.rows[r][cl].empty())
      row.sample.label = static_cast<int>(csv::parse_int(t.rows[r][cl], where + ", column label"));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace qphase

#endif  // QPHASE_ENCODE_HPP
