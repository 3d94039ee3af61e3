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


#ifndef QPHASE_DATASET_HPP
#define QPHASE_DATASET_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qphase/csv.hpp"
#include "qphase/error.hpp"
#include "qphase/model.hpp"
#include "qphase/parallel.hpp"

namespace qphase {

/// Phase tags along the kappa = 0 line.
enum Phase : int { kFerromagnetic = 0, kParamagnetic = 1 };

struct Sample {
  double kappa = 0.0;
  double g = 0.0;
  std::vector<double> features;
  std::optional<int> label;

  bool operator==(const Sample &) const = default;
};

struct DatasetSplit {
  int n_sites = 12;
  double g_max = 2.0;
  int g_count = 0;
  std::vector<Sample> train;
  std::map<double, std::vector<Sample>> tests;

  bool operator==(const DatasetSplit &) const = default;
};

/// Analytic kappa = 0 labelling: ferromagnet below g = 1, paramagnet at and
/// above it.
inline int label_sample(double g) { return g < 1.0 ? kFerromagnetic : kParamagnetic; }

/// Ground-state correlation sample for one (kappa, g) point.
inline Sample compute_sample(const ModelParams &p, const LanczosOptions &opt = {}) {
  Sample s;
  s.kappa = p.kappa;
  s.g = p.g;
  try {
    const auto gs = ground_state(build_hamiltonian(p), opt);
    s.features = correlation_features(gs, p.n_sites);
  } catch (const ConvergenceError &e) {
    throw ConvergenceError("kappa=" + csv::format_short(p.kappa) +
                               " g=" + csv::format_short(p.g) + ": " + e.what(),
                           e.residual());
  }
  if (p.kappa == 0.0) s.label = label_sample(p.g);
  return s;
}

/// g_i = g_max * i / g_count for i = 1..g_count; g = 0 is excluded.
inline std::vector<double> g_grid(int g_count, double g_max = 2.0) {
  if (g_count < 1) throw DataError("g_count must be positive");
  if (!(g_max > 0.0)) throw DataError("g_max must be positive");
  std::vector<double> g(static_cast<std::size_t>(g_count));
  for (int i = 1; i <= g_count; ++i)
    g[static_cast<std::size_t>(i - 1)] = g_max * i / g_count;
  return g;
}

struct GenerateOptions {
  double g_max = 2.0;
  unsigned threads = 1;
  LanczosOptions lanczos{};
};

inline DatasetSplit generate_split(int n_sites, int g_count,
                                   const std::vector<double> &test_kappas,
                                   const GenerateOptions &opt = {}) {
  if (g_count < 2) throw DataError("g_count must be >= 2");
  if (test_kappas.empty()) throw DataError("at least one test kappa is required");
  for (double k : test_kappas)
    if (!(k > 0.0)) throw DataError("test kappas must be > 0");
  ModelParams{n_sites, 0.0, 1.0}.validate();

  const auto grid = g_grid(g_count, opt.g_max);
  std::vector<double> kappas{0.0};
  for (double k : test_kappas)
    if (std::find(kappas.begin(), kappas.end(), k) == kappas.end()) kappas.push_back(k);

  const std::size_t per = grid.size();
  std::vector<Sample> all(kappas.size() * per);
  parallel_for(all.size(), opt.threads, [&](std::size_t idx) {
    const ModelParams p{n_sites, kappas[idx / per], grid[idx % per]};
    all[idx] = compute_sample(p, opt.lanczos);
  });

  DatasetSplit split;
  split.n_sites = n_sites;
  split.g_max = opt.g_max;
  split.g_count = g_count;
  for (std::size_t k = 0; k < kappas.size(); ++k) {
    std::vector<Sample> rows(all.begin() + static_cast<std::ptrdiff_t>(k * per),
                             all.begin() + static_cast<std::ptrdiff_t>((k + 1) * per));
    if (k == 0)
      split.train = std::move(rows);
    else
      split.tests[kappas[k]] = std::move(rows);
  }
  return split;
}

inline std::string test_file_name(double kappa) {
  return "test_kappa_" + csv::format_short(kappa) + ".csv";
}

/// Writes one split member. Rows are sorted by (kappa, g).
inline void write_samples(const std::filesystem::path &path, std::vector<Sample> rows,
                          int n_sites, const std::vector<std::string> &comments = {}) {
  std::stable_sort(rows.begin(), rows.end(), [](const Sample &a, const Sample &b) {
    return a.kappa != b.kappa ? a.kappa < b.kappa : a.g < b.g;
  });
  const int nf = feature_count(n_sites);
  auto out = csv::open_for_write(path);
  csv::write_comments(out, comments);
  out << "kappa,g,label";
  for (int f = 0; f < nf; ++f) out << ',' << feature_name(f, n_sites);
  out << '\n';
  for (const auto &s : rows) {
    if (static_cast<int>(s.features.size()) != nf)
      throw DataError("sample feature count does not match n_sites");
    out << csv::format_double(s.kappa) << ',' << csv::format_double(s.g) << ',';
    if (s.label) out << *s.label;
    for (double v : s.features) out << ',' << csv::format_double(v);
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

namespace detail {

/// Inverse of 3 * C(n, 2); returns 0 when `count` has no such form.
inline int sites_for_feature_count(std::size_t count) {
  for (int n = 2; n <= 64; ++n)
    if (static_cast<std::size_t>(feature_count(n)) == count) return n;
  return 0;
}

}  // namespace detail

struct SampleFile {
  int n_sites = 0;
  std::vector<std::string> comments;
  std::vector<Sample> rows;
};

inline SampleFile read_samples(const std::filesystem::path &path) {
  const auto table = csv::read_table(path);
  const std::string file = path.filename().string();
  const auto &h = table.header;
  if (h.size() < 3 || h[0] != "kappa" || h[1] != "g" || h[2] != "label")
    throw DataError(file + ": header must start with kappa,g,label");
  const std::size_t nf = h.size() - 3;
  const int n = detail::sites_for_feature_count(nf);
  if (n == 0)
    throw DataError(file + ": unexpected column count: " + std::to_string(nf) +
                    " feature columns is not 3*C(N,2) for any chain length");
  for (std::size_t f = 0; f < nf; ++f) {
    const auto expected = feature_name(static_cast<int>(f), n);
    if (h[f + 3] != expected)
      throw DataError(file + ": column " + std::to_string(f + 4) + " is '" + h[f + 3] +
                      "', expected '" + expected + "'");
  }
  SampleFile sf;
  sf.n_sites = n;
  sf.comments = table.comments;
  sf.rows.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto &row = table.rows[r];
    auto where = [&](std::size_t c) {
      return file + ": row " + std::to_string(r + 1) + ", column " + std::to_string(c + 1) +
             " (" + h[c] + ")";
    };
    Sample s;
    s.kappa = csv::parse_double(row[0], where(0));
    s.g = csv::parse_double(row[1], where(1));
    if (!row[2].empty()) {
      const auto l = csv::parse_int(row[2], where(2));
      if (l != 0 && l != 1) throw DataError(where(2) + ": label must be 0 or 1");
      s.label = static_cast<int>(l);
    }
    if (s.label.has_value() != (s.kappa == 0.0))
      throw DataError(where(2) + ": label must be present exactly when kappa = 0");
    s.features.resize(nf);
    for (std::size_t f = 0; f < nf; ++f) {
      const double v = csv::parse_double(row[f + 3], where(f + 3));
      if (!(v >= -1.0 && v <= 1.0))
        throw DataError(where(f + 3) + ": correlation outside [-1, 1]");
      s.features[f] = v;
    }
    sf.rows.push_back(std::move(s));
  }
  return sf;
}

/// Writes train.csv plus one test_kappa_<value>.csv per test grid.
inline void write_dataset(const DatasetSplit &split, const std::filesystem::path &dir,
                          std::vector<std::string> comments = {}) {
  comments.push_back("grid n_sites=" + std::to_string(split.n_sites) +
                     " g_max=" + csv::format_double(split.g_max) +
                     " g_count=" + std::to_string(split.g_count));
  std::filesystem::create_directories(dir);
  write_samples(dir / "train.csv", split.train, split.n_sites, comments);
  for (const auto &[kappa, rows] : split.tests)
    write_samples(dir / test_file_name(kappa), rows, split.n_sites, comments);
}

inline DatasetSplit read_dataset(const std::filesystem::path &dir) {
  DatasetSplit split;
  const auto train = read_samples(dir / "train.csv");
  split.n_sites = train.n_sites;
  split.train = train.rows;
  for (const auto &s : split.train)
    if (s.kappa != 0.0) throw DataError("train.csv: training rows must have kappa = 0");
  const auto g_max = csv::comment_value(train.comments, "g_max");
  const auto g_count = csv::comment_value(train.comments, "g_count");
  split.g_max = g_max.empty() ? 2.0 : csv::parse_double(g_max, "train.csv g_max");
  split.g_count = g_count.empty() ? static_cast<int>(split.train.size())
                                  : static_cast<int>(csv::parse_int(g_count, "train.csv g_count"));

  std::vector<std::filesystem::path> files;
  for (const auto &entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("test_kappa_", 0) == 0 && entry.path().extension() == ".csv")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto &f : files) {
    auto sf = read_samples(f);
    if (sf.n_sites != split.n_sites)
      throw DataError(f.filename().string() + ": chain length differs from train.csv");
    if (sf.rows.empty()) throw DataError(f.filename().string() + ": no rows");
    const double kappa = sf.rows.front().kappa;
    for (const auto &s : sf.rows)
      if (s.kappa != kappa)
        throw DataError(f.filename().string() + ": mixed kappa values");
    split.tests[kappa] = std::move(sf.rows);
  }
  return split;
}

}  // namespace qphase

#endif  // QPHASE_DATASET_HPP
