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


#ifndef QPHASE_PIPELINE_HPP
#define QPHASE_PIPELINE_HPP

// End-to-end stages: gen -> rank -> encode -> classify -> boundary -> report.
// Every stage reads its inputs from disk and writes its outputs to disk, so
// any stage can be rerun on its own.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qphase/boundary.hpp"
#include "qphase/csv.hpp"
#include "qphase/dataset.hpp"
#include "qphase/encode.hpp"
#include "qphase/error.hpp"
#include "qphase/forest.hpp"
#include "qphase/knn.hpp"
#include "qphase/model.hpp"
#include "qphase/parallel.hpp"
#include "qphase/qnn.hpp"

namespace qphase {

inline constexpr const char *kVersion = "1.0.0";

enum class Method { qnn, knn_pre, knn_raw };

inline constexpr Method kMethods[] = {Method::qnn, Method::knn_pre, Method::knn_raw};

inline std::string method_tag(Method m) {
  switch (m) {
    case Method::qnn: return "qnn";
    case Method::knn_pre: return "knn_pre";
    case Method::knn_raw: return "knn_raw";
  }
  return "?";
}

/// Accepts both the CLI spelling (knn-pre) and the tag (knn_pre).
inline Method parse_method(std::string s) {
  for (auto &c : s)
    if (c == '-') c = '_';
  for (Method m : kMethods)
    if (method_tag(m) == s) return m;
  throw UsageError("unknown method '" + s + "' (expected qnn, knn-pre or knn-raw)");
}

struct RunConfig {
  int n_sites = 12;
  int g_count = 1000;
  double g_max = 2.0;
  std::vector<double> test_kappas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::uint64_t forest_seed = 20240229;
  int forest_trees = 1000;
  int top_k = 4;
  int knn_k = 7;
  unsigned threads = 1;

  std::filesystem::path work_dir = "qphase_run";
  std::filesystem::path data_dir;
  std::filesystem::path importances;
  std::filesystem::path encoders;
  std::filesystem::path encoded_dir;
  std::filesystem::path predictions_dir;
  std::filesystem::path boundaries;
  std::filesystem::path scores;
  std::filesystem::path plot;

  /// Fills unset paths from work_dir and checks invariants.
  void resolve() {
    auto def = [&](std::filesystem::path &p, const char *name) {
      if (p.empty()) p = work_dir / name;
    };
    def(data_dir, "data");
    def(importances, "importances.csv");
    def(encoders, "encoders.txt");
    def(encoded_dir, "encoded");
    def(predictions_dir, "predictions");
    def(boundaries, "boundaries.csv");
    def(scores, "scores.csv");
    def(plot, "phase_diagram.csv");
    const std::vector<std::filesystem::path> all{data_dir, importances, encoders, encoded_dir,
                                                 predictions_dir, boundaries, scores, plot};
    for (std::size_t a = 0; a < all.size(); ++a)
      for (std::size_t b = a + 1; b < all.size(); ++b)
        if (all[a].lexically_normal() == all[b].lexically_normal())
          throw UsageError("output paths must be distinct: " + all[a].string());
    if (g_count < 2) throw UsageError("g_count must be >= 2");
    if (test_kappas.empty()) throw UsageError("test_kappas must not be empty");
    if (top_k < 1) throw UsageError("top_k must be positive");
    if (knn_k < 1) throw UsageError("knn k must be positive");
    if (forest_trees < 1) throw UsageError("forest trees must be positive");
    if (threads == 0) threads = 1;
  }

  /// Canonical text of every setting that can change output bytes.
  std::string canonical() const {
    std::ostringstream s;
    s << "n_sites=" << n_sites << ";g_count=" << g_count
      << ";g_max=" << csv::format_double(g_max) << ";test_kappas=";
    for (std::size_t i = 0; i < test_kappas.size(); ++i)
      s << (i ? "," : "") << csv::format_double(test_kappas[i]);
    s << ";forest_seed=" << forest_seed << ";forest_trees=" << forest_trees
      << ";top_k=" << top_k << ";knn_k=" << knn_k;
    return s.str();
  }

  std::string hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : canonical()) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  std::vector<std::string> header() const {
    return {std::string("qphase ") + kVersion + " config_hash=" + hash() +
                " forest_seed=" + std::to_string(forest_seed),
            "config " + canonical()};
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

inline std::vector<double> parse_kappa_list(std::string_view text, const std::string &where) {
  std::vector<double> out;
  for (auto f : csv::split(text)) out.push_back(csv::parse_double(trim(std::string(f)), where));
  return out;
}

}  // namespace detail

/// Applies one `section.key=value` setting.
inline void apply_setting(RunConfig &c, const std::string &key, const std::string &value) {
  const std::string where = "config " + key;
  auto as_int = [&] { return static_cast<int>(csv::parse_int(value, where)); };
  try {
    if (key == "model.n_sites") c.n_sites = as_int();
    else if (key == "dataset.g_count") c.g_count = as_int();
    else if (key == "dataset.g_max") c.g_max = csv::parse_double(value, where);
    else if (key == "dataset.test_kappas") c.test_kappas = detail::parse_kappa_list(value, where);
    else if (key == "forest.seed") c.forest_seed = static_cast<std::uint64_t>(csv::parse_int(value, where));
    else if (key == "forest.trees") c.forest_trees = as_int();
    else if (key == "forest.top_k") c.top_k = as_int();
    else if (key == "knn.k") c.knn_k = as_int();
    else if (key == "run.threads") c.threads = static_cast<unsigned>(as_int());
    else if (key == "paths.work_dir") c.work_dir = value;
    else if (key == "paths.data_dir") c.data_dir = value;
    else if (key == "paths.importances") c.importances = value;
    else if (key == "paths.encoders") c.encoders = value;
    else if (key == "paths.encoded_dir") c.encoded_dir = value;
    else if (key == "paths.predictions_dir") c.predictions_dir = value;
    else if (key == "paths.boundaries") c.boundaries = value;
    else if (key == "paths.scores") c.scores = value;
    else if (key == "paths.plot") c.plot = value;
    else throw UsageError("unknown config key '" + key + "'");
  } catch (const DataError &e) {
    throw UsageError(e.what());
  }
}

/// INI-style file: `[section]` headers, `key=value` lines, `#` or `;` comments.
inline void load_config_file(RunConfig &c, const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw UsageError(path.string() + ":" + std::to_string(lineno) + ": bad section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    apply_setting(c, section + "." + detail::trim(line.substr(0, eq)),
                  detail::trim(line.substr(eq + 1)));
  }
}

// ---------------------------------------------------------------------------
// Stages

inline void stage_gen(const RunConfig &c) {
  GenerateOptions opt;
  opt.g_max = c.g_max;
  opt.threads = c.threads;
  const auto split = generate_split(c.n_sites, c.g_count, c.test_kappas, opt);
  write_dataset(split, c.data_dir, c.header());
}

inline void stage_rank(const RunConfig &c) {
  const auto split = read_dataset(c.data_dir);
  ForestConfig fc;
  fc.n_trees = c.forest_trees;
  fc.rng_seed = c.forest_seed;
  fc.threads = c.threads;
  const auto iv = fit_importances(split.train, fc);
  write_importances(c.importances, iv, split.n_sites, c.header());
}

inline std::filesystem::path encoded_test_path(const RunConfig &c, double kappa) {
  return c.encoded_dir / test_file_name(kappa);
}

inline std::vector<EncodedRow> to_rows(std::span<const Sample> raw,
                                       std::span<const EncodedSample> enc) {
  std::vector<EncodedRow> rows;
  for (std::size_t i = 0; i < raw.size(); ++i) rows.push_back({raw[i].kappa, raw[i].g, enc[i]});
  return rows;
}

inline void stage_encode(const RunConfig &c) {
  const auto split = read_dataset(c.data_dir);
  const auto iv = read_importances(c.importances, split.n_sites);
  const auto selected = select_top_k(iv, c.top_k);
  const auto stack = fit_encoders(split.train, selected, split.n_sites);
  write_encoder_stack(c.encoders, stack, split.n_sites, c.header());

  const auto train_enc = encode_all(split.train, stack);
  write_encoded(c.encoded_dir / "train.csv", to_rows(split.train, train_enc), c.header());
  const auto dedup = dedup_training(train_enc);
  std::vector<EncodedRow> dedup_rows;
  for (const auto &e : dedup) dedup_rows.push_back({0.0, 0.0, e});
  write_encoded(c.encoded_dir / "train_dedup.csv", dedup_rows, c.header());

  for (const auto &[kappa, rows] : split.tests) {
    const auto enc = encode_all(rows, stack);
    const auto fixed = constant_bit_positions(enc);
    if (!fixed.empty())
      warn("kappa=" + csv::format_short(kappa) + ": " + std::to_string(fixed.size()) +
           " bit positions are constant across the test set (concentrated bins)");
    write_encoded(encoded_test_path(c, kappa), to_rows(rows, enc), c.header());
  }
}

struct PredictionRow {
  double kappa = 0.0;
  double g = 0.0;
  std::string bits;
  std::optional<ClassProbabilities> probabilities;
  std::string source;
};

inline std::filesystem::path prediction_path(const RunConfig &c, Method m) {
  return c.predictions_dir / (method_tag(m) + ".csv");
}

inline void write_predictions(const std::filesystem::path &path,
                              std::span<const PredictionRow> rows,
                              const std::vector<std::string> &comments) {
  auto out = csv::open_for_write(path);
  csv::write_comments(out, comments);
  out << "kappa,g,bits,p0,p1,p_postselect,source\n";
  for (const auto &r : rows) {
    out << csv::format_double(r.kappa) << ',' << csv::format_double(r.g) << ',' << r.bits << ',';
    if (r.probabilities)
      out << csv::format_double(r.probabilities->p0) << ','
          << csv::format_double(r.probabilities->p1) << ','
          << csv::format_double(r.probabilities->p_postselect);
    else
      out << ",,";
    out << ',' << r.source << '\n';
  }
}

inline std::vector<PredictionRow> read_predictions(const std::filesystem::path &path) {
  const auto t = csv::read_table(path);
  const auto file = path.filename().string();
  const auto ck = t.column("kappa", file), cg = t.column("g", file), cb = t.column("bits", file),
             c0 = t.column("p0", file), c1 = t.column("p1", file),
             cp = t.column("p_postselect", file), cs = t.column("source", file);
  std::vector<PredictionRow> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto &row = t.rows[r];
    const auto where = file + ": row " + std::to_string(r + 1);
    PredictionRow p;
    p.kappa = csv::parse_double(row[ck], where + ", column kappa");
    p.g = csv::parse_double(row[cg], where + ", column g");
    p.bits = row[cb];
    p.source = row[cs];
    if (!row[c0].empty())
      p.probabilities = ClassProbabilities{csv::parse_double(row[c0], where + ", column p0"),
                                           csv::parse_double(row[c1], where + ", column p1"),
                                           csv::parse_double(row[cp], where + ", column p_postselect")};
    out.push_back(std::move(p));
  }
  return out;
}

/// Evaluation grids: the kappa = 0 training rows plus every test grid.
inline std::vector<std::pair<double, std::filesystem::path>> encoded_grids(const RunConfig &c) {
  std::vector<std::pair<double, std::filesystem::path>> grids{{0.0, c.encoded_dir / "train.csv"}};
  for (double k : c.test_kappas) grids.emplace_back(k, encoded_test_path(c, k));
  return grids;
}

inline std::vector<PredictionRow> predict_qnn(const RunConfig &c) {
  const auto dedup_rows = read_encoded(c.encoded_dir / "train_dedup.csv");
  std::vector<EncodedSample> training;
  for (const auto &r : dedup_rows) training.push_back(r.sample);
  QnnClassifier clf(training);
  std::vector<PredictionRow> out;
  std::size_t failed = 0;
  for (const auto &[kappa, path] : encoded_grids(c)) {
    const auto rows = read_encoded(path);
    std::vector<PredictionRow> block(rows.size());
    parallel_for(rows.size(), c.threads, [&](std::size_t i) {
      auto input = rows[i].sample;
      input.label.reset();
      block[i] = {kappa, rows[i].g, bits_to_string(input.bits), std::nullopt, "circuit"};
      try {
        const auto res = clf.classify(input);
        block[i].probabilities = res.probabilities;
      } catch (const PostselectError &) {
      }
    });
    // Source tags follow row order so they do not depend on thread timing.
    std::set<std::string> seen;
    for (auto &row : block) {
      row.source = seen.insert(row.bits).second ? "circuit" : "cache";
      if (!row.probabilities) ++failed;
    }
    out.insert(out.end(), block.begin(), block.end());
  }
  if (failed > 0)
    warn(std::to_string(failed) + " grid points have no QNN prediction (post-selection impossible)");
  return out;
}

inline std::vector<PredictionRow> predict_knn_pre(const RunConfig &c) {
  const auto train = read_encoded(c.encoded_dir / "train.csv");
  std::vector<LabeledPoint> training;
  for (const auto &r : train) training.push_back({to_reals(r.sample.bits), *r.sample.label});
  const KnnConfig kc{c.knn_k, Metric::hamming};
  std::vector<PredictionRow> out;
  for (const auto &[kappa, path] : encoded_grids(c)) {
    const auto rows = read_encoded(path);
    std::vector<PredictionRow> block(rows.size());
    parallel_for(rows.size(), c.threads, [&](std::size_t i) {
      block[i] = {kappa, rows[i].g, bits_to_string(rows[i].sample.bits),
                  classify_knn(to_reals(rows[i].sample.bits), training, kc), "knn"};
    });
    out.insert(out.end(), block.begin(), block.end());
  }
  return out;
}

inline std::vector<PredictionRow> predict_knn_raw(const RunConfig &c) {
  const auto split = read_dataset(c.data_dir);
  std::vector<LabeledPoint> training;
  for (const auto &s : split.train) training.push_back({s.features, *s.label});
  const KnnConfig kc{c.knn_k, Metric::euclidean};
  std::vector<std::pair<double, const std::vector<Sample> *>> grids{{0.0, &split.train}};
  for (double k : c.test_kappas) {
    auto it = split.tests.find(k);
    if (it == split.tests.end())
      throw DataError("dataset has no test grid for kappa=" + csv::format_short(k));
    grids.emplace_back(k, &it->second);
  }
  std::vector<PredictionRow> out;
  for (const auto &[kappa, rows] : grids) {
    std::vector<PredictionRow> block(rows->size());
    parallel_for(rows->size(), c.threads, [&](std::size_t i) {
      block[i] = {kappa, (*rows)[i].g, "", classify_knn((*rows)[i].features, training, kc), "knn"};
    });
    out.insert(out.end(), block.begin(), block.end());
  }
  return out;
}

inline void stage_classify(const RunConfig &c, Method m) {
  std::vector<PredictionRow> rows;
  switch (m) {
    case Method::qnn: rows = predict_qnn(c); break;
    case Method::knn_pre: rows = predict_knn_pre(c); break;
    case Method::knn_raw: rows = predict_knn_raw(c); break;
  }
  write_predictions(prediction_path(c, m), rows, c.header());
}

/// Groups predictions by kappa into curves, dropping missing points.
inline std::map<double, ProbabilityCurve> curves_from(std::span<const PredictionRow> rows) {
  std::map<double, ProbabilityCurve> curves;
  std::map<double, std::size_t> dropped;
  for (const auto &r : rows) {
    auto &curve = curves[r.kappa];
    curve.kappa = r.kappa;
    if (!r.probabilities) {
      ++dropped[r.kappa];
      continue;
    }
    curve.points.push_back({r.g, r.probabilities->p0, r.probabilities->p1});
  }
  for (auto &[kappa, curve] : curves)
    std::stable_sort(curve.points.begin(), curve.points.end(),
                     [](const CurvePoint &a, const CurvePoint &b) { return a.g < b.g; });
  for (const auto &[kappa, n] : dropped)
    warn("kappa=" + csv::format_short(kappa) + ": dropped " + std::to_string(n) +
         " points without a prediction");
  return curves;
}

struct BoundaryOutcome {
  std::vector<BoundaryEstimate> estimates;
  std::vector<std::string> failures;
};

/// Crossings for every method with a prediction file. Curves without a
/// persistent crossing are skipped and listed in the file header; the stage
/// fails only when some method has no crossing at all.
inline BoundaryOutcome stage_boundary(const RunConfig &c) {
  BoundaryOutcome outcome;
  std::vector<std::string> empty_methods;
  bool any = false;
  for (Method m : kMethods) {
    const auto path = prediction_path(c, m);
    if (!std::filesystem::exists(path)) continue;
    any = true;
    const auto rows = read_predictions(path);
    std::size_t found = 0;
    for (const auto &[kappa, curve] : curves_from(rows)) {
      try {
        outcome.estimates.push_back(make_estimate(kappa, find_crossing(curve), method_tag(m)));
        ++found;
      } catch (const PostselectError &e) {
        outcome.failures.push_back(method_tag(m) + " " + e.what());
      }
    }
    if (found == 0) empty_methods.push_back(method_tag(m));
  }
  if (!any) throw DataError("no prediction files in " + c.predictions_dir.string());
  auto header = c.header();
  for (const auto &f : outcome.failures) {
    warn(f);
    header.push_back("missing " + f);
  }
  write_boundaries(c.boundaries, outcome.estimates, header);
  if (!empty_methods.empty())
    throw PostselectError("method " + empty_methods.front() +
                          " has no persistent crossing on any grid");
  return outcome;
}

/// Scores use the test grids only; the kappa = 0 row is the training line.
inline std::vector<MethodScore> score_test_kappas(std::span<const BoundaryEstimate> estimates) {
  std::vector<BoundaryEstimate> test;
  for (const auto &e : estimates)
    if (e.kappa > 0.0) test.push_back(e);
  return score_methods(test);
}

/// Writes the score table and the plot table: one row per kappa with each
/// method's g_star and both analytic lines (empty outside their domain).
inline void emit_report(std::span<const BoundaryEstimate> estimates,
                        std::span<const MethodScore> scores, const RunConfig &c) {
  if (estimates.empty()) throw DataError("boundary table is empty");
  write_scores(c.scores, scores, c.header());

  std::map<double, std::map<std::string, double>> table;
  for (double k : c.test_kappas) table[k];
  for (const auto &e : estimates) table[e.kappa][e.method] = e.g_star;
  auto out = csv::open_for_write(c.plot);
  csv::write_comments(out, c.header());
  out << "kappa,g_qnn,g_knn_pre,g_knn_raw,g_ising,g_bkt,g_ref\n";
  for (const auto &[kappa, methods] : table) {
    out << csv::format_double(kappa);
    for (Method m : kMethods) {
      out << ',';
      if (auto it = methods.find(method_tag(m)); it != methods.end())
        out << csv::format_double(it->second);
    }
    out << ',';
    if (kappa <= 0.5) out << csv::format_double(ising_line(kappa));
    out << ',';
    if (kappa >= 0.5 && kappa <= 1.5) out << csv::format_double(bkt_line(kappa));
    out << ',';
    if (kappa <= 1.5) out << csv::format_double(reference_g(kappa).first);
    out << '\n';
  }
}

inline void stage_report(const RunConfig &c) {
  if (!std::filesystem::exists(c.boundaries))
    throw DataError("missing boundary table " + c.boundaries.string());
  const auto estimates = read_boundaries(c.boundaries);
  const auto scores = score_test_kappas(estimates);
  emit_report(estimates, scores, c);
}

using StageObserver = std::function<void(const std::string &)>;

/// gen, rank, encode, classify (all three methods), boundary, report. The
/// observer hears each stage name before it starts; errors propagate.
inline void run_pipeline(const RunConfig &c, const StageObserver &on_stage = {}) {
  auto enter = [&](const char *name) {
    if (on_stage) on_stage(name);
  };
  enter("gen");
  stage_gen(c);
  enter("rank");
  stage_rank(c);
  enter("encode");
  stage_encode(c);
  for (Method m : kMethods) {
    enter("classify");
    stage_classify(c, m);
  }
  enter("boundary");
  stage_boundary(c);
  enter("report");
  stage_report(c);
}

}  // namespace qphase

#endif  // QPHASE_PIPELINE_HPP
