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


// Command-line driver for the phase-transition workbench.

#include <exception>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qphase/pipeline.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string work_dir;
  unsigned threads = 0;
  int n_sites = 0;
  int g_count = 0;
  double g_max = 0.0;
  std::vector<double> kappas;
  std::uint64_t seed = 0;
  int trees = 0;
  int knn_k = 0;
};

// `name` is read again on failure, so a caller may update it as stages advance.
int run_stage(const std::string &name, const std::function<void()> &body,
              bool announce = true) {
  try {
    if (announce) std::clog << "[" << name << "] running\n";
    body();
    return 0;
  } catch (const qphase::Error &e) {
    std::cerr << "[" << name << "] error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception &e) {
    std::cerr << "[" << name << "] error: " << e.what() << '\n';
    return static_cast<int>(qphase::ErrorKind::data);
  }
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"qphase: transfer-learning detection of ANNNI phase transitions"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides ov;
  app.add_option("-c,--config", ov.config, "INI-style config file ([section] key=value)");
  auto *o_work = app.add_option("-w,--work-dir", ov.work_dir, "Directory for all artifacts");
  auto *o_threads = app.add_option("-j,--threads", ov.threads, "Worker cap (does not change output)");
  auto *o_sites = app.add_option("--n-sites", ov.n_sites, "Chain length");
  auto *o_gcount = app.add_option("--g-count", ov.g_count, "Grid points in (0, g_max]");
  auto *o_gmax = app.add_option("--g-max", ov.g_max, "Largest transverse field");
  auto *o_kappas = app.add_option("--kappas", ov.kappas, "Test kappa values")->delimiter(',');
  auto *o_seed = app.add_option("--seed", ov.seed, "Forest RNG seed");
  auto *o_trees = app.add_option("--trees", ov.trees, "Trees in the importance forest");
  auto *o_k = app.add_option("--knn-k", ov.knn_k, "Neighbours for the KNN baselines");

  auto *gen = app.add_subcommand("gen", "Generate correlation datasets by exact diagonalization");
  auto *rank = app.add_subcommand("rank", "Rank features by extra-trees Gini importance");
  auto *encode = app.add_subcommand("encode", "Fit k-means bins and one-hot encode all grids");
  auto *classify = app.add_subcommand("classify", "Predict class probabilities on every grid");
  std::string method_name;
  classify->add_option("-m,--method", method_name, "qnn, knn-pre or knn-raw")->required();
  auto *boundary = app.add_subcommand("boundary", "Locate probability crossings");
  auto *report = app.add_subcommand("report", "Write score and phase-diagram tables");
  auto *all = app.add_subcommand("all", "Run every stage in order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(qphase::ErrorKind::usage);
  }

  qphase::RunConfig cfg;
  const int rc = run_stage("config", [&] {
    if (!ov.config.empty()) qphase::load_config_file(cfg, ov.config);
    if (*o_work) cfg.work_dir = ov.work_dir;
    if (*o_threads) cfg.threads = ov.threads;
    if (*o_sites) cfg.n_sites = ov.n_sites;
    if (*o_gcount) cfg.g_count = ov.g_count;
    if (*o_gmax) cfg.g_max = ov.g_max;
    if (*o_kappas) cfg.test_kappas = ov.kappas;
    if (*o_seed) cfg.forest_seed = ov.seed;
    if (*o_trees) cfg.forest_trees = ov.trees;
    if (*o_k) cfg.knn_k = ov.knn_k;
    cfg.resolve();
  });
  if (rc != 0) return rc;

  if (*gen) return run_stage("gen", [&] { qphase::stage_gen(cfg); });
  if (*rank) return run_stage("rank", [&] { qphase::stage_rank(cfg); });
  if (*encode) return run_stage("encode", [&] { qphase::stage_encode(cfg); });
  if (*classify) {
    qphase::Method m{};
    if (const int r = run_stage("classify", [&] { m = qphase::parse_method(method_name); }))
      return r;
    return run_stage("classify", [&] { qphase::stage_classify(cfg, m); });
  }
  if (*boundary) return run_stage("boundary", [&] { qphase::stage_boundary(cfg); });
  if (*report) return run_stage("report", [&] { qphase::stage_report(cfg); });
  if (*all) {
    std::string current = "all";
    return run_stage(
        current,
        [&] {
          qphase::run_pipeline(cfg, [&](const std::string &stage) {
            current = stage;
            std::clog << "[" << stage << "] running\n";
          });
        },
        false);
  }
  return 0;
}
