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


#ifndef QPHASE_BOUNDARY_HPP
#define QPHASE_BOUNDARY_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qphase/csv.hpp"
#include "qphase/error.hpp"
#include "qphase/model.hpp"

namespace qphase {

struct CurvePoint {
  double g = 0.0;
  double p0 = 0.0;
  double p1 = 0.0;
};

struct ProbabilityCurve {
  double kappa = 0.0;
  std::vector<CurvePoint> points;

  void validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (i > 0 && !(points[i].g > points[i - 1].g))
        throw DataError("probability curve g values must be strictly increasing");
      if (std::abs(points[i].p0 + points[i].p1 - 1.0) > 1e-9)
        throw DataError("probability curve point does not sum to 1");
    }
  }
};

/// Last downward crossing of p_ordered through 1/2 after which it stays below
/// 1/2, located by linear interpolation. `ordered` is the class expected at
/// small g (0 unless the labels were swapped).
inline double find_crossing(const ProbabilityCurve &curve, int ordered = 0) {
  const auto &pts = curve.points;
  if (pts.size() < 2) throw DataError("crossing needs at least two points");
  curve.validate();
  auto f = [ordered](const CurvePoint &p) { return (ordered == 0 ? p.p0 : p.p1) - 0.5; };
  const std::string at = "kappa=" + csv::format_short(curve.kappa);
  if (f(pts.back()) >= 0.0)
    throw PostselectError(at + ": no crossing (p" + std::to_string(ordered) +
                          " >= 1/2 at the largest g)");
  // Walk back over the trailing run below 1/2.
  std::size_t first_below = pts.size() - 1;
  while (first_below > 0 && f(pts[first_below - 1]) < 0.0) --first_below;
  if (first_below == 0)
    throw PostselectError(at + ": no crossing (p" + std::to_string(ordered) +
                          " < 1/2 over the whole g range)");
  const auto &a = pts[first_below - 1];
  const auto &b = pts[first_below];
  const double fa = f(a), fb = f(b);
  return a.g + (b.g - a.g) * fa / (fa - fb);
}

enum class RefLine { ising, bkt };

inline const char *ref_line_name(RefLine r) { return r == RefLine::ising ? "ising" : "bkt"; }

/// Analytic reference: Ising line up to and including kappa = 1/2, BKT above.
inline std::pair<double, RefLine> reference_g(double kappa) {
  if (!(kappa >= 0.0 && kappa <= 1.5))
    throw DataError("reference_g: kappa outside [0, 1.5]: " + std::to_string(kappa));
  if (kappa <= 0.5) return {ising_line(kappa), RefLine::ising};
  return {bkt_line(kappa), RefLine::bkt};
}

struct BoundaryEstimate {
  double kappa = 0.0;
  double g_star = 0.0;
  std::string method;
  double g_ref = 0.0;
  RefLine ref_line = RefLine::ising;
};

inline BoundaryEstimate make_estimate(double kappa, double g_star, std::string method) {
  const auto [g_ref, line] = reference_g(kappa);
  return {kappa, g_star, std::move(method), g_ref, line};
}

struct MethodScore {
  std::string method;
  double mse = 0.0;
  double rmse = 0.0;
  int n_kappa = 0;
};

/// Mean over estimates of (g_star - g_ref)^2.
inline double score_mse(std::span<const BoundaryEstimate> estimates) {
  if (estimates.empty()) throw DataError("no boundary estimates to score");
  double acc = 0.0;
  for (const auto &e : estimates) acc += (e.g_star - e.g_ref) * (e.g_star - e.g_ref);
  return acc / static_cast<double>(estimates.size());
}

/// One score per method, in order of first appearance.
inline std::vector<MethodScore> score_methods(std::span<const BoundaryEstimate> estimates) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<BoundaryEstimate>> by_method;
  for (const auto &e : estimates) {
    if (!by_method.count(e.method)) order.push_back(e.method);
    by_method[e.method].push_back(e);
  }
  std::vector<MethodScore> out;
  for (const auto &m : order) {
    const auto &list = by_method[m];
    const double mse = score_mse(list);
    out.push_back({m, mse, std::sqrt(mse), static_cast<int>(list.size())});
  }
  return out;
}

inline void write_boundaries(const std::filesystem::path &path,
                             std::span<const BoundaryEstimate> estimates,
                             const std::vector<std::string> &comments = {}) {
  auto out = csv::open_for_write(path);
  csv::write_comments(out, comments);
  out << "kappa,method,g_star,g_ref,ref_line\n";
  for (const auto &e : estimates)
    out << csv::format_double(e.kappa) << ',' << e.method << ',' << csv::format_double(e.g_star)
        << ',' << csv::format_double(e.g_ref) << ',' << ref_line_name(e.ref_line) << '\n';
}

inline std::vector<BoundaryEstimate> read_boundaries(const std::filesystem::path &path) {
  const auto t = csv::read_table(path);
  const auto file = path.filename().string();
  const auto ck = t.column("kappa", file), cm = t.column("method", file),
             cg = t.column("g_star", file), cr = t.column("g_ref", file),
             cl = t.column("ref_line", file);
  std::vector<BoundaryEstimate> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto where = file + ": row " + std::to_string(r + 1);
    BoundaryEstimate e;
    e.kappa = csv::parse_double(t.rows[r][ck], where + ", column kappa");
    e.method = t.rows[r][cm];
    e.g_star = csv::parse_double(t.rows[r][cg], where + ", column g_star");
    e.g_ref = csv::parse_double(t.rows[r][cr], where + ", column g_ref");
    const auto &line = t.rows[r][cl];
    if (line != "ising" && line != "bkt") throw DataError(where + ": unknown ref_line '" + line + "'");
    e.ref_line = line == "ising" ? RefLine::ising : RefLine::bkt;
    out.push_back(std::move(e));
  }
  return out;
}

inline void write_scores(const std::filesystem::path &path, std::span<const MethodScore> scores,
                         const std::vector<std::string> &comments = {}) {
  auto out = csv::open_for_write(path);
  csv::write_comments(out, comments);
  out << "method,mse,rmse,n_kappa\n";
  for (const auto &s : scores)
    out << s.method << ',' << csv::format_double(s.mse) << ',' << csv::format_double(s.rmse)
        << ',' << s.n_kappa << '\n';
}

}  // namespace qphase

#endif  // QPHASE_BOUNDARY_HPP
