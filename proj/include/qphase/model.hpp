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

#ifndef QPHASE_MODEL_HPP
#define QPHASE_MODEL_HPP

// ANNNI chain with periodic boundaries:
//
//   H = -J sum_j ( Z_j Z_{j+1} - kappa Z_j Z_{j+2} + g X_j )
//
// Basis convention: bit j (little-endian) of a basis index is the state of
// site j, with bit 0 meaning sigma^z_j = +1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qphase/error.hpp"

namespace qphase {

struct ModelParams {
  int n_sites = 12;
  double kappa = 0.0;
  double g = 0.0;
  double j = 1.0;

  void validate() const {
    if (n_sites < 4 || n_sites % 2 != 0)
      throw DataError("n_sites must be even and >= 4, got " +
                      std::to_string(n_sites));
    if (n_sites > 24)
      throw DataError("n_sites too large for exact diagonalization: " +
                      std::to_string(n_sites));
    if (!(kappa >= 0.0) || !(g >= 0.0))
      throw DataError("kappa and g must be non-negative");
    if (j != 1.0) throw DataError("coupling J is fixed to 1");
  }
};

enum class PauliAxis { X = 0, Y = 1, Z = 2 };

inline constexpr PauliAxis kAxes[] = {PauliAxis::X, PauliAxis::Y, PauliAxis::Z};

inline const char *axis_tag(PauliAxis a) {
  switch (a) {
    case PauliAxis::X: return "xx";
    case PauliAxis::Y: return "yy";
    case PauliAxis::Z: return "zz";
  }
  return "??";
}

/// Real symmetric operator in the computational basis, stored row-major with
/// columns sorted inside each row.
class SparseOperator {
 public:
  struct Entry {
    std::uint64_t row;
    std::uint64_t col;
    double value;
  };

  SparseOperator() = default;

  /// Entries may come in any order; duplicates are summed.
  SparseOperator(std::uint64_t dimension, std::vector<Entry> entries)
      : dimension_(dimension) {
    std::sort(entries.begin(), entries.end(), [](const Entry &a, const Entry &b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    for (const auto &e : entries) {
      if (e.row >= dimension || e.col >= dimension)
        throw DataError("operator entry out of range");
      if (!entries_.empty() && entries_.back().row == e.row &&
          entries_.back().col == e.col) {
        entries_.back().value += e.value;
      } else {
        entries_.push_back(e);
      }
    }
    row_start_.assign(dimension + 1, 0);
    for (const auto &e : entries_) ++row_start_[e.row + 1];
    for (std::uint64_t r = 0; r < dimension; ++r)
      row_start_[r + 1] += row_start_[r];
  }

  std::uint64_t dimension() const { return dimension_; }
  const std::vector<Entry> &entries() const { return entries_; }

  /// out = H * in
  void apply(std::span<const double> in, std::span<double> out) const {
    for (std::uint64_t r = 0; r < dimension_; ++r) {
      double acc = 0.0;
      for (auto k = row_start_[r]; k < row_start_[r + 1]; ++k)
        acc += entries_[k].value * in[entries_[k].col];
      out[r] = acc;
    }
  }

  void apply(std::span<const std::complex<double>> in,
             std::span<std::complex<double>> out) const {
    for (std::uint64_t r = 0; r < dimension_; ++r) {
      std::complex<double> acc = 0.0;
      for (auto k = row_start_[r]; k < row_start_[r + 1]; ++k)
        acc += entries_[k].value * in[entries_[k].col];
      out[r] = acc;
    }
  }

  /// Largest |H_rc - H_cr| over all stored entries and their transposes.
  double hermiticity_defect() const {
    double worst = 0.0;
    for (const auto &e : entries_) {
      const double t = at(e.col, e.row);
      worst = std::max(worst, std::abs(e.value - t));
    }
    return worst;
  }

  double at(std::uint64_t row, std::uint64_t col) const {
    auto first = entries_.begin() + static_cast<std::ptrdiff_t>(row_start_[row]);
    auto last = entries_.begin() + static_cast<std::ptrdiff_t>(row_start_[row + 1]);
    auto it = std::lower_bound(first, last, col, [](const Entry &e, std::uint64_t c) {
      return e.col < c;
    });
    return (it != last && it->col == col) ? it->value : 0.0;
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dimension_),
                                              static_cast<Eigen::Index>(dimension_));
    for (const auto &e : entries_)
      m(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) += e.value;
    return m;
  }

 private:
  std::uint64_t dimension_ = 0;
  std::vector<Entry> entries_;
  std::vector<std::uint64_t> row_start_;
};

struct GroundState {
  double energy = 0.0;
  std::vector<std::complex<double>> amplitudes;
  int iterations = 0;
  double residual = 0.0;
};

namespace detail {

inline int spin(std::uint64_t state, int site) {
  return ((state >> site) & 1U) ? -1 : 1;
}

}  // namespace detail

inline double diagonal_energy(const ModelParams &p, std::uint64_t state) {
  const int n = p.n_sites;
  double nn = 0.0, nnn = 0.0;
  for (int s = 0; s < n; ++s) {
    const int z = detail::spin(state, s);
    nn += z * detail::spin(state, (s + 1) % n);
    nnn += z * detail::spin(state, (s + 2) % n);
  }
  return -p.j * (nn - p.kappa * nnn);
}

inline SparseOperator build_hamiltonian(const ModelParams &p) {
  p.validate();
  const int n = p.n_sites;
  const std::uint64_t dim = std::uint64_t{1} << n;
  std::vector<SparseOperator::Entry> entries;
  entries.reserve(dim * static_cast<std::uint64_t>(n + 1));
  const double off = -p.j * p.g;
  for (std::uint64_t s = 0; s < dim; ++s) {
    entries.push_back({s, s, diagonal_energy(p, s)});
    if (p.g != 0.0) {
      for (int site = 0; site < n; ++site)
        entries.push_back({s, s ^ (std::uint64_t{1} << site), off});
    }
  }
  return SparseOperator(dim, std::move(entries));
}

struct LanczosOptions {
  double tolerance = 1e-10;
  int max_iterations = 5000;
};

/// Lowest eigenpair by Lanczos with full reorthogonalization.
///
/// The start vector is the uniform superposition 1/sqrt(D). For the ANNNI
/// Hamiltonian all off-diagonal elements are <= 0, so for g > 0 the ground
/// state is unique with strictly positive amplitudes and overlaps the start
/// vector; the Krylov space then never leaves the fully symmetric sector.
/// Convergence is declared when ||H v - E v|| < tolerance.
inline GroundState ground_state(const SparseOperator &h,
                                const LanczosOptions &opt = {}) {
  const auto dim = static_cast<std::size_t>(h.dimension());
  if (dim == 0) throw DataError("empty operator");

  std::vector<std::vector<double>> basis;
  std::vector<double> alpha, beta;
  std::vector<double> v(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
  std::vector<double> w(dim);

  auto dot = [dim](const std::vector<double> &a, const std::vector<double> &b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dim; ++i) acc += a[i] * b[i];
    return acc;
  };

  Eigen::VectorXd ritz;
  double theta = 0.0;
  double estimate = std::numeric_limits<double>::infinity();
  const int cap = opt.max_iterations;

  for (int it = 0; it < cap; ++it) {
    basis.push_back(v);
    h.apply(v, w);
    const double a = dot(v, w);
    alpha.push_back(a);
    // Two passes of classical Gram-Schmidt against the whole basis.
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto &q : basis) {
        const double c = dot(q, w);
        for (std::size_t i = 0; i < dim; ++i) w[i] -= c * q[i];
      }
    }
    const double b = std::sqrt(dot(w, w));

    const auto m = static_cast<Eigen::Index>(alpha.size());
    Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
    Eigen::VectorXd sub(std::max<Eigen::Index>(m - 1, 0));
    for (Eigen::Index k = 0; k + 1 < m; ++k) sub(k) = beta[static_cast<std::size_t>(k)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    theta = tri.eigenvalues()(0);
    ritz = tri.eigenvectors().col(0);
    estimate = b * std::abs(ritz(m - 1));

    const bool exhausted = b < 1e-13 * std::max(1.0, std::abs(theta)) ||
                           basis.size() == dim;
    if (estimate < 0.1 * opt.tolerance || exhausted) {
      std::vector<double> x(dim, 0.0);
      for (Eigen::Index k = 0; k < m; ++k) {
        const auto &q = basis[static_cast<std::size_t>(k)];
        const double c = ritz(k);
        for (std::size_t i = 0; i < dim; ++i) x[i] += c * q[i];
      }
      const double norm = std::sqrt(dot(x, x));
      for (auto &xi : x) xi /= norm;
      std::vector<double> hx(dim);
      h.apply(x, hx);
      const double energy = dot(x, hx);
      double res2 = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        const double r = hx[i] - energy * x[i];
        res2 += r * r;
      }
      const double residual = std::sqrt(res2);
      if (residual < opt.tolerance || exhausted) {
        if (residual >= opt.tolerance)
          throw ConvergenceError("Lanczos exhausted the Krylov space with residual " +
                                     std::to_string(residual),
                                 residual);
        GroundState gs;
        gs.energy = energy;
        gs.amplitudes.assign(x.begin(), x.end());
        gs.iterations = it + 1;
        gs.residual = residual;
        return gs;
      }
    }
    beta.push_back(b);
    for (std::size_t i = 0; i < dim; ++i) v[i] = w[i] / b;
  }
  throw ConvergenceError("Lanczos did not converge after " + std::to_string(cap) +
                             " iterations; residual estimate " +
                             std::to_string(estimate),
                         estimate);
}

/// Number of correlation features, 3 * C(n, 2).
inline int feature_count(int n_sites) { return 3 * n_sites * (n_sites - 1) / 2; }

/// Decoded feature index. Sites are 1-based, i < j.
struct FeaturePair {
  PauliAxis axis;
  int i;
  int j;
};

/// Canonical order: axis-major (xx, yy, zz), then (i, j) lexicographic.
inline FeaturePair feature_pair(int index, int n_sites) {
  const int per_axis = n_sites * (n_sites - 1) / 2;
  if (index < 0 || index >= 3 * per_axis)
    throw DataError("feature index out of range: " + std::to_string(index));
  FeaturePair fp{kAxes[index / per_axis], 0, 0};
  int r = index % per_axis;
  for (int i = 1; i < n_sites; ++i) {
    const int row = n_sites - i;
    if (r < row) {
      fp.i = i;
      fp.j = i + 1 + r;
      return fp;
    }
    r -= row;
  }
  return fp;
}

inline std::string feature_name(int index, int n_sites) {
  const auto fp = feature_pair(index, n_sites);
  return std::string(axis_tag(fp.axis)) + "_" + std::to_string(fp.i) + "_" +
         std::to_string(fp.j);
}

/// Periodic distance min(|i-j|, N-|i-j|).
inline int chordal_distance(int i, int j, int n_sites) {
  const int d = std::abs(i - j);
  return std::min(d, n_sites - d);
}

/// <sigma^a_i sigma^a_j> for every axis and pair, in canonical order.
inline std::vector<double> correlation_features(std::span<const std::complex<double>> psi,
                                                int n_sites) {
  const std::uint64_t dim = std::uint64_t{1} << n_sites;
  if (psi.size() != dim) throw DataError("state length does not match n_sites");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(feature_count(n_sites)));
  for (PauliAxis axis : kAxes) {
    for (int i = 0; i < n_sites; ++i) {
      for (int j = i + 1; j < n_sites; ++j) {
        const std::uint64_t mask = (std::uint64_t{1} << i) | (std::uint64_t{1} << j);
        std::complex<double> acc = 0.0;
        for (std::uint64_t s = 0; s < dim; ++s) {
          const auto amp = psi[s];
          switch (axis) {
            case PauliAxis::Z:
              acc += std::norm(amp) * static_cast<double>(detail::spin(s, i) * detail::spin(s, j));
              break;
            case PauliAxis::X:
              acc += std::conj(psi[s ^ mask]) * amp;
              break;
            case PauliAxis::Y:
              // sigma^y|b> = i(-1)^b |1-b>, so the pair picks up -(-1)^(b_i+b_j).
              acc += std::conj(psi[s ^ mask]) * amp *
                     static_cast<double>(-detail::spin(s, i) * detail::spin(s, j));
              break;
          }
        }
        out.push_back(std::clamp(acc.real(), -1.0, 1.0));
      }
    }
  }
  return out;
}

inline std::vector<double> correlation_features(const GroundState &gs, int n_sites) {
  return correlation_features(std::span<const std::complex<double>>(gs.amplitudes), n_sites);
}

/// Approximate ferro/para (Ising) transition line, valid for 0 <= kappa <= 1/2.
/// The kappa -> 0 limit is 1; near zero the leading series 1 - 3/2 kappa
/// replaces the cancelling closed form.
inline double ising_line(double kappa) {
  if (!(kappa >= 0.0 && kappa <= 0.5))
    throw DataError("ising_line: kappa outside [0, 0.5]: " + std::to_string(kappa));
  if (kappa == 0.0) return 1.0;
  if (kappa < 1e-5) return 1.0 - 1.5 * kappa;
  const double root = std::sqrt((1.0 - 3.0 * kappa + 4.0 * kappa * kappa) / (1.0 - kappa));
  return (1.0 - kappa) / kappa * (1.0 - root);
}

/// Approximate para/floating (BKT) transition line, valid for 1/2 <= kappa <= 3/2.
inline double bkt_line(double kappa) {
  if (!(kappa >= 0.5 && kappa <= 1.5))
    throw DataError("bkt_line: kappa outside [0.5, 1.5]: " + std::to_string(kappa));
  return 1.05 * std::sqrt((kappa - 0.5) * (kappa - 0.1));
}

}  // namespace qphase

#endif  // QPHASE_MODEL_HPP
