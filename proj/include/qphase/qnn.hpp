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


#ifndef QPHASE_QNN_HPP
#define QPHASE_QNN_HPP

// Quantum Hamming-distance classifier, simulated exactly on a statevector.
//
// Register layout for n-bit inputs (qubit q is bit q of the basis index):
//   [0, n)    input bits
//   [n, 2n)   training bits, overwritten by Hamming components
//   2n        class qubit
//   2n + 1    ancilla

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "qphase/encode.hpp"
#include "qphase/error.hpp"

namespace qphase {

using Amplitude = std::complex<double>;

struct QuantumState {
  int n_qubits = 0;
  std::vector<Amplitude> amplitudes;

  QuantumState() = default;
  explicit QuantumState(int qubits)
      : n_qubits(qubits), amplitudes(std::size_t{1} << qubits, Amplitude{0.0, 0.0}) {}

  std::size_t dimension() const { return amplitudes.size(); }

  double norm() const {
    double acc = 0.0;
    for (const auto &a : amplitudes) acc += std::norm(a);
    return std::sqrt(acc);
  }

  std::size_t nonzero_count(double eps = 1e-14) const {
    return static_cast<std::size_t>(std::count_if(
        amplitudes.begin(), amplitudes.end(), [eps](const Amplitude &a) { return std::abs(a) > eps; }));
  }
};

struct RegisterLayout {
  int n = 0;

  int input(int k) const { return k; }
  int training(int k) const { return n + k; }
  int class_qubit() const { return 2 * n; }
  int ancilla() const { return 2 * n + 1; }
  int total() const { return 2 * n + 2; }
};

struct ClassProbabilities {
  double p0 = 0.0;
  double p1 = 0.0;
  double p_postselect = 0.0;
};

namespace gates {

inline std::size_t bit(int q) { return std::size_t{1} << q; }

inline void hadamard(QuantumState &s, int q) {
  const double r = 1.0 / std::numbers::sqrt2;
  const std::size_t m = bit(q);
  for (std::size_t i = 0; i < s.dimension(); ++i) {
    if (i & m) continue;
    const Amplitude a = s.amplitudes[i], b = s.amplitudes[i | m];
    s.amplitudes[i] = r * (a + b);
    s.amplitudes[i | m] = r * (a - b);
  }
}

inline void cnot(QuantumState &s, int control, int target) {
  const std::size_t c = bit(control), t = bit(target);
  for (std::size_t i = 0; i < s.dimension(); ++i)
    if ((i & c) && !(i & t)) std::swap(s.amplitudes[i], s.amplitudes[i | t]);
}

/// Diagonal two-qubit gate; phases indexed by 2 * bit(qa) + bit(qb).
inline void diagonal2(QuantumState &s, int qa, int qb, const std::array<Amplitude, 4> &phases) {
  const std::size_t a = bit(qa), b = bit(qb);
  for (std::size_t i = 0; i < s.dimension(); ++i) {
    const std::size_t k = ((i & a) ? 2U : 0U) + ((i & b) ? 1U : 0U);
    s.amplitudes[i] *= phases[k];
  }
}

}  // namespace gates

namespace detail {

inline void check_training(std::span<const EncodedSample> training) {
  if (training.empty()) throw DataError("training set is empty");
  const auto n = training.front().bits.size();
  if (n == 0) throw DataError("training bit vectors are empty");
  for (const auto &t : training) {
    if (t.bits.size() != n) throw DataError("training bit vectors differ in length");
    if (!t.label || (*t.label != 0 && *t.label != 1))
      throw DataError("training labels must be 0 or 1");
  }
}

inline std::size_t pack(const Bits &bits) {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < bits.size(); ++k)
    if (bits[k]) idx |= std::size_t{1} << k;
  return idx;
}

}  // namespace detail

/// Uniform superposition over |x^p, y^p> on n + 1 qubits, label in qubit n.
/// Amplitudes are assigned directly; the set must already be deduplicated.
inline QuantumState build_training_superposition(std::span<const EncodedSample> training) {
  detail::check_training(training);
  const int n = static_cast<int>(training.front().bits.size());
  if (n > 12) throw DataError("at most 12 feature bits are supported (26 qubits)");
  QuantumState s(n + 1);
  const double amp = 1.0 / std::sqrt(static_cast<double>(training.size()));
  std::set<std::size_t> used;
  for (const auto &t : training) {
    const std::size_t idx =
        detail::pack(t.bits) | (static_cast<std::size_t>(*t.label) << n);
    if (!used.insert(idx).second)
      throw DataError("duplicate training pair " + bits_to_string(t.bits) + "/" +
                      std::to_string(*t.label) + "; deduplicate before state preparation");
    s.amplitudes[idx] = amp;
  }
  return s;
}

enum class CircuitStep { prepared, ancilla_hadamard, hamming, phase, final_hadamard };

using CircuitObserver = std::function<void(CircuitStep, const QuantumState &)>;

/// Prepares |x_in> (x) |T> (x) |0>_a and applies H_a, the n cNOTs, the
/// distance phase e^{-i pi/(2n) O} as n two-qubit diagonal gates, and H_a.
inline QuantumState run_circuit(const EncodedSample &input, const QuantumState &training_state,
                                const CircuitObserver &observe = {}) {
  const int n = training_state.n_qubits - 1;
  if (n < 1 || static_cast<int>(input.bits.size()) != n)
    throw DataError("input has " + std::to_string(input.bits.size()) +
                    " bits but the training register holds " + std::to_string(n));
  const RegisterLayout layout{n};
  QuantumState s(layout.total());
  const std::size_t in = detail::pack(input.bits);
  for (std::size_t t = 0; t < training_state.dimension(); ++t)
    s.amplitudes[in | (t << n)] = training_state.amplitudes[t];
  if (observe) observe(CircuitStep::prepared, s);

  gates::hadamard(s, layout.ancilla());
  if (observe) observe(CircuitStep::ancilla_hadamard, s);

  for (int k = 0; k < n; ++k) gates::cnot(s, layout.input(k), layout.training(k));
  if (observe) observe(CircuitStep::hamming, s);

  const double theta = std::numbers::pi / (2.0 * n);
  const std::array<Amplitude, 4> phases{Amplitude{1.0, 0.0}, Amplitude{1.0, 0.0},
                                        std::polar(1.0, -theta), std::polar(1.0, theta)};
  for (int k = 0; k < n; ++k) gates::diagonal2(s, layout.training(k), layout.ancilla(), phases);
  if (observe) observe(CircuitStep::phase, s);

  gates::hadamard(s, layout.ancilla());
  if (observe) observe(CircuitStep::final_hadamard, s);
  return s;
}

/// Exact post-selected class probabilities from the final state.
inline ClassProbabilities extract_probabilities(const QuantumState &psi4,
                                                const RegisterLayout &layout) {
  if (psi4.n_qubits != layout.total()) throw DataError("state does not match register layout");
  const std::size_t anc = gates::bit(layout.ancilla());
  const std::size_t cls = gates::bit(layout.class_qubit());
  double joint0 = 0.0, joint1 = 0.0;
  for (std::size_t i = 0; i < psi4.dimension(); ++i) {
    if (i & anc) continue;
    (i & cls ? joint1 : joint0) += std::norm(psi4.amplitudes[i]);
  }
  ClassProbabilities p;
  p.p_postselect = joint0 + joint1;
  if (p.p_postselect < 1e-12)
    throw PostselectError("post-selection impossible: every training point is at maximal "
                          "Hamming distance from the input");
  p.p0 = joint0 / p.p_postselect;
  p.p1 = joint1 / p.p_postselect;
  return p;
}

inline int hamming_distance(const Bits &a, const Bits &b) {
  if (a.size() != b.size()) throw DataError("Hamming distance of unequal lengths");
  int d = 0;
  for (std::size_t k = 0; k < a.size(); ++k) d += a[k] != b[k];
  return d;
}

/// Closed form: P(y) = sum_{l in y} cos^2(pi d_l / 2n) / sum_l cos^2(pi d_l / 2n).
inline ClassProbabilities analytic_probabilities(const EncodedSample &input,
                                                 std::span<const EncodedSample> training) {
  detail::check_training(training);
  const auto n = training.front().bits.size();
  if (input.bits.size() != n) throw DataError("input length does not match training");
  double w[2] = {0.0, 0.0};
  for (const auto &t : training) {
    const double c = std::cos(std::numbers::pi * hamming_distance(input.bits, t.bits) /
                              (2.0 * static_cast<double>(n)));
    w[*t.label] += c * c;
  }
  ClassProbabilities p;
  p.p_postselect = (w[0] + w[1]) / static_cast<double>(training.size());
  if (p.p_postselect < 1e-12)
    throw PostselectError("post-selection impossible: every training point is at maximal "
                          "Hamming distance from the input");
  p.p0 = w[0] / (w[0] + w[1]);
  p.p1 = w[1] / (w[0] + w[1]);
  return p;
}

struct SampledProbabilities {
  double p0 = 0.0;
  double p1 = 0.0;
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
};

/// Shot-based estimate: each shot measures the whole register; shots with the
/// ancilla in |1> are discarded.
inline SampledProbabilities sample_probabilities(const QuantumState &psi4,
                                                 const RegisterLayout &layout,
                                                 std::uint64_t shots, std::uint64_t seed) {
  std::vector<double> cumulative(psi4.dimension());
  double acc = 0.0;
  for (std::size_t i = 0; i < psi4.dimension(); ++i) {
    acc += std::norm(psi4.amplitudes[i]);
    cumulative[i] = acc;
  }
  std::mt19937_64 rng(seed);
  const std::size_t anc = gates::bit(layout.ancilla());
  const std::size_t cls = gates::bit(layout.class_qubit());
  SampledProbabilities out;
  std::uint64_t ones = 0;
  for (std::uint64_t s = 0; s < shots; ++s) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * acc;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const auto idx = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                 static_cast<std::ptrdiff_t>(cumulative.size() - 1)));
    if (idx & anc) {
      ++out.rejected;
      continue;
    }
    ++out.accepted;
    if (idx & cls) ++ones;
  }
  if (out.accepted > 0) {
    out.p1 = static_cast<double>(ones) / static_cast<double>(out.accepted);
    out.p0 = 1.0 - out.p1;
  }
  return out;
}

/// Classifier bound to one training set, with a prediction cache keyed by the
/// input bits. Concurrent callers asking for the same bits share a single
/// circuit run.
class QnnClassifier {
 public:
  struct Result {
    ClassProbabilities probabilities;
    bool from_cache = false;
  };

  explicit QnnClassifier(std::vector<EncodedSample> training)
      : training_(std::move(training)),
        state_(build_training_superposition(training_)),
        layout_{state_.n_qubits - 1} {}

  const RegisterLayout &layout() const { return layout_; }
  const QuantumState &training_state() const { return state_; }
  std::size_t circuit_runs() const { return circuit_runs_.load(); }
  std::size_t cache_hits() const { return cache_hits_.load(); }

  Result classify(const EncodedSample &input) {
    std::shared_future<Outcome> future;
    bool owner = false;
    std::promise<Outcome> promise;
    {
      std::lock_guard lock(mutex_);
      auto it = cache_.find(input.bits);
      if (it == cache_.end()) {
        future = promise.get_future().share();
        cache_.emplace(input.bits, future);
        owner = true;
      } else {
        future = it->second;
      }
    }
    if (owner) {
      Outcome o;
      try {
        ++circuit_runs_;
        o.probabilities = extract_probabilities(run_circuit(input, state_), layout_);
      } catch (const PostselectError &e) {
        o.error = e.what();
      }
      promise.set_value(o);
    } else {
      ++cache_hits_;
    }
    const Outcome &o = future.get();
    if (!o.error.empty()) throw PostselectError(o.error);
    return {o.probabilities, !owner};
  }

 private:
  struct Outcome {
    ClassProbabilities probabilities;
    std::string error;
  };

  std::vector<EncodedSample> training_;
  QuantumState state_;
  RegisterLayout layout_;
  std::mutex mutex_;
  std::map<Bits, std::shared_future<Outcome>> cache_;
  std::atomic<std::size_t> circuit_runs_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

/// One-shot classification without a persistent cache.
inline ClassProbabilities classify(const EncodedSample &input,
                                   std::span<const EncodedSample> training) {
  const auto state = build_training_superposition(training);
  return extract_probabilities(run_circuit(input, state), RegisterLayout{state.n_qubits - 1});
}

}  // namespace qphase

#endif  // QPHASE_QNN_HPP
