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


#include <catch_amalgamated.hpp>

#include <random>
#include <thread>

#include "qphase/qnn.hpp"

using namespace qphase;
using Catch::Matchers::WithinAbs;

namespace {

EncodedSample es(const char *bits, std::optional<int> label = std::nullopt) {
  return {bits_from_string(bits), label};
}

const std::vector<EncodedSample> &four_point_set() {
  static const std::vector<EncodedSample> t{es("0000", 0), es("0001", 0), es("1110", 1),
                                            es("1111", 1)};
  return t;
}

Bits random_bits(std::mt19937_64 &rng, int n) {
  Bits b(static_cast<std::size_t>(n));
  for (auto &x : b) x = static_cast<std::uint8_t>(rng() & 1U);
  return b;
}

// Distinct (bits, label) pairs drawn at random.
std::vector<EncodedSample> random_training(std::mt19937_64 &rng, int n, int count) {
  std::set<std::pair<Bits, int>> seen;
  std::vector<EncodedSample> out;
  while (static_cast<int>(out.size()) < count) {
    EncodedSample s{random_bits(rng, n), static_cast<int>(rng() & 1U)};
    if (seen.insert({s.bits, *s.label}).second) out.push_back(s);
  }
  return out;
}

std::size_t pack(const Bits &b, int offset) {
  std::size_t v = 0;
  for (std::size_t k = 0; k < b.size(); ++k)
    if (b[k]) v |= std::size_t{1} << (static_cast<std::size_t>(offset) + k);
  return v;
}

}  // namespace

TEST_CASE("training superposition", "[qnn]") {
  SECTION("single sample") {
    const auto s = build_training_superposition(std::vector{es("0000", 0)});
    CHECK(s.n_qubits == 5);
    CHECK(s.amplitudes[0] == Amplitude{1.0, 0.0});
    CHECK(s.nonzero_count() == 1);
  }
  SECTION("four samples") {
    const auto s = build_training_superposition(four_point_set());
    CHECK(s.nonzero_count() == 4);
    CHECK_THAT(s.norm(), WithinAbs(1.0, 1e-12));
    for (const auto &t : four_point_set()) {
      const auto idx = pack(t.bits, 0) | (static_cast<std::size_t>(*t.label) << 4);
      CHECK_THAT(s.amplitudes[idx].real(), WithinAbs(0.5, 1e-15));
    }
  }
  SECTION("random sets") {
    std::mt19937_64 rng(1);
    for (int count : {1, 3, 7, 20}) {
      const auto s = build_training_superposition(random_training(rng, 6, count));
      CHECK(s.nonzero_count() == static_cast<std::size_t>(count));
      CHECK_THAT(s.norm(), WithinAbs(1.0, 1e-12));
    }
  }
  SECTION("invalid sets") {
    CHECK_THROWS_AS(build_training_superposition(std::vector{es("01", 0), es("01", 0)}), DataError);
    CHECK_THROWS_AS(build_training_superposition(std::vector<EncodedSample>{}), DataError);
    CHECK_THROWS_AS(build_training_superposition(std::vector{es("01", 0), es("011", 1)}), DataError);
    CHECK_THROWS_AS(build_training_superposition(std::vector{es("01", 2)}), DataError);
    CHECK_THROWS_AS(build_training_superposition(std::vector{es("01")}), DataError);
    CHECK_THROWS_AS(build_training_superposition(std::vector{es("0000000000000", 0)}), DataError);
  }
}

TEST_CASE("circuit on the four-point set", "[qnn]") {
  const auto state = build_training_superposition(four_point_set());
  const auto psi = run_circuit(es("0000"), state);
  CHECK(psi.n_qubits == 10);
  CHECK_THAT(psi.norm(), WithinAbs(1.0, 1e-12));
  // Distances 0 and 4 each leave one ancilla branch empty.
  CHECK(psi.nonzero_count() == 6);
  const auto mid = run_circuit(es("0010"), state);
  CHECK(mid.nonzero_count() == 8);
  CHECK_THROWS_AS(run_circuit(es("000"), state), DataError);
}

TEST_CASE("probabilities on the four-point set", "[qnn]") {
  const auto &t = four_point_set();
  SECTION("input 0000") {
    const auto p = classify(es("0000"), t);
    CHECK_THAT(p.p0, WithinAbs(0.9267766952966369, 1e-12));
    CHECK_THAT(p.p1, WithinAbs(0.07322330470336315, 1e-12));
    CHECK_THAT(p.p_postselect, WithinAbs(0.5, 1e-12));
  }
  SECTION("input 1111 mirrors 0000") {
    const auto p = classify(es("1111"), t);
    CHECK_THAT(p.p0, WithinAbs(0.07322330470336315, 1e-12));
    CHECK_THAT(p.p1, WithinAbs(0.9267766952966369, 1e-12));
  }
  SECTION("input 0010") {
    // Distances 1, 2, 2, 3: cos^2 weights 0.853553 + 0.5 against 0.5 + 0.146447.
    const auto p = classify(es("0010"), t);
    CHECK_THAT(p.p0, WithinAbs(0.6767766952966369, 1e-12));
    CHECK_THAT(p.p1, WithinAbs(0.32322330470336313, 1e-12));
    CHECK_THAT(p.p_postselect, WithinAbs(0.5, 1e-12));
    const auto a = analytic_probabilities(es("0010"), t);
    CHECK_THAT(a.p0, WithinAbs(p.p0, 1e-12));
  }
  SECTION("no input balances the two classes") {
    // Class-1 points are complements of class-0 points and the class-0
    // distances always differ by one, so the cos^2 sums never tie.
    for (std::size_t v = 0; v < 16; ++v) {
      EncodedSample in{Bits(4), std::nullopt};
      for (std::size_t k = 0; k < 4; ++k) in.bits[k] = static_cast<std::uint8_t>((v >> k) & 1U);
      try {
        CHECK(std::abs(classify(in, t).p0 - 0.5) > 0.1);
      } catch (const PostselectError &) {
        FAIL("post-selection is always possible on this set");
      }
    }
  }
}

TEST_CASE("single training point", "[qnn]") {
  const std::vector<EncodedSample> same{es("1011", 0)};
  const auto p = classify(es("1011"), same);
  CHECK_THAT(p.p_postselect, WithinAbs(1.0, 1e-12));
  CHECK_THAT(p.p0, WithinAbs(1.0, 1e-12));
  CHECK_THAT(p.p1, WithinAbs(0.0, 1e-12));

  const std::vector<EncodedSample> far{es("0100", 1)};
  CHECK_THROWS_AS(classify(es("1011"), far), PostselectError);
  CHECK_THROWS_AS(analytic_probabilities(es("1011"), far), PostselectError);
  try {
    classify(es("1011"), far);
  } catch (const PostselectError &e) {
    CHECK(e.exit_code() == 4);
  }
}

TEST_CASE("simulator matches the closed form", "[qnn][property]") {
  std::mt19937_64 rng(2024);
  int compared = 0, impossible = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const int max_count = std::min(8, 2 << n);
    const int count = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_count));
    const auto training = random_training(rng, n, count);
    const EncodedSample input{random_bits(rng, n), std::nullopt};
    try {
      const auto sim = classify(input, training);
      const auto ref = analytic_probabilities(input, training);
      CHECK_THAT(sim.p0, WithinAbs(ref.p0, 1e-10));
      CHECK_THAT(sim.p1, WithinAbs(ref.p1, 1e-10));
      CHECK_THAT(sim.p_postselect, WithinAbs(ref.p_postselect, 1e-10));
      CHECK_THAT(sim.p0 + sim.p1, WithinAbs(1.0, 1e-10));
      ++compared;
    } catch (const PostselectError &) {
      CHECK_THROWS_AS(analytic_probabilities(input, training), PostselectError);
      ++impossible;
    }
  }
  CHECK(compared + impossible == 100);
  CHECK(compared > 80);
}

TEST_CASE("every circuit step is unitary", "[qnn][property]") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 5);
    const auto training = random_training(rng, n, 1 + static_cast<int>(rng() % 8));
    int steps = 0;
    run_circuit({random_bits(rng, n), std::nullopt}, build_training_superposition(training),
                [&](CircuitStep, const QuantumState &s) {
                  CHECK_THAT(s.norm(), WithinAbs(1.0, 1e-12));
                  ++steps;
                });
    CHECK(steps == 5);
  }
}

TEST_CASE("hamming register holds input xor training bits", "[qnn][property]") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 5);
    const auto training = random_training(rng, n, 1 + static_cast<int>(rng() % 8));
    const EncodedSample input{random_bits(rng, n), std::nullopt};
    std::set<std::pair<std::size_t, std::size_t>> expected;  // (register, label)
    for (const auto &t : training) {
      std::size_t d = 0;
      for (int k = 0; k < n; ++k)
        if (input.bits[static_cast<std::size_t>(k)] != t.bits[static_cast<std::size_t>(k)])
          d |= std::size_t{1} << k;
      expected.insert({d, static_cast<std::size_t>(*t.label)});
    }
    const RegisterLayout layout{n};
    const std::size_t in = pack(input.bits, 0);
    bool seen = false;
    run_circuit(input, build_training_superposition(training),
                [&](CircuitStep step, const QuantumState &s) {
                  if (step != CircuitStep::hamming) return;
                  seen = true;
                  std::set<std::pair<std::size_t, std::size_t>> found;
                  for (std::size_t i = 0; i < s.dimension(); ++i) {
                    if (std::abs(s.amplitudes[i]) < 1e-14) continue;
                    CHECK((i & ((std::size_t{1} << n) - 1)) == in);
                    const std::size_t reg = (i >> n) & ((std::size_t{1} << n) - 1);
                    const std::size_t label = (i >> layout.class_qubit()) & 1U;
                    found.insert({reg, label});
                  }
                  CHECK(found == expected);
                });
    CHECK(seen);
  }
}

TEST_CASE("training order does not matter", "[qnn][property]") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto training = random_training(rng, 5, 8);
    const EncodedSample input{random_bits(rng, 5), std::nullopt};
    const auto base = classify(input, training);
    std::shuffle(training.begin(), training.end(), rng);
    const auto moved = classify(input, training);
    CHECK(base.p0 == moved.p0);
    CHECK(base.p1 == moved.p1);
    CHECK(base.p_postselect == moved.p_postselect);
  }
}

TEST_CASE("duplicating the training set leaves the closed form unchanged", "[qnn][property]") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto training = random_training(rng, 6, 6);
    auto tripled = training;
    for (int m = 0; m < 2; ++m) tripled.insert(tripled.end(), training.begin(), training.end());
    const EncodedSample input{random_bits(rng, 6), std::nullopt};
    const auto a = analytic_probabilities(input, training);
    const auto b = analytic_probabilities(input, tripled);
    CHECK_THAT(a.p0, WithinAbs(b.p0, 1e-12));
    CHECK_THAT(a.p_postselect, WithinAbs(b.p_postselect, 1e-12));
  }
}

TEST_CASE("nearer class is more probable", "[qnn][property]") {
  const int n = 6;
  const Bits zero(n, 0);
  for (int da = 0; da < n; ++da) {
    for (int db = da + 1; db <= n; ++db) {
      Bits a = zero, b = zero;
      for (int k = 0; k < da; ++k) a[static_cast<std::size_t>(k)] = 1;
      for (int k = 0; k < db; ++k) b[static_cast<std::size_t>(n - 1 - k)] = 1;
      const std::vector<EncodedSample> training{{a, 1}, {b, 0}};
      const auto p = classify({zero, std::nullopt}, training);
      CHECK(p.p1 > p.p0);
    }
  }
}

TEST_CASE("single-class training", "[qnn]") {
  const std::vector<EncodedSample> training{es("0011", 0), es("0101", 0), es("1110", 0)};
  const auto p = analytic_probabilities(es("0001"), training);
  CHECK(p.p0 == 1.0);
  CHECK(p.p1 == 0.0);
  const auto q = classify(es("0001"), training);
  CHECK_THAT(q.p0, WithinAbs(1.0, 1e-12));
}

TEST_CASE("register counts", "[qnn]") {
  CHECK(RegisterLayout{8}.total() == 18);
  CHECK(RegisterLayout{4}.total() == 10);
  QnnClassifier eight(std::vector<EncodedSample>{es("00000000", 0), es("10101010", 1)});
  CHECK(eight.layout().total() == 18);
  CHECK(run_circuit(es("01010101"), eight.training_state()).n_qubits == 18);
  QnnClassifier four(four_point_set());
  CHECK(four.layout().total() == 10);
}

TEST_CASE("prediction cache", "[qnn]") {
  QnnClassifier clf(four_point_set());
  const auto first = clf.classify(es("0000"));
  CHECK_FALSE(first.from_cache);
  CHECK(clf.circuit_runs() == 1);
  const auto second = clf.classify(es("0000"));
  CHECK(second.from_cache);
  CHECK(clf.circuit_runs() == 1);
  CHECK(clf.cache_hits() == 1);
  CHECK(second.probabilities.p0 == first.probabilities.p0);
  CHECK(second.probabilities.p1 == first.probabilities.p1);

  QnnClassifier far(std::vector<EncodedSample>{es("0000", 0)});
  CHECK_THROWS_AS(far.classify(es("1111")), PostselectError);
  CHECK_THROWS_AS(far.classify(es("1111")), PostselectError);
  CHECK(far.circuit_runs() == 1);
}

TEST_CASE("concurrent callers share one circuit run per input", "[qnn]") {
  std::mt19937_64 rng(9);
  QnnClassifier clf(random_training(rng, 8, 10));
  std::vector<Bits> inputs;
  for (int i = 0; i < 6; ++i) inputs.push_back(random_bits(rng, 8));
  std::vector<std::vector<double>> seen(8);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < 8; ++w)
      pool.emplace_back([&, w] {
        for (int rep = 0; rep < 20; ++rep)
          for (const auto &b : inputs) {
            try {
              seen[w].push_back(clf.classify({b, std::nullopt}).probabilities.p0);
            } catch (const PostselectError &) {
              seen[w].push_back(-1.0);
            }
          }
      });
  }
  CHECK(clf.circuit_runs() == 6);
  CHECK(clf.cache_hits() == 8 * 20 * 6 - 6);
  for (const auto &s : seen) CHECK(s == seen.front());
}

TEST_CASE("shot sampling approaches the exact probabilities", "[qnn]") {
  const auto state = build_training_superposition(four_point_set());
  const auto psi = run_circuit(es("0010"), state);
  const RegisterLayout layout{4};
  const auto exact = extract_probabilities(psi, layout);
  const auto s = sample_probabilities(psi, layout, 200000, 42);
  CHECK(s.accepted + s.rejected == 200000);
  CHECK_THAT(static_cast<double>(s.accepted) / 200000.0, WithinAbs(exact.p_postselect, 0.01));
  CHECK_THAT(s.p0, WithinAbs(exact.p0, 0.01));
  CHECK(s.p0 + s.p1 == 1.0);
  const auto again = sample_probabilities(psi, layout, 200000, 42);
  CHECK(again.accepted == s.accepted);
  CHECK(again.p0 == s.p0);
}
