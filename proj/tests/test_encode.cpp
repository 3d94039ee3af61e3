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

#include "qphase/encode.hpp"
#include "support.hpp"

using namespace qphase;
using Catch::Matchers::WithinAbs;
using qphase::testing::TempDir;
using qphase::testing::WarningCapture;

namespace {

FeatureEncoder encoder_from(std::vector<double> values) {
  return fit_feature_encoder(values, 0, "f0");
}

EncodedSample es(const char *bits, std::optional<int> label) {
  return {bits_from_string(bits), label};
}

std::vector<Sample> synthetic_train(std::size_t rows, std::size_t features, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Sample> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    out[r].g = 0.01 * static_cast<double>(r + 1);
    out[r].label = r < rows / 2 ? 0 : 1;
    out[r].features.resize(features);
    for (auto &v : out[r].features) v = u(rng);
  }
  return out;
}

}  // namespace

TEST_CASE("three symmetric clusters", "[encode]") {
  const auto enc = encoder_from({0, 0.1, 5, 5.1, 10, 10.1});
  CHECK_THAT(enc.centroids[0], WithinAbs(0.05, 1e-12));
  CHECK_THAT(enc.centroids[1], WithinAbs(5.05, 1e-12));
  CHECK_THAT(enc.centroids[2], WithinAbs(10.05, 1e-12));
  CHECK_THAT(enc.bin_edges[0], WithinAbs(2.55, 1e-12));
  CHECK_THAT(enc.bin_edges[1], WithinAbs(7.55, 1e-12));
  CHECK(enc.level(6.0) == 1);
  CHECK(kOneHot[static_cast<std::size_t>(enc.level(6.0))] == std::array<std::uint8_t, 2>{0, 1});
}

TEST_CASE("k-means bins follow the data", "[encode]") {
  std::mt19937_64 rng(1);
  SECTION("uniform data gives near-equal mass") {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(10000);
    for (auto &x : v) x = u(rng);
    const auto enc = encoder_from(v);
    std::array<int, 3> mass{};
    for (double x : v) ++mass[static_cast<std::size_t>(enc.level(x))];
    for (int m : mass) CHECK(std::abs(m - 3333) < 200);
  }
  SECTION("clustered data gives unequal widths") {
    std::normal_distribution<double> a(0.0, 0.05), b(0.2, 0.05), c(1.0, 0.05);
    std::vector<double> v;
    for (int i = 0; i < 3000; ++i) v.push_back(i % 3 == 0 ? a(rng) : i % 3 == 1 ? b(rng) : c(rng));
    const auto enc = encoder_from(v);
    const double lo = *std::min_element(v.begin(), v.end());
    const double hi = *std::max_element(v.begin(), v.end());
    // Edges sit between cluster means, far from the equal-width edges.
    CHECK(std::abs(enc.bin_edges[0] - (lo + (hi - lo) / 3.0)) > 0.1);
    CHECK(std::abs(enc.bin_edges[1] - (lo + 2.0 * (hi - lo) / 3.0)) > 0.1);
    CHECK_THAT(enc.bin_edges[0], WithinAbs(0.1, 0.02));
    CHECK_THAT(enc.bin_edges[1], WithinAbs(0.6, 0.02));
  }
}

TEST_CASE("refitting is deterministic", "[encode]") {
  const auto train = synthetic_train(200, 6, 2);
  const auto a = fit_encoders(train, {4, 1, 3, 0}, 0);
  const auto b = fit_encoders(train, {0, 1, 3, 4}, 0);
  CHECK(a.selected == std::vector<int>{0, 1, 3, 4});
  for (std::size_t i = 0; i < 4; ++i) CHECK(a.encoders[i].centroids == b.encoders[i].centroids);
  CHECK(a.bit_width() == 8);
}

TEST_CASE("k-means objective never increases", "[encode][property]") {
  std::mt19937_64 rng(3);
  std::lognormal_distribution<double> d(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(500);
    for (auto &x : v) x = d(rng);
    const auto km = kmeans_1d(v);
    REQUIRE(km.objective.size() == static_cast<std::size_t>(km.iterations));
    for (std::size_t i = 1; i < km.objective.size(); ++i)
      CHECK(km.objective[i] <= km.objective[i - 1] * (1.0 + 1e-12));
    CHECK(km.iterations <= 300);
  }
}

TEST_CASE("levels are monotone and nearest-centroid", "[encode][property]") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> train(100);
    for (auto &x : train) x = u(rng) * u(rng);
    const auto enc = encoder_from(train);
    std::vector<double> probe(400);
    for (auto &x : probe) x = 1.5 * u(rng);
    probe.push_back(enc.centroids[0]);
    probe.push_back(enc.bin_edges[0]);
    probe.push_back(enc.bin_edges[1]);
    std::sort(probe.begin(), probe.end());
    for (std::size_t i = 0; i < probe.size(); ++i) {
      if (i > 0) CHECK(enc.level(probe[i - 1]) <= enc.level(probe[i]));
      int best = 0;
      for (int t = 1; t < 3; ++t)
        if (std::abs(probe[i] - enc.centroids[static_cast<std::size_t>(t)]) <
            std::abs(probe[i] - enc.centroids[static_cast<std::size_t>(best)]))
          best = t;
      CHECK(enc.level(probe[i]) == best);
    }
  }
}

TEST_CASE("ties between centroids go to the lower level", "[encode]") {
  FeatureEncoder enc;
  enc.centroids = {0.0, 1.0, 2.0};
  CHECK(enc.level(0.5) == 0);
  CHECK(enc.level(1.5) == 1);
}

TEST_CASE("one-hot code is injective", "[encode][property]") {
  std::set<std::array<std::uint8_t, 2>> codes(kOneHot.begin(), kOneHot.end());
  CHECK(codes.size() == 3);
  CHECK(kOneHot[0] == std::array<std::uint8_t, 2>{1, 0});
  CHECK(kOneHot[1] == std::array<std::uint8_t, 2>{0, 1});
  CHECK(kOneHot[2] == std::array<std::uint8_t, 2>{0, 0});
}

TEST_CASE("sample encoding", "[encode]") {
  auto train = synthetic_train(300, 5, 5);
  const auto stack = fit_encoders(train, {3, 0, 2, 4}, 0);
  Sample top;
  top.features.assign(5, 0.0);
  for (const auto &enc : stack.encoders)
    top.features[static_cast<std::size_t>(enc.feature_index)] = enc.centroids[2] + 1.0;
  CHECK(bits_to_string(encode_sample(top, stack).bits) == "00000000");

  // Feature-major order over ascending indices: 0, 2, 3, 4.
  Sample mixed = top;
  mixed.features[0] = stack.encoders[0].centroids[0];
  mixed.features[3] = stack.encoders[2].centroids[1];
  mixed.label = 1;
  const auto e = encode_sample(mixed, stack);
  CHECK(bits_to_string(e.bits) == "10000100");
  CHECK(e.label == 1);
}

TEST_CASE("short codes are padded to eight bits", "[encode]") {
  const auto train = synthetic_train(100, 4, 9);
  const auto stack = fit_encoders(train, {1, 3}, 0);
  CHECK(stack.bit_width() == 4);
  const auto e = encode_sample(train.front(), stack);
  REQUIRE(e.bits.size() == 8);
  CHECK(bits_to_string(e.bits).substr(4) == "0000");
}

TEST_CASE("encoding test data does not touch the encoders", "[encode][property]") {
  const auto train = synthetic_train(200, 6, 6);
  const auto stack = fit_encoders(train, {0, 2, 4, 5}, 0);
  const auto copy = stack;
  auto test = synthetic_train(500, 6, 7);
  for (auto &s : test) {
    s.label.reset();
    for (auto &v : s.features) v *= 3.0;  // far outside the training range
  }
  const auto encoded = encode_all(test, stack);
  CHECK(encoded.size() == 500);
  CHECK(stack.selected == copy.selected);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(stack.encoders[i].centroids == copy.encoders[i].centroids);
    CHECK(stack.encoders[i].bin_edges == copy.encoders[i].bin_edges);
  }
}

TEST_CASE("features with fewer than three values are rejected by name", "[encode]") {
  std::vector<Sample> train(10);
  for (std::size_t r = 0; r < 10; ++r) {
    train[r].features.assign(18, static_cast<double>(r) / 10.0);
    train[r].features[5] = r % 2 ? 0.3 : 0.1;
    train[r].label = static_cast<int>(r % 2);
  }
  try {
    fit_encoders(train, {0, 5}, 4);
    FAIL("expected DataError");
  } catch (const DataError &e) {
    CHECK(std::string(e.what()).find("xx_3_4") != std::string::npos);
  }
  CHECK_THROWS_AS(fit_encoders(train, {18}, 4), DataError);
  CHECK_THROWS_AS(fit_encoders({}, {0}, 4), DataError);
}

TEST_CASE("padding", "[encode]") {
  CHECK(bits_to_string(pad_to_width(bits_from_string("101010"))) == "10101000");
  CHECK(bits_to_string(pad_to_width(bits_from_string("11001100"))) == "11001100");
  CHECK(bits_to_string(pad_to_width({})) == "00000000");
  CHECK_THROWS_AS(pad_to_width(bits_from_string("110011001")), DataError);
  CHECK_THROWS_AS(bits_from_string("10a1"), DataError);
}

TEST_CASE("training deduplication", "[encode]") {
  {
    WarningCapture w;
    const std::vector<EncodedSample> in{es("01010101", 0), es("01010101", 0), es("11001100", 1)};
    const auto out = dedup_training(in);
    REQUIRE(out.size() == 2);
    CHECK(out[0] == in[0]);
    CHECK(out[1] == in[2]);
    CHECK(w.messages.empty());
  }
  {
    const std::vector<EncodedSample> same(5, es("0011", 1));
    CHECK(dedup_training(same).size() == 1);
  }
  {
    WarningCapture w;
    const auto out = dedup_training(std::vector<EncodedSample>{es("0101", 0), es("0101", 1)});
    CHECK(out.size() == 2);
    REQUIRE(w.messages.size() == 1);
    CHECK(w.messages[0].find("0101") != std::string::npos);
  }
  CHECK_THROWS_AS(dedup_training(std::vector<EncodedSample>{es("01", std::nullopt)}), DataError);
}

TEST_CASE("constant bit positions", "[encode]") {
  const std::vector<EncodedSample> rows{es("1000", {}), es("1010", {}), es("1001", {})};
  CHECK(constant_bit_positions(rows) == std::vector<int>{0, 1});
  CHECK(constant_bit_positions({}).empty());
}

TEST_CASE("encoder and encoded files round trip", "[encode]") {
  TempDir dir("encoder");
  auto train = synthetic_train(120, 18, 8);
  const auto stack = fit_encoders(train, {17, 2, 9, 11}, 4);
  write_encoder_stack(dir / "enc.txt", stack, 4, {"seed=3"});
  const auto back = read_encoder_stack(dir / "enc.txt");
  CHECK(back.selected == stack.selected);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(back.encoders[i].feature_index == stack.encoders[i].feature_index);
    CHECK(back.encoders[i].centroids == stack.encoders[i].centroids);
    CHECK(back.encoders[i].bin_edges == stack.encoders[i].bin_edges);
  }

  std::vector<EncodedRow> rows;
  for (const auto &s : train) rows.push_back({s.kappa, s.g, encode_sample(s, stack)});
  rows.back().sample.label.reset();
  write_encoded(dir / "rows.csv", rows);
  const auto rows_back = read_encoded(dir / "rows.csv");
  REQUIRE(rows_back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows_back[i].g == rows[i].g);
    CHECK(rows_back[i].sample == rows[i].sample);
  }
}
