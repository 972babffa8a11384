// Copyright 2026 The randstream Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "randstream/adapt.hpp"

using namespace randstream;
using namespace randstream::adapt;

namespace {

std::vector<double> random_scores(std::mt19937_64& rng, std::size_t k) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> s(k);
  for (auto& x : s) x = u(rng);
  return s;
}

double total(const std::vector<double>& p) { return std::accumulate(p.begin(), p.end(), 0.0); }

}  // namespace

TEST_SUITE("adapt") {
  TEST_CASE("equal scores give the uniform distribution") {
    for (double s : {0.0, 0.3, 1.0}) {
      const auto p = update_class_probs({std::vector<double>(5, s), 0}, {});
      for (double x : p) CHECK(x == doctest::Approx(0.2).epsilon(1e-12));
    }
  }

  TEST_CASE("two classes with scores 1 and 0") {
    // softmax(0, 1) = (1, e) / (1 + e); p = 0.05 + 0.9 * softmax.
    const double e = std::exp(1.0);
    const auto p = update_class_probs({{1.0, 0.0}, 0}, {1.0, 0.05, 0.5});
    CHECK(p[0] == doctest::Approx(0.05 + 0.9 / (1 + e)).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.05 + 0.9 * e / (1 + e)).epsilon(1e-12));
    CHECK(std::abs(p[0] - 0.292) < 5e-4);
    CHECK(std::abs(p[1] - 0.708) < 5e-4);
  }

  TEST_CASE("vanishing temperature flattens the distribution") {
    const auto p = update_class_probs({{1.0, 0.0, 0.5}, 0}, {1e-12, 0.05, 0.5});
    for (double x : p) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  }

  TEST_CASE("output stays on the simplex above the floor") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 2000; ++trial) {
      const std::size_t k = 1 + rng() % 12;
      AdaptPolicy pol{0.01 + 20 * u(rng), 0.999 * u(rng) / static_cast<double>(k), u(rng)};
      const auto p = update_class_probs({random_scores(rng, k), 0}, pol);
      REQUIRE(p.size() == k);
      REQUIRE(std::abs(total(p) - 1.0) <= 1e-9);
      for (double x : p) REQUIRE(x >= pol.floor);
    }
  }

  TEST_CASE("lowering a score never lowers that class's probability") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 2000; ++trial) {
      const std::size_t k = 2 + rng() % 8;
      auto scores = random_scores(rng, k);
      const std::size_t c = rng() % k;
      const AdaptPolicy pol{0.1 + 5 * u(rng), 0.5 * u(rng) / static_cast<double>(k), 0.5};
      const double before = update_class_probs({scores, 0}, pol)[c];
      scores[c] *= u(rng);
      REQUIRE(update_class_probs({scores, 0}, pol)[c] >= before - 1e-15);
    }
  }

  TEST_CASE("the lowest score gets the highest probability") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t k = 2 + rng() % 8;
      const auto scores = random_scores(rng, k);
      const auto p = update_class_probs({scores, 0}, {});
      const auto lo = std::min_element(scores.begin(), scores.end()) - scores.begin();
      const auto hi = std::max_element(p.begin(), p.end()) - p.begin();
      REQUIRE(lo == hi);
    }
  }

  TEST_CASE("invalid feedback and policies") {
    CHECK_THROWS_AS(update_class_probs({{}, 0}, {}), std::invalid_argument);
    CHECK_THROWS_AS(update_class_probs({{0.5, 1.5}, 0}, {}), std::invalid_argument);
    CHECK_THROWS_AS(update_class_probs({{0.5, std::nan("")}, 0}, {}), std::invalid_argument);
    CHECK_THROWS_AS(update_class_probs({{0.5, 0.5}, 0}, {0.0, 0.05, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(update_class_probs({{0.5, 0.5}, 0}, {1.0, 0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(update_class_probs({{0.5, 0.5}, 0}, {1.0, -0.1, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(update_class_probs({{0.5, 0.5}, 0}, {1.0, 0.05, 1.5}), std::invalid_argument);
  }

  TEST_CASE("scores are averaged exponentially") {
    FeedbackState st({1.0, 0.05, 0.5});
    st.update({{1.0, 1.0}, 1});
    CHECK(st.smoothed_scores() == std::vector<double>{1.0, 1.0});
    st.update({{0.0, 1.0}, 2});
    CHECK(st.smoothed_scores() == std::vector<double>{0.5, 1.0});
    st.update({{0.0, 1.0}, 3});
    CHECK(st.smoothed_scores() == std::vector<double>{0.25, 1.0});
    CHECK(st.steps() == 3);
    CHECK(st.class_probs() == update_class_probs({{0.25, 1.0}, 0}, st.policy()));

    FeedbackState raw({1.0, 0.05, 1.0});
    raw.update({{1.0, 1.0}, 1});
    raw.update({{0.2, 1.0}, 2});
    CHECK(raw.smoothed_scores()[0] == 0.2);
  }

  TEST_CASE("a depressed class gains probability step by step until it plateaus") {
    FeedbackState st;
    st.update({{1.0, 1.0, 1.0}, 0});
    double prev = st.class_probs()[0];
    for (int step = 1; step <= 12; ++step) {
      const double p0 = st.update({{0.1, 0.9, 0.95}, static_cast<std::uint64_t>(step)})[0];
      REQUIRE(p0 >= prev);
      prev = p0;
    }
    const double limit = update_class_probs({{0.1, 0.9, 0.95}, 0}, {})[0];
    CHECK(prev == doctest::Approx(limit).epsilon(1e-3));
  }

  TEST_CASE("feedback_step broadcasts set_class_probs") {
    auto hub = channel::ControlHub::bind();
    FeedbackState st;
    // No producers: the step still updates state.
    CHECK_NOTHROW(feedback_step(hub, st, {{1.0, 1.0}, 0}));
    CHECK(st.steps() == 1);

    auto client = channel::ControlClient::connect(hub.endpoint());
    REQUIRE(hub.wait_for_producers(1, std::chrono::milliseconds(5000)));
    const auto probs = feedback_step(hub, st, {{0.5, 0.5}, 1});
    const auto m = client.poll(std::chrono::milliseconds(5000));
    REQUIRE(m);
    CHECK(m->str("cmd") == channel::kCmdSetClassProbs);
    const auto got = channel::class_probs_of(*m);
    REQUIRE(got.size() == 2);
    CHECK(got[0] == doctest::Approx(probs[0]).epsilon(1e-6));
    CHECK(got[0] == doctest::Approx(0.5).epsilon(1e-6));
  }
}
