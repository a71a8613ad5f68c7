#include <doctest.h>

#include "esrlcm/simulation.hpp"

using namespace esrlcm;
using namespace esrlcm::simulation;

TEST_CASE("fixture examples") {
  CHECK(fixture_base_matrix(4).column(2) == BaseColumn{1, 2, 2, 1});
  CHECK(fixture_base_matrix(5).column(0) == BaseColumn{1, 2, 3, 3, 1});
  CHECK(fixture_base_matrix(8).column(3) == BaseColumn{1, 2, 2, 1, 1, 1, 2, 2});
  CHECK(fixture_raw_labels(4)[2] == std::vector<int>{0, 1, 1, 0});
  for (std::size_t C : {4u, 5u, 8u, 11u, 16u}) {
    CHECK(fixture_supported(C));
    auto B = fixture_base_matrix(C);
    CHECK(B.items() == 32);
    CHECK(B.classes() == C);
  }
  CHECK_FALSE(fixture_supported(6));
  CHECK_THROWS(fixture_base_matrix(6));
  CHECK_THROWS(simulate(6, 10, 1));
}

TEST_CASE("C = 4 fixture has between 2 and 4 base classes per item") {
  auto B = fixture_base_matrix(4);
  for (std::size_t j = 0; j < B.items(); ++j) {
    CHECK(B.base_classes(j) >= 2);
    CHECK(B.base_classes(j) <= 4);
  }
}

TEST_CASE("gen_theta examples") {
  CHECK(gen_theta(1) == std::vector<double>{0.5});
  CHECK(gen_theta(2) == std::vector<double>{0.25, 0.75});
  auto t4 = gen_theta(4);
  std::vector<double> want{0.125, 0.375, 0.625, 0.875};
  for (std::size_t k = 0; k < 4; ++k) CHECK(t4[k] == doctest::Approx(want[k]));
}

TEST_CASE("gen_theta is increasing and symmetric on every fixture column") {
  for (std::size_t C : {4u, 5u, 8u, 11u, 16u}) {
    auto B = fixture_base_matrix(C);
    for (std::size_t j = 0; j < B.items(); ++j) {
      auto t = gen_theta(B.column(j));
      REQUIRE(t.size() == static_cast<std::size_t>(B.base_classes(j)));
      for (std::size_t k = 0; k + 1 < t.size(); ++k) CHECK(t[k] < t[k + 1]);
      for (std::size_t k = 0; k < t.size(); ++k) CHECK(t[k] + t[t.size() - 1 - k] == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("fixture truth") {
  auto truth = fixture_truth(4);
  CHECK(truth.theta_at(0, 2) == doctest::Approx(0.25));
  CHECK(truth.theta_at(1, 2) == doctest::Approx(0.75));
  for (double p : truth.pi) CHECK(p == doctest::Approx(0.25));
  for (std::size_t j = 0; j < truth.items(); ++j) {
    auto expect = theta_from_base(truth.theta_prime[j], truth.B.column(j));
    for (std::size_t c = 0; c < 4; ++c) CHECK(truth.theta_at(c, j) == doctest::Approx(expect[c]));
    // raw label 0 carries the smallest probability
    auto raw = fixture_raw_labels(4)[j];
    for (std::size_t c = 0; c < 4; ++c) {
      if (raw[c] == 0) CHECK(truth.theta_at(c, j) == doctest::Approx(1.0 / (2 * truth.B.base_classes(j))));
    }
  }
}

TEST_CASE("column means follow the truth") {
  auto sim = simulate(5, 100000, 17);
  const auto& t = sim.truth;
  for (std::size_t j = 0; j < t.items(); ++j) {
    double expected = 0.0;
    for (std::size_t c = 0; c < t.classes(); ++c) expected += t.pi[c] * t.theta_at(c, j);
    double mean = 0.0;
    for (std::size_t i = 0; i < sim.data.size(); ++i) mean += sim.data.at(i, j);
    mean /= static_cast<double>(sim.data.size());
    CHECK(std::abs(mean - expected) < 0.01);
  }
}

TEST_CASE("class frequencies are uniform within 3 sigma") {
  const std::size_t n = 20000;
  auto sim = simulate(8, n, 3);
  REQUIRE(sim.truth.c.size() == n);
  std::vector<double> counts(8, 0.0);
  for (int c : sim.truth.c) counts[static_cast<std::size_t>(c)] += 1.0;
  double p = 1.0 / 8, sd = std::sqrt(n * p * (1 - p));
  for (double k : counts) CHECK(std::abs(k - n * p) < 3 * sd);
}

TEST_CASE("simulation is deterministic and the holdout uses its own stream") {
  auto a = simulate(4, 300, 9, 50);
  auto b = simulate(4, 300, 9, 50);
  CHECK(a.data.values() == b.data.values());
  CHECK(a.holdout.values() == b.holdout.values());
  CHECK(a.truth.c == b.truth.c);
  CHECK(a.holdout.size() == 50);
  auto c = simulate(4, 300, 10, 50);
  CHECK(a.data.values() != c.data.values());
  Rng rng(9 + kHoldoutSeedOffset);
  auto h = sample_dataset(a.truth.pi, a.truth.theta, 32, 50, rng);
  CHECK(h.values() == a.holdout.values());
  CHECK_THROWS(simulate(4, 0, 1));
}
