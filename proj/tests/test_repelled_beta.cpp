#include <doctest.h>

#include <boost/math/distributions/beta.hpp>

#include "esrlcm/repelled_beta.hpp"
#include "oracles.hpp"

using namespace esrlcm;
namespace rb = esrlcm::repelled_beta;

TEST_CASE("log_density_unnormalized examples") {
  std::vector<double> rho{0.3, 0.7};
  CHECK(rb::log_density_unnormalized(rb::Params::uniform(2, 0.0), rho) == doctest::Approx(0.0));
  CHECK(rb::log_density_unnormalized(rb::Params::uniform(2, 1.0), rho) == doctest::Approx(std::log(0.4)));
  rb::Params p{{{2, 1}, {1, 1}}, 2.0};
  std::vector<double> r2{0.5, 0.9};
  CHECK(rb::log_density_unnormalized(p, r2) == doctest::Approx(std::log(0.5) + 2 * std::log(0.4)));
}

TEST_CASE("log_density_unnormalized domain and ties") {
  std::vector<double> tie{0.4, 0.4};
  CHECK(rb::log_density_unnormalized(rb::Params::uniform(2, 1.0), tie) == -std::numeric_limits<double>::infinity());
  CHECK(rb::log_density_unnormalized(rb::Params::uniform(2, 0.0), tie) == doctest::Approx(0.0));
  std::vector<double> bad{0.0, 0.5};
  CHECK_THROWS_AS(rb::log_density_unnormalized(rb::Params::uniform(2, 1.0), bad), DomainError);
  std::vector<double> bad2{0.5, 1.2};
  CHECK_THROWS_AS(rb::log_density_unnormalized(rb::Params::uniform(2, 1.0), bad2), DomainError);
}

TEST_CASE("params validation") {
  CHECK_THROWS_AS(rb::Params({{{0.0, 1.0}}, 1.0}).validate(), DomainError);
  CHECK_THROWS_AS(rb::Params({{{1.0, 1.0}}, -0.5}).validate(), DomainError);
  CHECK_THROWS_AS(rb::Params({{}, 1.0}).validate(), DomainError);
}

TEST_CASE("normalizer_all_ones examples") {
  CHECK(rb::normalizer_all_ones(1, 0.0) == doctest::Approx(1.0));
  CHECK(rb::normalizer_all_ones(1, 3.7) == doctest::Approx(1.0));
  CHECK(rb::normalizer_all_ones(2, 0.0) == doctest::Approx(1.0));
  CHECK(rb::normalizer_all_ones(2, 1.0) == doctest::Approx(3.0));
  CHECK(1.0 / oracle::gap_integral(2, 1.0) == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("normalizer matches quadrature for M <= 3") {
  for (int m : {1, 2, 3}) {
    for (double v : {0.0, 0.5, 1.0, 2.0}) {
      CAPTURE(m);
      CAPTURE(v);
      double product = rb::normalizer_all_ones(static_cast<std::size_t>(m), v) * oracle::gap_integral(m, v);
      CHECK(std::abs(product - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("gaps_distribution examples") {
  CHECK(rb::gaps_distribution(2, 0.0) == std::vector<double>{1, 1, 1});
  CHECK(rb::gaps_distribution(3, 2.0) == std::vector<double>{1, 3, 3, 1});
  CHECK(rb::gaps_distribution(4, 0.5) == std::vector<double>{1, 1.5, 1.5, 1.5, 1});
}

TEST_CASE("expected_rho examples") {
  CHECK(rb::expected_rho(3, 0.0, 2) == doctest::Approx(0.5));
  CHECK(rb::expected_rho(3, 2.0, 1) == doctest::Approx(1.0 / 8));
  CHECK(rb::expected_rho(2, 1.0, 2) == doctest::Approx(0.75));
  // quadrature: E[max] for M=2, v=1 is 3 * integral of 2 y (y - x) over x < y
  boost::math::quadrature::tanh_sinh<double> ts;
  double e = 3.0 * 2.0 * ts.integrate([&](double y) { return y * y * y / 2.0; }, 0.0, 1.0);
  CHECK(e == doctest::Approx(0.75));
}

TEST_CASE("expected_rho against gap-sampler Monte Carlo") {
  Rng rng(11);
  const int draws = 40000;
  double s1 = 0.0;
  for (int t = 0; t < draws; ++t) s1 += rb::sample_sorted_via_gaps(3, 2.0, rng)[0];
  // sd of the smallest component is below 0.1
  CHECK(std::abs(s1 / draws - 1.0 / 8) < 4 * 0.1 / std::sqrt(draws));
}

TEST_CASE("conjugate_posterior examples") {
  auto p = rb::Params::uniform(2, 0.0);
  std::vector<std::array<std::uint64_t, 2>> zero{{0, 0}, {0, 0}};
  CHECK(rb::conjugate_posterior(p, zero).alpha == p.alpha);
  std::vector<std::array<std::uint64_t, 2>> c1{{2, 1}, {0, 0}};
  auto q = rb::conjugate_posterior(p, c1);
  CHECK(q.alpha[0] == std::array<double, 2>{3, 2});
  CHECK(q.alpha[1] == std::array<double, 2>{1, 1});
  rb::Params r{{{3, 2}, {1, 4}}, 1.0};
  std::vector<std::array<std::uint64_t, 2>> c2{{1, 1}, {2, 0}};
  auto s = rb::conjugate_posterior(r, c2);
  CHECK(s.alpha[0] == std::array<double, 2>{4, 3});
  CHECK(s.alpha[1] == std::array<double, 2>{3, 4});
  CHECK(s.v == 1.0);
  std::vector<std::array<std::uint64_t, 2>> wrong{{1, 1}};
  CHECK_THROWS(rb::conjugate_posterior(r, wrong));
}

TEST_CASE("conjugacy: posterior density is prior times likelihood up to a constant") {
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::uniform_int_distribution<int> cnt(0, 9), dim(1, 4);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t m = static_cast<std::size_t>(dim(rng));
    rb::Params prior;
    prior.v = u(rng) * 3;
    std::vector<std::array<std::uint64_t, 2>> counts(m);
    for (std::size_t k = 0; k < m; ++k) {
      prior.alpha.push_back({0.5 + 3 * u(rng), 0.5 + 3 * u(rng)});
      counts[k] = {static_cast<std::uint64_t>(cnt(rng)), static_cast<std::uint64_t>(cnt(rng))};
    }
    auto post = rb::conjugate_posterior(prior, counts);
    auto gap = [&](const std::vector<double>& rho) {
      double ll = 0.0;
      for (std::size_t k = 0; k < m; ++k) ll += counts[k][0] * std::log(rho[k]) + counts[k][1] * std::log1p(-rho[k]);
      return rb::log_density_unnormalized(post, rho) - rb::log_density_unnormalized(prior, rho) - ll;
    };
    std::vector<double> a(m), b(m);
    for (std::size_t k = 0; k < m; ++k) {
      a[k] = u(rng);
      b[k] = u(rng);
    }
    CHECK(gap(a) == doctest::Approx(gap(b)).epsilon(1e-10));
  }
}

TEST_CASE("permutation symmetry at all-ones shapes") {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> rho{u(rng), u(rng), u(rng), u(rng)};
    auto p = rb::Params::uniform(4, 1.5);
    double ref = rb::log_density_unnormalized(p, rho);
    std::sort(rho.begin(), rho.end());
    do {
      CHECK(rb::log_density_unnormalized(p, rho) == doctest::Approx(ref));
    } while (std::next_permutation(rho.begin(), rho.end()));
  }
}

TEST_CASE("sample with v = 0 matches independent betas (KS)") {
  Rng rng(2024);
  rb::Params p{{{2.0, 3.0}, {0.5, 0.5}}, 0.0};
  boost::math::beta_distribution<double> b1(2.0, 3.0), b2(0.5, 0.5);
  const std::size_t n = 100000;
  std::vector<double> x1(n), x2(n), mins(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = rb::sample(p, rng);
    x1[i] = r[0];
    x2[i] = r[1];
    mins[i] = std::min(boost::math::cdf(b1, r[0]), boost::math::cdf(b2, r[1]));
  }
  double crit = oracle::ks_critical_001(double(n));
  CHECK(oracle::ks_statistic(x1, [&](double x) { return boost::math::cdf(b1, x); }) < crit);
  CHECK(oracle::ks_statistic(x2, [&](double x) { return boost::math::cdf(b2, x); }) < crit);
  // min of two independent uniforms has CDF 1 - (1 - u)^2
  CHECK(oracle::ks_statistic(mins, [](double x) { return 1.0 - (1.0 - x) * (1.0 - x); }) < crit);
}

TEST_CASE("sample with M = 1 is a single beta draw") {
  Rng rng(8);
  rb::Params p{{{3.0, 1.5}}, 4.0};
  boost::math::beta_distribution<double> b(3.0, 1.5);
  std::vector<double> xs(20000);
  rb::SamplerStats stats;
  for (auto& x : xs) x = rb::sample(p, rng, rb::kDefaultMaxAttempts, &stats)[0];
  CHECK(stats.attempts == stats.calls);
  CHECK(oracle::ks_statistic(xs, [&](double x) { return boost::math::cdf(b, x); }) <
        oracle::ks_critical_001(double(xs.size())));
}

TEST_CASE("rejection sampler and gap sampler agree in distribution") {
  Rng rng(99);
  const std::size_t n = 20000;
  std::vector<std::vector<double>> a(3), b(3);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = rb::sample(rb::Params::uniform(3, 2.0), rng);
    std::sort(r.begin(), r.end());
    auto g = rb::sample_sorted_via_gaps(3, 2.0, rng);
    for (int k = 0; k < 3; ++k) {
      a[k].push_back(r[k]);
      b[k].push_back(g[k]);
    }
  }
  for (int k = 0; k < 3; ++k) {
    CAPTURE(k);
    CHECK(oracle::ks_two_sample(a[k], b[k]) < oracle::ks_critical_001(n / 2.0));
  }
}

TEST_CASE("sorted sample means match expected_rho") {
  Rng rng(1);
  const int n = 50000;
  std::array<double, 3> s{0, 0, 0}, s2{0, 0, 0};
  for (int i = 0; i < n; ++i) {
    auto r = rb::sample(rb::Params::uniform(3, 2.0), rng);
    std::sort(r.begin(), r.end());
    for (int k = 0; k < 3; ++k) {
      s[k] += r[k];
      s2[k] += r[k] * r[k];
    }
  }
  for (std::size_t k = 0; k < 3; ++k) {
    double mean = s[k] / n;
    double se = std::sqrt((s2[k] / n - mean * mean) / n);
    CHECK(std::abs(mean - rb::expected_rho(3, 2.0, k + 1)) < 4 * se);
  }
}

TEST_CASE("sampler gives up after max_attempts") {
  Rng rng(4);
  CHECK_THROWS_AS(rb::sample(rb::Params::uniform(8, 60.0), rng, 50), SamplingError);
}
