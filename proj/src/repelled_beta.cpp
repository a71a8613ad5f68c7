#include "esrlcm/repelled_beta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace esrlcm::repelled_beta {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Rejection acceptance on log scale; small vectors, so sort a copy.
double log_gap_sum_inplace(std::vector<double>& buf) {
  std::sort(buf.begin(), buf.end());
  double s = 0.0;
  for (std::size_t k = 1; k < buf.size(); ++k) {
    double gap = buf[k] - buf[k - 1];
    if (gap <= 0.0) return kNegInf;
    s += std::log(gap);
  }
  return s;
}

}  // namespace

Params Params::uniform(std::size_t m, double v) {
  Params p;
  p.alpha.assign(m, {1.0, 1.0});
  p.v = v;
  return p;
}

void Params::validate() const {
  if (alpha.empty()) throw DomainError("repelled beta dimension must be at least 1");
  if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("repulsion exponent v must be finite and >= 0");
  for (const auto& row : alpha) {
    if (!(row[0] > 0.0) || !(row[1] > 0.0)) {
      throw DomainError("repelled beta shapes must be strictly positive");
    }
  }
}

double log_gap_sum(std::span<const double> rho) {
  std::vector<double> buf(rho.begin(), rho.end());
  return log_gap_sum_inplace(buf);
}

double log_density_unnormalized(const Params& params, std::span<const double> rho) {
  if (rho.size() != params.dim()) throw DimensionError("rho length does not match repelled beta dimension");
  double s = 0.0;
  for (std::size_t k = 0; k < rho.size(); ++k) {
    double r = rho[k];
    if (!(r > 0.0 && r < 1.0)) {
      throw DomainError("repelled beta component " + std::to_string(k) + " outside (0,1)");
    }
    const auto& a = params.alpha[k];
    if (a[0] != 1.0) s += (a[0] - 1.0) * std::log(r);
    if (a[1] != 1.0) s += (a[1] - 1.0) * std::log1p(-r);
  }
  if (params.v > 0.0 && rho.size() > 1) {
    double g = log_gap_sum(rho);
    if (g == kNegInf) return kNegInf;
    s += params.v * g;
  }
  return s;
}

double log_normalizer_all_ones(std::size_t m, double v) {
  if (m == 0) throw DomainError("dimension must be at least 1");
  if (!(v >= 0.0)) throw DomainError("v must be >= 0");
  double md = static_cast<double>(m);
  return std::lgamma((md - 1.0) * (v + 1.0) + 2.0) - std::lgamma(md + 1.0) -
         (md - 1.0) * std::lgamma(v + 1.0);
}

double normalizer_all_ones(std::size_t m, double v) {
  return std::exp(log_normalizer_all_ones(m, v));
}

std::vector<double> sample(const Params& params, Rng& rng, std::uint64_t max_attempts,
                           SamplerStats* stats) {
  params.validate();
  const std::size_t m = params.dim();
  std::vector<double> rho(m);
  std::vector<double> sorted(m);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const bool needs_rejection = params.v > 0.0 && m > 1;
  for (std::uint64_t attempt = 1; attempt <= max_attempts; ++attempt) {
    for (std::size_t k = 0; k < m; ++k) {
      rho[k] = sample_beta(rng, params.alpha[k][0], params.alpha[k][1]);
    }
    bool accept = true;
    if (needs_rejection) {
      sorted = rho;
      double log_accept = params.v * log_gap_sum_inplace(sorted);
      // log(U) with U in (0,1]; a tie gives -inf and is always rejected.
      double u = 1.0 - unif(rng);
      accept = std::log(u) <= log_accept && log_accept != kNegInf;
    }
    if (accept) {
      if (stats) {
        stats->calls += 1;
        stats->attempts += attempt;
      }
      return rho;
    }
  }
  if (stats) {
    stats->calls += 1;
    stats->attempts += max_attempts;
  }
  throw SamplingError("repelled beta rejection sampler exceeded " + std::to_string(max_attempts) +
                      " attempts (M=" + std::to_string(m) + ", v=" + std::to_string(params.v) + ")");
}

std::vector<double> gaps_distribution(std::size_t m, double v) {
  if (m == 0) throw DomainError("dimension must be at least 1");
  std::vector<double> out(m + 1, v + 1.0);
  out.front() = 1.0;
  out.back() = 1.0;
  return out;
}

std::vector<double> sample_sorted_via_gaps(std::size_t m, double v, Rng& rng) {
  auto delta = sample_dirichlet(rng, gaps_distribution(m, v));
  std::vector<double> rho(m);
  double acc = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    acc += delta[k];
    rho[k] = acc;
  }
  return rho;
}

double expected_rho(std::size_t m, double v, std::size_t k) {
  if (m == 0 || k == 0 || k > m) throw DomainError("order statistic index must lie in 1..M");
  double md = static_cast<double>(m);
  double kd = static_cast<double>(k);
  return (1.0 + (v + 1.0) * (kd - 1.0)) / ((md - 1.0) * (v + 1.0) + 2.0);
}

Params conjugate_posterior(const Params& params,
                           std::span<const std::array<std::uint64_t, 2>> counts) {
  if (counts.size() != params.dim()) throw DimensionError("count rows do not match repelled beta dimension");
  Params out = params;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    out.alpha[k][0] += static_cast<double>(counts[k][0]);
    out.alpha[k][1] += static_cast<double>(counts[k][1]);
  }
  return out;
}

}  // namespace esrlcm::repelled_beta
