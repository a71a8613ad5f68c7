#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "esrlcm/common.hpp"

namespace esrlcm::repelled_beta {

inline constexpr std::uint64_t kDefaultMaxAttempts = 1'000'000;

/// Shape parameters of a repelled beta distribution on (0,1)^M.
///
/// Row k of `alpha` holds (alpha_k1, alpha_k2), the exponents of rho_k and
/// (1 - rho_k). `v` is the repulsion exponent applied to every gap between
/// consecutive order statistics.
struct Params {
  std::vector<std::array<double, 2>> alpha;
  double v = 0.0;

  std::size_t dim() const { return alpha.size(); }

  /// All-ones shapes of dimension m.
  static Params uniform(std::size_t m, double v);

  /// Throws DomainError unless every shape is positive, v >= 0 and M >= 1.
  void validate() const;
};

/// Retry bookkeeping for the rejection sampler.
struct SamplerStats {
  std::uint64_t calls = 0;
  std::uint64_t attempts = 0;
  void merge(const SamplerStats& other) {
    calls += other.calls;
    attempts += other.attempts;
  }
};

/// Sum over sorted components of log(rho_(k) - rho_(k-1)). Returns -inf when
/// two components coincide and 0 when there are fewer than two.
double log_gap_sum(std::span<const double> rho);

/// Unnormalized log density. Throws DomainError if any component is outside
/// (0,1). Returns -inf for tied components when v > 0.
double log_density_unnormalized(const Params& params, std::span<const double> rho);

/// Normalizing constant for all-ones shapes:
/// Gamma((M-1)(v+1)+2) / (M! Gamma(v+1)^(M-1)).
double normalizer_all_ones(std::size_t m, double v);
double log_normalizer_all_ones(std::size_t m, double v);

/// Exact draw by rejection from independent betas with acceptance
/// probability prod gaps^v. Throws SamplingError after max_attempts.
std::vector<double> sample(const Params& params, Rng& rng,
                           std::uint64_t max_attempts = kDefaultMaxAttempts,
                           SamplerStats* stats = nullptr);

/// Dirichlet parameters [1, v+1, ..., v+1, 1] (length M+1) of the gap vector
/// of the sorted draw when all shapes are one.
std::vector<double> gaps_distribution(std::size_t m, double v);

/// Alternative exact sampler for all-ones shapes: cumulative sums of a
/// Dirichlet gap draw. Returns the components in increasing order.
std::vector<double> sample_sorted_via_gaps(std::size_t m, double v, Rng& rng);

/// E[rho_(k)] for all-ones shapes, k in 1..M.
double expected_rho(std::size_t m, double v, std::size_t k);

/// Posterior after Bernoulli data. counts[k] = (successes, failures).
Params conjugate_posterior(const Params& params,
                           std::span<const std::array<std::uint64_t, 2>> counts);

}  // namespace esrlcm::repelled_beta
