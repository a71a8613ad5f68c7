#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "esrlcm/model.hpp"
#include "esrlcm/repelled_beta.hpp"

namespace esrlcm::mcmc {

struct McmcConfig {
  std::uint64_t n_warmup = 1000;
  std::uint64_t n_main = 1000;
  std::size_t n_chains = 1;
  std::uint64_t seed = 1;
  std::uint64_t thin = 1;
  /// Memberships are stored every `store_c_every` retained draws; 0 disables.
  std::uint64_t store_c_every = 0;
  /// Force B_j = [1..C] for every item and skip base-class updates.
  bool unrestricted = false;
  /// Use the reversible-jump acceptance ratio without the base-move
  /// proposal correction.
  bool paper_exact_rj = false;
  std::uint64_t max_attempts = repelled_beta::kDefaultMaxAttempts;

  void validate() const;
};

/// Per-class (successes, failures) for one item.
using ClassCounts = std::vector<std::array<std::uint64_t, 2>>;

ClassCounts class_item_counts(std::size_t item, std::span<const int> c, const Dataset& data,
                              std::size_t classes);

/// Per-base-class counts, indexed by label - 1.
ClassCounts base_class_counts(std::span<const int> column, const ClassCounts& per_class);

/// log P(x_j | B_j, c, v = 0) with theta'_j integrated out under
/// independent Beta(1,1) priors.
double collapsed_item_loglik_v0(std::span<const int> column, std::span<const int> c,
                                std::span<const std::uint8_t> x_j);
double collapsed_item_loglik_v0(std::span<const int> column, const ClassCounts& per_class);

/// Candidate columns for relabeling one class of an item: joining each block
/// formed by the other classes, or a fresh singleton. Scores are
/// log prior + collapsed v = 0 likelihood.
struct BaseMove {
  std::size_t changed_class = 0;
  std::vector<BaseColumn> candidates;
  std::vector<double> log_scores;
  std::size_t current = 0;  // index of the unchanged column

  /// Normalized candidate probabilities.
  std::vector<double> probabilities() const;
};

BaseMove base_move_candidates(std::span<const int> column, std::size_t changed_class,
                              const ClassCounts& per_class, const BaseVectorPrior& prior);

/// Collapsed Gibbs step for B_j at v = 0 followed by a conjugate redraw of
/// theta'_j.
void gibbs_update_base_class_v0(std::size_t item, ModelState& state, const Dataset& data,
                                const PriorConfig& prior, Rng& rng);

/// Acceptance bookkeeping for a single reversible-jump proposal.
struct RjProposal {
  BaseColumn column;
  std::vector<double> theta_prime;
  double log_accept = 0.0;
};

/// Build (but do not apply) a reversible-jump proposal for item j using a
/// fixed changed class.
RjProposal propose_rj(std::size_t item, std::size_t changed_class, const ModelState& state,
                      const ClassCounts& per_class, const BaseVectorPrior& prior, Rng& rng,
                      bool paper_exact);

/// Log acceptance ratio for moving item j from the current (B_j, theta'_j)
/// to (proposed_column, proposed_theta) by relabeling `changed_class`.
double rj_log_acceptance(std::size_t item, std::size_t changed_class, const ModelState& state,
                         std::span<const int> proposed_column,
                         std::span<const double> proposed_theta, const ClassCounts& per_class,
                         const BaseVectorPrior& prior, bool paper_exact);

/// Reversible-jump update of (B_j, theta'_j) for v > 0. Returns true when
/// the proposal is accepted.
bool rj_update_base_class(std::size_t item, ModelState& state, const Dataset& data,
                          const PriorConfig& prior, Rng& rng, bool paper_exact = false);

/// Log of the v full conditional, up to a constant.
double log_v_conditional(double v, const ModelState& state, const PriorConfig& prior);

/// Maximizer of log_v_conditional on (0, MaxV] (golden section, tol 1e-4).
double map_v(const ModelState& state, const PriorConfig& prior);

/// Triangular(a, b, c) density with mode b; zero outside [a, c].
double triangular_density(double a, double b, double c, double x);
double sample_triangular(double a, double b, double c, Rng& rng);

/// Independence Metropolis step for v with a triangular proposal peaked at
/// the conditional mode. Returns true when accepted.
bool metropolis_update_v(ModelState& state, const PriorConfig& prior, Rng& rng);

/// theta'_j ~ RepelledBeta(1 + counts, v).
void gibbs_update_theta(std::size_t item, ModelState& state, const Dataset& data, const PriorConfig& prior,
                        Rng& rng, std::uint64_t max_attempts = repelled_beta::kDefaultMaxAttempts,
                        repelled_beta::SamplerStats* stats = nullptr);

/// pi ~ Dirichlet(alpha_c + class counts).
void gibbs_update_pi(ModelState& state, const PriorConfig& prior, Rng& rng);

/// c_i from its categorical full conditional.
void gibbs_update_c(std::size_t obs, ModelState& state, const Dataset& data, Rng& rng);

/// All memberships in order, sharing one table of log response probabilities.
void gibbs_update_all_c(ModelState& state, const Dataset& data, Rng& rng);

/// Posterior probabilities P(c_i = c | x_i, pi, theta).
std::vector<double> membership_probabilities(std::size_t obs, const ModelState& state, const Dataset& data);

/// Starting point: uniform memberships, unrestricted B, uniform theta',
/// uniform pi, v = MaxV / 2 when free.
ModelState initial_state(const Dataset& data, std::size_t classes, const PriorConfig& prior, Rng& rng);

struct Draw {
  std::uint64_t iter = 0;
  double log_joint = 0.0;
  double v = 0.0;
  std::vector<double> pi;
  BaseClassMatrix B;
  std::vector<std::vector<double>> theta_prime;

  std::size_t classes() const { return pi.size(); }
  std::size_t items() const { return theta_prime.size(); }
  double theta(std::size_t c, std::size_t j) const {
    return theta_prime[j][static_cast<std::size_t>(B.at(c, j) - 1)];
  }
  /// C x J, row-major.
  std::vector<double> theta_matrix() const;
};

struct MembershipSnapshot {
  std::uint64_t iter = 0;
  std::vector<int> c;
};

struct ChainStats {
  std::uint64_t rj_proposed = 0;
  std::uint64_t rj_accepted = 0;
  std::uint64_t v_proposed = 0;
  std::uint64_t v_accepted = 0;
  repelled_beta::SamplerStats theta_sampler;

  double rj_acceptance() const { return rj_proposed ? double(rj_accepted) / double(rj_proposed) : 0.0; }
  double v_acceptance() const { return v_proposed ? double(v_accepted) / double(v_proposed) : 0.0; }
};

struct PosteriorDraws {
  std::size_t chain = 0;
  std::vector<Draw> draws;
  std::vector<MembershipSnapshot> memberships;
  ChainStats stats;
};

/// One full sweep: memberships, pi, per item (base classes then theta'),
/// then v when free.
void sweep(ModelState& state, const Dataset& data, const PriorConfig& prior, const McmcConfig& config,
           Rng& rng, ChainStats& stats);

PosteriorDraws run_chain(const Dataset& data, std::size_t classes, const PriorConfig& prior,
                         const McmcConfig& config, Rng& rng);

/// Seed for chain k: seed XOR k.
Rng chain_rng(std::uint64_t seed, std::size_t chain_index);

/// Runs config.n_chains independent chains on up to `threads` threads
/// (0 means hardware concurrency). Results are ordered by chain index and
/// do not depend on the thread count.
std::vector<PosteriorDraws> run_chains(const Dataset& data, std::size_t classes, const PriorConfig& prior,
                                       const McmcConfig& config, std::size_t threads = 0);

}  // namespace esrlcm::mcmc
