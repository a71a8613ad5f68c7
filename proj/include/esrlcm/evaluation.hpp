#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "esrlcm/mcmc.hpp"
#include "esrlcm/model.hpp"

namespace esrlcm::evaluation {

enum class PredictiveMode { PredictiveMean, PlugIn };

PredictiveMode parse_predictive_mode(const std::string& name);
std::string to_string(PredictiveMode mode);

/// log sum_c pi_c prod_j theta_cj^x (1 - theta_cj)^(1 - x) for one row;
/// theta is C x J, row-major.
double log_mixture_density(std::span<const double> pi, std::span<const double> theta,
                           std::span<const std::uint8_t> row);

/// Average per-observation log predictive density of `holdout`.
/// PredictiveMean averages the mixture density over draws; PlugIn uses the
/// posterior mean of pi and theta after aligning the draws.
double predictive_loglik(const std::vector<mcmc::Draw>& draws, const Dataset& holdout,
                         PredictiveMode mode = PredictiveMode::PredictiveMean);

/// Per-observation log predictive densities (same modes as above).
std::vector<double> predictive_logliks(const std::vector<mcmc::Draw>& draws, const Dataset& holdout,
                                       PredictiveMode mode = PredictiveMode::PredictiveMean);

/// Permutation perm minimizing sum_{c,j} (ref[c][j] - target[perm[c]][j])^2,
/// i.e. class c of the reference matches class perm[c] of the target. Both
/// matrices are C x J, row-major.
std::vector<std::size_t> align_classes(std::span<const double> reference, std::span<const double> target,
                                       std::size_t classes);

/// Minimum-cost assignment on a square cost matrix (row-major); returns the
/// column assigned to each row.
std::vector<std::size_t> hungarian(const std::vector<double>& cost, std::size_t size);

/// The draw relabeled so that its new class c is old class perm[c].
mcmc::Draw permute_draw(const mcmc::Draw& draw, std::span<const std::size_t> perm);

/// Index of the draw with the largest log joint.
std::size_t reference_draw(const std::vector<mcmc::Draw>& draws);

/// Every draw aligned to the draw with the largest log joint.
std::vector<mcmc::Draw> align_draws(const std::vector<mcmc::Draw>& draws);

struct PosteriorMean {
  std::vector<double> pi;
  std::vector<double> theta;  // C x J, row-major
  double v = 0.0;
};

/// Posterior means over the given draws (no alignment applied here).
PosteriorMean posterior_mean(const std::vector<mcmc::Draw>& draws);

/// Most frequent canonical column per item among the aligned draws; ties go
/// to fewer base classes, then to the lexicographically smaller column.
BaseClassMatrix mode_restrictions(const std::vector<mcmc::Draw>& draws);

/// Per-item mode of a collection of columns, with the tie-break above.
BaseColumn mode_column(const std::vector<BaseColumn>& columns);

struct RestrictionMetrics {
  std::optional<double> sensitivity;
  std::optional<double> specificity;
};

/// Pairwise restriction recovery. The estimate's classes are permuted by
/// `alignment` first (truth class c matches estimate class alignment[c]).
RestrictionMetrics restriction_sensitivity_specificity(const BaseClassMatrix& truth, const BaseClassMatrix& estimate,
                                                       std::span<const std::size_t> alignment);

/// Fold of each observation: splitmix64(seed, i) mod K.
std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed);

struct CvCandidate {
  std::string name;
  std::size_t classes = 2;
  PriorConfig prior;
  bool unrestricted = false;
};

struct CvResult {
  std::string name;
  double mean_loglik = 0.0;
  std::vector<double> fold_logliks;  // mean per held-out observation, per fold
};

/// K-fold cross-validation of every candidate. Chains for fold k use seed
/// config.seed + k. The total held-out log likelihood is divided by n.
std::vector<CvResult> kfold_cv(const Dataset& data, const std::vector<CvCandidate>& grid,
                               const mcmc::McmcConfig& config, std::size_t folds, std::uint64_t fold_seed,
                               std::size_t threads = 0, PredictiveMode mode = PredictiveMode::PredictiveMean);

/// Draws from every chain in chain order.
std::vector<mcmc::Draw> pool_draws(const std::vector<mcmc::PosteriorDraws>& chains);

}  // namespace esrlcm::evaluation
