#pragma once

#include <cstdint>
#include <vector>

#include "esrlcm/model.hpp"

namespace esrlcm::simulation {

/// Supported class counts for the bundled 32-item fixtures.
bool fixture_supported(std::size_t classes);

/// Raw 0-indexed fixture labels, items by classes, truncated to the first
/// `classes` classes.
std::vector<std::vector<int>> fixture_raw_labels(std::size_t classes);

/// The 32-item fixture with every column canonicalized.
BaseClassMatrix fixture_base_matrix(std::size_t classes);

/// theta'_b = (2b - 1) / (2 * base_classes), b = 1..base_classes.
std::vector<double> gen_theta(int base_classes);
std::vector<double> gen_theta(std::span<const int> column);

struct SimulationTruth {
  BaseClassMatrix B;
  std::vector<std::vector<double>> theta_prime;  // indexed by canonical label - 1
  std::vector<double> theta;                     // C x J, row-major
  std::vector<double> pi;
  std::vector<int> c;  // 0-based classes of the training rows
  std::uint64_t seed = 0;

  std::size_t classes() const { return pi.size(); }
  std::size_t items() const { return B.items(); }
  double theta_at(std::size_t cls, std::size_t j) const { return theta[cls * items() + j]; }
};

/// Fixture truth: B from the table, theta' evenly spaced with the smallest
/// value on raw table label 0 and the largest on the largest raw label.
SimulationTruth fixture_truth(std::size_t classes);

/// Draw n rows from the latent class model given by pi and theta (C x J,
/// row-major). Memberships are written to `c_out` when non-null.
Dataset sample_dataset(const std::vector<double>& pi, const std::vector<double>& theta, std::size_t items,
                       std::size_t n, Rng& rng, std::vector<int>* c_out = nullptr);

struct Simulation {
  Dataset data;
  Dataset holdout;
  SimulationTruth truth;
};

/// Offset between the training and holdout seeds.
inline constexpr std::uint64_t kHoldoutSeedOffset = std::uint64_t{1} << 32;

/// Training data from Rng(seed) and holdout data from Rng(seed + 2^32), both
/// from the fixture truth for `classes`.
Simulation simulate(std::size_t classes, std::size_t n, std::uint64_t seed, std::size_t holdout_n = 0);

}  // namespace esrlcm::simulation
