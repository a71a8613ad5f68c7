#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace esrlcm {

/// Random source used throughout. Every stochastic routine takes one by
/// reference; nothing in the library owns global random state.
using Rng = std::mt19937_64;

/// Raised when an argument lies outside the mathematical domain of an
/// operation (probabilities outside (0,1), indices out of range, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when array or matrix shapes disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by the rejection sampler when it exhausts its retry budget.
class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by searches whose enumeration would exceed the caller's budget.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed configuration or input files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Beta(a, b) draw via the two-gamma construction.
double sample_beta(Rng& rng, double a, double b);

/// Dirichlet(alpha) draw via normalized gammas.
std::vector<double> sample_dirichlet(Rng& rng, const std::vector<double>& alpha);

/// Log of the Beta function, log(Gamma(a) Gamma(b) / Gamma(a + b)).
double log_beta_fn(double a, double b);

}  // namespace esrlcm
