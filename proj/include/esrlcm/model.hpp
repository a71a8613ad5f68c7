#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "esrlcm/common.hpp"

namespace esrlcm {

/// One item's base-class labels, one entry per class (labels start at 1).
using BaseColumn = std::vector<int>;

/// Binary response matrix, n observations by J items, stored row-major.
class Dataset {
 public:
  Dataset() = default;
  /// n may be zero (prior-only runs); every entry must be 0 or 1.
  Dataset(std::size_t n, std::size_t items, std::vector<std::uint8_t> values);

  std::size_t size() const { return n_; }
  std::size_t items() const { return items_; }
  int at(std::size_t i, std::size_t j) const { return x_[i * items_ + j]; }
  std::span<const std::uint8_t> row(std::size_t i) const {
    return {x_.data() + i * items_, items_};
  }
  const std::vector<std::uint8_t>& values() const { return x_; }

  /// Rows listed in `rows`, in that order.
  Dataset subset(std::span<const std::size_t> rows) const;

 private:
  std::size_t n_ = 0;
  std::size_t items_ = 0;
  std::vector<std::uint8_t> x_;
};

/// Relabel so the first entry is 1 and every new label is one more than the
/// largest seen so far. Columns describing the same partition map to the
/// same canonical vector.
BaseColumn canonicalize(std::span<const int> raw);

bool is_canonical(std::span<const int> column);

/// Number of distinct labels in the column.
int count_base_classes(std::span<const int> column);

/// C x J matrix of equivalence-set labels, stored column by column.
class BaseClassMatrix {
 public:
  BaseClassMatrix() = default;
  /// Columns must all have the same length. They are canonicalized when
  /// `canonical` is true and stored verbatim otherwise.
  explicit BaseClassMatrix(std::vector<BaseColumn> columns, bool canonical = true);

  /// Build from class rows (rows[c][j]).
  static BaseClassMatrix from_rows(const std::vector<std::vector<int>>& rows, bool canonical = true);

  /// Every item gets its own label per class: B_j = [1, 2, ..., C].
  static BaseClassMatrix unrestricted(std::size_t classes, std::size_t items);

  std::size_t classes() const { return classes_; }
  std::size_t items() const { return columns_.size(); }
  int at(std::size_t c, std::size_t j) const { return columns_[j][c]; }
  const BaseColumn& column(std::size_t j) const { return columns_[j]; }
  const std::vector<BaseColumn>& columns() const { return columns_; }
  void set_column(std::size_t j, BaseColumn column);
  int base_classes(std::size_t j) const { return count_base_classes(columns_[j]); }
  std::vector<int> row(std::size_t c) const;

  /// Sub-matrix with the listed items, in that order.
  BaseClassMatrix select_items(std::span<const std::size_t> items) const;

  /// Rows permuted so that new row c is old row perm[c]; columns re-canonicalized.
  BaseClassMatrix permute_classes(std::span<const std::size_t> perm) const;

  bool operator==(const BaseClassMatrix&) const = default;

 private:
  std::size_t classes_ = 0;
  std::vector<BaseColumn> columns_;
};

enum class VMode { FixedZero, Free };

/// Hyperparameters. Exactly one of `zeta` (a distribution over the number of
/// base classes) and `lambda` (P(B_j) proportional to lambda^{#base classes})
/// is set. Response-probability shapes are fixed at one.
struct PriorConfig {
  std::optional<std::vector<double>> zeta;
  std::optional<double> lambda;
  std::vector<double> alpha_c;  // Dirichlet on pi; empty means all ones
  double d1 = 1.0;
  double d2 = 1.0;
  double max_v = 2.0;
  VMode v_mode = VMode::Free;

  static PriorConfig with_lambda(double lambda, VMode mode = VMode::Free);

  /// Dirichlet parameters for `classes` classes (fills defaults).
  std::vector<double> class_alpha(std::size_t classes) const;

  void validate(std::size_t classes) const;
};

/// Precomputed log P(B_j) as a function of the number of base classes.
class BaseVectorPrior {
 public:
  BaseVectorPrior(const PriorConfig& prior, std::size_t classes);
  /// log P(B_j) for a canonical column with `base_classes` labels.
  double log_prob(int base_classes) const { return table_[static_cast<std::size_t>(base_classes) - 1]; }
  double log_prob(std::span<const int> column) const { return log_prob(count_base_classes(column)); }
  std::size_t classes() const { return table_.size(); }

 private:
  std::vector<double> table_;
};

double base_vector_log_prior(std::span<const int> column, const PriorConfig& prior);

/// theta_c = theta_prime[B_c - 1].
std::vector<double> theta_from_base(std::span<const double> theta_prime, std::span<const int> column);

/// One state of the sampler. `c` holds 0-based class indices; base labels
/// in `B` are 1-based and canonical; theta_prime[j][b-1] is the response
/// probability of base class b for item j.
struct ModelState {
  std::vector<double> pi;
  std::vector<int> c;
  BaseClassMatrix B;
  std::vector<std::vector<double>> theta_prime;
  double v = 0.0;

  std::size_t classes() const { return pi.size(); }
  std::size_t items() const { return theta_prime.size(); }
  double theta(std::size_t cls, std::size_t j) const {
    return theta_prime[j][static_cast<std::size_t>(B.at(cls, j) - 1)];
  }
  /// Full C x J response-probability matrix, row-major.
  std::vector<double> theta_matrix() const;

  /// Throws DimensionError when the pieces disagree.
  void check_consistent(std::size_t n, std::size_t items) const;
};

/// Unnormalized log P(v): d1 log v + d2 v on (0, MaxV), -inf outside.
double log_v_prior(double v, const PriorConfig& prior);

/// Log of the joint density of (pi, v, B, theta', c, x) with the
/// stick-breaking weights collapsed. The v prior term is included only when
/// v is free, and only up to its constant.
double full_log_joint(const ModelState& state, const Dataset& data, const PriorConfig& prior);

}  // namespace esrlcm
