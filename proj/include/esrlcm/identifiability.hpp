#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "esrlcm/model.hpp"

namespace esrlcm::identifiability {

/// Number of response levels per item (all >= 2).
using ItemLevels = std::vector<int>;

/// Three disjoint item sets (0-based item indices) covering every item.
struct Tripartition {
  std::array<std::vector<std::size_t>, 3> parts;
};

/// B~ is a merge of B when, item by item, some map g(j, .) sends B_cj to B~_cj.
bool is_merged_of(const BaseClassMatrix& B, const BaseClassMatrix& merged);

struct ConditionReport {
  bool holds = false;
  std::vector<std::string> failures;
};

/// The four conditions of the tripartition criterion. merged1/merged2 hold
/// the merged columns of parts 0 and 1 in part order. Throws DimensionError
/// for a malformed partition.
ConditionReport check_conditions(const BaseClassMatrix& B, const ItemLevels& m, const Tripartition& partition,
                                 const BaseClassMatrix& merged1, const BaseClassMatrix& merged2);

enum class Status { Identifiable, Unknown };

struct Witness {
  Tripartition partition;
  BaseClassMatrix merged1;
  BaseClassMatrix merged2;
};

struct Report {
  Status status = Status::Unknown;
  std::optional<Witness> witness;
  std::vector<std::string> diagnostics;
};

/// Deterministic greedy tripartition search. Items are taken in descending
/// number of base classes and placed in part 1, part 2 or part 3; each
/// candidate merge is built by greedily merging pairs of labels until the
/// column fits its response levels, preferring merges that keep the most
/// distinct rows. If that fails, a second pass first fills part 3 with the
/// highest-base-class items that make its raw rows unique, then places the
/// rest the same way. Never reports non-identifiability.
Report greedy_search(const BaseClassMatrix& B, const ItemLevels& m);

/// Exhaustive search over tripartitions and merges. Throws BudgetExceeded
/// when more than `budget` merge combinations would be examined.
Report exhaustive_search(const BaseClassMatrix& B, const ItemLevels& m, std::uint64_t budget = 50'000'000);

/// Largest k such that every k columns are linearly independent. A set of
/// columns counts as independent when its smallest singular value exceeds
/// tol times its largest.
int kruskal_rank(const Eigen::MatrixXd& M, double tol = 1e-10);

/// Classes x response-pattern matrix for the given items. probs[j] is a
/// (base classes) x m_j matrix of response-level probabilities.
Eigen::MatrixXd pattern_probability_matrix(const BaseClassMatrix& B, const ItemLevels& m,
                                           const std::vector<std::size_t>& items,
                                           const std::vector<Eigen::MatrixXd>& probs);

struct NumericCheck {
  bool passed = false;
  std::vector<int> rank_sums;  // one per trial
};

/// Draws random response probabilities that respect B, builds the three
/// pattern probability matrices, and checks that their Kruskal ranks (over
/// classes) sum to at least 2C + 2 in every trial.
NumericCheck numeric_verify(const BaseClassMatrix& B, const ItemLevels& m, const Tripartition& partition, Rng& rng,
                            int trials);

/// Q-matrix (J x K, binary) to base classes over 2^K classes. Class index c
/// carries attribute k when bit k of c is set.
BaseClassMatrix q_matrix_to_base(const std::vector<std::vector<int>>& Q);

std::string to_string(Status s);

}  // namespace esrlcm::identifiability
