#include "esrlcm/identifiability.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <set>

namespace esrlcm::identifiability {

namespace {

using Rows = std::vector<std::vector<int>>;

Rows rows_of(const std::vector<BaseColumn>& columns, std::size_t classes) {
  Rows rows(classes);
  for (const auto& col : columns) {
    for (std::size_t c = 0; c < classes; ++c) rows[c].push_back(col[c]);
  }
  return rows;
}

std::size_t distinct_rows(const Rows& rows) {
  return std::set<std::vector<int>>(rows.begin(), rows.end()).size();
}

std::size_t distinct_rows(const std::vector<BaseColumn>& columns, std::size_t classes) {
  return distinct_rows(rows_of(columns, classes));
}

double pattern_count(const ItemLevels& m, const std::vector<std::size_t>& items) {
  double p = 1.0;
  for (auto j : items) p *= m[j];
  return p;
}

void validate_partition(const Tripartition& partition, std::size_t items) {
  std::vector<int> seen(items, 0);
  for (const auto& part : partition.parts) {
    for (auto j : part) {
      if (j >= items) throw DimensionError("tripartition refers to item " + std::to_string(j + 1) + " beyond J");
      if (seen[j]++) throw DimensionError("item " + std::to_string(j + 1) + " appears in more than one part");
    }
  }
  for (std::size_t j = 0; j < items; ++j) {
    if (!seen[j]) throw DimensionError("item " + std::to_string(j + 1) + " is not assigned to any part");
  }
}

void validate_levels(const BaseClassMatrix& B, const ItemLevels& m) {
  if (m.size() != B.items()) throw DimensionError("need one response-level count per item");
  for (int mj : m) {
    if (mj < 2) throw DomainError("response-level counts must be at least 2");
  }
}

// Relabels a canonical column through a map from old labels (1-based) to
// block indices (0-based).
BaseColumn apply_label_map(const BaseColumn& column, const std::vector<int>& block_of_label) {
  BaseColumn out(column.size());
  for (std::size_t c = 0; c < column.size(); ++c) {
    out[c] = block_of_label[static_cast<std::size_t>(column[c]) - 1] + 1;
  }
  return canonicalize(out);
}

// Greedy pairwise merging until the column has at most `levels` labels.
BaseColumn greedy_merge(const BaseColumn& column, int levels, const Rows& part_rows) {
  BaseColumn current = canonicalize(column);
  while (count_base_classes(current) > levels) {
    int labels = count_base_classes(current);
    std::vector<int> population(static_cast<std::size_t>(labels), 0);
    for (int b : current) ++population[static_cast<std::size_t>(b) - 1];
    BaseColumn best;
    std::size_t best_rows = 0;
    int best_pop = 0;
    bool have = false;
    for (int a = 1; a <= labels; ++a) {
      for (int b = a + 1; b <= labels; ++b) {
        BaseColumn cand = current;
        for (int& x : cand) {
          if (x == b) x = a;
        }
        cand = canonicalize(cand);
        Rows rows = part_rows;
        for (std::size_t c = 0; c < rows.size(); ++c) rows[c].push_back(cand[c]);
        std::size_t d = distinct_rows(rows);
        int pop = population[static_cast<std::size_t>(a) - 1] + population[static_cast<std::size_t>(b) - 1];
        // Most distinct rows, then the smallest merged population; pairs are
        // visited in label order so the first best wins ties.
        if (!have || d > best_rows || (d == best_rows && pop < best_pop)) {
          have = true;
          best = std::move(cand);
          best_rows = d;
          best_pop = pop;
        }
      }
    }
    current = std::move(best);
  }
  return current;
}

// All set partitions of `labels` labels into exactly `blocks` blocks, as
// restricted growth strings.
void for_each_partition(int labels, int blocks, const std::function<bool(const std::vector<int>&)>& visit) {
  std::vector<int> rgs(static_cast<std::size_t>(labels), 0);
  std::function<bool(int, int)> rec = [&](int pos, int used) -> bool {
    if (pos == labels) {
      if (used == blocks) return visit(rgs);
      return false;
    }
    if (used + (labels - pos) < blocks) return false;
    for (int b = 0; b <= std::min(used, blocks - 1); ++b) {
      rgs[static_cast<std::size_t>(pos)] = b;
      if (rec(pos + 1, std::max(used, b + 1))) return true;
    }
    return false;
  };
  rec(0, 0);
}

BaseClassMatrix part_matrix(const std::vector<BaseColumn>& columns, std::size_t classes) {
  if (columns.empty()) return BaseClassMatrix();
  (void)classes;
  return BaseClassMatrix(columns, false);
}

}  // namespace

std::string to_string(Status s) { return s == Status::Identifiable ? "Identifiable" : "Unknown"; }

bool is_merged_of(const BaseClassMatrix& B, const BaseClassMatrix& merged) {
  if (B.classes() != merged.classes() || B.items() != merged.items()) {
    throw DimensionError("base class matrices differ in shape");
  }
  for (std::size_t j = 0; j < B.items(); ++j) {
    std::map<int, int> g;
    for (std::size_t c = 0; c < B.classes(); ++c) {
      auto [it, inserted] = g.try_emplace(B.at(c, j), merged.at(c, j));
      if (!inserted && it->second != merged.at(c, j)) return false;
    }
  }
  return true;
}

ConditionReport check_conditions(const BaseClassMatrix& B, const ItemLevels& m, const Tripartition& partition,
                                 const BaseClassMatrix& merged1, const BaseClassMatrix& merged2) {
  validate_levels(B, m);
  validate_partition(partition, B.items());
  const std::size_t C = B.classes();
  ConditionReport report;
  const std::array<const BaseClassMatrix*, 2> merged{&merged1, &merged2};

  for (std::size_t k = 0; k < 2; ++k) {
    const auto& items = partition.parts[k];
    const auto& Mk = *merged[k];
    std::string name = "part " + std::to_string(k + 1);
    if (items.empty()) {
      if (C > 1) report.failures.push_back(name + ": empty part cannot separate classes");
      continue;
    }
    if (Mk.items() != items.size() || Mk.classes() != C) {
      report.failures.push_back(name + ": merged matrix shape does not match the part");
      continue;
    }
    if (!is_merged_of(B.select_items(items), Mk)) {
      report.failures.push_back(name + ": not a merge of the original base classes");
    }
    for (std::size_t t = 0; t < items.size(); ++t) {
      if (Mk.base_classes(t) > m[items[t]]) {
        report.failures.push_back(name + ": item " + std::to_string(items[t] + 1) +
                                  " has more merged base classes than response levels");
      }
    }
    if (distinct_rows(Mk.columns(), C) != C) report.failures.push_back(name + ": merged rows are not unique");
    if (pattern_count(m, items) < static_cast<double>(C)) {
      report.failures.push_back(name + ": fewer response patterns than classes");
    }
  }
  const auto& third = partition.parts[2];
  std::vector<BaseColumn> cols3;
  for (auto j : third) cols3.push_back(B.column(j));
  if (distinct_rows(cols3, C) != C) report.failures.push_back("part 3: base class rows are not unique");

  report.holds = report.failures.empty();
  return report;
}

namespace {

// One greedy pass. Items listed in `reserved` go straight to part 3; the
// rest are placed in descending order of base classes.
Report greedy_pass(const BaseClassMatrix& B, const ItemLevels& m, const std::vector<std::size_t>& reserved) {
  const std::size_t C = B.classes();
  const std::size_t J = B.items();
  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < J; ++j) {
    if (std::find(reserved.begin(), reserved.end(), j) == reserved.end()) order.push_back(j);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return B.base_classes(a) > B.base_classes(b); });

  Tripartition partition;
  partition.parts[2] = reserved;
  std::array<std::vector<BaseColumn>, 2> merged;
  std::array<Rows, 2> rows{Rows(C), Rows(C)};
  Report report;

  for (auto j : order) {
    bool placed = false;
    for (std::size_t k = 0; k < 2 && !placed; ++k) {
      std::size_t before = distinct_rows(rows[k]);
      if (before == C && !partition.parts[k].empty()) continue;
      BaseColumn cand = greedy_merge(B.column(j), m[j], rows[k]);
      Rows next = rows[k];
      for (std::size_t c = 0; c < C; ++c) next[c].push_back(cand[c]);
      if (distinct_rows(next) > before || (C == 1 && partition.parts[k].empty())) {
        partition.parts[k].push_back(j);
        merged[k].push_back(std::move(cand));
        rows[k] = std::move(next);
        placed = true;
      }
    }
    if (!placed) partition.parts[2].push_back(j);
  }

  // Items not needed to keep a part's rows unique are handed to part 3.
  for (std::size_t k = 0; k < 2; ++k) {
    if (distinct_rows(rows[k]) != C) continue;
    for (std::size_t t = partition.parts[k].size(); t-- > 0;) {
      if (partition.parts[k].size() == 1) break;
      auto cols = merged[k];
      cols.erase(cols.begin() + static_cast<std::ptrdiff_t>(t));
      std::vector<std::size_t> items = partition.parts[k];
      items.erase(items.begin() + static_cast<std::ptrdiff_t>(t));
      if (distinct_rows(cols, C) == C && pattern_count(m, items) >= static_cast<double>(C)) {
        partition.parts[2].push_back(partition.parts[k][t]);
        partition.parts[k] = std::move(items);
        merged[k] = std::move(cols);
      }
    }
  }
  std::sort(partition.parts[2].begin(), partition.parts[2].end());

  if (partition.parts[0].empty() || partition.parts[1].empty()) {
    report.diagnostics.push_back("greedy: could not populate both merged parts");
    if (C > 1) return report;
  }
  auto m1 = part_matrix(merged[0], C);
  auto m2 = part_matrix(merged[1], C);
  auto check = check_conditions(B, m, partition, m1, m2);
  report.diagnostics.insert(report.diagnostics.end(), check.failures.begin(), check.failures.end());
  if (check.holds) {
    report.status = Status::Identifiable;
    report.witness = Witness{partition, m1, m2};
  }
  return report;
}

}  // namespace

Report greedy_search(const BaseClassMatrix& B, const ItemLevels& m) {
  validate_levels(B, m);
  const std::size_t C = B.classes();
  auto first = greedy_pass(B, m, {});
  if (first.status == Status::Identifiable) return first;

  // Second pass: reserve part 3 first, taking items in descending order of
  // base classes while they add distinct raw rows.
  std::vector<std::size_t> order(B.items());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return B.base_classes(a) > B.base_classes(b); });
  std::vector<std::size_t> reserved;
  std::vector<BaseColumn> cols;
  for (auto j : order) {
    std::size_t before = distinct_rows(cols, C);
    if (before == C) break;
    cols.push_back(B.column(j));
    if (distinct_rows(cols, C) > before) {
      reserved.push_back(j);
    } else {
      cols.pop_back();
    }
  }
  if (distinct_rows(cols, C) == C) {
    auto second = greedy_pass(B, m, reserved);
    if (second.status == Status::Identifiable) return second;
  }
  return first;
}

Report exhaustive_search(const BaseClassMatrix& B, const ItemLevels& m, std::uint64_t budget) {
  validate_levels(B, m);
  const std::size_t C = B.classes();
  const std::size_t J = B.items();
  if (J > 20) throw BudgetExceeded("exhaustive search supports at most 20 items");
  std::uint64_t work = 0;
  auto spend = [&](std::uint64_t units) {
    work += units;
    if (work > budget) throw BudgetExceeded("exhaustive identifiability search exceeded its budget");
  };

  const std::size_t subsets = std::size_t{1} << J;
  auto items_of = [&](std::size_t mask) {
    std::vector<std::size_t> items;
    for (std::size_t j = 0; j < J; ++j) {
      if (mask >> j & 1U) items.push_back(j);
    }
    return items;
  };
  auto raw_columns = [&](const std::vector<std::size_t>& items) {
    std::vector<BaseColumn> cols;
    for (auto j : items) cols.push_back(B.column(j));
    return cols;
  };

  // Does some merge of the items in `mask` fit the levels with unique rows?
  std::vector<std::optional<std::vector<BaseColumn>>> merge_witness(subsets);
  std::vector<char> raw_unique(subsets, 0);
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    auto items = items_of(mask);
    raw_unique[mask] = distinct_rows(raw_columns(items), C) == C;
    if (!raw_unique[mask] || items.empty() || pattern_count(m, items) < static_cast<double>(C)) continue;

    // Supersets of a feasible subset are feasible: merge the extra column
    // down to its level count arbitrarily.
    bool done = false;
    for (std::size_t t = 0; t < items.size() && !done; ++t) {
      std::size_t sub = mask & ~(std::size_t{1} << items[t]);
      if (!merge_witness[sub]) continue;
      const auto& base = *merge_witness[sub];
      std::vector<BaseColumn> cols;
      std::size_t s = 0;
      for (auto j : items) {
        if (j == items[t]) {
          BaseColumn col = B.column(j);
          for (int& x : col) x = std::min(x, m[j]);
          cols.push_back(canonicalize(col));
        } else {
          cols.push_back(base[s++]);
        }
      }
      merge_witness[mask] = std::move(cols);
      done = true;
    }
    if (done) continue;

    // Depth-first over maximal merges (exactly min(B_j, m_j) labels); any
    // coarser merge separates fewer rows.
    std::vector<BaseColumn> chosen;
    std::function<bool(std::size_t)> dfs = [&](std::size_t pos) -> bool {
      if (pos == items.size()) return distinct_rows(chosen, C) == C;
      // Prune when even the unmerged remaining columns cannot finish the job.
      std::vector<BaseColumn> bound = chosen;
      for (std::size_t r = pos; r < items.size(); ++r) bound.push_back(B.column(items[r]));
      if (distinct_rows(bound, C) != C) return false;
      const auto& col = B.column(items[pos]);
      int labels = count_base_classes(col);
      int blocks = std::min(labels, m[items[pos]]);
      bool found = false;
      for_each_partition(labels, blocks, [&](const std::vector<int>& rgs) {
        spend(1);
        chosen.push_back(apply_label_map(col, rgs));
        if (dfs(pos + 1)) {
          found = true;
          return true;
        }
        chosen.pop_back();
        return false;
      });
      return found;
    };
    if (dfs(0)) merge_witness[mask] = chosen;
  }

  Report report;
  std::vector<std::size_t> assign(J, 0);
  std::uint64_t total = 1;
  for (std::size_t j = 0; j < J; ++j) total *= 3;
  spend(total / 64 + 1);
  for (std::uint64_t code = 0; code < total; ++code) {
    std::uint64_t x = code;
    std::array<std::size_t, 3> masks{0, 0, 0};
    for (std::size_t j = 0; j < J; ++j) {
      masks[x % 3] |= std::size_t{1} << j;
      x /= 3;
    }
    if (!merge_witness[masks[0]] || !merge_witness[masks[1]] || !raw_unique[masks[2]]) continue;
    Tripartition partition{{items_of(masks[0]), items_of(masks[1]), items_of(masks[2])}};
    auto m1 = part_matrix(*merge_witness[masks[0]], C);
    auto m2 = part_matrix(*merge_witness[masks[1]], C);
    auto check = check_conditions(B, m, partition, m1, m2);
    if (!check.holds) {
      report.diagnostics.insert(report.diagnostics.end(), check.failures.begin(), check.failures.end());
      continue;
    }
    report.status = Status::Identifiable;
    report.witness = Witness{partition, m1, m2};
    return report;
  }
  report.diagnostics.push_back("exhaustive: no tripartition satisfies the conditions");
  return report;
}

int kruskal_rank(const Eigen::MatrixXd& M, double tol) {
  const int n = static_cast<int>(M.cols());
  const int rows = static_cast<int>(M.rows());
  for (int k = 1; k <= n; ++k) {
    if (k > rows) return k - 1;
    std::vector<int> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      Eigen::MatrixXd sub(rows, k);
      for (int t = 0; t < k; ++t) sub.col(t) = M.col(idx[static_cast<std::size_t>(t)]);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(sub);
      const auto& sv = svd.singularValues();
      double largest = sv(0);
      double smallest = sv(sv.size() - 1);
      if (!(largest > 0.0) || smallest <= tol * largest) return k - 1;
      // next combination
      int i = k - 1;
      while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
      if (i < 0) break;
      ++idx[static_cast<std::size_t>(i)];
      for (int t = i + 1; t < k; ++t) idx[static_cast<std::size_t>(t)] = idx[static_cast<std::size_t>(t - 1)] + 1;
    }
  }
  return n;
}

Eigen::MatrixXd pattern_probability_matrix(const BaseClassMatrix& B, const ItemLevels& m,
                                           const std::vector<std::size_t>& items,
                                           const std::vector<Eigen::MatrixXd>& probs) {
  constexpr double kMaxPatterns = 4096.0;
  if (pattern_count(m, items) > kMaxPatterns) {
    throw DomainError("pattern space of a part exceeds 4096 response patterns");
  }
  const std::size_t C = B.classes();
  std::size_t patterns = static_cast<std::size_t>(pattern_count(m, items));
  Eigen::MatrixXd T = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(C), static_cast<Eigen::Index>(patterns));
  for (std::size_t p = 0; p < patterns; ++p) {
    std::size_t rest = p;
    for (auto j : items) {
      auto level = static_cast<Eigen::Index>(rest % static_cast<std::size_t>(m[j]));
      rest /= static_cast<std::size_t>(m[j]);
      for (std::size_t c = 0; c < C; ++c) {
        T(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(p)) *= probs[j](B.at(c, j) - 1, level);
      }
    }
  }
  return T;
}

NumericCheck numeric_verify(const BaseClassMatrix& B, const ItemLevels& m, const Tripartition& partition, Rng& rng,
                            int trials) {
  validate_levels(B, m);
  validate_partition(partition, B.items());
  const int target = 2 * static_cast<int>(B.classes()) + 2;
  NumericCheck out;
  out.passed = trials > 0;
  for (int t = 0; t < trials; ++t) {
    std::vector<Eigen::MatrixXd> probs(B.items());
    for (std::size_t j = 0; j < B.items(); ++j) {
      int labels = B.base_classes(j);
      probs[j].resize(labels, m[j]);
      for (int b = 0; b < labels; ++b) {
        auto p = sample_dirichlet(rng, std::vector<double>(static_cast<std::size_t>(m[j]), 1.0));
        for (int r = 0; r < m[j]; ++r) probs[j](b, r) = p[static_cast<std::size_t>(r)];
      }
    }
    int sum = 0;
    for (const auto& part : partition.parts) {
      auto T = pattern_probability_matrix(B, m, part, probs);
      sum += kruskal_rank(T.transpose());
    }
    out.rank_sums.push_back(sum);
    if (sum < target) out.passed = false;
  }
  return out;
}

BaseClassMatrix q_matrix_to_base(const std::vector<std::vector<int>>& Q) {
  if (Q.empty() || Q.front().empty()) throw DimensionError("Q-matrix must be nonempty");
  const std::size_t K = Q.front().size();
  if (K > 5) throw DomainError("Q-matrix import supports at most 5 attributes (32 classes)");
  const std::size_t C = std::size_t{1} << K;
  std::vector<BaseColumn> cols;
  for (const auto& q : Q) {
    if (q.size() != K) throw DimensionError("Q-matrix rows differ in length");
    BaseColumn col(C);
    for (std::size_t c = 0; c < C; ++c) {
      int key = 0;
      for (std::size_t k = 0; k < K; ++k) {
        if (q[k] != 0 && q[k] != 1) throw DomainError("Q-matrix entries must be 0 or 1");
        if (q[k] && (c >> k & 1U)) key |= 1 << k;
      }
      col[c] = key + 1;
    }
    cols.push_back(canonicalize(col));
  }
  return BaseClassMatrix(std::move(cols), false);
}

}  // namespace esrlcm::identifiability
