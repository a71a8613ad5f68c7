#include "esrlcm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>

#include "esrlcm/combinatorics.hpp"
#include "esrlcm/repelled_beta.hpp"

namespace esrlcm {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

Dataset::Dataset(std::size_t n, std::size_t items, std::vector<std::uint8_t> values)
    : n_(n), items_(items), x_(std::move(values)) {
  if (items_ == 0) throw DimensionError("dataset needs at least one item");
  if (x_.size() != n_ * items_) throw DimensionError("dataset value count does not match n x J");
  for (auto v : x_) {
    if (v > 1) throw DomainError("dataset entries must be 0 or 1");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<std::uint8_t> out;
  out.reserve(rows.size() * items_);
  for (auto i : rows) {
    if (i >= n_) throw DomainError("row index out of range");
    auto r = row(i);
    out.insert(out.end(), r.begin(), r.end());
  }
  return Dataset(rows.size(), items_, std::move(out));
}

BaseColumn canonicalize(std::span<const int> raw) {
  BaseColumn out(raw.size());
  std::unordered_map<int, int> relabel;
  int next = 1;
  for (std::size_t c = 0; c < raw.size(); ++c) {
    auto [it, inserted] = relabel.try_emplace(raw[c], next);
    if (inserted) ++next;
    out[c] = it->second;
  }
  return out;
}

bool is_canonical(std::span<const int> column) {
  int max_seen = 0;
  for (int label : column) {
    if (label < 1 || label > max_seen + 1) return false;
    max_seen = std::max(max_seen, label);
  }
  return true;
}

int count_base_classes(std::span<const int> column) {
  std::vector<int> sorted(column.begin(), column.end());
  std::sort(sorted.begin(), sorted.end());
  return static_cast<int>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

BaseClassMatrix::BaseClassMatrix(std::vector<BaseColumn> columns, bool canonical)
    : columns_(std::move(columns)) {
  if (columns_.empty()) throw DimensionError("base class matrix needs at least one item");
  classes_ = columns_.front().size();
  if (classes_ == 0) throw DimensionError("base class matrix needs at least one class");
  for (auto& col : columns_) {
    if (col.size() != classes_) throw DimensionError("base class columns differ in length");
    if (canonical) col = canonicalize(col);
  }
}

BaseClassMatrix BaseClassMatrix::from_rows(const std::vector<std::vector<int>>& rows, bool canonical) {
  if (rows.empty() || rows.front().empty()) throw DimensionError("empty base class matrix");
  std::size_t items = rows.front().size();
  std::vector<BaseColumn> cols(items, BaseColumn(rows.size()));
  for (std::size_t c = 0; c < rows.size(); ++c) {
    if (rows[c].size() != items) throw DimensionError("base class rows differ in length");
    for (std::size_t j = 0; j < items; ++j) cols[j][c] = rows[c][j];
  }
  return BaseClassMatrix(std::move(cols), canonical);
}

BaseClassMatrix BaseClassMatrix::unrestricted(std::size_t classes, std::size_t items) {
  BaseColumn col(classes);
  std::iota(col.begin(), col.end(), 1);
  return BaseClassMatrix(std::vector<BaseColumn>(items, col), false);
}

void BaseClassMatrix::set_column(std::size_t j, BaseColumn column) {
  if (column.size() != classes_) throw DimensionError("column length does not match class count");
  columns_.at(j) = std::move(column);
}

std::vector<int> BaseClassMatrix::row(std::size_t c) const {
  std::vector<int> out(columns_.size());
  for (std::size_t j = 0; j < columns_.size(); ++j) out[j] = columns_[j][c];
  return out;
}

BaseClassMatrix BaseClassMatrix::select_items(std::span<const std::size_t> items) const {
  if (items.empty()) throw DimensionError("cannot select zero items");
  std::vector<BaseColumn> cols;
  cols.reserve(items.size());
  for (auto j : items) cols.push_back(columns_.at(j));
  return BaseClassMatrix(std::move(cols), false);
}

BaseClassMatrix BaseClassMatrix::permute_classes(std::span<const std::size_t> perm) const {
  if (perm.size() != classes_) throw DimensionError("permutation length does not match class count");
  std::vector<BaseColumn> cols(columns_.size(), BaseColumn(classes_));
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    for (std::size_t c = 0; c < classes_; ++c) cols[j][c] = columns_[j][perm[c]];
  }
  return BaseClassMatrix(std::move(cols), true);
}

PriorConfig PriorConfig::with_lambda(double lambda, VMode mode) {
  PriorConfig p;
  p.lambda = lambda;
  p.v_mode = mode;
  return p;
}

std::vector<double> PriorConfig::class_alpha(std::size_t classes) const {
  if (alpha_c.empty()) return std::vector<double>(classes, 1.0);
  if (alpha_c.size() != classes) throw DimensionError("alpha_c length does not match class count");
  return alpha_c;
}

void PriorConfig::validate(std::size_t classes) const {
  if (zeta.has_value() == lambda.has_value()) {
    throw ConfigError("exactly one of zeta and lambda must be given");
  }
  if (lambda && !(*lambda > 0.0 && *lambda <= 1.0)) throw ConfigError("lambda must lie in (0,1]");
  if (zeta) {
    if (zeta->size() != classes) throw ConfigError("zeta must have one entry per class count");
    double s = 0.0;
    for (double z : *zeta) {
      if (!(z >= 0.0)) throw ConfigError("zeta entries must be nonnegative");
      s += z;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ConfigError("zeta must sum to 1");
  }
  for (double a : class_alpha(classes)) {
    if (!(a > 0.0)) throw ConfigError("alpha_c entries must be positive");
  }
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw ConfigError("d1 and d2 must be positive");
  if (!(max_v > 0.0) || !std::isfinite(max_v)) throw ConfigError("MaxV must be positive and finite");
}

BaseVectorPrior::BaseVectorPrior(const PriorConfig& prior, std::size_t classes) : table_(classes) {
  if (classes == 0) throw DomainError("class count must be positive");
  if (prior.zeta) {
    if (prior.zeta->size() != classes) throw DimensionError("zeta length does not match class count");
    for (std::size_t k = 1; k <= classes; ++k) {
      double z = (*prior.zeta)[k - 1];
      table_[k - 1] = (z > 0.0 ? std::log(z) : kNegInf) - log_stirling2(classes, k);
    }
    return;
  }
  if (!prior.lambda) throw ConfigError("prior needs zeta or lambda");
  double log_lambda = std::log(*prior.lambda);
  // log sum_k S(C,k) lambda^k, accumulated with max subtraction.
  std::vector<double> terms(classes);
  for (std::size_t k = 1; k <= classes; ++k) {
    terms[k - 1] = log_stirling2(classes, k) + static_cast<double>(k) * log_lambda;
  }
  double mx = *std::max_element(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - mx);
  double log_z = mx + std::log(acc);
  for (std::size_t k = 1; k <= classes; ++k) {
    table_[k - 1] = static_cast<double>(k) * log_lambda - log_z;
  }
}

double base_vector_log_prior(std::span<const int> column, const PriorConfig& prior) {
  return BaseVectorPrior(prior, column.size()).log_prob(column);
}

std::vector<double> theta_from_base(std::span<const double> theta_prime, std::span<const int> column) {
  if (static_cast<std::size_t>(count_base_classes(column)) != theta_prime.size()) {
    throw DimensionError("theta_prime length does not match the number of base classes");
  }
  std::vector<double> out(column.size());
  for (std::size_t c = 0; c < column.size(); ++c) {
    int b = column[c];
    if (b < 1 || static_cast<std::size_t>(b) > theta_prime.size()) {
      throw DimensionError("base label outside theta_prime range");
    }
    out[c] = theta_prime[static_cast<std::size_t>(b) - 1];
  }
  return out;
}

std::vector<double> ModelState::theta_matrix() const {
  std::size_t C = classes();
  std::size_t J = items();
  std::vector<double> out(C * J);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t j = 0; j < J; ++j) out[c * J + j] = theta(c, j);
  }
  return out;
}

void ModelState::check_consistent(std::size_t n, std::size_t items) const {
  std::size_t C = pi.size();
  if (C == 0) throw DimensionError("state has no classes");
  if (B.classes() != C) throw DimensionError("B class count does not match pi");
  if (B.items() != items || theta_prime.size() != items) throw DimensionError("state item count does not match data");
  if (c.size() != n) throw DimensionError("membership count does not match data");
  for (int ci : c) {
    if (ci < 0 || static_cast<std::size_t>(ci) >= C) throw DimensionError("membership label out of range");
  }
  for (std::size_t j = 0; j < items; ++j) {
    if (static_cast<std::size_t>(B.base_classes(j)) != theta_prime[j].size() || !is_canonical(B.column(j))) {
      throw DimensionError("theta_prime for item " + std::to_string(j) + " does not match its base column");
    }
  }
}

double log_v_prior(double v, const PriorConfig& prior) {
  if (!(v > 0.0 && v < prior.max_v)) return kNegInf;
  return prior.d1 * std::log(v) + prior.d2 * v;
}

double full_log_joint(const ModelState& state, const Dataset& data, const PriorConfig& prior) {
  state.check_consistent(data.size(), data.items());
  const std::size_t C = state.classes();
  const std::size_t J = data.items();

  auto alpha = prior.class_alpha(C);
  double lp = std::lgamma(std::accumulate(alpha.begin(), alpha.end(), 0.0));
  for (std::size_t k = 0; k < C; ++k) {
    lp -= std::lgamma(alpha[k]);
    if (alpha[k] != 1.0) lp += (alpha[k] - 1.0) * std::log(state.pi[k]);
  }

  BaseVectorPrior base_prior(prior, C);
  for (std::size_t j = 0; j < J; ++j) {
    const auto& tp = state.theta_prime[j];
    lp += base_prior.log_prob(static_cast<int>(tp.size()));
    lp += repelled_beta::log_normalizer_all_ones(tp.size(), state.v);
    lp += repelled_beta::log_density_unnormalized(repelled_beta::Params::uniform(tp.size(), state.v), tp);
  }

  if (prior.v_mode == VMode::Free) lp += log_v_prior(state.v, prior);

  std::vector<double> log_theta(C * J), log_1m(C * J);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t j = 0; j < J; ++j) {
      double t = state.theta(c, j);
      log_theta[c * J + j] = std::log(t);
      log_1m[c * J + j] = std::log1p(-t);
    }
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::size_t ci = static_cast<std::size_t>(state.c[i]);
    lp += std::log(state.pi[ci]);
    auto row = data.row(i);
    for (std::size_t j = 0; j < J; ++j) {
      lp += row[j] ? log_theta[ci * J + j] : log_1m[ci * J + j];
    }
  }
  return lp;
}

}  // namespace esrlcm
