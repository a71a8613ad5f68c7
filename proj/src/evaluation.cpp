#include "esrlcm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace esrlcm::evaluation {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Per-class log(1 - theta) totals plus log-odds, so a row costs one add per
// positive response.
struct MixtureTable {
  std::size_t classes = 0;
  std::size_t items = 0;
  std::vector<double> log_pi_base;  // log pi_c + sum_j log(1 - theta_cj)
  std::vector<double> log_odds;     // C x J

  MixtureTable(std::span<const double> pi, std::span<const double> theta)
      : classes(pi.size()), items(pi.empty() ? 0 : theta.size() / pi.size()) {
    log_pi_base.assign(classes, 0.0);
    log_odds.assign(classes * items, 0.0);
    for (std::size_t c = 0; c < classes; ++c) {
      double base = std::log(pi[c]);
      for (std::size_t j = 0; j < items; ++j) {
        double t = theta[c * items + j];
        base += std::log1p(-t);
        log_odds[c * items + j] = std::log(t) - std::log1p(-t);
      }
      log_pi_base[c] = base;
    }
  }

  double operator()(std::span<const std::uint8_t> row, std::vector<double>& scratch) const {
    scratch.assign(log_pi_base.begin(), log_pi_base.end());
    for (std::size_t c = 0; c < classes; ++c) {
      const double* lo = log_odds.data() + c * items;
      double s = 0.0;
      for (std::size_t j = 0; j < items; ++j) {
        if (row[j]) s += lo[j];
      }
      scratch[c] += s;
    }
    double m = *std::max_element(scratch.begin(), scratch.end());
    if (!std::isfinite(m)) return m;
    double total = 0.0;
    for (double x : scratch) total += std::exp(x - m);
    return m + std::log(total);
  }
};

void check_holdout(const std::vector<mcmc::Draw>& draws, const Dataset& holdout) {
  if (draws.empty()) throw DomainError("no posterior draws to evaluate");
  if (holdout.items() != draws.front().items()) {
    throw DimensionError("holdout has " + std::to_string(holdout.items()) + " items but the draws have " +
                         std::to_string(draws.front().items()));
  }
}

}  // namespace

PredictiveMode parse_predictive_mode(const std::string& name) {
  if (name == "predictive_mean") return PredictiveMode::PredictiveMean;
  if (name == "plug_in") return PredictiveMode::PlugIn;
  throw ConfigError("unknown predictive mode '" + name + "' (expected predictive_mean or plug_in)");
}

std::string to_string(PredictiveMode mode) {
  return mode == PredictiveMode::PredictiveMean ? "predictive_mean" : "plug_in";
}

double log_mixture_density(std::span<const double> pi, std::span<const double> theta,
                           std::span<const std::uint8_t> row) {
  if (pi.empty() || theta.size() != pi.size() * row.size()) throw DimensionError("theta must be C x J");
  std::vector<double> scratch;
  return MixtureTable(pi, theta)(row, scratch);
}

std::vector<double> predictive_logliks(const std::vector<mcmc::Draw>& draws, const Dataset& holdout,
                                       PredictiveMode mode) {
  check_holdout(draws, holdout);
  const std::size_t n = holdout.size();
  std::vector<double> out(n);
  std::vector<double> scratch;
  if (mode == PredictiveMode::PlugIn) {
    auto mean = posterior_mean(align_draws(draws));
    MixtureTable table(mean.pi, mean.theta);
    for (std::size_t i = 0; i < n; ++i) out[i] = table(holdout.row(i), scratch);
    return out;
  }
  // Running log-sum-exp over draws for each observation.
  std::vector<double> acc(n, -kInf);
  for (const auto& d : draws) {
    auto theta = d.theta_matrix();
    MixtureTable table(d.pi, theta);
    for (std::size_t i = 0; i < n; ++i) {
      double l = table(holdout.row(i), scratch);
      double a = acc[i];
      if (a == -kInf) {
        acc[i] = l;
      } else if (l > a) {
        acc[i] = l + std::log1p(std::exp(a - l));
      } else {
        acc[i] = a + std::log1p(std::exp(l - a));
      }
    }
  }
  const double log_d = std::log(static_cast<double>(draws.size()));
  for (std::size_t i = 0; i < n; ++i) out[i] = acc[i] - log_d;
  return out;
}

double predictive_loglik(const std::vector<mcmc::Draw>& draws, const Dataset& holdout, PredictiveMode mode) {
  if (holdout.size() == 0) throw DomainError("holdout set is empty");
  auto per = predictive_logliks(draws, holdout, mode);
  return std::accumulate(per.begin(), per.end(), 0.0) / static_cast<double>(per.size());
}

std::vector<std::size_t> hungarian(const std::vector<double>& cost, std::size_t size) {
  if (cost.size() != size * size) throw DimensionError("cost matrix must be square");
  const std::size_t n = size;
  // 1-based potentials formulation; p[j] is the row matched to column j.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      std::size_t i0 = p[j0], j1 = 0;
      double delta = kInf;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<std::size_t> assign(n);
  for (std::size_t j = 1; j <= n; ++j) assign[p[j] - 1] = j - 1;
  return assign;
}

std::vector<std::size_t> align_classes(std::span<const double> reference, std::span<const double> target,
                                       std::size_t classes) {
  if (classes == 0 || reference.size() != target.size() || reference.size() % classes != 0) {
    throw DimensionError("alignment needs two C x J matrices of the same shape");
  }
  const std::size_t J = reference.size() / classes;
  std::vector<double> cost(classes * classes, 0.0);
  for (std::size_t a = 0; a < classes; ++a) {
    for (std::size_t b = 0; b < classes; ++b) {
      double s = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        double d = reference[a * J + j] - target[b * J + j];
        s += d * d;
      }
      cost[a * classes + b] = s;
    }
  }
  return hungarian(cost, classes);
}

mcmc::Draw permute_draw(const mcmc::Draw& draw, std::span<const std::size_t> perm) {
  const std::size_t C = draw.classes();
  if (perm.size() != C) throw DimensionError("permutation length does not match class count");
  mcmc::Draw out;
  out.iter = draw.iter;
  out.log_joint = draw.log_joint;
  out.v = draw.v;
  out.pi.resize(C);
  for (std::size_t c = 0; c < C; ++c) out.pi[c] = draw.pi[perm[c]];
  std::vector<BaseColumn> cols;
  out.theta_prime.resize(draw.items());
  for (std::size_t j = 0; j < draw.items(); ++j) {
    BaseColumn raw(C);
    for (std::size_t c = 0; c < C; ++c) raw[c] = draw.B.at(perm[c], j);
    BaseColumn col = canonicalize(raw);
    out.theta_prime[j].assign(draw.theta_prime[j].size(), 0.0);
    for (std::size_t c = 0; c < C; ++c) {
      out.theta_prime[j][static_cast<std::size_t>(col[c]) - 1] =
          draw.theta_prime[j][static_cast<std::size_t>(raw[c]) - 1];
    }
    cols.push_back(std::move(col));
  }
  out.B = BaseClassMatrix(std::move(cols), false);
  return out;
}

std::size_t reference_draw(const std::vector<mcmc::Draw>& draws) {
  if (draws.empty()) throw DomainError("no posterior draws");
  std::size_t best = 0;
  for (std::size_t k = 1; k < draws.size(); ++k) {
    if (draws[k].log_joint > draws[best].log_joint) best = k;
  }
  return best;
}

std::vector<mcmc::Draw> align_draws(const std::vector<mcmc::Draw>& draws) {
  const auto& ref = draws[reference_draw(draws)];
  auto ref_theta = ref.theta_matrix();
  std::vector<mcmc::Draw> out;
  out.reserve(draws.size());
  for (const auto& d : draws) {
    auto perm = align_classes(ref_theta, d.theta_matrix(), ref.classes());
    out.push_back(permute_draw(d, perm));
  }
  return out;
}

PosteriorMean posterior_mean(const std::vector<mcmc::Draw>& draws) {
  if (draws.empty()) throw DomainError("no posterior draws");
  PosteriorMean m;
  const std::size_t C = draws.front().classes();
  const std::size_t J = draws.front().items();
  m.pi.assign(C, 0.0);
  m.theta.assign(C * J, 0.0);
  for (const auto& d : draws) {
    for (std::size_t c = 0; c < C; ++c) m.pi[c] += d.pi[c];
    auto t = d.theta_matrix();
    for (std::size_t k = 0; k < t.size(); ++k) m.theta[k] += t[k];
    m.v += d.v;
  }
  const double D = static_cast<double>(draws.size());
  for (auto& x : m.pi) x /= D;
  for (auto& x : m.theta) x /= D;
  m.v /= D;
  return m;
}

BaseColumn mode_column(const std::vector<BaseColumn>& columns) {
  if (columns.empty()) throw DomainError("no columns to take a mode of");
  std::map<BaseColumn, std::size_t> counts;
  for (const auto& col : columns) ++counts[canonicalize(col)];
  const BaseColumn* best = nullptr;
  std::size_t best_count = 0;
  int best_b = 0;
  // std::map visits columns in lexicographic order, so strict comparisons
  // keep the lexicographically smallest among exact ties.
  for (const auto& [col, count] : counts) {
    int b = count_base_classes(col);
    if (!best || count > best_count || (count == best_count && b < best_b)) {
      best = &col;
      best_count = count;
      best_b = b;
    }
  }
  return *best;
}

BaseClassMatrix mode_restrictions(const std::vector<mcmc::Draw>& draws) {
  auto aligned = align_draws(draws);
  const std::size_t J = aligned.front().items();
  std::vector<BaseColumn> cols;
  for (std::size_t j = 0; j < J; ++j) {
    std::vector<BaseColumn> item;
    item.reserve(aligned.size());
    for (const auto& d : aligned) item.push_back(d.B.column(j));
    cols.push_back(mode_column(item));
  }
  return BaseClassMatrix(std::move(cols), false);
}

RestrictionMetrics restriction_sensitivity_specificity(const BaseClassMatrix& truth, const BaseClassMatrix& estimate,
                                                       std::span<const std::size_t> alignment) {
  if (truth.classes() != estimate.classes() || truth.items() != estimate.items()) {
    throw DimensionError("truth and estimate base class matrices differ in shape");
  }
  auto est = estimate.permute_classes(alignment);
  std::uint64_t restricted = 0, restricted_hit = 0, free = 0, free_hit = 0;
  for (std::size_t j = 0; j < truth.items(); ++j) {
    for (std::size_t a = 0; a < truth.classes(); ++a) {
      for (std::size_t b = a + 1; b < truth.classes(); ++b) {
        bool t = truth.at(a, j) == truth.at(b, j);
        bool e = est.at(a, j) == est.at(b, j);
        if (t) {
          ++restricted;
          restricted_hit += e;
        } else {
          ++free;
          free_hit += !e;
        }
      }
    }
  }
  RestrictionMetrics m;
  if (restricted) m.sensitivity = double(restricted_hit) / double(restricted);
  if (free) m.specificity = double(free_hit) / double(free);
  return m;
}

std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw DomainError("cross-validation needs at least 2 folds");
  std::vector<std::size_t> out(n);
  const std::uint64_t key = splitmix64(seed);
  for (std::size_t i = 0; i < n; ++i) out[i] = splitmix64(key ^ splitmix64(i)) % folds;
  return out;
}

std::vector<mcmc::Draw> pool_draws(const std::vector<mcmc::PosteriorDraws>& chains) {
  std::vector<mcmc::Draw> out;
  for (const auto& ch : chains) out.insert(out.end(), ch.draws.begin(), ch.draws.end());
  return out;
}

std::vector<CvResult> kfold_cv(const Dataset& data, const std::vector<CvCandidate>& grid,
                               const mcmc::McmcConfig& config, std::size_t folds, std::uint64_t fold_seed,
                               std::size_t threads, PredictiveMode mode) {
  if (data.size() < folds) throw DomainError("cross-validation needs n >= K");
  auto fold = fold_assignment(data.size(), folds, fold_seed);
  std::vector<std::vector<std::size_t>> train(folds), test(folds);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t k = 0; k < folds; ++k) (fold[i] == k ? test[k] : train[k]).push_back(i);
  }
  for (std::size_t k = 0; k < folds; ++k) {
    if (test[k].empty() || train[k].empty()) {
      throw DomainError("fold " + std::to_string(k) + " is too small to fit and evaluate");
    }
  }
  std::vector<CvResult> results;
  for (const auto& cand : grid) {
    CvResult r;
    r.name = cand.name;
    double total = 0.0;
    for (std::size_t k = 0; k < folds; ++k) {
      auto cfg = config;
      cfg.seed = config.seed + k;
      cfg.unrestricted = cand.unrestricted;
      auto chains = mcmc::run_chains(data.subset(train[k]), cand.classes, cand.prior, cfg, threads);
      auto per = predictive_logliks(pool_draws(chains), data.subset(test[k]), mode);
      double s = std::accumulate(per.begin(), per.end(), 0.0);
      total += s;
      r.fold_logliks.push_back(s / static_cast<double>(per.size()));
    }
    r.mean_loglik = total / static_cast<double>(data.size());
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace esrlcm::evaluation
