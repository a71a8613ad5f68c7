#include "esrlcm/mcmc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

namespace esrlcm::mcmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

using Mask = std::uint64_t;

std::size_t sample_log_weights(std::span<const double> log_w, Rng& rng) {
  double mx = *std::max_element(log_w.begin(), log_w.end());
  if (mx == kNegInf) throw DomainError("all categorical weights are zero");
  std::vector<double> w(log_w.size());
  double total = 0.0;
  for (std::size_t k = 0; k < log_w.size(); ++k) {
    w[k] = std::exp(log_w[k] - mx);
    total += w[k];
  }
  std::uniform_real_distribution<double> unif(0.0, total);
  double u = unif(rng);
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (u < w[k]) return k;
    u -= w[k];
  }
  // Rounding can leave u just past the last positive weight.
  for (std::size_t k = w.size(); k-- > 0;) {
    if (w[k] > 0.0) return k;
  }
  return w.size() - 1;
}

bool accept_log(double log_alpha, Rng& rng) {
  if (log_alpha >= 0.0) return true;
  if (std::isnan(log_alpha) || log_alpha == kNegInf) return false;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return std::log(1.0 - unif(rng)) < log_alpha;
}

// Class-membership masks of each block, indexed by label - 1.
std::vector<Mask> block_masks(std::span<const int> column) {
  std::vector<Mask> masks(static_cast<std::size_t>(*std::max_element(column.begin(), column.end())), 0);
  for (std::size_t c = 0; c < column.size(); ++c) masks[static_cast<std::size_t>(column[c]) - 1] |= Mask{1} << c;
  return masks;
}

double log_beta_pdf(double x, double a, double b) {
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta_fn(a, b);
}

// log P(B_j) + log P(theta'_j | B_j, v) + log P(x_j | theta'_j, B_j, c)
double item_log_target(std::span<const double> theta, const ClassCounts& base_counts, double v,
                       const BaseVectorPrior& prior) {
  double lp = prior.log_prob(static_cast<int>(theta.size()));
  lp += repelled_beta::log_normalizer_all_ones(theta.size(), v);
  if (v > 0.0 && theta.size() > 1) {
    double g = repelled_beta::log_gap_sum(theta);
    if (g == kNegInf) return kNegInf;
    lp += v * g;
  }
  for (std::size_t b = 0; b < theta.size(); ++b) {
    lp += static_cast<double>(base_counts[b][0]) * std::log(theta[b]) +
          static_cast<double>(base_counts[b][1]) * std::log1p(-theta[b]);
  }
  return lp;
}

void check_class_limit(std::size_t classes) {
  if (classes > 64) throw DomainError("at most 64 classes are supported");
}

}  // namespace

void McmcConfig::validate() const {
  if (n_main < 1) throw ConfigError("n_main must be at least 1");
  if (thin < 1) throw ConfigError("thin must be at least 1");
  if (n_chains < 1) throw ConfigError("n_chains must be at least 1");
  if (max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
}

ClassCounts class_item_counts(std::size_t item, std::span<const int> c, const Dataset& data, std::size_t classes) {
  if (c.size() != data.size()) throw DimensionError("membership count does not match data");
  ClassCounts counts(classes, {0, 0});
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto& slot = counts[static_cast<std::size_t>(c[i])];
    if (data.at(i, item)) {
      ++slot[0];
    } else {
      ++slot[1];
    }
  }
  return counts;
}

ClassCounts base_class_counts(std::span<const int> column, const ClassCounts& per_class) {
  if (column.size() != per_class.size()) throw DimensionError("column length does not match class counts");
  ClassCounts out(static_cast<std::size_t>(*std::max_element(column.begin(), column.end())), {0, 0});
  for (std::size_t c = 0; c < column.size(); ++c) {
    auto& slot = out[static_cast<std::size_t>(column[c]) - 1];
    slot[0] += per_class[c][0];
    slot[1] += per_class[c][1];
  }
  return out;
}

double collapsed_item_loglik_v0(std::span<const int> column, const ClassCounts& per_class) {
  double s = 0.0;
  for (const auto& n : base_class_counts(column, per_class)) {
    // beta(1,1) = 1, so the prior normalizer contributes nothing.
    s += log_beta_fn(1.0 + static_cast<double>(n[0]), 1.0 + static_cast<double>(n[1]));
  }
  return s;
}

double collapsed_item_loglik_v0(std::span<const int> column, std::span<const int> c,
                                std::span<const std::uint8_t> x_j) {
  if (c.size() != x_j.size()) throw DimensionError("memberships and responses differ in length");
  ClassCounts per_class(column.size(), {0, 0});
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto& slot = per_class.at(static_cast<std::size_t>(c[i]));
    if (x_j[i]) {
      ++slot[0];
    } else {
      ++slot[1];
    }
  }
  return collapsed_item_loglik_v0(column, per_class);
}

std::vector<double> BaseMove::probabilities() const {
  double mx = *std::max_element(log_scores.begin(), log_scores.end());
  std::vector<double> p(log_scores.size());
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::exp(log_scores[k] - mx);
    total += p[k];
  }
  for (double& x : p) x /= total;
  return p;
}

BaseMove base_move_candidates(std::span<const int> column, std::size_t changed_class, const ClassCounts& per_class,
                              const BaseVectorPrior& prior) {
  const std::size_t C = column.size();
  if (changed_class >= C) throw DomainError("changed class out of range");
  BaseMove move;
  move.changed_class = changed_class;

  std::vector<int> others;
  for (std::size_t c = 0; c < C; ++c) {
    if (c != changed_class) others.push_back(column[c]);
  }
  std::sort(others.begin(), others.end());
  others.erase(std::unique(others.begin(), others.end()), others.end());

  BaseColumn current = canonicalize(column);
  auto add = [&](int label) {
    BaseColumn raw(column.begin(), column.end());
    raw[changed_class] = label;
    BaseColumn cand = canonicalize(raw);
    if (cand == current) move.current = move.candidates.size();
    move.log_scores.push_back(prior.log_prob(cand) + collapsed_item_loglik_v0(cand, per_class));
    move.candidates.push_back(std::move(cand));
  };
  for (int label : others) add(label);
  // Fresh singleton: a label none of the other classes use.
  add(others.empty() ? 1 : others.back() + 1);
  return move;
}

void gibbs_update_base_class_v0(std::size_t item, ModelState& state, const Dataset& data, const PriorConfig& prior,
                                Rng& rng) {
  const std::size_t C = state.classes();
  check_class_limit(C);
  BaseVectorPrior base_prior(prior, C);
  auto per_class = class_item_counts(item, state.c, data, C);
  std::uniform_int_distribution<std::size_t> pick(0, C - 1);
  std::size_t changed = pick(rng);
  auto move = base_move_candidates(state.B.column(item), changed, per_class, base_prior);
  std::size_t k = sample_log_weights(move.log_scores, rng);
  BaseColumn col = std::move(move.candidates[k]);
  auto counts = base_class_counts(col, per_class);
  std::vector<double> theta(counts.size());
  for (std::size_t b = 0; b < counts.size(); ++b) {
    theta[b] = sample_beta(rng, 1.0 + static_cast<double>(counts[b][0]), 1.0 + static_cast<double>(counts[b][1]));
  }
  state.B.set_column(item, std::move(col));
  state.theta_prime[item] = std::move(theta);
}

double rj_log_acceptance(std::size_t item, std::size_t changed_class, const ModelState& state,
                         std::span<const int> proposed_column, std::span<const double> proposed_theta,
                         const ClassCounts& per_class, const BaseVectorPrior& prior, bool paper_exact) {
  const auto& old_col = state.B.column(item);
  const auto& old_theta = state.theta_prime[item];
  if (proposed_column.size() != old_col.size()) throw DimensionError("proposed column has the wrong length");
  if (static_cast<std::size_t>(count_base_classes(proposed_column)) != proposed_theta.size()) {
    throw DimensionError("proposed theta does not match proposed column");
  }
  const Mask moved = Mask{1} << changed_class;
  auto old_masks = block_masks(old_col);
  auto new_masks = block_masks(proposed_column);
  auto old_counts = base_class_counts(old_col, per_class);
  auto new_counts = base_class_counts(proposed_column, per_class);

  auto contains = [](const std::vector<Mask>& masks, Mask m) {
    return std::find(masks.begin(), masks.end(), m) != masks.end();
  };

  // Blocks touched by the move get fresh theta' draws; the rest are copied.
  double log_q_forward = 0.0;
  for (std::size_t b = 0; b < new_masks.size(); ++b) {
    if ((new_masks[b] & moved) || !contains(old_masks, new_masks[b])) {
      log_q_forward += log_beta_pdf(proposed_theta[b], 1.0 + double(new_counts[b][0]), 1.0 + double(new_counts[b][1]));
    }
  }
  double log_q_reverse = 0.0;
  for (std::size_t b = 0; b < old_masks.size(); ++b) {
    if ((old_masks[b] & moved) || !contains(new_masks, old_masks[b])) {
      log_q_reverse += log_beta_pdf(old_theta[b], 1.0 + double(old_counts[b][0]), 1.0 + double(old_counts[b][1]));
    }
  }

  double log_alpha = item_log_target(proposed_theta, new_counts, state.v, prior) -
                     item_log_target(old_theta, old_counts, state.v, prior) + log_q_reverse - log_q_forward;
  if (!paper_exact) {
    // q(B | B~) / q(B~ | B): both moves share the candidate set built from
    // the other classes' blocks, so the normalizers cancel.
    log_alpha += (prior.log_prob(old_col) + collapsed_item_loglik_v0(old_col, per_class)) -
                 (prior.log_prob(proposed_column) + collapsed_item_loglik_v0(proposed_column, per_class));
  }
  return log_alpha;
}

RjProposal propose_rj(std::size_t item, std::size_t changed_class, const ModelState& state,
                      const ClassCounts& per_class, const BaseVectorPrior& prior, Rng& rng, bool paper_exact) {
  const auto& old_col = state.B.column(item);
  const auto& old_theta = state.theta_prime[item];
  auto move = base_move_candidates(old_col, changed_class, per_class, prior);
  std::size_t k = sample_log_weights(move.log_scores, rng);

  RjProposal out;
  out.column = std::move(move.candidates[k]);
  const Mask moved = Mask{1} << changed_class;
  auto old_masks = block_masks(old_col);
  auto new_masks = block_masks(out.column);
  auto new_counts = base_class_counts(out.column, per_class);
  out.theta_prime.resize(new_masks.size());
  for (std::size_t b = 0; b < new_masks.size(); ++b) {
    auto it = std::find(old_masks.begin(), old_masks.end(), new_masks[b]);
    if ((new_masks[b] & moved) || it == old_masks.end()) {
      out.theta_prime[b] =
          sample_beta(rng, 1.0 + double(new_counts[b][0]), 1.0 + double(new_counts[b][1]));
    } else {
      out.theta_prime[b] = old_theta[static_cast<std::size_t>(it - old_masks.begin())];
    }
  }
  out.log_accept = rj_log_acceptance(item, changed_class, state, out.column, out.theta_prime, per_class, prior,
                                     paper_exact);
  return out;
}

bool rj_update_base_class(std::size_t item, ModelState& state, const Dataset& data, const PriorConfig& prior,
                          Rng& rng, bool paper_exact) {
  const std::size_t C = state.classes();
  check_class_limit(C);
  BaseVectorPrior base_prior(prior, C);
  auto per_class = class_item_counts(item, state.c, data, C);
  std::uniform_int_distribution<std::size_t> pick(0, C - 1);
  std::size_t changed = pick(rng);
  auto proposal = propose_rj(item, changed, state, per_class, base_prior, rng, paper_exact);
  if (!accept_log(proposal.log_accept, rng)) return false;
  state.B.set_column(item, std::move(proposal.column));
  state.theta_prime[item] = std::move(proposal.theta_prime);
  return true;
}

double log_v_conditional(double v, const ModelState& state, const PriorConfig& prior) {
  double lp = log_v_prior(v, prior);
  if (lp == kNegInf) return lp;
  for (const auto& tp : state.theta_prime) {
    if (tp.size() < 2) continue;
    lp += repelled_beta::log_normalizer_all_ones(tp.size(), v);
    double g = repelled_beta::log_gap_sum(tp);
    if (g == kNegInf) return kNegInf;
    lp += v * g;
  }
  return lp;
}

double map_v(const ModelState& state, const PriorConfig& prior) {
  constexpr double kTol = 1e-4;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  // The conditional is -inf at 0 and at MaxV (open interval), so search
  // just inside and compare against the right end separately.
  auto f = [&](double v) {
    PriorConfig closed = prior;
    closed.max_v = std::nextafter(prior.max_v, std::numeric_limits<double>::infinity());
    return log_v_conditional(v, state, closed);
  };
  double lo = 1e-12;
  double hi = prior.max_v;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > kTol) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    }
  }
  double best = 0.5 * (lo + hi);
  if (f(prior.max_v) >= f(best)) best = prior.max_v;
  return best;
}

double triangular_density(double a, double b, double c, double x) {
  if (!(a < c) || b < a || b > c) throw DomainError("triangular distribution needs a <= b <= c and a < c");
  if (x < a || x > c) return 0.0;
  if (x < b) return 2.0 * (x - a) / ((c - a) * (b - a));
  if (x == b) return 2.0 / (c - a);
  return 2.0 * (c - x) / ((c - a) * (c - b));
}

double sample_triangular(double a, double b, double c, Rng& rng) {
  if (!(a < c) || b < a || b > c) throw DomainError("triangular distribution needs a <= b <= c and a < c");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  double split = (b - a) / (c - a);
  if (u < split) return a + std::sqrt(u * (c - a) * (b - a));
  return c - std::sqrt((1.0 - u) * (c - a) * (c - b));
}

bool metropolis_update_v(ModelState& state, const PriorConfig& prior, Rng& rng) {
  const double mode = map_v(state, prior);
  const double proposal = sample_triangular(0.0, mode, prior.max_v, rng);
  const double q_new = triangular_density(0.0, mode, prior.max_v, proposal);
  const double q_old = triangular_density(0.0, mode, prior.max_v, state.v);
  if (q_new <= 0.0) return false;
  const double target_new = log_v_conditional(proposal, state, prior);
  const double target_old = log_v_conditional(state.v, state, prior);
  if (target_new == kNegInf) return false;
  double log_alpha = target_new - target_old + std::log(q_old) - std::log(q_new);
  // Leaving a zero-density point (an endpoint or an invalid start) is always allowed.
  if (q_old <= 0.0 || target_old == kNegInf) log_alpha = 0.0;
  if (!accept_log(log_alpha, rng)) return false;
  state.v = proposal;
  return true;
}

void gibbs_update_theta(std::size_t item, ModelState& state, const Dataset& data, const PriorConfig& prior, Rng& rng,
                        std::uint64_t max_attempts, repelled_beta::SamplerStats* stats) {
  (void)prior;
  const std::size_t C = state.classes();
  auto per_class = class_item_counts(item, state.c, data, C);
  auto counts = base_class_counts(state.B.column(item), per_class);
  auto params = repelled_beta::conjugate_posterior(repelled_beta::Params::uniform(counts.size(), state.v), counts);
  try {
    state.theta_prime[item] = repelled_beta::sample(params, rng, max_attempts, stats);
  } catch (const SamplingError& e) {
    throw SamplingError("theta' update for item " + std::to_string(item + 1) + " failed: " + e.what());
  }
}

void gibbs_update_pi(ModelState& state, const PriorConfig& prior, Rng& rng) {
  const std::size_t C = state.classes();
  auto alpha = prior.class_alpha(C);
  for (int ci : state.c) alpha[static_cast<std::size_t>(ci)] += 1.0;
  state.pi = sample_dirichlet(rng, alpha);
}

std::vector<double> membership_probabilities(std::size_t obs, const ModelState& state, const Dataset& data) {
  const std::size_t C = state.classes();
  std::vector<double> lw(C);
  auto row = data.row(obs);
  for (std::size_t c = 0; c < C; ++c) {
    double s = std::log(state.pi[c]);
    for (std::size_t j = 0; j < data.items() && s != kNegInf; ++j) {
      double t = state.theta(c, j);
      s += row[j] ? std::log(t) : std::log1p(-t);
    }
    lw[c] = s;
  }
  double mx = *std::max_element(lw.begin(), lw.end());
  double total = 0.0;
  for (double& x : lw) {
    x = std::exp(x - mx);
    total += x;
  }
  for (double& x : lw) x /= total;
  return lw;
}

void gibbs_update_c(std::size_t obs, ModelState& state, const Dataset& data, Rng& rng) {
  auto p = membership_probabilities(obs, state, data);
  std::vector<double> lw(p.size());
  for (std::size_t c = 0; c < p.size(); ++c) lw[c] = p[c] > 0.0 ? std::log(p[c]) : kNegInf;
  state.c[obs] = static_cast<int>(sample_log_weights(lw, rng));
}

void gibbs_update_all_c(ModelState& state, const Dataset& data, Rng& rng) {
  const std::size_t C = state.classes();
  const std::size_t J = data.items();
  // log P(x_i | c) = base_c + sum_{j : x_ij = 1} diff_cj
  std::vector<double> base(C, 0.0);
  std::vector<double> diff(C * J);
  for (std::size_t c = 0; c < C; ++c) {
    base[c] = std::log(state.pi[c]);
    for (std::size_t j = 0; j < J; ++j) {
      double t = state.theta(c, j);
      double l0 = std::log1p(-t);
      base[c] += l0;
      diff[c * J + j] = std::log(t) - l0;
    }
  }
  std::vector<double> lw(C);
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto row = data.row(i);
    for (std::size_t c = 0; c < C; ++c) {
      double s = base[c];
      const double* d = diff.data() + c * J;
      for (std::size_t j = 0; j < J; ++j) {
        if (row[j]) s += d[j];
      }
      lw[c] = s;
    }
    state.c[i] = static_cast<int>(sample_log_weights(lw, rng));
  }
}

ModelState initial_state(const Dataset& data, std::size_t classes, const PriorConfig& prior, Rng& rng) {
  if (classes == 0) throw DomainError("class count must be positive");
  ModelState s;
  s.pi.assign(classes, 1.0 / static_cast<double>(classes));
  std::uniform_int_distribution<int> pick(0, static_cast<int>(classes) - 1);
  s.c.resize(data.size());
  for (auto& ci : s.c) ci = pick(rng);
  s.B = BaseClassMatrix::unrestricted(classes, data.items());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  s.theta_prime.assign(data.items(), std::vector<double>(classes));
  for (auto& tp : s.theta_prime) {
    for (auto& t : tp) {
      do {
        t = unif(rng);
      } while (t <= 0.0);
    }
  }
  s.v = prior.v_mode == VMode::Free ? prior.max_v / 2.0 : 0.0;
  return s;
}

std::vector<double> Draw::theta_matrix() const {
  std::vector<double> out(classes() * items());
  for (std::size_t c = 0; c < classes(); ++c) {
    for (std::size_t j = 0; j < items(); ++j) out[c * items() + j] = theta(c, j);
  }
  return out;
}

void sweep(ModelState& state, const Dataset& data, const PriorConfig& prior, const McmcConfig& config, Rng& rng,
           ChainStats& stats) {
  gibbs_update_all_c(state, data, rng);
  gibbs_update_pi(state, prior, rng);
  for (std::size_t j = 0; j < data.items(); ++j) {
    if (!config.unrestricted) {
      if (prior.v_mode == VMode::FixedZero) {
        gibbs_update_base_class_v0(j, state, data, prior, rng);
      } else {
        ++stats.rj_proposed;
        if (rj_update_base_class(j, state, data, prior, rng, config.paper_exact_rj)) ++stats.rj_accepted;
      }
    }
    gibbs_update_theta(j, state, data, prior, rng, config.max_attempts, &stats.theta_sampler);
  }
  if (prior.v_mode == VMode::Free) {
    ++stats.v_proposed;
    if (metropolis_update_v(state, prior, rng)) ++stats.v_accepted;
  }
}

PosteriorDraws run_chain(const Dataset& data, std::size_t classes, const PriorConfig& prior, const McmcConfig& config,
                         Rng& rng) {
  config.validate();
  prior.validate(classes);
  check_class_limit(classes);
  PosteriorDraws out;
  ModelState state = initial_state(data, classes, prior, rng);
  out.draws.reserve(static_cast<std::size_t>(config.n_main / config.thin + 1));
  std::uint64_t retained = 0;
  const std::uint64_t total = config.n_warmup + config.n_main;
  for (std::uint64_t it = 0; it < total; ++it) {
    sweep(state, data, prior, config, rng, out.stats);
    if (it < config.n_warmup) continue;
    std::uint64_t main_iter = it - config.n_warmup;
    if (main_iter % config.thin != 0) continue;
    Draw d;
    d.iter = main_iter;
    d.log_joint = full_log_joint(state, data, prior);
    d.v = state.v;
    d.pi = state.pi;
    d.B = state.B;
    d.theta_prime = state.theta_prime;
    out.draws.push_back(std::move(d));
    if (config.store_c_every > 0 && retained % config.store_c_every == 0) {
      out.memberships.push_back({main_iter, state.c});
    }
    ++retained;
  }
  return out;
}

Rng chain_rng(std::uint64_t seed, std::size_t chain_index) {
  return Rng(seed ^ static_cast<std::uint64_t>(chain_index));
}

std::vector<PosteriorDraws> run_chains(const Dataset& data, std::size_t classes, const PriorConfig& prior,
                                       const McmcConfig& config, std::size_t threads) {
  config.validate();
  std::vector<PosteriorDraws> results(config.n_chains);
  std::vector<std::exception_ptr> errors(config.n_chains);
  if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  threads = std::min(threads, config.n_chains);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < config.n_chains; k = next++) {
      try {
        Rng rng = chain_rng(config.seed, k);
        results[k] = run_chain(data, classes, prior, config, rng);
        results[k].chain = k;
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace esrlcm::mcmc
