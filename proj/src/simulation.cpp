#include "esrlcm/simulation.hpp"

#include <algorithm>
#include <sstream>
#include <string>

namespace esrlcm::simulation {

namespace detail {
extern const char* const kFixtureSmall;
extern const char* const kFixtureLarge;
}  // namespace detail

namespace {

constexpr std::size_t kFixtureItems = 32;

std::vector<std::vector<int>> parse_table(const char* text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<int>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, ',');  // item number
    std::vector<int> row;
    while (std::getline(cells, cell, ',')) row.push_back(std::stoi(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

bool fixture_supported(std::size_t classes) {
  return classes == 4 || classes == 5 || classes == 8 || classes == 11 || classes == 16;
}

std::vector<std::vector<int>> fixture_raw_labels(std::size_t classes) {
  if (!fixture_supported(classes)) {
    throw DomainError("no simulation fixture for C = " + std::to_string(classes) + " (supported: 4, 5, 8, 11, 16)");
  }
  auto table = parse_table(classes <= 5 ? detail::kFixtureSmall : detail::kFixtureLarge);
  if (table.size() != kFixtureItems) throw ConfigError("embedded fixture table is malformed");
  for (auto& row : table) row.resize(classes);
  return table;
}

BaseClassMatrix fixture_base_matrix(std::size_t classes) {
  auto raw = fixture_raw_labels(classes);
  std::vector<BaseColumn> cols;
  for (const auto& r : raw) cols.push_back(canonicalize(r));
  return BaseClassMatrix(std::move(cols), false);
}

std::vector<double> gen_theta(int base_classes) {
  if (base_classes < 1) throw DomainError("gen_theta needs at least one base class");
  std::vector<double> out(static_cast<std::size_t>(base_classes));
  for (int b = 1; b <= base_classes; ++b) {
    out[static_cast<std::size_t>(b) - 1] = (2.0 * b - 1.0) / (2.0 * base_classes);
  }
  return out;
}

std::vector<double> gen_theta(std::span<const int> column) { return gen_theta(count_base_classes(column)); }

SimulationTruth fixture_truth(std::size_t classes) {
  auto raw = fixture_raw_labels(classes);
  SimulationTruth truth;
  truth.B = fixture_base_matrix(classes);
  truth.pi.assign(classes, 1.0 / static_cast<double>(classes));
  const std::size_t J = raw.size();
  truth.theta.assign(classes * J, 0.0);
  truth.theta_prime.resize(J);
  for (std::size_t j = 0; j < J; ++j) {
    std::vector<int> levels = raw[j];
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    auto spaced = gen_theta(static_cast<int>(levels.size()));
    truth.theta_prime[j].assign(levels.size(), 0.0);
    for (std::size_t c = 0; c < classes; ++c) {
      auto rank = static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), raw[j][c]) - levels.begin());
      truth.theta[c * J + j] = spaced[rank];
      truth.theta_prime[j][static_cast<std::size_t>(truth.B.at(c, j)) - 1] = spaced[rank];
    }
  }
  return truth;
}

Dataset sample_dataset(const std::vector<double>& pi, const std::vector<double>& theta, std::size_t items,
                       std::size_t n, Rng& rng, std::vector<int>* c_out) {
  if (theta.size() != pi.size() * items) throw DimensionError("theta must be C x J");
  std::discrete_distribution<int> pick(pi.begin(), pi.end());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::uint8_t> x(n * items);
  if (c_out) c_out->assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    int c = pick(rng);
    if (c_out) (*c_out)[i] = c;
    for (std::size_t j = 0; j < items; ++j) {
      x[i * items + j] = unif(rng) < theta[static_cast<std::size_t>(c) * items + j] ? 1 : 0;
    }
  }
  return Dataset(n, items, std::move(x));
}

Simulation simulate(std::size_t classes, std::size_t n, std::uint64_t seed, std::size_t holdout_n) {
  if (n < 1) throw DomainError("simulate needs n >= 1");
  Simulation sim;
  sim.truth = fixture_truth(classes);
  sim.truth.seed = seed;
  Rng rng(seed);
  sim.data = sample_dataset(sim.truth.pi, sim.truth.theta, sim.truth.items(), n, rng, &sim.truth.c);
  Rng holdout_rng(seed + kHoldoutSeedOffset);
  sim.holdout = sample_dataset(sim.truth.pi, sim.truth.theta, sim.truth.items(), holdout_n, holdout_rng);
  return sim;
}

}  // namespace esrlcm::simulation
