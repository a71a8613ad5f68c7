#include "esrlcm/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace esrlcm::io {

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream s(line);
  while (std::getline(s, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_int(const std::string& s, int& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stoi(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset CSV is empty");
  auto header = split_csv(line);
  const std::size_t J = header.size();
  for (std::size_t j = 0; j < J; ++j) {
    if (header[j] != "item" + std::to_string(j + 1)) {
      throw ConfigError("dataset header must be item1,...,itemJ (column " + std::to_string(j + 1) + " is '" +
                        header[j] + "')");
    }
  }
  std::vector<std::uint8_t> x;
  std::size_t n = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    auto cells = split_csv(line);
    if (cells.size() != J) {
      throw ConfigError("line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(J));
    }
    for (const auto& cell : cells) {
      if (cell != "0" && cell != "1") {
        throw ConfigError("line " + std::to_string(lineno) + ": responses must be 0 or 1, got '" + cell + "'");
      }
      x.push_back(cell == "1");
    }
    ++n;
  }
  return Dataset(n, J, std::move(x));
}

Dataset read_dataset_csv(const std::string& path) {
  auto in = open_in(path);
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  for (std::size_t j = 0; j < data.items(); ++j) out << (j ? "," : "") << "item" << j + 1;
  out << '\n';
  std::string line;
  for (std::size_t i = 0; i < data.size(); ++i) {
    line.clear();
    for (std::size_t j = 0; j < data.items(); ++j) {
      if (j) line += ',';
      line += data.at(i, j) ? '1' : '0';
    }
    out << line << '\n';
  }
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  auto out = open_out(path);
  write_dataset_csv(out, data);
}

std::vector<std::vector<int>> read_int_matrix_csv(std::istream& in) {
  std::vector<std::vector<int>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    auto cells = split_csv(line);
    std::vector<int> row;
    bool numeric = true;
    for (const auto& cell : cells) {
      int v = 0;
      if (!parse_int(cell, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw ConfigError("non-integer cell in matrix row: '" + line + "'");
    }
    first = false;
    if (!rows.empty() && row.size() != rows.front().size()) throw ConfigError("matrix rows differ in length");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("matrix CSV has no rows");
  return rows;
}

std::vector<std::vector<int>> read_int_matrix_csv(const std::string& path) {
  auto in = open_in(path);
  return read_int_matrix_csv(in);
}

Json draw_to_json(const mcmc::Draw& draw) {
  Json j;
  j["iter"] = draw.iter;
  j["log_joint"] = draw.log_joint;
  j["v"] = draw.v;
  j["pi"] = draw.pi;
  j["B"] = draw.B.columns();
  j["theta_prime"] = draw.theta_prime;
  return j;
}

mcmc::Draw draw_from_json(const Json& j) {
  mcmc::Draw d;
  try {
    d.iter = j.at("iter").get<std::uint64_t>();
    d.log_joint = j.at("log_joint").get<double>();
    d.v = j.at("v").get<double>();
    d.pi = j.at("pi").get<std::vector<double>>();
    auto cols = j.at("B").get<std::vector<BaseColumn>>();
    for (const auto& col : cols) {
      if (!is_canonical(col)) throw ConfigError("draw record has a non-canonical base class column");
    }
    d.B = BaseClassMatrix(std::move(cols), false);
    d.theta_prime = j.at("theta_prime").get<std::vector<std::vector<double>>>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed draw record: ") + e.what());
  }
  if (d.B.classes() != d.pi.size() || d.theta_prime.size() != d.B.items()) {
    throw DimensionError("draw record has inconsistent dimensions");
  }
  for (std::size_t k = 0; k < d.B.items(); ++k) {
    if (d.theta_prime[k].size() != static_cast<std::size_t>(d.B.base_classes(k))) {
      throw DimensionError("draw record theta_prime does not match its base classes");
    }
  }
  return d;
}

void write_draws_jsonl(std::ostream& out, const std::vector<mcmc::Draw>& draws) {
  for (const auto& d : draws) out << draw_to_json(d).dump() << '\n';
}

void write_draws_jsonl(const std::string& path, const std::vector<mcmc::Draw>& draws) {
  auto out = open_out(path);
  write_draws_jsonl(out, draws);
}

std::vector<mcmc::Draw> read_draws_jsonl(std::istream& in) {
  std::vector<mcmc::Draw> draws;
  std::string line;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("malformed JSON line in draws file: ") + e.what());
    }
    draws.push_back(draw_from_json(j));
  }
  return draws;
}

std::vector<mcmc::Draw> read_draws_jsonl(const std::string& path) {
  auto in = open_in(path);
  return read_draws_jsonl(in);
}

void write_memberships_jsonl(const std::string& path, const std::vector<mcmc::MembershipSnapshot>& snaps) {
  auto out = open_out(path);
  for (const auto& s : snaps) {
    std::vector<int> one_based(s.c.begin(), s.c.end());
    for (auto& c : one_based) ++c;
    out << Json{{"iter", s.iter}, {"c", one_based}}.dump() << '\n';
  }
}

Json truth_to_json(const simulation::SimulationTruth& truth) {
  const std::size_t C = truth.classes();
  const std::size_t J = truth.items();
  std::vector<std::vector<double>> theta(C, std::vector<double>(J));
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t j = 0; j < J; ++j) theta[c][j] = truth.theta_at(c, j);
  }
  std::vector<std::vector<int>> rows;
  for (std::size_t c = 0; c < C; ++c) rows.push_back(truth.B.row(c));
  std::vector<int> c1(truth.c.begin(), truth.c.end());
  for (auto& c : c1) ++c;
  return Json{{"B_true", rows}, {"theta_true", theta}, {"pi_true", truth.pi}, {"c_true", c1}, {"seed", truth.seed}};
}

simulation::SimulationTruth truth_from_json(const Json& j) {
  simulation::SimulationTruth t;
  try {
    auto rows = j.at("B_true").get<std::vector<std::vector<int>>>();
    auto theta = j.at("theta_true").get<std::vector<std::vector<double>>>();
    t.B = BaseClassMatrix::from_rows(rows, true);
    t.pi = j.at("pi_true").get<std::vector<double>>();
    if (j.contains("c_true")) {
      t.c = j.at("c_true").get<std::vector<int>>();
      for (auto& c : t.c) --c;
    }
    t.seed = get_or<std::uint64_t>(j, "seed", 0);
    if (theta.size() != t.B.classes() || t.pi.size() != t.B.classes()) {
      throw DimensionError("truth file dimensions disagree");
    }
    const std::size_t J = t.B.items();
    t.theta.assign(t.B.classes() * J, 0.0);
    t.theta_prime.assign(J, {});
    for (std::size_t j2 = 0; j2 < J; ++j2) t.theta_prime[j2].assign(static_cast<std::size_t>(t.B.base_classes(j2)), 0.0);
    for (std::size_t c = 0; c < t.B.classes(); ++c) {
      if (theta[c].size() != J) throw DimensionError("truth theta rows must have J entries");
      for (std::size_t j2 = 0; j2 < J; ++j2) {
        t.theta[c * J + j2] = theta[c][j2];
        t.theta_prime[j2][static_cast<std::size_t>(t.B.at(c, j2)) - 1] = theta[c][j2];
      }
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed truth file: ") + e.what());
  }
  return t;
}

simulation::SimulationTruth read_truth(const std::string& path) { return truth_from_json(read_json(path)); }

Json prior_to_json(const PriorConfig& prior) {
  Json j;
  if (prior.lambda) j["lambda"] = *prior.lambda;
  if (prior.zeta) j["zeta"] = *prior.zeta;
  if (!prior.alpha_c.empty()) j["alpha_c"] = prior.alpha_c;
  j["d1"] = prior.d1;
  j["d2"] = prior.d2;
  j["max_v"] = prior.max_v;
  j["v_mode"] = prior.v_mode == VMode::Free ? "free" : "fixed_zero";
  return j;
}

PriorConfig prior_from_json(const Json& j) {
  reject_unknown(j, {"lambda", "zeta", "alpha_c", "d1", "d2", "max_v", "v_mode"}, "prior");
  PriorConfig p;
  if (j.contains("lambda")) p.lambda = get_or<double>(j, "lambda", 1.0);
  if (j.contains("zeta")) p.zeta = get_or<std::vector<double>>(j, "zeta", {});
  p.alpha_c = get_or<std::vector<double>>(j, "alpha_c", {});
  p.d1 = get_or<double>(j, "d1", 1.0);
  p.d2 = get_or<double>(j, "d2", 1.0);
  p.max_v = get_or<double>(j, "max_v", 2.0);
  auto mode = get_or<std::string>(j, "v_mode", "free");
  if (mode == "free") {
    p.v_mode = VMode::Free;
  } else if (mode == "fixed_zero") {
    p.v_mode = VMode::FixedZero;
  } else {
    throw ConfigError("v_mode must be 'free' or 'fixed_zero'");
  }
  return p;
}

void RunConfig::validate() const {
  if (model != "esrlcm") throw ConfigError("model must be 'esrlcm'");
  if (classes < 1) throw ConfigError("classes must be at least 1");
  if (classes > 64) throw ConfigError("at most 64 classes are supported");
  prior.validate(classes);
  mcmc.validate();
}

RunConfig run_config_from_json(const Json& j) {
  reject_unknown(j, {"model", "classes", "prior", "mcmc", "unrestricted", "paths"}, "run config");
  RunConfig cfg;
  cfg.model = get_or<std::string>(j, "model", "esrlcm");
  if (!j.contains("classes")) throw ConfigError("run config needs 'classes'");
  cfg.classes = get_or<std::size_t>(j, "classes", 2);
  cfg.unrestricted = get_or<bool>(j, "unrestricted", false);
  cfg.prior = prior_from_json(j.value("prior", Json::object()));
  if (cfg.unrestricted && !cfg.prior.lambda && !cfg.prior.zeta) cfg.prior.lambda = 1.0;

  const Json m = j.value("mcmc", Json::object());
  reject_unknown(m, {"n_warmup", "n_main", "n_chains", "seed", "thin", "store_c_every", "paper_exact_rj", "max_attempts"},
                 "mcmc");
  cfg.mcmc.n_warmup = get_or<std::uint64_t>(m, "n_warmup", cfg.mcmc.n_warmup);
  cfg.mcmc.n_main = get_or<std::uint64_t>(m, "n_main", cfg.mcmc.n_main);
  cfg.mcmc.n_chains = get_or<std::size_t>(m, "n_chains", cfg.mcmc.n_chains);
  cfg.mcmc.seed = get_or<std::uint64_t>(m, "seed", cfg.mcmc.seed);
  cfg.mcmc.thin = get_or<std::uint64_t>(m, "thin", cfg.mcmc.thin);
  cfg.mcmc.store_c_every = get_or<std::uint64_t>(m, "store_c_every", cfg.mcmc.store_c_every);
  cfg.mcmc.paper_exact_rj = get_or<bool>(m, "paper_exact_rj", false);
  cfg.mcmc.max_attempts = get_or<std::uint64_t>(m, "max_attempts", cfg.mcmc.max_attempts);
  cfg.mcmc.unrestricted = cfg.unrestricted;

  const Json p = j.value("paths", Json::object());
  reject_unknown(p, {"data", "out", "truth", "holdout"}, "paths");
  cfg.paths.data = get_or<std::string>(p, "data", "");
  cfg.paths.out = get_or<std::string>(p, "out", "");
  if (p.contains("truth")) cfg.paths.truth = get_or<std::string>(p, "truth", "");
  if (p.contains("holdout")) cfg.paths.holdout = get_or<std::string>(p, "holdout", "");
  cfg.validate();
  return cfg;
}

Json run_config_to_json(const RunConfig& cfg) {
  Json m{{"n_warmup", cfg.mcmc.n_warmup},       {"n_main", cfg.mcmc.n_main},
         {"n_chains", cfg.mcmc.n_chains},       {"seed", cfg.mcmc.seed},
         {"thin", cfg.mcmc.thin},               {"store_c_every", cfg.mcmc.store_c_every},
         {"paper_exact_rj", cfg.mcmc.paper_exact_rj}, {"max_attempts", cfg.mcmc.max_attempts}};
  Json p{{"data", cfg.paths.data}, {"out", cfg.paths.out}};
  if (cfg.paths.truth) p["truth"] = *cfg.paths.truth;
  if (cfg.paths.holdout) p["holdout"] = *cfg.paths.holdout;
  return Json{{"model", cfg.model},
              {"classes", cfg.classes},
              {"prior", prior_to_json(cfg.prior)},
              {"mcmc", m},
              {"unrestricted", cfg.unrestricted},
              {"paths", p}};
}

RunConfig read_run_config(const std::string& path) { return run_config_from_json(read_json(path)); }

Json read_json(const std::string& path) {
  auto in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("cannot parse JSON in '" + path + "': " + e.what());
  }
}

void write_json(const std::string& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace esrlcm::io
