// esrlcm command-line front end.
#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "esrlcm/evaluation.hpp"
#include "esrlcm/identifiability.hpp"
#include "esrlcm/io.hpp"
#include "esrlcm/mcmc.hpp"
#include "esrlcm/repelled_beta.hpp"
#include "esrlcm/simulation.hpp"

namespace fs = std::filesystem;
using namespace esrlcm;
using io::Json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::size_t resolve_threads(std::size_t flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("ESRLCM_THREADS")) {
    try {
      long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw UsageError("ESRLCM_THREADS must be a positive integer");
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream s(text);
  std::string cell;
  while (std::getline(s, cell, ',')) {
    std::istringstream c(cell);
    T v{};
    if (!(c >> v)) throw UsageError(std::string("cannot parse ") + what + " list '" + text + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
  return out;
}

Json optional_number(const std::optional<double>& x) { return x ? Json(*x) : Json(nullptr); }

std::vector<std::vector<double>> as_rows(const std::vector<double>& flat, std::size_t rows) {
  std::size_t cols = rows ? flat.size() / rows : 0;
  std::vector<std::vector<double>> out(rows, std::vector<double>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r][c] = flat[r * cols + c];
  }
  return out;
}

void emit(const Json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    io::write_json(out, j);
  }
}

// ---- fit -------------------------------------------------------------------

struct FitArgs {
  std::string config;
  std::string out_dir;
  bool unrestricted = false;
};

int cmd_fit(const FitArgs& a, std::size_t threads) {
  auto cfg = io::read_run_config(a.config);
  if (a.unrestricted) {
    cfg.unrestricted = true;
    cfg.mcmc.unrestricted = true;
  }
  if (!a.out_dir.empty()) cfg.paths.out = a.out_dir;
  if (cfg.paths.data.empty()) throw ConfigError("run config needs paths.data");
  if (cfg.paths.out.empty()) throw ConfigError("run config needs paths.out (or pass --out)");
  // Relative paths in the config are taken relative to the config file.
  auto base = fs::path(a.config).parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  auto data = io::read_dataset_csv(resolve(cfg.paths.data).string());
  fs::path out = a.out_dir.empty() ? resolve(cfg.paths.out) : fs::path(a.out_dir);
  fs::create_directories(out);

  auto chains = mcmc::run_chains(data, cfg.classes, cfg.prior, cfg.mcmc, threads);
  Json chain_stats = Json::array();
  for (const auto& ch : chains) {
    io::write_draws_jsonl((out / ("draws_chain" + std::to_string(ch.chain) + ".jsonl")).string(), ch.draws);
    if (cfg.mcmc.store_c_every > 0) {
      io::write_memberships_jsonl((out / ("memberships_chain" + std::to_string(ch.chain) + ".jsonl")).string(),
                                  ch.memberships);
    }
    chain_stats.push_back({{"chain", ch.chain},
                           {"rj_acceptance", ch.stats.rj_acceptance()},
                           {"rj_proposed", ch.stats.rj_proposed},
                           {"v_acceptance", ch.stats.v_acceptance()},
                           {"v_proposed", ch.stats.v_proposed},
                           {"theta_sampler_calls", ch.stats.theta_sampler.calls},
                           {"theta_sampler_attempts", ch.stats.theta_sampler.attempts}});
  }

  auto pooled = evaluation::pool_draws(chains);
  auto aligned = evaluation::align_draws(pooled);
  auto mean = evaluation::posterior_mean(aligned);
  auto modes = evaluation::mode_restrictions(pooled);
  Json summary{{"classes", cfg.classes},
               {"items", data.items()},
               {"n", data.size()},
               {"draws", pooled.size()},
               {"pi_mean", mean.pi},
               {"theta_mean", as_rows(mean.theta, cfg.classes)},
               {"mode_restrictions", modes.columns()},
               {"v_mean", mean.v},
               {"chains", chain_stats},
               {"config", io::run_config_to_json(cfg)}};
  if (cfg.paths.holdout) {
    auto holdout = io::read_dataset_csv(resolve(*cfg.paths.holdout).string());
    summary["oos_loglik"] = evaluation::predictive_loglik(pooled, holdout);
  }
  io::write_json((out / "summary.json").string(), summary);
  std::cerr << "fit: wrote " << chains.size() << " chain(s) and summary.json to " << out.string() << '\n';
  return 0;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::size_t classes = 4;
  std::size_t n = 500;
  std::uint64_t seed = 1;
  std::string out;
  std::string truth;
  std::size_t holdout_n = 0;
  std::string holdout;
  std::size_t replications = 1;
};

std::string with_suffix(const std::string& path, std::size_t rep, std::size_t reps) {
  if (reps <= 1 || path.empty()) return path;
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + "_rep" + std::to_string(rep) + p.extension().string())).string();
}

int cmd_simulate(const SimulateArgs& a) {
  if (a.holdout_n > 0 && a.holdout.empty()) throw UsageError("--holdout-n needs --holdout PATH");
  for (std::size_t r = 0; r < a.replications; ++r) {
    auto sim = simulation::simulate(a.classes, a.n, a.seed + r, a.holdout.empty() ? 0 : a.holdout_n);
    auto out = with_suffix(a.out, r, a.replications);
    if (out.empty()) {
      io::write_dataset_csv(std::cout, sim.data);
    } else {
      io::write_dataset_csv(out, sim.data);
    }
    if (!a.truth.empty()) io::write_json(with_suffix(a.truth, r, a.replications), io::truth_to_json(sim.truth));
    if (!a.holdout.empty()) io::write_dataset_csv(with_suffix(a.holdout, r, a.replications), sim.holdout);
  }
  return 0;
}

// ---- cv --------------------------------------------------------------------

struct CvArgs {
  std::string config;
  std::size_t folds = 5;
  std::uint64_t fold_seed = 1;
  std::string lambdas;
  std::string classes;
  bool include_unrestricted = false;
  std::string mode = "predictive_mean";
  std::string out;
};

int cmd_cv(const CvArgs& a, std::size_t threads) {
  auto cfg = io::read_run_config(a.config);
  auto base = fs::path(a.config).parent_path();
  fs::path data_path = cfg.paths.data;
  if (!data_path.is_absolute()) data_path = base / data_path;
  auto data = io::read_dataset_csv(data_path.string());
  auto mode = evaluation::parse_predictive_mode(a.mode);

  std::vector<std::size_t> class_grid =
      a.classes.empty() ? std::vector<std::size_t>{cfg.classes} : parse_list<std::size_t>(a.classes, "classes");
  std::vector<evaluation::CvCandidate> grid;
  for (auto C : class_grid) {
    if (a.lambdas.empty()) {
      auto prior = cfg.prior;
      if (prior.zeta && prior.zeta->size() != C) throw UsageError("a zeta prior cannot be reused across class counts");
      grid.push_back({"C=" + std::to_string(C), C, prior, cfg.unrestricted});
    } else {
      for (double lam : parse_list<double>(a.lambdas, "lambda")) {
        auto prior = cfg.prior;
        prior.zeta.reset();
        prior.lambda = lam;
        std::ostringstream name;
        name << "C=" << C << ",lambda=" << lam;
        grid.push_back({name.str(), C, prior, false});
      }
    }
    if (a.include_unrestricted) {
      auto prior = cfg.prior;
      grid.push_back({"C=" + std::to_string(C) + ",unrestricted", C, prior, true});
    }
  }
  for (const auto& g : grid) g.prior.validate(g.classes);

  auto results = evaluation::kfold_cv(data, grid, cfg.mcmc, a.folds, a.fold_seed, threads, mode);
  Json table = Json::array();
  for (const auto& r : results) {
    table.push_back({{"config", r.name}, {"mean_loglik", r.mean_loglik}, {"fold_logliks", r.fold_logliks}});
  }
  emit(Json{{"folds", a.folds}, {"mode", a.mode}, {"results", table}}, a.out);
  return 0;
}

// ---- check-id --------------------------------------------------------------

struct CheckIdArgs {
  std::string matrix;
  bool q_matrix = false;
  std::string levels;
  bool exhaustive = false;
  std::uint64_t budget = 50'000'000;
  int verify_trials = 0;
  std::uint64_t seed = 1;
  std::string out;
};

Json witness_json(const identifiability::Witness& w) {
  Json parts = Json::array();
  for (const auto& p : w.partition.parts) {
    std::vector<std::size_t> one_based(p.begin(), p.end());
    for (auto& j : one_based) ++j;
    parts.push_back(one_based);
  }
  auto rows = [](const BaseClassMatrix& m) {
    std::vector<std::vector<int>> r;
    for (std::size_t c = 0; c < m.classes(); ++c) r.push_back(m.row(c));
    return r;
  };
  return Json{{"partition", parts}, {"merged1", rows(w.merged1)}, {"merged2", rows(w.merged2)}};
}

int cmd_check_id(const CheckIdArgs& a) {
  auto raw = io::read_int_matrix_csv(a.matrix);
  BaseClassMatrix B = a.q_matrix ? identifiability::q_matrix_to_base(raw) : BaseClassMatrix::from_rows(raw, true);
  identifiability::ItemLevels m(B.items(), 2);
  if (!a.levels.empty()) {
    auto given = parse_list<int>(a.levels, "levels");
    if (given.size() == 1) {
      m.assign(B.items(), given.front());
    } else if (given.size() == B.items()) {
      m = given;
    } else {
      throw UsageError("--levels needs one value or one per item");
    }
  }
  auto report = a.exhaustive ? identifiability::exhaustive_search(B, m, a.budget) : identifiability::greedy_search(B, m);
  Json j{{"status", identifiability::to_string(report.status)},
         {"search", a.exhaustive ? "exhaustive" : "greedy"},
         {"classes", B.classes()},
         {"items", B.items()},
         {"diagnostics", report.diagnostics}};
  j["witness"] = report.witness ? witness_json(*report.witness) : Json(nullptr);
  if (report.witness && a.verify_trials > 0) {
    Rng rng(a.seed);
    auto check = identifiability::numeric_verify(B, m, report.witness->partition, rng, a.verify_trials);
    j["numeric_verify"] = {{"passed", check.passed}, {"rank_sums", check.rank_sums}};
  }
  emit(j, a.out);
  return 0;
}

// ---- metrics ---------------------------------------------------------------

struct MetricsArgs {
  std::string truth;
  std::vector<std::string> draws;
  std::string holdout;
  std::string mode = "predictive_mean";
  std::string out;
};

int cmd_metrics(const MetricsArgs& a) {
  auto truth = io::read_truth(a.truth);
  std::vector<mcmc::Draw> draws;
  for (const auto& path : a.draws) {
    auto d = io::read_draws_jsonl(path);
    draws.insert(draws.end(), d.begin(), d.end());
  }
  if (draws.empty()) throw ConfigError("draws files contain no draws");
  if (draws.front().classes() != truth.classes() || draws.front().items() != truth.items()) {
    throw DimensionError("draws and truth disagree on C or J");
  }
  auto modes = evaluation::mode_restrictions(draws);
  auto mean = evaluation::posterior_mean(evaluation::align_draws(draws));
  auto perm = evaluation::align_classes(truth.theta, mean.theta, truth.classes());
  auto metrics = evaluation::restriction_sensitivity_specificity(truth.B, modes, perm);
  auto aligned_modes = modes.permute_classes(perm);
  Json j{{"sensitivity", optional_number(metrics.sensitivity)},
         {"specificity", optional_number(metrics.specificity)},
         {"alignment", perm},
         {"per_item_mode_columns", aligned_modes.columns()},
         {"oos_loglik", nullptr}};
  if (!a.holdout.empty()) {
    auto holdout = io::read_dataset_csv(a.holdout);
    j["oos_loglik"] = evaluation::predictive_loglik(draws, holdout, evaluation::parse_predictive_mode(a.mode));
    j["mode"] = a.mode;
  }
  emit(j, a.out);
  return 0;
}

// ---- density grid ----------------------------------------------------------

int dump_density_grid(const std::string& path, double v, std::size_t points) {
  if (points < 2) throw UsageError("--grid-points must be at least 2");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  auto params = repelled_beta::Params::uniform(2, v);
  const double log_norm = repelled_beta::log_normalizer_all_ones(2, v);
  out << "rho1,rho2,density\n";
  for (std::size_t a = 0; a < points; ++a) {
    for (std::size_t b = 0; b < points; ++b) {
      double x = (a + 0.5) / static_cast<double>(points);
      double y = (b + 0.5) / static_cast<double>(points);
      double rho[2] = {x, y};
      out << x << ',' << y << ',' << std::exp(log_norm + repelled_beta::log_density_unnormalized(params, rho)) << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equivalence set restricted latent class models"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  std::size_t thread_flag = 0;
  app.add_option("--threads", thread_flag, "Maximum worker threads (default: ESRLCM_THREADS or all cores)");
  std::string grid_path;
  double grid_v = 1.0;
  std::size_t grid_points = 100;
  app.add_option("--dump-density-grid", grid_path, "Write a CSV grid of the M=2 repelled beta density and exit");
  app.add_option("--grid-v", grid_v, "Repulsion exponent for --dump-density-grid")->check(CLI::NonNegativeNumber);
  app.add_option("--grid-points", grid_points, "Grid points per axis for --dump-density-grid");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Run MCMC chains for a JSON run config");
  fit_cmd->add_option("config", fit.config, "Run config JSON")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--out", fit.out_dir, "Output directory (overrides paths.out)");
  fit_cmd->add_flag("--unrestricted", fit.unrestricted, "Force every item to C base classes");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate data from a bundled fixture");
  sim_cmd->add_option("--classes", sim.classes, "Number of classes (4, 5, 8, 11 or 16)")->required();
  sim_cmd->add_option("--n", sim.n, "Training rows")->required()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sim.seed, "Random seed");
  sim_cmd->add_option("--out", sim.out, "Dataset CSV (stdout when omitted)");
  sim_cmd->add_option("--truth", sim.truth, "Truth JSON");
  sim_cmd->add_option("--holdout", sim.holdout, "Holdout CSV");
  sim_cmd->add_option("--holdout-n", sim.holdout_n, "Holdout rows");
  sim_cmd->add_option("--replications", sim.replications, "Replicates with seeds seed, seed+1, ...")
      ->check(CLI::PositiveNumber);

  CvArgs cv;
  auto* cv_cmd = app.add_subcommand("cv", "K-fold cross-validation over a prior grid");
  cv_cmd->add_option("config", cv.config, "Run config JSON")->required()->check(CLI::ExistingFile);
  cv_cmd->add_option("--folds", cv.folds, "Number of folds")->check(CLI::Range(2, 1000000));
  cv_cmd->add_option("--fold-seed", cv.fold_seed, "Seed of the fold assignment");
  cv_cmd->add_option("--lambda-grid", cv.lambdas, "Comma-separated lambda values");
  cv_cmd->add_option("--classes-grid", cv.classes, "Comma-separated class counts");
  cv_cmd->add_flag("--include-unrestricted", cv.include_unrestricted, "Also score the unrestricted model");
  cv_cmd->add_option("--mode", cv.mode, "predictive_mean or plug_in");
  cv_cmd->add_option("--out", cv.out, "Result JSON (stdout when omitted)");

  CheckIdArgs cid;
  auto* cid_cmd = app.add_subcommand("check-id", "Search for a generic identifiability certificate");
  cid_cmd->add_option("matrix", cid.matrix, "Base class CSV (rows = classes) or Q-matrix CSV (rows = items)")
      ->required()
      ->check(CLI::ExistingFile);
  cid_cmd->add_flag("--q-matrix", cid.q_matrix, "Input is a binary Q-matrix");
  cid_cmd->add_option("--levels", cid.levels, "Response levels: one value or one per item (default 2)");
  cid_cmd->add_flag("--exhaustive", cid.exhaustive, "Exhaustive instead of greedy search");
  cid_cmd->add_option("--budget", cid.budget, "Work budget for --exhaustive");
  cid_cmd->add_option("--verify-trials", cid.verify_trials, "Numeric Kruskal-rank trials on the witness");
  cid_cmd->add_option("--seed", cid.seed, "Seed for --verify-trials");
  cid_cmd->add_option("--out", cid.out, "Report JSON (stdout when omitted)");

  MetricsArgs met;
  auto* met_cmd = app.add_subcommand("metrics", "Restriction recovery and holdout log likelihood");
  met_cmd->add_option("--truth", met.truth, "Truth JSON")->required()->check(CLI::ExistingFile);
  met_cmd->add_option("--draws", met.draws, "Draws JSONL (repeatable)")->required()->check(CLI::ExistingFile);
  met_cmd->add_option("--holdout", met.holdout, "Holdout CSV")->check(CLI::ExistingFile);
  met_cmd->add_option("--mode", met.mode, "predictive_mean or plug_in");
  met_cmd->add_option("--out", met.out, "Metrics JSON (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    std::size_t threads = resolve_threads(thread_flag);
    if (!grid_path.empty()) return dump_density_grid(grid_path, grid_v, grid_points);
    if (*fit_cmd) return cmd_fit(fit, threads);
    if (*sim_cmd) return cmd_simulate(sim);
    if (*cv_cmd) return cmd_cv(cv, threads);
    if (*cid_cmd) return cmd_check_id(cid);
    if (*met_cmd) return cmd_metrics(met);
    std::cerr << app.help();
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "esrlcm: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "esrlcm: " << e.what() << '\n';
    return 1;
  }
}
