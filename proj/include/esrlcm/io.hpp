#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "esrlcm/mcmc.hpp"
#include "esrlcm/model.hpp"
#include "esrlcm/simulation.hpp"

namespace esrlcm::io {

using Json = nlohmann::json;

/// Header `item1,...,itemJ`, then one 0/1 row per observation.
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(std::ostream& out, const Dataset& data);
void write_dataset_csv(const std::string& path, const Dataset& data);

/// Integer matrix CSV; a first line with any non-integer cell is treated
/// as a header and skipped.
std::vector<std::vector<int>> read_int_matrix_csv(std::istream& in);
std::vector<std::vector<int>> read_int_matrix_csv(const std::string& path);

Json draw_to_json(const mcmc::Draw& draw);
mcmc::Draw draw_from_json(const Json& j);

/// One JSON object per line.
void write_draws_jsonl(std::ostream& out, const std::vector<mcmc::Draw>& draws);
void write_draws_jsonl(const std::string& path, const std::vector<mcmc::Draw>& draws);
std::vector<mcmc::Draw> read_draws_jsonl(std::istream& in);
std::vector<mcmc::Draw> read_draws_jsonl(const std::string& path);

/// Lines of {"iter": t, "c": [...]} with 1-based classes.
void write_memberships_jsonl(const std::string& path, const std::vector<mcmc::MembershipSnapshot>& snaps);

Json truth_to_json(const simulation::SimulationTruth& truth);
simulation::SimulationTruth truth_from_json(const Json& j);
simulation::SimulationTruth read_truth(const std::string& path);

Json prior_to_json(const PriorConfig& prior);
/// Fills defaults (d1 = d2 = 1, max_v = 2, alpha_c all ones, v free) and
/// rejects unknown keys.
PriorConfig prior_from_json(const Json& j);

struct RunPaths {
  std::string data;
  std::string out;
  std::optional<std::string> truth;
  std::optional<std::string> holdout;
};

struct RunConfig {
  std::string model = "esrlcm";
  std::size_t classes = 2;
  PriorConfig prior;
  mcmc::McmcConfig mcmc;
  bool unrestricted = false;
  RunPaths paths;

  void validate() const;
};

RunConfig run_config_from_json(const Json& j);
Json run_config_to_json(const RunConfig& cfg);
RunConfig read_run_config(const std::string& path);

Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& j);

}  // namespace esrlcm::io
