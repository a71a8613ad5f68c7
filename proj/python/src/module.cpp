#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "esrlcm/combinatorics.hpp"
#include "esrlcm/evaluation.hpp"
#include "esrlcm/identifiability.hpp"
#include "esrlcm/io.hpp"
#include "esrlcm/mcmc.hpp"
#include "esrlcm/repelled_beta.hpp"
#include "esrlcm/simulation.hpp"

namespace py = pybind11;
using namespace esrlcm;

namespace {

using Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Dataset to_dataset(const Array& x) {
  if (x.ndim() != 2) throw DimensionError("data must be a 2-d array");
  auto n = static_cast<std::size_t>(x.shape(0)), J = static_cast<std::size_t>(x.shape(1));
  std::vector<std::uint8_t> values(x.data(), x.data() + n * J);
  return Dataset(n, J, std::move(values));
}

Array to_array(const Dataset& d) {
  Array out({d.size(), d.items()});
  std::copy(d.values().begin(), d.values().end(), out.mutable_data());
  return out;
}

std::vector<mcmc::Draw> draws_from(const std::string& jsonl) {
  std::istringstream in(jsonl);
  return io::read_draws_jsonl(in);
}

std::string draws_to(const std::vector<mcmc::Draw>& draws) {
  std::ostringstream out;
  io::write_draws_jsonl(out, draws);
  return out.str();
}

BaseClassMatrix matrix_from_rows(const std::vector<std::vector<int>>& rows) {
  return BaseClassMatrix::from_rows(rows, false);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Equivalence set restricted latent class models";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SamplingError>(m, "SamplingError", PyExc_RuntimeError);

  m.def("stirling2", [](std::size_t n, std::size_t k) { return stirling2(n, k).str(); });
  m.def("bell", [](std::size_t n) { return bell(n).str(); });
  m.def("canonicalize", [](const std::vector<int>& col) { return canonicalize(col); });

  m.def(
      "repelled_beta_log_density",
      [](const std::vector<std::array<double, 2>>& alpha, double v, const std::vector<double>& rho) {
        return repelled_beta::log_density_unnormalized({alpha, v}, rho);
      },
      py::arg("alpha"), py::arg("v"), py::arg("rho"));
  m.def("repelled_beta_normalizer", &repelled_beta::normalizer_all_ones, py::arg("m"), py::arg("v"));
  m.def(
      "repelled_beta_sample",
      [](const std::vector<std::array<double, 2>>& alpha, double v, std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        repelled_beta::Params p{alpha, v};
        py::array_t<double> out({n, alpha.size()});
        auto* dst = out.mutable_data();
        for (std::size_t i = 0; i < n; ++i) {
          auto r = repelled_beta::sample(p, rng);
          std::copy(r.begin(), r.end(), dst + i * alpha.size());
        }
        return out;
      },
      py::arg("alpha"), py::arg("v"), py::arg("n"), py::arg("seed") = 1);

  m.def(
      "simulate",
      [](std::size_t classes, std::size_t n, std::uint64_t seed, std::size_t holdout_n) {
        auto sim = simulation::simulate(classes, n, seed, holdout_n);
        return py::make_tuple(to_array(sim.data), to_array(sim.holdout), io::truth_to_json(sim.truth).dump());
      },
      py::arg("classes"), py::arg("n"), py::arg("seed") = 1, py::arg("holdout_n") = 0);

  m.def(
      "fit",
      [](const Array& x, const std::string& config_json, std::size_t threads) {
        auto cfg = io::run_config_from_json(io::Json::parse(config_json));
        auto data = to_dataset(x);
        std::vector<mcmc::PosteriorDraws> chains;
        {
          py::gil_scoped_release release;
          chains = mcmc::run_chains(data, cfg.classes, cfg.prior, cfg.mcmc, threads);
        }
        std::vector<std::string> out;
        for (const auto& ch : chains) out.push_back(draws_to(ch.draws));
        return out;
      },
      py::arg("data"), py::arg("config_json"), py::arg("threads") = 0);

  m.def(
      "predictive_loglik",
      [](const std::string& draws, const Array& holdout, const std::string& mode) {
        return evaluation::predictive_loglik(draws_from(draws), to_dataset(holdout),
                                             evaluation::parse_predictive_mode(mode));
      },
      py::arg("draws_jsonl"), py::arg("holdout"), py::arg("mode") = "predictive_mean");

  m.def(
      "mode_restrictions",
      [](const std::string& draws) {
        return evaluation::mode_restrictions(evaluation::align_draws(draws_from(draws))).columns();
      },
      py::arg("draws_jsonl"));

  m.def(
      "restriction_metrics",
      [](const std::string& truth_json, const std::string& draws) {
        auto truth = io::truth_from_json(io::Json::parse(truth_json));
        auto aligned = evaluation::align_draws(draws_from(draws));
        auto mean = evaluation::posterior_mean(aligned);
        auto perm = evaluation::align_classes(truth.theta, mean.theta, truth.classes());
        auto r = evaluation::restriction_sensitivity_specificity(truth.B, evaluation::mode_restrictions(aligned), perm);
        return py::make_tuple(r.sensitivity, r.specificity);
      },
      py::arg("truth_json"), py::arg("draws_jsonl"));

  m.def(
      "check_identifiability",
      [](const std::vector<std::vector<int>>& rows, const std::vector<int>& levels, bool exhaustive) {
        auto B = matrix_from_rows(rows);
        identifiability::ItemLevels lv = levels.empty() ? identifiability::ItemLevels(B.items(), 2) : levels;
        auto r = exhaustive ? identifiability::exhaustive_search(B, lv) : identifiability::greedy_search(B, lv);
        py::dict out;
        out["status"] = identifiability::to_string(r.status);
        out["diagnostics"] = r.diagnostics;
        if (r.witness) {
          py::list parts;
          for (const auto& p : r.witness->partition.parts) parts.append(py::cast(p));
          out["partition"] = parts;
        } else {
          out["partition"] = py::none();
        }
        return out;
      },
      py::arg("B"), py::arg("levels") = std::vector<int>{}, py::arg("exhaustive") = false);

  m.def(
      "q_matrix_to_base",
      [](const std::vector<std::vector<int>>& Q) {
        auto B = identifiability::q_matrix_to_base(Q);
        std::vector<std::vector<int>> rows;
        for (std::size_t c = 0; c < B.classes(); ++c) rows.push_back(B.row(c));
        return rows;
      },
      py::arg("Q"));
}
