// runner.hpp
// Executes a validated ExperimentConfig and writes the result artifacts:
// summary.json plus per-command CSV traces. Also the result comparison
// used to contrast a scattering run with a global-QNN run.

#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "qssm/config.hpp"
#include "qssm/io.hpp"
#include "qssm/runner_detail.hpp"

namespace qssm {

// Returns 0 on success. Validation failures and runtime errors are
// reported as machine-readable JSON on `err` and a nonzero code.
inline int run_experiment(ExperimentConfig cfg, std::ostream& out = std::cout,
                          std::ostream& err = std::cerr) {
  const auto violations = validate_config(cfg);
  if (!violations.empty()) {
    nlohmann::json ej;
    ej["error"] = "invalid configuration";
    ej["violations"] = violations;
    err << ej.dump(2) << "\n";
    return 2;
  }
  try {
    std::filesystem::create_directories(cfg.out_dir);
    cfg.train.seed = cfg.seed;
    cfg.train.threads = cfg.threads;
    cfg.variance.seed = cfg.seed;
    cfg.variance.threads = cfg.threads;

    const auto t0 = std::chrono::steady_clock::now();
    nlohmann::json summary;
    summary["command"] = cfg.command;
    summary["seed"] = cfg.seed;

    if (cfg.command == "learn") {
      detail::run_learn(cfg, summary);
    } else if (cfg.command == "learn-global") {
      detail::run_learn_global(cfg, summary);
    } else if (cfg.command == "variance") {
      detail::run_variance(cfg, summary);
    } else if (cfg.command == "noisy") {
      detail::run_noisy(cfg, summary);
    } else if (cfg.command == "rank-seq") {
      detail::run_rank_seq(cfg, summary, out);
    } else if (cfg.command == "haar-check") {
      detail::run_haar_check(cfg, summary, out);
    }

    summary["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    detail::write_json_file(summary, cfg.out_dir + "/summary.json");
    out << "wrote " << cfg.out_dir << "/summary.json\n";
    return 0;
  } catch (const std::exception& e) {
    nlohmann::json ej;
    ej["error"] = e.what();
    err << ej.dump(2) << "\n";
    return 1;
  }
}

// Compares two learn-style summaries (scattering vs global) over the same
// target and budget. Emits fidelity and iterations-to-threshold deltas.
inline nlohmann::json compare_results(const std::string& path_a, const std::string& path_b,
                                      double cost_threshold = 0.01) {
  const nlohmann::json a = detail::read_json_file(path_a);
  const nlohmann::json b = detail::read_json_file(path_b);
  for (const auto* j : {&a, &b})
    if (!j->contains("final_fidelity") || !j->contains("target"))
      throw std::runtime_error("comparison inputs must be learn or learn-global summaries");
  if (a.at("target") != b.at("target"))
    throw std::runtime_error("comparison inputs target different states");
  if (a.value("budget", nlohmann::json()) != b.value("budget", nlohmann::json()))
    throw std::runtime_error("comparison inputs used different training budgets");

  nlohmann::json cmp;
  cmp["target"] = a.at("target");
  cmp["cost_threshold"] = cost_threshold;
  cmp["fidelity_a"] = a.at("final_fidelity");
  cmp["fidelity_b"] = b.at("final_fidelity");
  cmp["fidelity_delta"] =
      a.at("final_fidelity").get<double>() - b.at("final_fidelity").get<double>();
  const long ia = detail::iterations_to_threshold(a, cost_threshold);
  const long ib = detail::iterations_to_threshold(b, cost_threshold);
  cmp["iterations_to_threshold_a"] = ia;
  cmp["iterations_to_threshold_b"] = ib;
  cmp["iterations_to_threshold_delta"] = ia - ib;
  return cmp;
}

}  // namespace qssm
