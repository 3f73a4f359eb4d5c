// runner_detail.hpp
// Per-command bodies of the experiment runner and the small file helpers
// they share.

#pragma once

#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>

#include "qssm/baseline.hpp"
#include "qssm/config.hpp"
#include "qssm/noisy.hpp"
#include "qssm/targets.hpp"
#include "qssm/train.hpp"

namespace qssm::detail {

inline void write_json_file(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return nlohmann::json::parse(in);
}

inline void write_trace_csv(const std::vector<double>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "iteration,cost\n" << std::setprecision(17);
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << "," << trace[i] << "\n";
}

// Cumulative iteration index at which a run's cost trace first reaches the
// threshold; layers that never reach it contribute their full length.
// Returns -1 when the threshold is never reached at all.
inline long iterations_to_threshold(const nlohmann::json& summary, double threshold) {
  long total = 0;
  bool reached_all = true;
  for (const auto& trace : summary.at("cost_traces")) {
    bool reached = false;
    long i = 0;
    for (const auto& c : trace) {
      if (c.get<double>() <= threshold) {
        reached = true;
        break;
      }
      ++i;
    }
    total += i;
    reached_all = reached_all && reached;
  }
  return reached_all ? total : -1;
}

inline nlohmann::json budget_json(const TrainConfig& t) {
  return nlohmann::json{{"depth", t.depth},
                        {"max_iters", t.max_iters},
                        {"learning_rate", t.learning_rate},
                        {"cost_tolerance", t.cost_tolerance},
                        {"diff_tolerance", t.diff_tolerance}};
}

inline void run_learn(const ExperimentConfig& cfg, nlohmann::json& summary) {
  const StateVector target = make_target(cfg.target);
  const ScatteringModel model = run_qssm(target, cfg.train);
  summary["target"] = target_spec_to_json(cfg.target);
  summary["budget"] = budget_json(cfg.train);
  summary["final_fidelity"] = model.final_fidelity;
  summary["widths"] = model.widths;
  nlohmann::json iters = nlohmann::json::array(), traces = nlohmann::json::array(),
                 final_costs = nlohmann::json::array();
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const auto& trace = model.layers[k].trace;
    iters.push_back(trace.size() - 1);
    traces.push_back(trace);
    final_costs.push_back(trace.back());
    write_trace_csv(trace, cfg.out_dir + "/trace_layer_" + std::to_string(k + 1) + ".csv");
  }
  summary["iterations_per_layer"] = std::move(iters);
  summary["final_layer_costs"] = std::move(final_costs);
  summary["cost_traces"] = std::move(traces);
  write_json_file(model_to_json(model), cfg.out_dir + "/model.json");
}

inline void run_learn_global(const ExperimentConfig& cfg, nlohmann::json& summary) {
  const StateVector target = make_target(cfg.target);
  const GlobalTrainResult res = train_global_qnn(target, cfg.train);
  summary["target"] = target_spec_to_json(cfg.target);
  summary["budget"] = budget_json(cfg.train);
  summary["final_fidelity"] = res.fidelity;
  summary["iterations"] = res.trace.size() - 1;
  summary["final_cost"] = res.trace.back();
  summary["cost_traces"] = nlohmann::json::array({res.trace});
  write_trace_csv(res.trace, cfg.out_dir + "/trace_global.csv");
}

inline StateVector variance_target(const std::string& family, int n, std::uint64_t seed) {
  TargetSpec spec;
  spec.family = family;
  spec.n = n;
  spec.seed = seed;
  if (family == "gaussian") {
    spec.mu = (dim_of(n) - 1) / 2.0;
    spec.sigma = dim_of(n) / 6.0;
  }
  return make_target(spec);
}

inline void run_variance(const ExperimentConfig& cfg, nlohmann::json& summary) {
  const auto points = run_variance_experiment(cfg.variance, [&](int n) {
    return variance_target(cfg.variance.family, n, cfg.seed);
  });
  std::ofstream csv(cfg.out_dir + "/variance.csv");
  if (!csv) throw std::runtime_error("cannot write variance.csv");
  csv << "family,n,step,samples,mean,variance,stderr\n" << std::setprecision(17);
  nlohmann::json pj = nlohmann::json::array();
  for (const auto& p : points) {
    csv << p.family << "," << p.n << "," << p.step << "," << p.samples << "," << p.mean << ","
        << p.variance << "," << p.stderr_mean() << "\n";
    pj.push_back(nlohmann::json{{"family", p.family},
                                {"n", p.n},
                                {"step", p.step},
                                {"samples", p.samples},
                                {"mean", p.mean},
                                {"variance", p.variance},
                                {"stderr", p.stderr_mean()}});
  }
  write_json_file(pj, cfg.out_dir + "/variance.json");
  summary["points"] = std::move(pj);
}

inline void run_noisy(const ExperimentConfig& cfg, nlohmann::json& summary) {
  const StateVector target = make_target(cfg.target);
  ShotEstimator est = cfg.shots;
  const NoisyTrainResult res =
      train_qssm_noisy(target, cfg.train, cfg.noise, est, cfg.restarts);
  summary["target"] = target_spec_to_json(cfg.target);
  summary["budget"] = budget_json(cfg.train);
  summary["restarts"] = cfg.restarts;
  summary["shots"] = cfg.shots.shots;
  summary["final_fidelity"] = res.noiseless_fidelity;
  summary["widths"] = res.model.widths;
  summary["layer_costs"] = res.layer_costs;
  // measurement distribution of the noisily-trained circuit replayed
  // without noise
  nlohmann::json dist = nlohmann::json::array();
  for (Eigen::Index i = 0; i < res.model.final_state.amp.size(); ++i)
    dist.push_back(std::norm(res.model.final_state.amp[i]));
  summary["ideal_outcome_distribution"] = std::move(dist);
  std::ofstream csv(cfg.out_dir + "/noisy_trace.csv");
  if (!csv) throw std::runtime_error("cannot write noisy_trace.csv");
  csv << "layer,restart,iteration,estimated_cost\n" << std::setprecision(17);
  for (const auto& p : res.trace)
    csv << p.layer << "," << p.restart << "," << p.iteration << "," << p.estimated_cost << "\n";
  write_json_file(model_to_json(res.model), cfg.out_dir + "/model.json");
}

inline void run_rank_seq(const ExperimentConfig& cfg, nlohmann::json& summary,
                         std::ostream& out) {
  const StateVector target = make_target(cfg.target);
  const RankSequence rs = rank_sequence(target, cfg.train.rank_tolerance);
  out << "{";
  for (std::size_t i = 0; i < rs.ranks.size(); ++i)
    out << (i ? ", " : "") << rs.ranks[i];
  out << "}\n";
  summary["target"] = target_spec_to_json(cfg.target);
  summary["ranks"] = rs.ranks;
  summary["tolerance"] = rs.tolerance;
  write_json_file(nlohmann::json{{"ranks", rs.ranks}, {"tolerance", rs.tolerance}},
                  cfg.out_dir + "/rank_seq.json");
}

inline void run_haar_check(const ExperimentConfig& cfg, nlohmann::json& summary,
                           std::ostream& out) {
  nlohmann::json all = nlohmann::json::array();
  bool ok = true;
  for (int d : cfg.haar_dims) {
    const auto checks =
        haar_moment_checks(d, cfg.haar_samples, split_seed(cfg.seed, d), cfg.threads);
    for (const auto& c : checks) {
      const bool pass = c.rel_error <= 0.02;
      ok = ok && pass;
      out << (pass ? "pass" : "FAIL") << "  d=" << d << "  " << c.name
          << "  rel_error=" << c.rel_error << "\n";
      all.push_back(nlohmann::json{{"d", d},
                                   {"name", c.name},
                                   {"estimate", c.estimate},
                                   {"closed_form", c.closed_form},
                                   {"rel_error", c.rel_error},
                                   {"pass", pass}});
    }
  }
  summary["checks"] = all;
  summary["all_pass"] = ok;
  write_json_file(all, cfg.out_dir + "/haar_check.json");
}

}  // namespace qssm::detail
