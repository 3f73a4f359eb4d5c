// qssm_cli.cpp
// Configuration-driven experiment runner. Every subcommand reads an
// optional config file (TOML subset or JSON); command-line flags override
// file values. All randomness derives from the single --seed value.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "qssm/runner.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "config file (.toml subset or .json)");
  cmd->add_option("--seed", f.seed, "root 64-bit seed (overrides config)");
  cmd->add_option("--out", f.out_dir, "output directory (overrides config)");
  cmd->add_option("--threads", f.threads, "worker threads (overrides config)");
}

qssm::ExperimentConfig assemble(const CommonFlags& f, const std::string& command) {
  qssm::ExperimentConfig cfg;
  if (!f.config_path.empty()) cfg = qssm::parse_config_file(f.config_path);
  cfg.command = command;
  if (f.seed) cfg.seed = *f.seed;
  if (f.out_dir) cfg.out_dir = *f.out_dir;
  if (f.threads) cfg.threads = *f.threads;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sequential scattering state-learning experiments"};
  app.require_subcommand(1);

  CommonFlags learn_f, global_f, variance_f, noisy_f, rank_f, haar_f;
  auto* learn = app.add_subcommand("learn", "train the scattering model on a target state");
  add_common(learn, learn_f);
  auto* global = app.add_subcommand("learn-global", "train the global-QNN baseline");
  add_common(global, global_f);
  auto* variance = app.add_subcommand("variance", "gradient-variance experiment");
  add_common(variance, variance_f);
  auto* noisy = app.add_subcommand("noisy", "noisy multi-restart training");
  add_common(noisy, noisy_f);

  auto* rank = app.add_subcommand("rank-seq", "print a target's rank sequence");
  add_common(rank, rank_f);
  std::string rank_family;
  int rank_n = 0;
  double rank_delta = 1.0;
  std::string rank_path;
  rank->add_option("--family", rank_family, "target family (overrides config)");
  rank->add_option("--n", rank_n, "register count (overrides config)");
  rank->add_option("--delta", rank_delta, "XXZ anisotropy");
  rank->add_option("--path", rank_path, "amplitude file for family=file");

  auto* haar = app.add_subcommand("haar-check", "Monte-Carlo Haar moment checks");
  add_common(haar, haar_f);
  long haar_samples = 0;
  haar->add_option("--samples", haar_samples, "samples per dimension (overrides config)");

  auto* compare = app.add_subcommand("compare", "contrast a learn and a learn-global summary");
  std::string cmp_a, cmp_b, cmp_out = ".";
  double cmp_threshold = 0.01;
  compare->add_option("summary_a", cmp_a, "first summary.json")->required();
  compare->add_option("summary_b", cmp_b, "second summary.json")->required();
  compare->add_option("--out", cmp_out, "output directory");
  compare->add_option("--threshold", cmp_threshold, "cost threshold for iteration counting");

  CLI11_PARSE(app, argc, argv);

  try {
    if (compare->parsed()) {
      const auto cmp = qssm::compare_results(cmp_a, cmp_b, cmp_threshold);
      std::filesystem::create_directories(cmp_out);
      qssm::detail::write_json_file(cmp, cmp_out + "/comparison.json");
      std::cout << cmp.dump(2) << "\n";
      return 0;
    }
    if (learn->parsed()) return qssm::run_experiment(assemble(learn_f, "learn"));
    if (global->parsed()) return qssm::run_experiment(assemble(global_f, "learn-global"));
    if (variance->parsed()) return qssm::run_experiment(assemble(variance_f, "variance"));
    if (noisy->parsed()) return qssm::run_experiment(assemble(noisy_f, "noisy"));
    if (rank->parsed()) {
      auto cfg = assemble(rank_f, "rank-seq");
      if (!rank_family.empty()) cfg.target.family = rank_family;
      if (rank_n > 0) cfg.target.n = rank_n;
      if (rank->count("--delta")) cfg.target.delta = rank_delta;
      if (!rank_path.empty()) cfg.target.path = rank_path;
      return qssm::run_experiment(cfg);
    }
    if (haar->parsed()) {
      auto cfg = assemble(haar_f, "haar-check");
      if (haar_samples > 0) cfg.haar_samples = haar_samples;
      return qssm::run_experiment(cfg);
    }
  } catch (const std::exception& e) {
    nlohmann::json ej;
    ej["error"] = e.what();
    std::cerr << ej.dump(2) << "\n";
    return 1;
  }
  return 0;
}
