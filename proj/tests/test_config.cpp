#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qssm/config.hpp"
#include "qssm/runner.hpp"

using namespace qssm;
using Catch::Approx;

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "qssm_cfg" / name;
  fs::create_directories(dir);
  return dir;
}

std::string write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
  return p.string();
}

}  // namespace

TEST_CASE("TOML-subset config parsing") {
  const auto dir = scratch_dir("toml");
  const auto path = write_file(dir / "learn.toml", R"(
# scattering run
command = "learn"
seed = 42
out = "results"
threads = 2

[target]
family = "ghz"
n = 8

[train]
depth = 20
w_max = 2
learning_rate = 0.1
max_iters = 200
cost_tolerance = 0.001
width_mode = "schedule"
)");
  const auto cfg = parse_config_file(path);
  REQUIRE(cfg.command == "learn");
  REQUIRE(cfg.seed == 42);
  REQUIRE(cfg.out_dir == "results");
  REQUIRE(cfg.threads == 2);
  REQUIRE(cfg.target.family == "ghz");
  REQUIRE(cfg.target.n == 8);
  REQUIRE(cfg.train.depth == 20);
  REQUIRE(cfg.train.w_max == 2);
  REQUIRE(cfg.train.learning_rate == Approx(0.1));
  REQUIRE(cfg.train.cost_tolerance == Approx(0.001));
  REQUIRE(validate_config(cfg).empty());
}

TEST_CASE("JSON config parsing with arrays") {
  const auto dir = scratch_dir("json");
  const auto path = write_file(dir / "var.json", R"({
    "command": "variance",
    "seed": 7,
    "variance": {
      "family": "ghz",
      "n_values": [4, 6],
      "steps": ["first", "last", "global"],
      "samples": 100,
      "w_max": 2
    }
  })");
  const auto cfg = parse_config_file(path);
  REQUIRE(cfg.command == "variance");
  REQUIRE(cfg.variance.n_values == std::vector<int>{4, 6});
  REQUIRE(cfg.variance.steps.size() == 3);
  REQUIRE(cfg.variance.samples == 100);
  REQUIRE(validate_config(cfg).empty());
}

TEST_CASE("TOML arrays parse like their JSON equivalent") {
  const auto dir = scratch_dir("toml_arr");
  const auto path = write_file(dir / "var.toml", R"(
command = "variance"
[variance]
family = "ghz"
n_values = [4, 6, 8]
steps = ["first", "middle"]
samples = 64
)");
  const auto cfg = parse_config_file(path);
  REQUIRE(cfg.variance.n_values == std::vector<int>{4, 6, 8});
  REQUIRE(cfg.variance.steps ==
          std::vector<StepSelector>{StepSelector::First, StepSelector::Middle});
}

TEST_CASE("validation lists every violated field") {
  ExperimentConfig cfg;
  cfg.command = "learn";
  cfg.target.family = "gaussian";
  cfg.target.n = 4;
  cfg.target.sigma = -2.0;
  cfg.train.learning_rate = 0.0;
  cfg.train.max_iters = 0;
  const auto errors = validate_config(cfg);
  auto mentions = [&](const std::string& field) {
    for (const auto& e : errors)
      if (e.find(field) != std::string::npos) return true;
    return false;
  };
  REQUIRE(errors.size() >= 3);
  REQUIRE(mentions("target.sigma"));
  REQUIRE(mentions("train.learning_rate"));
  REQUIRE(mentions("train.max_iters"));

  cfg.command = "mystery";
  REQUIRE(mentions("target.sigma"));
  const auto errors2 = validate_config(cfg);
  REQUIRE(errors2.front().find("command") != std::string::npos);
}

TEST_CASE("runner executes a small learn config end to end") {
  const auto dir = scratch_dir("run_learn");
  ExperimentConfig cfg;
  cfg.command = "learn";
  cfg.target.family = "ghz";
  cfg.target.n = 3;
  cfg.train.depth = 3;
  cfg.train.w_max = 2;
  cfg.train.max_iters = 150;
  cfg.train.cost_tolerance = 1e-9;
  cfg.seed = 4;
  cfg.threads = 2;
  cfg.out_dir = (dir / "out").string();
  std::ostringstream out, err;
  REQUIRE(run_experiment(cfg, out, err) == 0);
  REQUIRE(fs::exists(dir / "out" / "summary.json"));
  REQUIRE(fs::exists(dir / "out" / "model.json"));
  REQUIRE(fs::exists(dir / "out" / "trace_layer_1.csv"));
  const auto summary = detail::read_json_file((dir / "out" / "summary.json").string());
  REQUIRE(summary.at("final_fidelity").get<double>() > 0.99);

  // every emitted CSV has a header and a constant column count
  std::ifstream csv(dir / "out" / "trace_layer_1.csv");
  std::string line;
  REQUIRE(std::getline(csv, line));
  REQUIRE(line == "iteration,cost");
  while (std::getline(csv, line))
    REQUIRE(std::count(line.begin(), line.end(), ',') == 1);
}

TEST_CASE("runner reports invalid configs with nonzero exit") {
  ExperimentConfig cfg;
  cfg.command = "learn";
  cfg.target.family = "gaussian";
  cfg.target.n = 3;
  cfg.target.sigma = 0.0;
  std::ostringstream out, err;
  REQUIRE(run_experiment(cfg, out, err) == 2);
  const auto ej = nlohmann::json::parse(err.str());
  REQUIRE(ej.contains("violations"));
  bool found = false;
  for (const auto& v : ej["violations"])
    if (v.get<std::string>().find("target.sigma") != std::string::npos) found = true;
  REQUIRE(found);
}

TEST_CASE("variance command emits a well-formed CSV") {
  const auto dir = scratch_dir("run_variance");
  ExperimentConfig cfg;
  cfg.command = "variance";
  cfg.variance.family = "ghz";
  cfg.variance.n_values = {2, 3};
  cfg.variance.steps = {StepSelector::First, StepSelector::Last, StepSelector::Global};
  cfg.variance.samples = 20;
  cfg.variance.w_max = 2;
  cfg.seed = 8;
  cfg.threads = 2;
  cfg.out_dir = (dir / "out").string();
  std::ostringstream out, err;
  REQUIRE(run_experiment(cfg, out, err) == 0);
  std::ifstream csv(dir / "out" / "variance.csv");
  std::string line;
  REQUIRE(std::getline(csv, line));
  REQUIRE(line == "family,n,step,samples,mean,variance,stderr");
  int rows = 0;
  while (std::getline(csv, line)) {
    REQUIRE(std::count(line.begin(), line.end(), ',') == 6);
    ++rows;
  }
  REQUIRE(rows == 6);
}

TEST_CASE("noisy command writes traces and the outcome distribution") {
  const auto dir = scratch_dir("run_noisy");
  ExperimentConfig cfg;
  cfg.command = "noisy";
  cfg.target.family = "ghz";
  cfg.target.n = 2;
  cfg.train.depth = 1;
  cfg.train.w_max = 2;
  cfg.restarts = 2;
  cfg.noise.p_depol_1q = 1e-3;
  cfg.noise.p_depol_2q = 1e-3;
  cfg.noise.t1_us = 1000.0;
  cfg.noise.t2_us = 100.0;
  cfg.shots.shots = 256;
  cfg.seed = 14;
  cfg.threads = 2;
  cfg.out_dir = (dir / "out").string();
  std::ostringstream out, err;
  REQUIRE(run_experiment(cfg, out, err) == 0);
  REQUIRE(fs::exists(dir / "out" / "noisy_trace.csv"));
  const auto summary = detail::read_json_file((dir / "out" / "summary.json").string());
  REQUIRE(summary.at("ideal_outcome_distribution").size() == 4);
  std::ifstream csv(dir / "out" / "noisy_trace.csv");
  std::string line;
  REQUIRE(std::getline(csv, line));
  REQUIRE(line == "layer,restart,iteration,estimated_cost");
}

TEST_CASE("rank-seq command prints the sequence") {
  const auto dir = scratch_dir("rank");
  ExperimentConfig cfg;
  cfg.command = "rank-seq";
  cfg.target.family = "ghz";
  cfg.target.n = 6;
  cfg.out_dir = (dir / "out").string();
  std::ostringstream out, err;
  REQUIRE(run_experiment(cfg, out, err) == 0);
  REQUIRE(out.str().find("{2, 2, 2, 2, 2, 1}") != std::string::npos);
}

TEST_CASE("compare on identical results gives zero deltas") {
  const auto dir = scratch_dir("compare");
  ExperimentConfig cfg;
  cfg.command = "learn";
  cfg.target.family = "ghz";
  cfg.target.n = 3;
  cfg.train.depth = 2;
  cfg.train.w_max = 2;
  cfg.train.max_iters = 100;
  cfg.train.cost_tolerance = 1e-9;
  cfg.seed = 4;
  cfg.out_dir = (dir / "a").string();
  std::ostringstream sink;
  REQUIRE(run_experiment(cfg, sink, sink) == 0);
  cfg.out_dir = (dir / "b").string();
  REQUIRE(run_experiment(cfg, sink, sink) == 0);

  const auto cmp = compare_results((dir / "a" / "summary.json").string(),
                                   (dir / "b" / "summary.json").string());
  REQUIRE(cmp.at("fidelity_delta").get<double>() == 0.0);
  REQUIRE(cmp.at("iterations_to_threshold_delta").get<long>() == 0);

  // mismatched targets refuse to compare
  ExperimentConfig other = cfg;
  other.target.n = 4;
  other.out_dir = (dir / "c").string();
  REQUIRE(run_experiment(other, sink, sink) == 0);
  REQUIRE_THROWS_AS(compare_results((dir / "a" / "summary.json").string(),
                                    (dir / "c" / "summary.json").string()),
                    std::runtime_error);
  REQUIRE_THROWS_AS(compare_results((dir / "a" / "summary.json").string(),
                                    (dir / "missing" / "summary.json").string()),
                    std::runtime_error);
}

TEST_CASE("config parse errors carry line numbers") {
  const auto dir = scratch_dir("bad");
  const auto path = write_file(dir / "bad.toml", "command = \"learn\"\nthis is not toml\n");
  REQUIRE_THROWS_WITH(parse_config_file(path),
                      Catch::Matchers::ContainsSubstring("line 2"));
}
