// config.hpp
// Experiment configuration: one human-editable file (a TOML-style subset
// with [tables], scalar values and flat arrays) or an equivalent JSON
// document. CLI flags override file values; validation collects every
// violated field instead of stopping at the first.

#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qssm/baseline.hpp"
#include "qssm/noisy.hpp"
#include "qssm/targets.hpp"
#include "qssm/train.hpp"

namespace qssm {

struct ExperimentConfig {
  std::string command;  // learn | learn-global | variance | noisy | rank-seq | haar-check
  TargetSpec target;
  TrainConfig train;
  VarianceExperimentConfig variance;
  NoiseModel noise;
  ShotEstimator shots;
  int restarts = 20;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int threads = 1;
  // haar-check knobs
  std::vector<int> haar_dims = {2, 4};
  long haar_samples = 100000;
};

// ---------------------------------------------------------------------------
// TOML-subset parsing
//
// Supported: comments (#), [table] headers one level deep, key = value with
// value one of integer, float, boolean, "string", or a flat array of those.

namespace detail {

struct TomlValue {
  std::string raw;
  std::vector<std::string> array;  // filled when the value was [...]
  bool is_array = false;
};

using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

inline std::string toml_trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::string toml_unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

inline TomlTable parse_toml_subset(std::istream& in) {
  TomlTable out;
  std::string section;  // "" = top level
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // strip comments outside of strings
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    const std::string t = toml_trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw std::runtime_error("config parse error at line " + std::to_string(lineno) +
                                 ": unterminated table header");
      section = toml_trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config parse error at line " + std::to_string(lineno) +
                               ": expected key = value");
    const std::string key = toml_trim(t.substr(0, eq));
    std::string val = toml_trim(t.substr(eq + 1));
    if (key.empty() || val.empty())
      throw std::runtime_error("config parse error at line " + std::to_string(lineno) +
                               ": empty key or value");
    TomlValue v;
    if (val.front() == '[') {
      if (val.back() != ']')
        throw std::runtime_error("config parse error at line " + std::to_string(lineno) +
                                 ": unterminated array");
      v.is_array = true;
      std::string inner = val.substr(1, val.size() - 2);
      std::string item;
      std::istringstream items(inner);
      while (std::getline(items, item, ',')) {
        item = toml_trim(item);
        if (!item.empty()) v.array.push_back(toml_unquote(item));
      }
    } else {
      v.raw = toml_unquote(val);
    }
    out[section][key] = std::move(v);
  }
  return out;
}

inline nlohmann::json toml_to_json(const TomlTable& t) {
  auto scalar = [](const std::string& s) -> nlohmann::json {
    if (s == "true") return true;
    if (s == "false") return false;
    try {
      std::size_t pos = 0;
      if (s.find_first_of(".eE") == std::string::npos) {
        const long long v = std::stoll(s, &pos);
        if (pos == s.size()) return v;
      } else {
        const double v = std::stod(s, &pos);
        if (pos == s.size()) return v;
      }
    } catch (...) {
    }
    return s;
  };
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [section, entries] : t) {
    nlohmann::json* dst = section.empty() ? &j : &j[section];
    if (!section.empty() && dst->is_null()) *dst = nlohmann::json::object();
    for (const auto& [key, val] : entries) {
      if (val.is_array) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& item : val.array) arr.push_back(scalar(item));
        (*dst)[key] = std::move(arr);
      } else {
        (*dst)[key] = scalar(val.raw);
      }
    }
  }
  return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// JSON -> config

inline TargetSpec target_spec_from_json(const nlohmann::json& j) {
  TargetSpec t;
  if (j.contains("family")) t.family = j.at("family").get<std::string>();
  if (j.contains("n")) t.n = j.at("n").get<int>();
  if (j.contains("delta")) t.delta = j.at("delta").get<double>();
  if (j.contains("mu")) t.mu = j.at("mu").get<double>();
  if (j.contains("sigma")) t.sigma = j.at("sigma").get<double>();
  if (j.contains("path")) t.path = j.at("path").get<std::string>();
  if (j.contains("seed")) t.seed = j.at("seed").get<std::uint64_t>();
  return t;
}

inline nlohmann::json target_spec_to_json(const TargetSpec& t) {
  nlohmann::json j{{"family", t.family}, {"n", t.n}};
  if (t.family == "heisenberg_xxz") j["delta"] = t.delta;
  if (t.family == "gaussian") {
    j["mu"] = t.mu;
    j["sigma"] = t.sigma;
  }
  if (t.family == "file") j["path"] = t.path;
  if (t.family == "haar_random") j["seed"] = t.seed;
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  if (j.contains("command")) c.command = j.at("command").get<std::string>();
  if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("threads")) c.threads = j.at("threads").get<int>();
  if (j.contains("restarts")) c.restarts = j.at("restarts").get<int>();
  if (j.contains("target")) c.target = target_spec_from_json(j.at("target"));
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
  if (j.contains("variance")) {
    const auto& v = j.at("variance");
    if (v.contains("family")) c.variance.family = v.at("family").get<std::string>();
    if (v.contains("n_values")) c.variance.n_values = v.at("n_values").get<std::vector<int>>();
    if (v.contains("steps")) {
      c.variance.steps.clear();
      for (const auto& s : v.at("steps"))
        c.variance.steps.push_back(step_selector_from_name(s.get<std::string>()));
    }
    if (v.contains("samples")) c.variance.samples = v.at("samples").get<int>();
    if (v.contains("w_max")) c.variance.w_max = v.at("w_max").get<int>();
  }
  if (j.contains("noise")) {
    const auto& nj = j.at("noise");
    if (nj.contains("p_depol_1q")) c.noise.p_depol_1q = nj.at("p_depol_1q").get<double>();
    if (nj.contains("p_depol_2q")) c.noise.p_depol_2q = nj.at("p_depol_2q").get<double>();
    if (nj.contains("t1_us")) c.noise.t1_us = nj.at("t1_us").get<double>();
    if (nj.contains("t2_us")) c.noise.t2_us = nj.at("t2_us").get<double>();
    if (nj.contains("gate_time_ns")) c.noise.gate_time_ns = nj.at("gate_time_ns").get<double>();
  }
  if (j.contains("shots")) {
    const auto& sj = j.at("shots");
    if (sj.contains("shots")) c.shots.shots = sj.at("shots").get<long>();
    if (sj.contains("seed")) c.shots.seed = sj.at("seed").get<std::uint64_t>();
  }
  if (j.contains("haar")) {
    const auto& h = j.at("haar");
    if (h.contains("dims")) c.haar_dims = h.at("dims").get<std::vector<int>>();
    if (h.contains("samples")) c.haar_samples = h.at("samples").get<long>();
  }
  return c;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
    j = nlohmann::json::parse(in);
  } else {
    j = detail::toml_to_json(detail::parse_toml_subset(in));
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Validation: returns one message per violated field (empty = valid).

inline std::vector<std::string> validate_config(const ExperimentConfig& c) {
  std::vector<std::string> errors;
  auto bad = [&](const std::string& field, const std::string& why) {
    errors.push_back(field + ": " + why);
  };

  static const std::vector<std::string> commands = {"learn",  "learn-global", "variance",
                                                    "noisy",  "rank-seq",     "haar-check"};
  if (std::find(commands.begin(), commands.end(), c.command) == commands.end())
    bad("command", "must be one of learn, learn-global, variance, noisy, rank-seq, haar-check");

  const bool needs_target = c.command == "learn" || c.command == "learn-global" ||
                            c.command == "noisy" || c.command == "rank-seq";
  if (needs_target) {
    static const std::vector<std::string> families = {
        "ghz", "heisenberg_xxx", "heisenberg_xxz", "gaussian", "haar_random", "file"};
    if (std::find(families.begin(), families.end(), c.target.family) == families.end())
      bad("target.family", "unknown family \"" + c.target.family + "\"");
    if (c.target.family != "file" && c.target.n < 1)
      bad("target.n", "must be >= 1");
    if (c.target.family == "ghz" && c.target.n < 2) bad("target.n", "ghz needs n >= 2");
    if ((c.target.family == "heisenberg_xxx" || c.target.family == "heisenberg_xxz") &&
        (c.target.n < 2 || c.target.n > 14))
      bad("target.n", "heisenberg ground states support 2 <= n <= 14");
    if (c.target.family == "gaussian" && c.target.sigma <= 0)
      bad("target.sigma", "must be > 0");
    if (c.target.family == "file") {
      if (c.target.path.empty()) {
        bad("target.path", "required for file targets");
      } else if (!std::ifstream(c.target.path)) {
        bad("target.path", "file does not exist: " + c.target.path);
      }
    }
  }
  if (c.command == "learn" || c.command == "learn-global" || c.command == "noisy") {
    if (c.train.learning_rate <= 0) bad("train.learning_rate", "must be > 0");
    if (c.train.cost_tolerance < 0) bad("train.cost_tolerance", "must be >= 0");
    if (c.train.diff_tolerance < 0) bad("train.diff_tolerance", "must be >= 0");
    if (c.train.max_iters < 1) bad("train.max_iters", "must be >= 1");
    if (c.train.w_max < 1) bad("train.w_max", "must be >= 1");
    if (c.train.depth < 0) bad("train.depth", "must be >= 0");
  }
  if (c.command == "variance") {
    if (c.variance.samples < 2) bad("variance.samples", "must be >= 2");
    if (c.variance.n_values.empty()) bad("variance.n_values", "must be nonempty");
    if (c.variance.w_max < 1) bad("variance.w_max", "must be >= 1");
    static const std::vector<std::string> families = {"ghz", "heisenberg_xxx", "heisenberg_xxz",
                                                      "gaussian", "haar_random"};
    if (std::find(families.begin(), families.end(), c.variance.family) == families.end())
      bad("variance.family", "unknown family \"" + c.variance.family + "\"");
  }
  if (c.command == "noisy") {
    if (c.restarts < 1) bad("restarts", "must be >= 1");
    if (c.noise.p_depol_1q < 0 || c.noise.p_depol_1q > 1) bad("noise.p_depol_1q", "must lie in [0, 1]");
    if (c.noise.p_depol_2q < 0 || c.noise.p_depol_2q > 1) bad("noise.p_depol_2q", "must lie in [0, 1]");
    if (c.noise.t1_us <= 0) bad("noise.t1_us", "must be > 0");
    if (c.noise.t2_us <= 0) bad("noise.t2_us", "must be > 0");
    if (c.noise.t2_us > 2 * c.noise.t1_us) bad("noise.t2_us", "must satisfy T2 <= 2 T1");
    if (c.noise.gate_time_ns <= 0) bad("noise.gate_time_ns", "must be > 0");
    if (c.shots.shots < 0) bad("shots.shots", "must be >= 0 (0 = exact)");
    if (c.target.n > kMaxNoisyRegisters) bad("target.n", "noisy simulation capped at 6 registers");
  }
  if (c.command == "haar-check") {
    if (c.haar_samples < 100) bad("haar.samples", "must be >= 100");
    for (int d : c.haar_dims)
      if (d < 2) bad("haar.dims", "every dimension must be >= 2");
  }
  if (c.threads < 1) bad("threads", "must be >= 1");
  return errors;
}

}  // namespace qssm
