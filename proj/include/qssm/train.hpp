// train.hpp
// The sequential scattering training loop: width schedules, per-layer
// Hilbert-Schmidt cost, analytic parameter-shift gradients with a
// finite-difference oracle, the ADAM optimizer, and model assembly.

#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "qssm/circuit.hpp"
#include "qssm/rng.hpp"
#include "qssm/state.hpp"

namespace qssm {

enum class GradientMode { Analytic, FiniteDifference };
enum class WidthMode { Schedule, RankBased };

struct TrainConfig {
  int depth = 20;               // HEA depth per scattering layer
  int w_max = 2;                // maximum layer width
  double learning_rate = 0.1;
  int max_iters = 200;
  double cost_tolerance = 1e-3; // stop once the layer cost falls to this
  double diff_tolerance = 0.0;  // optional plateau stop on |C_t - C_{t-1}|, 0 = off
  std::uint64_t seed = 0;
  GradientMode gradient_mode = GradientMode::Analytic;
  WidthMode width_mode = WidthMode::Schedule;
  double rank_tolerance = 1e-10;
  double fd_step = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int threads = 1;              // parallelism over gradient components

  void validate() const {
    if (learning_rate <= 0) throw std::invalid_argument("learning_rate must be > 0");
    if (cost_tolerance < 0) throw std::invalid_argument("cost_tolerance must be >= 0");
    if (diff_tolerance < 0) throw std::invalid_argument("diff_tolerance must be >= 0");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (w_max < 1) throw std::invalid_argument("w_max must be >= 1");
    if (depth < 0) throw std::invalid_argument("depth must be >= 0");
  }
};

// A layer cost this close to zero is treated as exactly converged.
inline constexpr double kZeroCostFloor = 1e-12;

// ---------------------------------------------------------------------------
// Layer widths

// w_k = min{k+1, w_max} while k <= floor(n/2), then min{n-k+1, w_max}.
// The layer at step k acts on registers q_k .. q_{k+w_k-1}.
inline int width_schedule(int n, int k, int w_max) {
  if (k < 1 || k > n) throw std::invalid_argument("width_schedule: step k out of range");
  if (w_max < 1) throw std::invalid_argument("width_schedule: w_max must be >= 1");
  const int cap = (k <= n / 2) ? k + 1 : n - k + 1;
  return std::min(cap, w_max);
}

// Widths derived from the target's rank sequence: the layer needs its own
// register plus ceil(log2 r_k) ancilla registers to carry a rank-r_k
// reduction, capped by the uncapped schedule width.
inline std::vector<int> rank_based_widths(const StateVector& target, double tol = 1e-10) {
  RankSequence rs = rank_sequence(target, tol);
  std::vector<int> widths(target.n);
  for (int k = 1; k <= target.n; ++k) {
    const int r = rs.ranks[k - 1];
    int log2r = 0;
    while ((1 << log2r) < r) ++log2r;
    widths[k - 1] = std::min(width_schedule(target.n, k, target.n + 1), log2r + 1);
  }
  return widths;
}

// ---------------------------------------------------------------------------
// Cost and gradients

// C_k(theta) = ||sigma_k(theta) - rho_k||_2^2 where sigma_k is the k-prefix
// reduction of layer(psi_prev) and rho_k the k-prefix reduction of target.
inline double layer_cost(int k, const StateVector& psi_prev, const ParamCircuit& layer,
                         std::span<const double> params, const StateVector& target) {
  check_prefix(target.n, k, "layer_cost");
  StateVector psi = apply_circuit(psi_prev, layer, params);
  return hs_cost(psi, target, k);
}

// Analytic gradient via the shift rule. With Delta = sigma_k(theta*) - rho_k
// held fixed, the derivative of C_k in slot mu is
//   tr[Delta sigma_k(theta_mu + pi/2)] - tr[Delta sigma_k(theta_mu - pi/2)],
// i.e. the expectation of Delta (tensored with identity on all traced-out
// registers) in the two shifted states. Each component costs two circuit
// applications plus four reduced overlaps.
inline std::vector<double> analytic_gradient(int k, const StateVector& psi_prev,
                                             const ParamCircuit& layer,
                                             std::span<const double> params,
                                             const StateVector& target, int threads = 1) {
  check_prefix(target.n, k, "analytic_gradient");
  for (const auto& g : layer.gates)
    if (!g.param_slots.empty() && param_slot_count(g.kind) == 0)
      throw std::invalid_argument("analytic_gradient: gate kind does not admit the shift rule");
  const StateVector psi_star = apply_circuit(psi_prev, layer, params);
  std::vector<double> grad(layer.n_params, 0.0);
  parallel_for(static_cast<std::size_t>(layer.n_params), threads, [&](std::size_t mu) {
    auto [plus, minus] = parameter_shift_pair(layer, params, static_cast<int>(mu));
    const StateVector psi_p = apply_circuit(psi_prev, layer, plus);
    const StateVector psi_m = apply_circuit(psi_prev, layer, minus);
    const double term_p = overlap_reduced(psi_star, psi_p, k) - overlap_reduced(target, psi_p, k);
    const double term_m = overlap_reduced(psi_star, psi_m, k) - overlap_reduced(target, psi_m, k);
    grad[mu] = term_p - term_m;
  });
  return grad;
}

// Central finite differences, the oracle the analytic form is checked against.
inline std::vector<double> finite_difference_gradient(int k, const StateVector& psi_prev,
                                                      const ParamCircuit& layer,
                                                      std::span<const double> params,
                                                      const StateVector& target, double h,
                                                      int threads = 1) {
  if (h <= 0) throw std::invalid_argument("finite_difference_gradient: h must be > 0");
  std::vector<double> grad(layer.n_params, 0.0);
  parallel_for(static_cast<std::size_t>(layer.n_params), threads, [&](std::size_t mu) {
    std::vector<double> p(params.begin(), params.end());
    p[mu] += h;
    const double cp = layer_cost(k, psi_prev, layer, p, target);
    p[mu] -= 2 * h;
    const double cm = layer_cost(k, psi_prev, layer, p, target);
    grad[mu] = (cp - cm) / (2 * h);
  });
  return grad;
}

// ---------------------------------------------------------------------------
// ADAM

struct AdamState {
  Eigen::ArrayXd m, v;
  long t = 0;
};

inline AdamState make_adam_state(int n_params) {
  return AdamState{Eigen::ArrayXd::Zero(n_params), Eigen::ArrayXd::Zero(n_params), 0};
}

inline void adam_step(std::vector<double>& params, std::span<const double> grad,
                      AdamState& st, double lr, double beta1 = 0.9, double beta2 = 0.999,
                      double eps = 1e-8) {
  if (params.size() != grad.size() ||
      st.m.size() != static_cast<Eigen::Index>(params.size()))
    throw std::invalid_argument("adam_step: shape mismatch");
  ++st.t;
  Eigen::Map<const Eigen::ArrayXd> g(grad.data(), grad.size());
  st.m = beta1 * st.m + (1 - beta1) * g;
  st.v = beta2 * st.v + (1 - beta2) * g.square();
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(st.t));
  Eigen::Map<Eigen::ArrayXd> p(params.data(), params.size());
  p -= lr * (st.m / c1) / ((st.v / c2).sqrt() + eps);
}

// ---------------------------------------------------------------------------
// Per-layer training

struct LayerResult {
  std::vector<double> params;
  std::vector<double> trace;  // cost per recorded iteration, starting at init
  StateVector psi;            // layer applied with the final parameters
};

inline LayerResult train_layer(int k, const StateVector& psi_prev, const StateVector& target,
                               ParamCircuit layer, std::vector<double> params,
                               const TrainConfig& cfg) {
  cfg.validate();
  const double floor = std::max(cfg.cost_tolerance, kZeroCostFloor);
  LayerResult res;
  double cost = layer_cost(k, psi_prev, layer, params, target);
  res.trace.push_back(cost);
  if (cost > floor) {
    AdamState st = make_adam_state(layer.n_params);
    for (int it = 1; it <= cfg.max_iters; ++it) {
      std::vector<double> grad =
          cfg.gradient_mode == GradientMode::Analytic
              ? analytic_gradient(k, psi_prev, layer, params, target, cfg.threads)
              : finite_difference_gradient(k, psi_prev, layer, params, target, cfg.fd_step,
                                           cfg.threads);
      adam_step(params, grad, st, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_epsilon);
      const double next = layer_cost(k, psi_prev, layer, params, target);
      res.trace.push_back(next);
      const double diff = std::abs(next - cost);
      cost = next;
      if (cost <= floor) break;
      if (cfg.diff_tolerance > 0 && diff <= cfg.diff_tolerance) break;
    }
  }
  res.params = std::move(params);
  res.psi = apply_circuit(psi_prev, layer, res.params);
  return res;
}

// Convenience overload drawing the initial parameters uniformly on [0, 2pi).
inline LayerResult train_layer(int k, const StateVector& psi_prev, const StateVector& target,
                               const ParamCircuit& layer, const TrainConfig& cfg,
                               std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2 * std::numbers::pi);
  std::vector<double> params(layer.n_params);
  for (auto& p : params) p = u(rng);
  return train_layer(k, psi_prev, target, layer, std::move(params), cfg);
}

// ---------------------------------------------------------------------------
// Whole-model training

struct TrainedLayer {
  ParamCircuit circuit;
  std::vector<double> params;
  std::vector<double> trace;
};

struct ScatteringModel {
  int n = 0;
  std::vector<int> widths;
  std::vector<TrainedLayer> layers;
  StateVector final_state;
  double final_fidelity = 0.0;
};

inline std::vector<int> resolve_widths(const StateVector& target, const TrainConfig& cfg) {
  if (cfg.width_mode == WidthMode::RankBased)
    return rank_based_widths(target, cfg.rank_tolerance);
  std::vector<int> widths(target.n);
  for (int k = 1; k <= target.n; ++k) widths[k - 1] = width_schedule(target.n, k, cfg.w_max);
  return widths;
}

// Runs the full sequential loop: for k = 1..n, train a fresh scattering
// layer on registers q_k .. q_{k+w_k-1} against the k-prefix of the target,
// then carry the state forward. Deterministic given cfg.seed.
inline ScatteringModel run_qssm(const StateVector& target, const TrainConfig& cfg) {
  cfg.validate();
  require_normalized(target, "run_qssm");
  ScatteringModel model;
  model.n = target.n;
  model.widths = resolve_widths(target, cfg);
  std::mt19937_64 rng = make_rng(cfg.seed);
  StateVector psi = zero_state(target.n);
  for (int k = 1; k <= target.n; ++k) {
    ParamCircuit layer = build_hea(model.widths[k - 1], cfg.depth);
    layer.offset = k;
    LayerResult res = train_layer(k, psi, target, layer, cfg, rng);
    psi = std::move(res.psi);
    model.layers.push_back(TrainedLayer{std::move(layer), std::move(res.params),
                                        std::move(res.trace)});
  }
  model.final_state = std::move(psi);
  model.final_fidelity = fidelity_pure(model.final_state, target);
  return model;
}

// U_n ... U_1 |0...0> from the stored layers.
inline StateVector reconstruct(const ScatteringModel& model) {
  StateVector psi = zero_state(model.n);
  for (const auto& l : model.layers) apply_circuit_inplace(psi, l.circuit, l.params);
  return psi;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
  return nlohmann::json{
      {"depth", c.depth},
      {"w_max", c.w_max},
      {"learning_rate", c.learning_rate},
      {"max_iters", c.max_iters},
      {"cost_tolerance", c.cost_tolerance},
      {"diff_tolerance", c.diff_tolerance},
      {"seed", c.seed},
      {"gradient_mode", c.gradient_mode == GradientMode::Analytic ? "analytic" : "finite_difference"},
      {"width_mode", c.width_mode == WidthMode::Schedule ? "schedule" : "rank_based"},
      {"rank_tolerance", c.rank_tolerance},
      {"fd_step", c.fd_step},
      {"threads", c.threads}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  if (j.contains("depth")) c.depth = j.at("depth").get<int>();
  if (j.contains("w_max")) c.w_max = j.at("w_max").get<int>();
  if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("max_iters")) c.max_iters = j.at("max_iters").get<int>();
  if (j.contains("cost_tolerance")) c.cost_tolerance = j.at("cost_tolerance").get<double>();
  if (j.contains("diff_tolerance")) c.diff_tolerance = j.at("diff_tolerance").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("gradient_mode")) {
    const std::string m = j.at("gradient_mode").get<std::string>();
    if (m == "analytic") c.gradient_mode = GradientMode::Analytic;
    else if (m == "finite_difference") c.gradient_mode = GradientMode::FiniteDifference;
    else throw std::invalid_argument("gradient_mode must be analytic or finite_difference");
  }
  if (j.contains("width_mode")) {
    const std::string m = j.at("width_mode").get<std::string>();
    if (m == "schedule") c.width_mode = WidthMode::Schedule;
    else if (m == "rank_based") c.width_mode = WidthMode::RankBased;
    else throw std::invalid_argument("width_mode must be schedule or rank_based");
  }
  if (j.contains("rank_tolerance")) c.rank_tolerance = j.at("rank_tolerance").get<double>();
  if (j.contains("fd_step")) c.fd_step = j.at("fd_step").get<double>();
  if (j.contains("threads")) c.threads = j.at("threads").get<int>();
  return c;
}

inline nlohmann::json model_to_json(const ScatteringModel& m) {
  nlohmann::json j;
  j["n"] = m.n;
  j["widths"] = m.widths;
  j["final_fidelity"] = m.final_fidelity;
  j["layers"] = nlohmann::json::array();
  for (const auto& l : m.layers) {
    nlohmann::json lj;
    lj["circuit"] = circuit_to_json(l.circuit);
    lj["params"] = l.params;
    lj["trace"] = l.trace;
    j["layers"].push_back(std::move(lj));
  }
  return j;
}

inline ScatteringModel model_from_json(const nlohmann::json& j) {
  ScatteringModel m;
  m.n = j.at("n").get<int>();
  m.widths = j.at("widths").get<std::vector<int>>();
  m.final_fidelity = j.value("final_fidelity", 0.0);
  for (const auto& lj : j.at("layers")) {
    TrainedLayer l;
    l.circuit = circuit_from_json(lj.at("circuit"));
    l.params = lj.at("params").get<std::vector<double>>();
    if (lj.contains("trace")) l.trace = lj.at("trace").get<std::vector<double>>();
    m.layers.push_back(std::move(l));
  }
  m.final_state = reconstruct(m);
  return m;
}

}  // namespace qssm
