// noisy.hpp
// Density-matrix simulation with depolarizing and thermal-relaxation
// channels, shot-based swap-test cost estimation, a Nelder-Mead simplex
// optimizer, and the multi-restart noisy training loop.

#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "qssm/circuit.hpp"
#include "qssm/rng.hpp"
#include "qssm/state.hpp"
#include "qssm/train.hpp"

namespace qssm {

inline constexpr int kMaxNoisyRegisters = 6;

// ---------------------------------------------------------------------------
// Noise model

struct NoiseModel {
  double p_depol_1q = 0.0;
  double p_depol_2q = 0.0;
  double t1_us = std::numeric_limits<double>::infinity();
  double t2_us = std::numeric_limits<double>::infinity();
  double gate_time_ns = 1.0;

  bool depolarizing_enabled() const { return p_depol_1q > 0.0 || p_depol_2q > 0.0; }
  bool relaxation_enabled() const { return std::isfinite(t1_us) || std::isfinite(t2_us); }

  void validate() const {
    if (p_depol_1q < 0 || p_depol_1q > 1 || p_depol_2q < 0 || p_depol_2q > 1)
      throw std::invalid_argument("depolarizing rates must lie in [0, 1]");
    if (t1_us <= 0 || t2_us <= 0) throw std::invalid_argument("T1 and T2 must be positive");
    if (t2_us > 2.0 * t1_us) throw std::invalid_argument("thermal relaxation requires T2 <= 2 T1");
    if (gate_time_ns <= 0) throw std::invalid_argument("gate time must be positive");
  }

  // Amplitude-damping strength over one gate duration.
  double gamma() const {
    if (!std::isfinite(t1_us)) return 0.0;
    return 1.0 - std::exp(-gate_time_ns * 1e-3 / t1_us);
  }
  // Extra pure-dephasing strength chosen so the total off-diagonal decay
  // matches exp(-t/T2) once amplitude damping contributed exp(-t/2T1).
  double dephasing_lambda() const {
    if (!std::isfinite(t2_us) && !std::isfinite(t1_us)) return 0.0;
    const double t = gate_time_ns * 1e-3;
    const double inv_t1 = std::isfinite(t1_us) ? 1.0 / t1_us : 0.0;
    const double inv_t2 = std::isfinite(t2_us) ? 1.0 / t2_us : 0.0;
    const double lam = 1.0 - std::exp(t * inv_t1 - 2.0 * t * inv_t2);
    return std::max(0.0, lam);
  }
};

// ---------------------------------------------------------------------------
// Density-matrix kernels

// rho <- (K (K rho)^dagger)^dagger = K rho K^dagger for a single-register
// 2x2 operator (not necessarily unitary).
inline void conjugate_1q_dm(Mat& rho, int n, int reg, const Eigen::Matrix2cd& kmat) {
  const std::int64_t d = rho.rows();
  StateVector col;
  col.n = n;
  col.amp.resize(d);
  Mat tmp(d, d);
  for (std::int64_t c = 0; c < d; ++c) {
    col.amp = rho.col(c);
    apply_1q(col.amp, n, reg, kmat);
    tmp.col(c) = col.amp;
  }
  Mat adj = tmp.adjoint();
  for (std::int64_t c = 0; c < d; ++c) {
    col.amp = adj.col(c);
    apply_1q(col.amp, n, reg, kmat);
    tmp.col(c) = col.amp;
  }
  rho = tmp.adjoint();
}

// Unitary conjugation rho <- U rho U^dagger on an ordered register list.
inline void conjugate_dense_dm(Mat& rho, int n, std::span<const int> regs, const Mat& u) {
  const std::int64_t d = rho.rows();
  StateVector col;
  col.n = n;
  col.amp.resize(d);
  Mat tmp(d, d);
  for (std::int64_t c = 0; c < d; ++c) {
    col.amp = rho.col(c);
    apply_dense(col.amp, n, regs, u);
    tmp.col(c) = col.amp;
  }
  Mat adj = tmp.adjoint();
  for (std::int64_t c = 0; c < d; ++c) {
    col.amp = adj.col(c);
    apply_dense(col.amp, n, regs, u);
    tmp.col(c) = col.amp;
  }
  rho = tmp.adjoint();
}

// Partial trace over an arbitrary register subset, and its inverse embed
// with the maximally mixed state on the traced registers.
inline Mat partial_trace_regs(const Mat& rho, int n, std::span<const int> regs) {
  std::int64_t traced_mask = 0;
  for (int r : regs) traced_mask |= std::int64_t{1} << (n - r);
  const int m = static_cast<int>(regs.size());
  const std::int64_t dk = std::int64_t{1} << (n - m);
  const std::int64_t d = rho.rows();

  // map from full index with traced bits cleared to compacted kept index
  std::vector<std::int64_t> kept_index(d, -1);
  std::vector<std::int64_t> kept_list;
  kept_list.reserve(dk);
  for (std::int64_t x = 0; x < d; ++x)
    if (!(x & traced_mask)) {
      kept_index[x] = static_cast<std::int64_t>(kept_list.size());
      kept_list.push_back(x);
    }
  Mat out = Mat::Zero(dk, dk);
  for (std::int64_t x = 0; x < d; ++x) {
    const std::int64_t xk = kept_index[x & ~traced_mask];
    for (std::int64_t y = 0; y < d; ++y) {
      if ((x & traced_mask) != (y & traced_mask)) continue;
      out(xk, kept_index[y & ~traced_mask]) += rho(x, y);
    }
  }
  return out;
}

inline Mat embed_mixed_on_regs(const Mat& marginal, int n, std::span<const int> regs) {
  std::int64_t traced_mask = 0;
  for (int r : regs) traced_mask |= std::int64_t{1} << (n - r);
  const int m = static_cast<int>(regs.size());
  const double inv_d = 1.0 / static_cast<double>(std::int64_t{1} << m);
  const std::int64_t d = std::int64_t{1} << n;

  std::vector<std::int64_t> kept_index(d, -1);
  std::int64_t cnt = 0;
  for (std::int64_t x = 0; x < d; ++x)
    if (!(x & traced_mask)) kept_index[x] = cnt++;
  Mat out = Mat::Zero(d, d);
  for (std::int64_t x = 0; x < d; ++x)
    for (std::int64_t y = 0; y < d; ++y) {
      if ((x & traced_mask) != (y & traced_mask)) continue;
      out(x, y) = inv_d * marginal(kept_index[x & ~traced_mask], kept_index[y & ~traced_mask]);
    }
  return out;
}

// rho <- (1-p) rho + p * (I/d on regs) (x) marginal
inline void depolarize_dm(Mat& rho, int n, std::span<const int> regs, double p) {
  if (p <= 0.0) return;
  Mat marginal = partial_trace_regs(rho, n, regs);
  rho = (1.0 - p) * rho + p * embed_mixed_on_regs(marginal, n, regs);
}

// Thermal relaxation on one register: amplitude damping (gamma) composed
// with pure dephasing (lambda), both as Kraus sums.
inline void thermal_relax_dm(Mat& rho, int n, int reg, double gamma, double lambda) {
  if (gamma > 0.0) {
    Eigen::Matrix2cd a0, a1;
    a0 << 1, 0, 0, std::sqrt(1.0 - gamma);
    a1 << 0, std::sqrt(gamma), 0, 0;
    Mat r0 = rho, r1 = rho;
    conjugate_1q_dm(r0, n, reg, a0);
    conjugate_1q_dm(r1, n, reg, a1);
    rho = r0 + r1;
  }
  if (lambda > 0.0) {
    Eigen::Matrix2cd p0, p1;
    p0 << 1, 0, 0, std::sqrt(1.0 - lambda);
    p1 << 0, 0, 0, std::sqrt(lambda);
    Mat r0 = rho, r1 = rho;
    conjugate_1q_dm(r0, n, reg, p0);
    conjugate_1q_dm(r1, n, reg, p1);
    rho = r0 + r1;
  }
}

// ---------------------------------------------------------------------------
// Gate + noise application

// Applies one gate to the density matrix, then the depolarizing channel on
// the touched registers, then thermal relaxation on each touched register.
// `regs` are global register indices; `u` is the gate's dense matrix on them.
inline void apply_gate_dm(DensityMatrix& rho, int n, std::span<const int> regs, const Mat& u,
                          const NoiseModel& noise) {
  if (n > kMaxNoisyRegisters)
    throw std::length_error("noisy evolution capped at 6 registers");
  noise.validate();
  conjugate_dense_dm(rho.mat, n, regs, u);
  const double p = regs.size() == 1 ? noise.p_depol_1q : noise.p_depol_2q;
  depolarize_dm(rho.mat, n, regs, p);
  if (noise.relaxation_enabled()) {
    const double g = noise.gamma();
    const double l = noise.dephasing_lambda();
    for (int r : regs) thermal_relax_dm(rho.mat, n, r, g, l);
  }
}

inline Mat gate_matrix(const Gate& g, std::span<const double> params) {
  switch (g.kind) {
    case GateKind::RX: return rx_matrix(params[g.param_slots[0]]);
    case GateKind::RY: return ry_matrix(params[g.param_slots[0]]);
    case GateKind::RZ: return rz_matrix(params[g.param_slots[0]]);
    case GateKind::U3:
      return u3_matrix(params[g.param_slots[0]], params[g.param_slots[1]],
                       params[g.param_slots[2]]);
    case GateKind::CNOT: {
      Mat m = Mat::Zero(4, 4);
      m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1.0;
      return m;
    }
    case GateKind::CZ: {
      Mat m = Mat::Identity(4, 4);
      m(3, 3) = -1.0;
      return m;
    }
    case GateKind::FixedUnitary: return g.fixed;
  }
  throw std::logic_error("unreachable gate kind");
}

// Full circuit on the density matrix; noise follows every gate, with U3
// treated as a single gate.
inline void apply_circuit_dm(DensityMatrix& rho, int n, const ParamCircuit& c,
                             std::span<const double> params, const NoiseModel& noise) {
  if (static_cast<int>(params.size()) != c.n_params)
    throw std::invalid_argument("apply_circuit_dm: parameter count mismatch");
  const int base = c.offset - 1;
  for (const auto& g : c.gates) {
    std::vector<int> regs;
    regs.reserve(g.targets.size());
    for (int t : g.targets) regs.push_back(base + t);
    apply_gate_dm(rho, n, regs, gate_matrix(g, params), noise);
  }
}

// Prefix reduction of a density matrix (registers q_1..q_k kept).
inline Mat dm_prefix_reduction(const Mat& rho, int n, int k) {
  std::vector<int> regs;
  for (int r = k + 1; r <= n; ++r) regs.push_back(r);
  if (regs.empty()) return rho;
  return partial_trace_regs(rho, n, regs);
}

// ---------------------------------------------------------------------------
// Swap-test overlap estimation

struct ShotEstimator {
  long shots = 8192;  // 0 = exact mode
  std::uint64_t seed = 0;

  void validate() const {
    if (shots < 0) throw std::invalid_argument("shot count must be >= 0 (0 = exact)");
  }
};

// Estimates q = tr[rho sigma] from `shots` Bernoulli outcomes with
// acceptance probability (1 + q) / 2; unbiased. shots = 0 returns q exactly.
inline double swap_test_overlap(const Mat& rho, const Mat& sigma, long shots,
                                std::mt19937_64& rng) {
  if (rho.rows() != sigma.rows()) throw std::invalid_argument("swap_test_overlap: dimension mismatch");
  const double q = rho.cwiseProduct(sigma.conjugate()).sum().real();
  if (shots == 0) return q;
  const double p = std::clamp((1.0 + q) / 2.0, 0.0, 1.0);
  std::binomial_distribution<long> bin(shots, p);
  const long b = bin(rng);
  return 2.0 * static_cast<double>(b) / static_cast<double>(shots) - 1.0;
}

inline double swap_test_overlap(const DensityMatrix& rho, const DensityMatrix& sigma,
                                long shots, std::mt19937_64& rng) {
  return swap_test_overlap(rho.mat, sigma.mat, shots, rng);
}

// ---------------------------------------------------------------------------
// Nelder-Mead simplex

struct NelderMeadConfig {
  double alpha = 1.0;   // reflection
  double gamma = 2.0;   // expansion
  double rho = 0.5;     // contraction
  double sigma = 0.5;   // shrink
  double init_step = 0.8;
  double f_tol = 1e-10;
  double x_tol = 1e-10;
  long max_evals = 4000;
};

struct NelderMeadResult {
  std::vector<double> x_best;
  double f_best = 0.0;
  std::vector<double> trace;  // best value after each iteration
  long evals = 0;
};

inline NelderMeadResult nelder_mead_minimize(
    const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
    const NelderMeadConfig& cfg = {}) {
  const int n = static_cast<int>(x0.size());
  if (n < 1) throw std::invalid_argument("nelder_mead_minimize: empty start point");
  for (double v : x0)
    if (!std::isfinite(v)) throw std::invalid_argument("nelder_mead_minimize: non-finite start");

  NelderMeadResult res;
  std::vector<std::vector<double>> xs(n + 1, x0);
  std::vector<double> fs(n + 1);
  for (int i = 1; i <= n; ++i) xs[i][i - 1] += cfg.init_step;
  for (int i = 0; i <= n; ++i) {
    fs[i] = f(xs[i]);
    ++res.evals;
  }
  res.x_best = xs[0];
  res.f_best = fs[0];

  std::vector<int> order(n + 1);
  auto sort_simplex = [&]() {
    for (int i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });
  };
  auto track_best = [&](const std::vector<double>& x, double v) {
    if (v < res.f_best) {
      res.f_best = v;
      res.x_best = x;
    }
  };
  for (int i = 0; i <= n; ++i) track_best(xs[i], fs[i]);

  while (res.evals < cfg.max_evals) {
    sort_simplex();
    const int best = order[0], worst = order[n], second_worst = order[n - 1];
    res.trace.push_back(fs[best]);

    // Converged when the simplex is small in value and extent. An exactly
    // flat simplex (constant objective) stops on the value test alone;
    // requiring the extent otherwise avoids stopping on near-ties that
    // merely bracket the minimum.
    double spread = 0.0;
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j < n; ++j) spread = std::max(spread, std::abs(xs[i][j] - xs[best][j]));
    const double fspread = std::abs(fs[worst] - fs[best]);
    if (fspread == 0.0 || (fspread <= cfg.f_tol && spread <= cfg.x_tol)) break;

    std::vector<double> centroid(n, 0.0);
    for (int i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (int j = 0; j < n; ++j) centroid[j] += xs[i][j];
    }
    for (double& c : centroid) c /= n;

    auto blend = [&](double coeff) {
      std::vector<double> x(n);
      for (int j = 0; j < n; ++j) x[j] = centroid[j] + coeff * (xs[worst][j] - centroid[j]);
      return x;
    };

    std::vector<double> xr = blend(-cfg.alpha);
    const double fr = f(xr);
    ++res.evals;
    track_best(xr, fr);
    if (fr < fs[best]) {
      std::vector<double> xe = blend(-cfg.alpha * cfg.gamma);
      const double fe = f(xe);
      ++res.evals;
      track_best(xe, fe);
      if (fe < fr) {
        xs[worst] = std::move(xe);
        fs[worst] = fe;
      } else {
        xs[worst] = std::move(xr);
        fs[worst] = fr;
      }
      continue;
    }
    if (fr < fs[second_worst]) {
      xs[worst] = std::move(xr);
      fs[worst] = fr;
      continue;
    }
    // contraction (outside if the reflection improved on the worst point)
    std::vector<double> xc = blend(fr < fs[worst] ? -cfg.alpha * cfg.rho : cfg.rho);
    const double fc = f(xc);
    ++res.evals;
    track_best(xc, fc);
    if (fc < std::min(fr, fs[worst])) {
      xs[worst] = std::move(xc);
      fs[worst] = fc;
      continue;
    }
    // shrink toward the best vertex
    for (int i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (int j = 0; j < n; ++j) xs[i][j] = xs[best][j] + cfg.sigma * (xs[i][j] - xs[best][j]);
      fs[i] = f(xs[i]);
      ++res.evals;
      track_best(xs[i], fs[i]);
      if (res.evals >= cfg.max_evals) break;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Noisy training loop

struct NoisyTracePoint {
  int layer = 0;
  int restart = 0;
  long iteration = 0;
  double estimated_cost = 0.0;
};

struct NoisyTrainResult {
  ScatteringModel model;            // circuits + chosen parameters (no traces)
  std::vector<NoisyTracePoint> trace;
  std::vector<double> layer_costs;  // best final estimated cost per layer
  double noiseless_fidelity = 0.0;  // trained circuit replayed without noise
  DensityMatrix final_dm;           // noisy end state
};

// The scattering loop with density-matrix evolution. Each layer is
// optimized `restarts` times with Nelder-Mead from fresh uniform starts on
// a swap-test-estimated cost; the restart with the lowest final estimated
// cost wins (ties to the lowest restart index).
inline NoisyTrainResult train_qssm_noisy(const StateVector& target, const TrainConfig& cfg,
                                         const NoiseModel& noise, const ShotEstimator& est,
                                         int restarts, const NelderMeadConfig& nm = {}) {
  cfg.validate();
  noise.validate();
  est.validate();
  if (restarts < 1) throw std::invalid_argument("train_qssm_noisy: restarts must be >= 1");
  if (target.n > kMaxNoisyRegisters)
    throw std::length_error("train_qssm_noisy: capped at 6 registers");
  require_normalized(target, "train_qssm_noisy");

  const int n = target.n;
  NoisyTrainResult out;
  out.model.n = n;
  out.model.widths = resolve_widths(target, cfg);

  DensityMatrix rho = dm_from_state(zero_state(n));
  for (int k = 1; k <= n; ++k) {
    ParamCircuit layer = build_hea(out.model.widths[k - 1], cfg.depth);
    layer.offset = k;

    const Mat target_k = [&] {
      ReshapeMap m(target.amp.data(), dim_of(k), dim_of(n - k));
      return Mat(m * m.adjoint());
    }();
    const double target_purity = target_k.squaredNorm();

    struct RestartOutcome {
      std::vector<double> params;
      double final_cost = 0.0;
      std::vector<double> trace;
    };
    std::vector<RestartOutcome> outcomes(restarts);

    parallel_for(static_cast<std::size_t>(restarts), cfg.threads, [&](std::size_t r) {
      std::mt19937_64 rng = make_rng(split_seed(cfg.seed, (std::uint64_t(k) << 32) | r));
      std::uniform_real_distribution<double> u(0.0, 2 * std::numbers::pi);
      std::vector<double> x0(layer.n_params);
      for (auto& p : x0) p = u(rng);

      auto cost = [&](std::span<const double> params) {
        DensityMatrix dm = rho;
        apply_circuit_dm(dm, n, layer, params, noise);
        const Mat sigma_k = dm_prefix_reduction(dm.mat, n, k);
        const double s2 = swap_test_overlap(sigma_k, sigma_k, est.shots, rng);
        const double sr = swap_test_overlap(sigma_k, target_k, est.shots, rng);
        return s2 + target_purity - 2.0 * sr;
      };
      NelderMeadResult nmres = nelder_mead_minimize(cost, std::move(x0), nm);
      outcomes[r].params = std::move(nmres.x_best);
      outcomes[r].final_cost = cost(outcomes[r].params);  // fresh estimate of the winner
      outcomes[r].trace = std::move(nmres.trace);
    });

    int best = 0;
    for (int r = 1; r < restarts; ++r)
      if (outcomes[r].final_cost < outcomes[best].final_cost) best = r;
    for (int r = 0; r < restarts; ++r)
      for (std::size_t it = 0; it < outcomes[r].trace.size(); ++it)
        out.trace.push_back(NoisyTracePoint{k, r, static_cast<long>(it),
                                            outcomes[r].trace[it]});
    out.layer_costs.push_back(outcomes[best].final_cost);

    apply_circuit_dm(rho, n, layer, outcomes[best].params, noise);
    out.model.layers.push_back(TrainedLayer{std::move(layer),
                                            std::move(outcomes[best].params), {}});
  }

  out.final_dm = std::move(rho);
  out.model.final_state = reconstruct(out.model);
  out.model.final_fidelity = fidelity_pure(out.model.final_state, target);
  out.noiseless_fidelity = out.model.final_fidelity;
  return out;
}

}  // namespace qssm
