// baseline.hpp
// Global-QNN baseline trainer and the gradient-variance experiments:
// Haar-sampled scattering-layer gradients under the perfect-previous-step
// assumption, the global-circuit counterpart, the closed-form last-step
// variance band, and Monte-Carlo checks of the Haar moment identities.

#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "qssm/circuit.hpp"
#include "qssm/rng.hpp"
#include "qssm/state.hpp"
#include "qssm/train.hpp"

namespace qssm {

// ---------------------------------------------------------------------------
// Global QNN baseline: one hardware-efficient ansatz across all registers,
// trained on the full-state cost C_n = ||sigma - rho||_2^2 = 2 - 2 F with
// the same optimizer and stopping rule as the scattering loop.

struct GlobalTrainResult {
  std::vector<double> params;
  std::vector<double> trace;
  double fidelity = 0.0;
};

inline GlobalTrainResult train_global_qnn(const StateVector& target, const TrainConfig& cfg) {
  cfg.validate();
  require_normalized(target, "train_global_qnn");
  ParamCircuit circuit = build_hea(target.n, cfg.depth);
  circuit.offset = 1;
  std::mt19937_64 rng = make_rng(cfg.seed);
  LayerResult res = train_layer(target.n, zero_state(target.n), target, circuit, cfg, rng);
  GlobalTrainResult out;
  out.params = std::move(res.params);
  out.trace = std::move(res.trace);
  out.fidelity = fidelity_pure(res.psi, target);
  return out;
}

// ---------------------------------------------------------------------------
// Perfect-previous-step carrier
//
// The variance analysis assumes step k starts from a state whose (k-1)-prefix
// reduction already equals the target's. The experiment builds that state
// directly: an exact purification of rho_{k-1} on (k-1) + w registers, with
// the layer's registers as the purifying system. If a width cap makes the
// layer too small to carry the full rank, the spectrum is truncated to the
// leading 2^w weights and renormalized.
inline StateVector purification_prefix_carrier(const StateVector& target, int k, int w,
                                               double tol = 1e-12) {
  if (k < 1 || k > target.n) throw std::invalid_argument("carrier: step k out of range");
  if (w < 1) throw std::invalid_argument("carrier: width must be >= 1");
  const int nc = k - 1 + w;
  if (k == 1) return zero_state(nc);

  ReshapeMap m(target.amp.data(), dim_of(k - 1), dim_of(target.n - k + 1));
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const std::int64_t anc = dim_of(w);
  std::int64_t rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol * sv(0)) ++rank;
  const std::int64_t kept = std::min<std::int64_t>(rank, anc);

  Vec amp = Vec::Zero(dim_of(nc));
  double w2 = 0.0;
  for (std::int64_t i = 0; i < kept; ++i) w2 += sv(i) * sv(i);
  const double scale = 1.0 / std::sqrt(w2);
  // |carrier> = sum_i s_i |u_i> (x) |i>, ancilla in computational basis
  for (std::int64_t i = 0; i < kept; ++i) {
    const double s = sv(i) * scale;
    for (std::int64_t p = 0; p < dim_of(k - 1); ++p)
      amp[p * anc + i] = s * svd.matrixU()(p, i);
  }
  return state_from_amplitudes(nc, std::move(amp));
}

// ---------------------------------------------------------------------------
// Gradient samplers
//
// The sampled layer is U_+ . exp(-i theta Z) . U_- with U_+- Haar on the
// layer dimension and the Pauli-Z generator on the layer's first register
// (tr[H^2] = 2 on that register, matching the closed-form variance band).
// For the full-angle generator the shift rule reads
//   dC/dtheta = 2 ( tr[Delta sigma(theta + pi/4)] - tr[Delta sigma(theta - pi/4)] ).

namespace detail {

struct SampledLayerDraw {
  Mat u_minus, u_plus;
  double theta;
};

inline SampledLayerDraw draw_layer(int dim, std::mt19937_64& rng) {
  SampledLayerDraw d;
  d.u_minus = haar_unitary(dim, rng);
  d.u_plus = haar_unitary(dim, rng);
  std::uniform_real_distribution<double> u(0.0, 2 * std::numbers::pi);
  d.theta = u(rng);
  return d;
}

}  // namespace detail

// One draw of the step-k cost derivative with layer width w, target prefix
// reductions as ground truth and Haar-random layer halves.
inline double sample_gradient_qssm(const StateVector& target, int k, int w,
                                   std::mt19937_64& rng) {
  if (k < 1 || k > target.n) throw std::invalid_argument("sample_gradient_qssm: k out of range");
  if (w < 1 || k - 1 + w > kMaxStateRegisters)
    throw std::invalid_argument("sample_gradient_qssm: bad width");
  const StateVector carrier = purification_prefix_carrier(target, k, w);
  const int nc = carrier.n;
  std::vector<int> regs(w);
  for (int i = 0; i < w; ++i) regs[i] = k + i;

  const auto draw = detail::draw_layer(static_cast<int>(dim_of(w)), rng);
  StateVector chi = carrier;
  apply_dense(chi.amp, nc, regs, draw.u_minus);
  auto evolve = [&](double t) {
    StateVector s = chi;
    apply_exp_z(s.amp, nc, k, t);
    apply_dense(s.amp, nc, regs, draw.u_plus);
    return s;
  };
  const StateVector psi_star = evolve(draw.theta);
  const StateVector psi_p = evolve(draw.theta + std::numbers::pi / 4);
  const StateVector psi_m = evolve(draw.theta - std::numbers::pi / 4);
  const double term_p = prefix_overlap(psi_star, psi_p, k) - prefix_overlap(target, psi_p, k);
  const double term_m = prefix_overlap(psi_star, psi_m, k) - prefix_overlap(target, psi_m, k);
  return 2.0 * (term_p - term_m);
}

// One draw of the global-model cost derivative: Haar U_-+ on the full
// 2^n dimension around the central Z rotation on register 1.
inline double sample_gradient_global(const StateVector& target, std::mt19937_64& rng) {
  const int n = target.n;
  if (n > 12) throw std::length_error("sample_gradient_global: dense Haar sampling capped at n = 12");
  const std::int64_t d = dim_of(n);
  const auto draw = detail::draw_layer(static_cast<int>(d), rng);
  Vec chi = draw.u_minus.col(0);  // U_- |0...0>
  auto evolve = [&](double t) {
    StateVector s;
    s.n = n;
    s.amp = chi;
    apply_exp_z(s.amp, n, 1, t);
    s.amp = draw.u_plus * s.amp;
    return s;
  };
  const StateVector psi_star = evolve(draw.theta);
  const StateVector psi_p = evolve(draw.theta + std::numbers::pi / 4);
  const StateVector psi_m = evolve(draw.theta - std::numbers::pi / 4);
  const double term_p = std::norm(psi_star.amp.dot(psi_p.amp)) - std::norm(target.amp.dot(psi_p.amp));
  const double term_m = std::norm(psi_star.amp.dot(psi_m.amp)) - std::norm(target.amp.dot(psi_m.amp));
  return 2.0 * (term_p - term_m);
}

// ---------------------------------------------------------------------------
// Closed-form last-step variance (single-register final layer, Pauli-Z
// generator): var = (8/9)(c1^4 + c2^4 + 10 c1^2 c2^2) with c2 = 1 - c1 the
// Schmidt weights of the last cut. Range [16/27, 8/9] over c1 in [0, 1].
inline double prop_s1_closed_form(double c1) {
  if (c1 < 0.0 || c1 > 1.0)
    throw std::invalid_argument("prop_s1_closed_form: c1 must lie in [0, 1]");
  const double c2 = 1.0 - c1;
  const double c1s = c1 * c1, c2s = c2 * c2;
  return (8.0 / 9.0) * (c1s * c1s + c2s * c2s + 10.0 * c1s * c2s);
}

// Leading squared Schmidt weight of the (n-1 | 1) cut, for comparing a
// sampled last-step variance against the closed form.
inline double last_cut_top_weight(const StateVector& target) {
  ReshapeMap m(target.amp.data(), dim_of(target.n - 1), 2);
  Eigen::JacobiSVD<Mat> svd(m);
  const double s0 = svd.singularValues()(0);
  return s0 * s0;
}

// ---------------------------------------------------------------------------
// Variance experiment runner

enum class StepSelector { First, Middle, Last, Global };

inline const char* step_selector_name(StepSelector s) {
  switch (s) {
    case StepSelector::First: return "first";
    case StepSelector::Middle: return "middle";
    case StepSelector::Last: return "last";
    case StepSelector::Global: return "global";
  }
  return "?";
}

inline StepSelector step_selector_from_name(const std::string& s) {
  if (s == "first") return StepSelector::First;
  if (s == "middle") return StepSelector::Middle;
  if (s == "last") return StepSelector::Last;
  if (s == "global") return StepSelector::Global;
  throw std::invalid_argument("unknown step selector: " + s);
}

struct VarianceExperimentConfig {
  std::string family = "ghz";               // target family id (resolved by the caller)
  std::vector<int> n_values = {4, 6, 8, 10};
  std::vector<StepSelector> steps = {StepSelector::First, StepSelector::Middle,
                                     StepSelector::Last, StepSelector::Global};
  int samples = 500;
  std::uint64_t seed = 0;
  int w_max = 2;
  int threads = 1;

  void validate() const {
    if (samples < 2) throw std::invalid_argument("variance experiment needs >= 2 samples");
    if (n_values.empty()) throw std::invalid_argument("variance experiment needs a nonempty n range");
    if (w_max < 1) throw std::invalid_argument("w_max must be >= 1");
  }
};

struct VariancePoint {
  std::string family;
  int n = 0;
  std::string step;
  int samples = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased

  double stderr_mean() const { return std::sqrt(variance / samples); }
};

// Aggregates independent draws into a VariancePoint. Draw i uses the RNG
// stream split_seed(seed, i), so results do not depend on the thread count.
template <typename DrawFn>
inline VariancePoint collect_variance_point(DrawFn&& draw, int samples, std::uint64_t seed,
                                            int threads) {
  std::vector<double> values(samples);
  parallel_for(static_cast<std::size_t>(samples), threads, [&](std::size_t i) {
    std::mt19937_64 rng = make_rng(split_seed(seed, i));
    values[i] = draw(rng);
  });
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= samples;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= (samples - 1);
  VariancePoint p;
  p.samples = samples;
  p.mean = mean;
  p.variance = var;
  return p;
}

// `make_target_for_n` supplies the family's target at each register count.
template <typename TargetFn>
inline std::vector<VariancePoint> run_variance_experiment(const VarianceExperimentConfig& cfg,
                                                          TargetFn&& make_target_for_n) {
  cfg.validate();
  std::vector<VariancePoint> out;
  std::uint64_t stream = 0;
  for (int n : cfg.n_values) {
    const StateVector target = make_target_for_n(n);
    for (StepSelector step : cfg.steps) {
      const std::uint64_t point_seed = split_seed(cfg.seed, 0x1000 + stream++);
      VariancePoint p;
      if (step == StepSelector::Global) {
        p = collect_variance_point(
            [&](std::mt19937_64& rng) { return sample_gradient_global(target, rng); },
            cfg.samples, point_seed, cfg.threads);
      } else {
        int k = 1;
        if (step == StepSelector::Middle) k = std::max(1, n / 2);
        if (step == StepSelector::Last) k = n;
        const int w = width_schedule(n, k, cfg.w_max);
        p = collect_variance_point(
            [&, k, w](std::mt19937_64& rng) { return sample_gradient_qssm(target, k, w, rng); },
            cfg.samples, point_seed, cfg.threads);
      }
      p.family = cfg.family;
      p.n = n;
      p.step = step_selector_name(step);
      out.push_back(std::move(p));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Haar moment identities (Monte-Carlo checks of the unitary-design formulas)

struct HaarMomentCheck {
  std::string name;
  double estimate = 0.0;
  double closed_form = 0.0;
  double rel_error = 0.0;
};

// Closed forms, for arbitrary fixed operators A, B, C, D on dimension d:
//   E[tr(U+ A U B)]            = tr A tr B / d
//   E[tr(U+ A U B U+ C U D)]   = (tr A tr C tr[BD] + tr[AC] tr B tr D)/(d^2-1)
//                              - (tr[AC] tr[BD] + tr A tr B tr C tr D)/(d(d^2-1))
//   E[tr(U A U+ B) tr(U C U+ D)] = (tr A tr B tr C tr D + tr[AC] tr[BD])/(d^2-1)
//                              - (tr[AC] tr B tr D + tr A tr C tr[BD])/(d(d^2-1))
inline std::vector<HaarMomentCheck> haar_moment_checks(int d, long samples, std::uint64_t seed,
                                                       int threads = 1) {
  std::mt19937_64 op_rng = make_rng(split_seed(seed, 0xA11CE));
  std::normal_distribution<double> g(0.0, 1.0);
  // Ginibre plus a deterministic identity component. The identity part is
  // invariant under conjugation, so it inflates the closed forms without
  // inflating the estimator variance; plain Ginibre operators can leave the
  // second-moment formulas near zero by cancellation, where no practical
  // sample count reaches percent-level relative accuracy.
  auto random_op = [&]() {
    Mat m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = cplx(g(op_rng), g(op_rng));
    m += 2.0 * Mat::Identity(d, d);
    return m;
  };
  const Mat A = random_op(), B = random_op(), C = random_op(), D = random_op();
  const cplx trA = A.trace(), trB = B.trace(), trC = C.trace(), trD = D.trace();
  const cplx trAC = (A * C).trace(), trBD = (B * D).trace();
  const double dd = d;

  const cplx f1 = trA * trB / dd;
  const cplx f2 = (trA * trC * trBD + trAC * trB * trD) / (dd * dd - 1.0) -
                  (trAC * trBD + trA * trB * trC * trD) / (dd * (dd * dd - 1.0));
  const cplx f3 = (trA * trB * trC * trD + trAC * trBD) / (dd * dd - 1.0) -
                  (trAC * trB * trD + trA * trC * trBD) / (dd * (dd * dd - 1.0));

  struct Acc { cplx m1{0, 0}, m2{0, 0}, m3{0, 0}; };
  const int nw = std::max(1, threads);
  std::vector<Acc> acc(nw);
  const long chunk = (samples + nw - 1) / nw;
  parallel_for(static_cast<std::size_t>(nw), nw, [&](std::size_t wix) {
    const long lo = static_cast<long>(wix) * chunk;
    const long hi = std::min(samples, lo + chunk);
    std::mt19937_64 rng = make_rng(split_seed(seed, 0xBEEF00 + wix));
    Acc a;
    for (long s = lo; s < hi; ++s) {
      const Mat U = haar_unitary(d, rng);
      const Mat Ud = U.adjoint();
      a.m1 += (Ud * A * U * B).trace();
      a.m2 += (Ud * A * U * B * Ud * C * U * D).trace();
      a.m3 += (U * A * Ud * B).trace() * (U * C * Ud * D).trace();
    }
    acc[wix] = a;
  });
  cplx m1{0, 0}, m2{0, 0}, m3{0, 0};
  for (const auto& a : acc) {
    m1 += a.m1;
    m2 += a.m2;
    m3 += a.m3;
  }
  m1 /= static_cast<double>(samples);
  m2 /= static_cast<double>(samples);
  m3 /= static_cast<double>(samples);

  auto pack = [](std::string name, cplx est, cplx cf) {
    HaarMomentCheck c;
    c.name = std::move(name);
    c.estimate = std::abs(est);
    c.closed_form = std::abs(cf);
    c.rel_error = std::abs(est - cf) / std::abs(cf);
    return c;
  };
  return {pack("first_moment", m1, f1), pack("second_moment_chain", m2, f2),
          pack("second_moment_product", m3, f3)};
}

}  // namespace qssm
