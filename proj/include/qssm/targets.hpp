// targets.hpp
// Target-state generators: GHZ, Heisenberg (XXX/XXZ open chain) ground
// states via matrix-free Lanczos, discretized Gaussian amplitude states,
// Haar-random states, and amplitude-vector file ingestion.

#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qssm/io.hpp"
#include "qssm/state.hpp"

namespace qssm {

struct TargetSpec {
  std::string family;        // ghz | heisenberg_xxx | heisenberg_xxz | gaussian | haar_random | file
  int n = 0;
  double delta = 1.0;        // XXZ anisotropy (1 = XXX)
  double mu = 0.0;           // gaussian mean
  double sigma = 1.0;        // gaussian width
  std::string path;          // file target
  std::uint64_t seed = 0;    // haar_random
};

inline StateVector ghz(int n) {
  if (n < 2) throw std::invalid_argument("ghz: need at least 2 registers");
  StateVector s = zero_state(n);
  const double a = 1.0 / std::sqrt(2.0);
  s.amp[0] = a;
  s.amp[s.dim() - 1] = a;
  return s;
}

// ---------------------------------------------------------------------------
// Heisenberg chain

// Matrix-free y += H x for H = sum_i X_i X_{i+1} + Y_i Y_{i+1} + delta Z_i Z_{i+1}
// on an open chain. XX + YY exchanges anti-aligned neighbours with weight 2;
// ZZ contributes +-delta on the diagonal.
inline void heisenberg_apply(int n, double delta, const Vec& x, Vec& y) {
  y.setZero();
  const std::int64_t d = dim_of(n);
  for (int i = 1; i < n; ++i) {
    const std::int64_t mi = std::int64_t{1} << (n - i);
    const std::int64_t mj = std::int64_t{1} << (n - i - 1);
    for (std::int64_t idx = 0; idx < d; ++idx) {
      const bool bi = idx & mi, bj = idx & mj;
      y[idx] += (bi == bj ? delta : -delta) * x[idx];
      if (bi != bj) y[idx ^ mi ^ mj] += 2.0 * x[idx];
    }
  }
}

struct GroundState {
  StateVector state;
  double energy = 0.0;
  double residual = 0.0;  // ||H v - E v||_2
};

// Lanczos with full reorthogonalization on the matrix-free application.
// Deterministic: fixed pseudo-random start vector, and the returned vector
// is phase-fixed so its lowest-index non-negligible amplitude is real
// positive (resolves degenerate ground spaces reproducibly).
inline GroundState heisenberg_ground(int n, double delta, double tol = 1e-10,
                                     int max_iters = 500) {
  if (n < 2 || n > 14) throw std::invalid_argument("heisenberg_ground: n must be in [2, 14]");
  const std::int64_t d = dim_of(n);
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> g(0.0, 1.0);

  std::vector<Vec> basis;
  std::vector<double> alpha, beta;
  Vec v(d);
  for (std::int64_t i = 0; i < d; ++i) v[i] = cplx(g(rng), 0.0);
  v /= v.norm();
  basis.push_back(v);

  Vec w(d);
  double energy = 0.0;
  Vec ground;
  const int m_cap = static_cast<int>(std::min<std::int64_t>(d, max_iters));
  for (int it = 0; it < m_cap; ++it) {
    heisenberg_apply(n, delta, basis[it], w);
    alpha.push_back(w.dot(basis[it]).real());
    // full reorthogonalization, twice for numerical safety
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) w -= b.dot(w) * b;
    const double b_next = w.norm();

    // Rayleigh-Ritz on the tridiagonal matrix built so far.
    const int m = static_cast<int>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    energy = es.eigenvalues()(0);
    ground = Vec::Zero(d);
    for (int i = 0; i < m; ++i) ground += es.eigenvectors()(i, 0) * basis[i];
    ground /= ground.norm();

    Vec hg(d);
    heisenberg_apply(n, delta, ground, hg);
    const double residual = (hg - energy * ground).norm();
    if (residual < tol || b_next < 1e-13) {
      if (residual >= 1e-8 && b_next < 1e-13 && m < d) {
        // Krylov space closed on an invariant subspace before convergence:
        // restart direction orthogonal to everything seen so far.
        Vec fresh(d);
        for (std::int64_t i = 0; i < d; ++i) fresh[i] = cplx(g(rng), 0.0);
        for (const auto& b : basis) fresh -= b.dot(fresh) * b;
        if (fresh.norm() > 1e-10) {
          fresh /= fresh.norm();
          beta.push_back(0.0);
          basis.push_back(fresh);
          continue;
        }
      }
      GroundState out;
      out.energy = energy;
      out.residual = residual;
      // deterministic global phase
      for (std::int64_t i = 0; i < d; ++i) {
        if (std::abs(ground[i]) > 1e-8) {
          ground *= std::conj(ground[i]) / std::abs(ground[i]);
          break;
        }
      }
      out.state = state_from_amplitudes(n, std::move(ground));
      return out;
    }
    beta.push_back(b_next);
    basis.push_back(w / b_next);
  }
  Vec hg(d);
  heisenberg_apply(n, delta, ground, hg);
  const double residual = (hg - energy * ground).norm();
  throw std::runtime_error("heisenberg_ground: Lanczos did not converge, residual " +
                           std::to_string(residual));
}

// ---------------------------------------------------------------------------
// Gaussian amplitude state

// Amplitudes proportional to sqrt of the discretized Gaussian density, so
// measurement probabilities reproduce the normalized pmf.
inline StateVector gaussian_state(int n, double mu, double sigma) {
  check_register_count(n);
  if (sigma <= 0) throw std::invalid_argument("gaussian_state: sigma must be > 0");
  const std::int64_t d = dim_of(n);
  Vec amp(d);
  for (std::int64_t x = 0; x < d; ++x) {
    const double z = (static_cast<double>(x) - mu) / sigma;
    amp[x] = std::exp(-z * z / 4.0);
  }
  amp /= amp.norm();
  return state_from_amplitudes(n, std::move(amp));
}

// ---------------------------------------------------------------------------
// Haar-random state (normalized complex Gaussian vector)

inline StateVector haar_random_state(int n, std::uint64_t seed) {
  if (n > 14) throw std::length_error("haar_random_state: n capped at 14");
  check_register_count(n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Vec amp(dim_of(n));
  for (Eigen::Index i = 0; i < amp.size(); ++i) amp[i] = cplx(g(rng), g(rng));
  amp /= amp.norm();
  return state_from_amplitudes(n, std::move(amp));
}

// ---------------------------------------------------------------------------
// File targets and the family dispatcher

inline StateVector load_target(const std::string& path, std::optional<int> n_hint = std::nullopt) {
  LoadedState l = load_state_file(path, n_hint);
  if (l.state.n > 14) throw std::length_error("load_target: states beyond 14 registers unsupported");
  return l.state;
}

inline StateVector make_target(const TargetSpec& spec) {
  if (spec.family == "ghz") return ghz(spec.n);
  if (spec.family == "heisenberg_xxx") return heisenberg_ground(spec.n, 1.0).state;
  if (spec.family == "heisenberg_xxz") return heisenberg_ground(spec.n, spec.delta).state;
  if (spec.family == "gaussian") return gaussian_state(spec.n, spec.mu, spec.sigma);
  if (spec.family == "haar_random") return haar_random_state(spec.n, spec.seed);
  if (spec.family == "file")
    return load_target(spec.path, spec.n > 0 ? std::optional<int>(spec.n) : std::nullopt);
  throw std::invalid_argument("unknown target family: " + spec.family);
}

}  // namespace qssm
