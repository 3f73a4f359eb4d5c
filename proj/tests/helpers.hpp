// Shared test utilities: random states and the dense textbook oracles the
// fast paths are checked against.

#pragma once

#include <random>

#include "qssm/circuit.hpp"
#include "qssm/state.hpp"

namespace qssm::testing {

inline StateVector random_state(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Vec amp(dim_of(n));
  for (Eigen::Index i = 0; i < amp.size(); ++i) amp[i] = cplx(g(rng), g(rng));
  amp /= amp.norm();
  return state_from_amplitudes(n, std::move(amp));
}

// Textbook prefix reduction: build the full |psi><psi| and sum the suffix
// diagonal blocks. Deliberately avoids the reshaped-Gram shortcut.
inline Mat dense_prefix_reduction(const StateVector& s, int k) {
  const std::int64_t dk = dim_of(k);
  const std::int64_t ds = dim_of(s.n - k);
  Mat full = s.amp * s.amp.adjoint();
  Mat out = Mat::Zero(dk, dk);
  for (std::int64_t p = 0; p < dk; ++p)
    for (std::int64_t q = 0; q < dk; ++q)
      for (std::int64_t t = 0; t < ds; ++t) out(p, q) += full(p * ds + t, q * ds + t);
  return out;
}

inline std::vector<double> random_params(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 2 * std::numbers::pi);
  std::vector<double> p(count);
  for (auto& x : p) x = u(rng);
  return p;
}

}  // namespace qssm::testing
