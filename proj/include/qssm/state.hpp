// state.hpp
// Pure states, density matrices and the reduced-state arithmetic used by
// every layer of the toolkit: prefix partial traces, Hilbert-Schmidt cost,
// fidelity, purity, Schmidt rank sequences and amplitude encoding.
//
// Register convention: register q_1 is the MOST significant bit of the
// basis index, q_n the least significant. A basis index x therefore reads
// as the bit string q_1 q_2 ... q_n. Reducing to the first k registers is
// a reshape of the amplitude vector into a 2^k x 2^(n-k) row-major matrix
// M with row = prefix bits, followed by G = M M^dagger.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qssm {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
// Row-major view of an amplitude vector as a 2^k x 2^(n-k) matrix.
using ReshapeMap =
    Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Capacity limits. Statevectors are dense; 2^20 amplitudes (16 MiB) is
// already far past the sizes this toolkit targets. Dense density matrices
// are capped at 12 registers.
inline constexpr int kMaxStateRegisters = 20;
inline constexpr int kMaxDensityRegisters = 12;

inline std::int64_t dim_of(int n) { return std::int64_t{1} << n; }

// ---------------------------------------------------------------------------
// StateVector

struct StateVector {
  int n = 0;   // register count
  Vec amp;     // 2^n amplitudes, q_1 = most significant index bit

  std::int64_t dim() const { return amp.size(); }
  double norm() const { return amp.norm(); }
};

inline void check_register_count(int n) {
  if (n < 1) throw std::invalid_argument("register count must be >= 1");
  if (n > kMaxStateRegisters)
    throw std::length_error("register count " + std::to_string(n) +
                            " exceeds statevector capacity (" +
                            std::to_string(kMaxStateRegisters) + ")");
}

inline StateVector zero_state(int n) {
  check_register_count(n);
  StateVector s;
  s.n = n;
  s.amp = Vec::Zero(dim_of(n));
  s.amp[0] = 1.0;
  return s;
}

inline StateVector state_from_amplitudes(int n, Vec amp) {
  check_register_count(n);
  if (amp.size() != dim_of(n))
    throw std::invalid_argument("amplitude vector length does not equal 2^n");
  StateVector s;
  s.n = n;
  s.amp = std::move(amp);
  return s;
}

inline bool is_normalized(const StateVector& s, double tol = 1e-9) {
  return std::abs(s.amp.norm() - 1.0) <= tol;
}

inline void require_normalized(const StateVector& s, const char* who) {
  if (!is_normalized(s))
    throw std::invalid_argument(std::string(who) + ": state is not normalized");
}

// ---------------------------------------------------------------------------
// DensityMatrix

struct DensityMatrix {
  Mat mat;  // dim x dim, dim = 2^m

  std::int64_t dim() const { return mat.rows(); }
  int registers() const {
    int m = 0;
    while ((std::int64_t{1} << m) < dim()) ++m;
    return m;
  }
};

inline DensityMatrix density_from_matrix(Mat m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw std::invalid_argument("density matrix must be square and nonempty");
  std::int64_t d = m.rows();
  if ((d & (d - 1)) != 0) throw std::invalid_argument("density matrix dimension must be a power of two");
  if (d > (std::int64_t{1} << kMaxDensityRegisters))
    throw std::length_error("density matrix exceeds dense capacity (12 registers)");
  return DensityMatrix{std::move(m)};
}

inline DensityMatrix dm_from_state(const StateVector& s) {
  if (s.n > kMaxDensityRegisters)
    throw std::length_error("state too large for a dense density matrix");
  return DensityMatrix{s.amp * s.amp.adjoint()};
}

// Invariant checks, used by tests and by the noisy evolution path.
inline double hermiticity_defect(const DensityMatrix& r) {
  return (r.mat - r.mat.adjoint()).cwiseAbs().maxCoeff();
}
inline double trace_defect(const DensityMatrix& r) {
  return std::abs(r.mat.trace() - cplx(1.0, 0.0));
}
inline double min_eigenvalue(const DensityMatrix& r) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (r.mat + r.mat.adjoint()),
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}
inline bool is_valid_density(const DensityMatrix& r, double herm_tol = 1e-9,
                             double trace_tol = 1e-9, double psd_floor = -1e-8) {
  return hermiticity_defect(r) <= herm_tol && trace_defect(r) <= trace_tol &&
         min_eigenvalue(r) >= psd_floor;
}

// ---------------------------------------------------------------------------
// Prefix reductions

inline void check_prefix(int n, int k, const char* who) {
  if (k < 1 || k > n)
    throw std::invalid_argument(std::string(who) + ": prefix length k out of range");
}

// Reduced state of registers q_1..q_k: G = M M^dagger with M the
// 2^k x 2^(n-k) reshape (row index = prefix bits).
inline DensityMatrix partial_trace_keep_prefix(const StateVector& s, int k) {
  check_prefix(s.n, k, "partial_trace_keep_prefix");
  if (k > kMaxDensityRegisters)
    throw std::length_error("partial_trace_keep_prefix: reduced state exceeds dense capacity");
  ReshapeMap m(s.amp.data(), dim_of(k), dim_of(s.n - k));
  return DensityMatrix{m * m.adjoint()};
}

// tr[rho_k sigma_k] for the k-prefix reductions of two pure states that may
// live on registers files of different length (both must have >= k registers).
// Never materializes a 2^k x 2^k matrix when the suffix sides are smaller:
// tr[(A A^t)(B B^t)] = ||A^t B||_F^2, so the intermediate can be chosen as
// either the 2^k Gram pair or the suffix-dimension cross product.
inline double prefix_overlap(const StateVector& a, const StateVector& b, int k) {
  check_prefix(a.n, k, "prefix_overlap");
  check_prefix(b.n, k, "prefix_overlap");
  const std::int64_t rows = dim_of(k);
  const std::int64_t sa = dim_of(a.n - k);
  const std::int64_t sb = dim_of(b.n - k);
  ReshapeMap A(a.amp.data(), rows, sa);
  ReshapeMap B(b.amp.data(), rows, sb);
  if (rows <= std::max(sa, sb)) {
    Mat ga = A * A.adjoint();
    Mat gb = B * B.adjoint();
    return ga.cwiseProduct(gb.conjugate()).sum().real();
  }
  Mat cross = A.adjoint() * B;
  return cross.squaredNorm();
}

// tr[rho_k sigma_k] with both states on the same register file.
inline double overlap_reduced(const StateVector& a, const StateVector& b, int k) {
  if (a.n != b.n) throw std::invalid_argument("overlap_reduced: register counts differ");
  return prefix_overlap(a, b, k);
}

// tr[rho_k^2] of the k-prefix reduction of a pure state.
inline double prefix_purity(const StateVector& s, int k) { return prefix_overlap(s, s, k); }

// Hilbert-Schmidt distance squared of the two k-prefix reductions:
// ||sigma_k - rho_k||_2^2 = tr[sigma_k^2] + tr[rho_k^2] - 2 tr[sigma_k rho_k].
inline double hs_cost(const StateVector& a, const StateVector& b, int k) {
  if (a.n != b.n) throw std::invalid_argument("hs_cost: register counts differ");
  return prefix_purity(a, k) + prefix_purity(b, k) - 2.0 * prefix_overlap(a, b, k);
}

inline double fidelity_pure(const StateVector& a, const StateVector& b) {
  if (a.n != b.n) throw std::invalid_argument("fidelity_pure: register counts differ");
  return std::norm(a.amp.dot(b.amp));
}

inline double purity(const DensityMatrix& r) { return r.mat.squaredNorm(); }

// ---------------------------------------------------------------------------
// Rank sequence

struct RankSequence {
  std::vector<int> ranks;  // r_1 .. r_n
  double tolerance = 0.0;  // relative threshold used for the numerical rank
};

// r_k = number of singular values of the 2^k x 2^(n-k) reshape above
// tol * sigma_max. For a normalized pure state r_n = 1.
inline RankSequence rank_sequence(const StateVector& s, double tol = 1e-10) {
  if (tol <= 0.0) throw std::invalid_argument("rank_sequence: tolerance must be positive");
  require_normalized(s, "rank_sequence");
  RankSequence out;
  out.tolerance = tol;
  out.ranks.reserve(s.n);
  for (int k = 1; k <= s.n; ++k) {
    ReshapeMap m(s.amp.data(), dim_of(k), dim_of(s.n - k));
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& sv = svd.singularValues();
    const double cut = tol * sv(0);
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > cut) ++r;
    out.ranks.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Amplitude encoding

// Pads `data` with zeros up to 2^n and l2-normalizes.
inline StateVector amplitude_encode(std::span<const double> data, int n) {
  check_register_count(n);
  if (data.empty()) throw std::invalid_argument("amplitude_encode: empty data");
  const std::int64_t d = dim_of(n);
  if (static_cast<std::int64_t>(data.size()) > d)
    throw std::invalid_argument("amplitude_encode: data longer than 2^n");
  Vec amp = Vec::Zero(d);
  double nrm2 = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    amp[static_cast<Eigen::Index>(i)] = data[i];
    nrm2 += data[i] * data[i];
  }
  if (nrm2 == 0.0) throw std::domain_error("amplitude_encode: all-zero vector cannot be encoded");
  amp /= std::sqrt(nrm2);
  return state_from_amplitudes(n, std::move(amp));
}

}  // namespace qssm
