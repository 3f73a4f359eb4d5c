// circuit.hpp
// Parameterized gates, the hardware-efficient scattering-layer ansatz,
// statevector application kernels and Haar-random unitary sampling.
//
// Gate targets inside a ParamCircuit are 1-based and local to the circuit;
// the circuit's `offset` maps local register 1 onto a global register.
// With the q_1-most-significant convention, global register r of an
// n-register state owns bit position (n - r).

#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qssm/state.hpp"

namespace qssm {

enum class GateKind { RX, RY, RZ, U3, CNOT, CZ, FixedUnitary };

inline const char* gate_kind_name(GateKind k) {
  switch (k) {
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::U3: return "U3";
    case GateKind::CNOT: return "CNOT";
    case GateKind::CZ: return "CZ";
    case GateKind::FixedUnitary: return "FixedUnitary";
  }
  return "?";
}

inline GateKind gate_kind_from_name(const std::string& s) {
  if (s == "RX") return GateKind::RX;
  if (s == "RY") return GateKind::RY;
  if (s == "RZ") return GateKind::RZ;
  if (s == "U3") return GateKind::U3;
  if (s == "CNOT") return GateKind::CNOT;
  if (s == "CZ") return GateKind::CZ;
  if (s == "FixedUnitary") return GateKind::FixedUnitary;
  throw std::invalid_argument("unknown gate kind: " + s);
}

inline int param_slot_count(GateKind k) {
  switch (k) {
    case GateKind::RX:
    case GateKind::RY:
    case GateKind::RZ: return 1;
    case GateKind::U3: return 3;
    default: return 0;
  }
}

struct Gate {
  GateKind kind;
  std::vector<int> targets;      // 1-based, local to the circuit width
  std::vector<int> param_slots;  // indices into the circuit parameter vector
  Mat fixed;                     // FixedUnitary payload, empty otherwise
};

struct ParamCircuit {
  int width = 0;   // registers the circuit acts on
  int offset = 1;  // global index of local register 1
  std::vector<Gate> gates;
  int n_params = 0;
};

// ---------------------------------------------------------------------------
// Single-register rotation matrices, R_P(theta) = exp(-i theta P / 2).

inline Eigen::Matrix2cd rx_matrix(double t) {
  const double c = std::cos(t / 2), s = std::sin(t / 2);
  Eigen::Matrix2cd m;
  m << cplx(c, 0), cplx(0, -s), cplx(0, -s), cplx(c, 0);
  return m;
}

inline Eigen::Matrix2cd ry_matrix(double t) {
  const double c = std::cos(t / 2), s = std::sin(t / 2);
  Eigen::Matrix2cd m;
  m << cplx(c, 0), cplx(-s, 0), cplx(s, 0), cplx(c, 0);
  return m;
}

inline Eigen::Matrix2cd rz_matrix(double t) {
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
  m(0, 0) = std::polar(1.0, -t / 2);
  m(1, 1) = std::polar(1.0, t / 2);
  return m;
}

// U3 as the rotation product R_Z(phi) R_X(-pi/2) R_Z(theta) R_X(pi/2) R_Z(lambda).
inline Eigen::Matrix2cd u3_matrix(double theta, double phi, double lambda) {
  static const Eigen::Matrix2cd rx_p = rx_matrix(std::numbers::pi / 2);
  static const Eigen::Matrix2cd rx_m = rx_matrix(-std::numbers::pi / 2);
  return rz_matrix(phi) * rx_m * rz_matrix(theta) * rx_p * rz_matrix(lambda);
}

// ---------------------------------------------------------------------------
// Application kernels. All operate in place on the raw amplitude vector.

inline void apply_1q(Vec& amp, int n, int reg, const Eigen::Matrix2cd& u) {
  const int bit = n - reg;
  const std::int64_t mask = std::int64_t{1} << bit;
  const std::int64_t lo = mask - 1;
  const std::int64_t hi = ~lo;
  const std::int64_t pairs = amp.size() >> 1;
  const cplx u00 = u(0, 0), u01 = u(0, 1), u10 = u(1, 0), u11 = u(1, 1);
  cplx* a = amp.data();
  for (std::int64_t i = 0; i < pairs; ++i) {
    const std::int64_t i0 = ((i & hi) << 1) | (i & lo);
    const std::int64_t i1 = i0 | mask;
    const cplx a0 = a[i0], a1 = a[i1];
    a[i0] = u00 * a0 + u01 * a1;
    a[i1] = u10 * a0 + u11 * a1;
  }
}

inline void apply_cnot(Vec& amp, int n, int control, int target) {
  const std::int64_t cm = std::int64_t{1} << (n - control);
  const std::int64_t tm = std::int64_t{1} << (n - target);
  cplx* a = amp.data();
  for (std::int64_t i = 0; i < amp.size(); ++i)
    if ((i & cm) && !(i & tm)) std::swap(a[i], a[i | tm]);
}

inline void apply_cz(Vec& amp, int n, int control, int target) {
  const std::int64_t cm = std::int64_t{1} << (n - control);
  const std::int64_t tm = std::int64_t{1} << (n - target);
  cplx* a = amp.data();
  for (std::int64_t i = 0; i < amp.size(); ++i)
    if ((i & cm) && (i & tm)) a[i] = -a[i];
}

// Dense m-register unitary on an ordered register list; regs[0] is the most
// significant bit of the sub-index, matching the global register ordering.
inline void apply_dense(Vec& amp, int n, std::span<const int> regs, const Mat& u) {
  const int m = static_cast<int>(regs.size());
  if (u.rows() != (std::int64_t{1} << m) || u.cols() != u.rows())
    throw std::invalid_argument("apply_dense: matrix dimension does not match register count");
  std::vector<std::int64_t> bit(m);
  std::int64_t regs_mask = 0;
  for (int t = 0; t < m; ++t) {
    bit[t] = std::int64_t{1} << (n - regs[t]);
    regs_mask |= bit[t];
  }
  const std::int64_t sub = std::int64_t{1} << m;
  Vec scratch(sub);
  cplx* a = amp.data();
  for (std::int64_t base = 0; base < amp.size(); ++base) {
    if (base & regs_mask) continue;  // enumerate indices with all touched bits clear
    for (std::int64_t j = 0; j < sub; ++j) {
      std::int64_t idx = base;
      for (int t = 0; t < m; ++t)
        if (j & (std::int64_t{1} << (m - 1 - t))) idx |= bit[t];
      scratch[j] = a[idx];
    }
    Vec out = u * scratch;
    for (std::int64_t j = 0; j < sub; ++j) {
      std::int64_t idx = base;
      for (int t = 0; t < m; ++t)
        if (j & (std::int64_t{1} << (m - 1 - t))) idx |= bit[t];
      a[idx] = out[j];
    }
  }
}

// Phase gate exp(-i t Z) on one register: diag(e^{-it}, e^{+it}).
// Note the full-angle generator (not the half-angle R_Z convention).
inline void apply_exp_z(Vec& amp, int n, int reg, double t) {
  const std::int64_t mask = std::int64_t{1} << (n - reg);
  const cplx p0 = std::polar(1.0, -t), p1 = std::polar(1.0, t);
  cplx* a = amp.data();
  for (std::int64_t i = 0; i < amp.size(); ++i) a[i] *= (i & mask) ? p1 : p0;
}

// ---------------------------------------------------------------------------
// Circuit construction and validation

inline void validate_circuit(const ParamCircuit& c) {
  if (c.width < 1) throw std::invalid_argument("circuit width must be >= 1");
  if (c.offset < 1) throw std::invalid_argument("circuit offset must be >= 1");
  std::vector<int> slot_uses(c.n_params, 0);
  for (const auto& g : c.gates) {
    if (static_cast<int>(g.param_slots.size()) != param_slot_count(g.kind))
      throw std::invalid_argument("gate param slot count does not match kind");
    std::vector<int> t = g.targets;
    std::sort(t.begin(), t.end());
    if (std::adjacent_find(t.begin(), t.end()) != t.end())
      throw std::invalid_argument("gate targets must be distinct");
    for (int reg : g.targets)
      if (reg < 1 || reg > c.width)
        throw std::invalid_argument("gate target outside circuit width");
    for (int s : g.param_slots) {
      if (s < 0 || s >= c.n_params)
        throw std::invalid_argument("gate parameter slot out of range");
      ++slot_uses[s];
    }
    if (g.kind == GateKind::FixedUnitary) {
      const std::int64_t d = std::int64_t{1} << g.targets.size();
      if (g.fixed.rows() != d || g.fixed.cols() != d)
        throw std::invalid_argument("FixedUnitary matrix dimension mismatch");
    }
  }
  for (int s = 0; s < c.n_params; ++s)
    if (slot_uses[s] != 1)
      throw std::invalid_argument("every parameter slot must be referenced exactly once");
}

// Hardware-efficient ansatz: a column of U3 on every register, then `depth`
// repetitions of [CNOT ladder on (1,2),(3,4),...; CNOT ladder on
// (2,3),(4,5),...; column of U3]. Controls sit on the lower register index.
// For width 1 the blocks degenerate to single U3 gates. The leading U3
// column is not part of the repeated block. n_params = 3 w (depth + 1).
inline ParamCircuit build_hea(int width, int depth) {
  if (width < 1) throw std::invalid_argument("build_hea: width must be >= 1");
  if (depth < 0) throw std::invalid_argument("build_hea: depth must be >= 0");
  ParamCircuit c;
  c.width = width;
  int slot = 0;
  auto u3_column = [&]() {
    for (int r = 1; r <= width; ++r) {
      c.gates.push_back(Gate{GateKind::U3, {r}, {slot, slot + 1, slot + 2}, {}});
      slot += 3;
    }
  };
  u3_column();
  for (int d = 0; d < depth; ++d) {
    for (int r = 1; r + 1 <= width; r += 2)
      c.gates.push_back(Gate{GateKind::CNOT, {r, r + 1}, {}, {}});
    for (int r = 2; r + 1 <= width; r += 2)
      c.gates.push_back(Gate{GateKind::CNOT, {r, r + 1}, {}, {}});
    u3_column();
  }
  c.n_params = slot;
  validate_circuit(c);
  return c;
}

// ---------------------------------------------------------------------------
// Circuit application

inline void apply_circuit_inplace(StateVector& s, const ParamCircuit& c,
                                  std::span<const double> params) {
  if (static_cast<int>(params.size()) != c.n_params)
    throw std::invalid_argument("apply_circuit: parameter count mismatch");
  if (c.offset < 1 || c.offset + c.width - 1 > s.n)
    throw std::invalid_argument("apply_circuit: circuit does not fit the register file");
  const int base = c.offset - 1;
  for (const auto& g : c.gates) {
    switch (g.kind) {
      case GateKind::RX:
        apply_1q(s.amp, s.n, base + g.targets[0], rx_matrix(params[g.param_slots[0]]));
        break;
      case GateKind::RY:
        apply_1q(s.amp, s.n, base + g.targets[0], ry_matrix(params[g.param_slots[0]]));
        break;
      case GateKind::RZ:
        apply_1q(s.amp, s.n, base + g.targets[0], rz_matrix(params[g.param_slots[0]]));
        break;
      case GateKind::U3:
        apply_1q(s.amp, s.n, base + g.targets[0],
                 u3_matrix(params[g.param_slots[0]], params[g.param_slots[1]],
                           params[g.param_slots[2]]));
        break;
      case GateKind::CNOT:
        apply_cnot(s.amp, s.n, base + g.targets[0], base + g.targets[1]);
        break;
      case GateKind::CZ:
        apply_cz(s.amp, s.n, base + g.targets[0], base + g.targets[1]);
        break;
      case GateKind::FixedUnitary: {
        std::vector<int> regs;
        regs.reserve(g.targets.size());
        for (int t : g.targets) regs.push_back(base + t);
        apply_dense(s.amp, s.n, regs, g.fixed);
        break;
      }
    }
  }
}

inline StateVector apply_circuit(const StateVector& s, const ParamCircuit& c,
                                 std::span<const double> params) {
  StateVector out = s;
  apply_circuit_inplace(out, c, params);
  return out;
}

// Dense 2^n x 2^n matrix of the circuit on an n-register file (test oracle
// and model export; column j = circuit applied to basis state j).
inline Mat circuit_unitary(const ParamCircuit& c, std::span<const double> params, int n) {
  const std::int64_t d = dim_of(n);
  Mat u(d, d);
  for (std::int64_t j = 0; j < d; ++j) {
    StateVector basis;
    basis.n = n;
    basis.amp = Vec::Zero(d);
    basis.amp[j] = 1.0;
    apply_circuit_inplace(basis, c, params);
    u.col(j) = basis.amp;
  }
  return u;
}

// ---------------------------------------------------------------------------
// Haar sampling

// Haar-distributed d x d unitary: QR of a complex Ginibre matrix with the
// R-diagonal phase correction (Mezzadri construction).
inline Mat haar_unitary(int dim, std::mt19937_64& rng) {
  if (dim < 2) throw std::invalid_argument("haar_unitary: dimension must be >= 2");
  std::normal_distribution<double> g(0.0, 1.0);
  Mat z(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) z(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<Mat> qr(z);
  Mat q = qr.householderQ();
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < dim; ++j) {
    const cplx rjj = r(j, j);
    const double a = std::abs(rjj);
    q.col(j) *= (a == 0.0) ? cplx(1, 0) : rjj / a;
  }
  return q;
}

// ---------------------------------------------------------------------------
// Parameter shift

// True when the slot's gate is of the form exp(-i theta Omega / 2) with
// Omega^2 = I (all rotation gates and each U3 sub-angle).
inline bool slot_is_shiftable(const ParamCircuit& c, int slot) {
  for (const auto& g : c.gates)
    for (int s : g.param_slots)
      if (s == slot)
        return g.kind == GateKind::RX || g.kind == GateKind::RY ||
               g.kind == GateKind::RZ || g.kind == GateKind::U3;
  return false;
}

// Copies of `params` with slot mu shifted by +pi/2 and -pi/2.
inline std::pair<std::vector<double>, std::vector<double>> parameter_shift_pair(
    const ParamCircuit& c, std::span<const double> params, int slot) {
  if (slot < 0 || slot >= c.n_params)
    throw std::out_of_range("parameter_shift_pair: slot out of range");
  if (!slot_is_shiftable(c, slot))
    throw std::invalid_argument("parameter_shift_pair: gate kind does not admit the shift rule");
  std::vector<double> plus(params.begin(), params.end());
  std::vector<double> minus(params.begin(), params.end());
  plus[slot] += std::numbers::pi / 2;
  minus[slot] -= std::numbers::pi / 2;
  return {std::move(plus), std::move(minus)};
}

// ---------------------------------------------------------------------------
// JSON form: {width, offset, gates:[{kind, targets, param_slots}], n_params}

inline nlohmann::json circuit_to_json(const ParamCircuit& c) {
  nlohmann::json j;
  j["width"] = c.width;
  j["offset"] = c.offset;
  j["n_params"] = c.n_params;
  j["gates"] = nlohmann::json::array();
  for (const auto& g : c.gates) {
    nlohmann::json gj;
    gj["kind"] = gate_kind_name(g.kind);
    gj["targets"] = g.targets;
    gj["param_slots"] = g.param_slots;
    if (g.kind == GateKind::FixedUnitary) {
      auto& re = gj["fixed_re"] = nlohmann::json::array();
      auto& im = gj["fixed_im"] = nlohmann::json::array();
      for (Eigen::Index r = 0; r < g.fixed.rows(); ++r) {
        nlohmann::json rr = nlohmann::json::array(), ri = nlohmann::json::array();
        for (Eigen::Index cc = 0; cc < g.fixed.cols(); ++cc) {
          rr.push_back(g.fixed(r, cc).real());
          ri.push_back(g.fixed(r, cc).imag());
        }
        re.push_back(std::move(rr));
        im.push_back(std::move(ri));
      }
    }
    j["gates"].push_back(std::move(gj));
  }
  return j;
}

inline ParamCircuit circuit_from_json(const nlohmann::json& j) {
  ParamCircuit c;
  c.width = j.at("width").get<int>();
  c.offset = j.at("offset").get<int>();
  c.n_params = j.at("n_params").get<int>();
  for (const auto& gj : j.at("gates")) {
    Gate g;
    g.kind = gate_kind_from_name(gj.at("kind").get<std::string>());
    g.targets = gj.at("targets").get<std::vector<int>>();
    g.param_slots = gj.at("param_slots").get<std::vector<int>>();
    if (g.kind == GateKind::FixedUnitary) {
      const auto& re = gj.at("fixed_re");
      const auto& im = gj.at("fixed_im");
      const auto rows = re.size();
      g.fixed.resize(rows, rows);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t cc = 0; cc < rows; ++cc)
          g.fixed(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(cc)) =
              cplx(re[r][cc].get<double>(), im[r][cc].get<double>());
    }
    c.gates.push_back(std::move(g));
  }
  validate_circuit(c);
  return c;
}

}  // namespace qssm
