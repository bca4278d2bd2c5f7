// Exact pure-state simulation of small qubit registers.
//
// Qubit ordering is little-endian: qubit q is bit q of the basis index, so the
// computational-basis outcome s has bit q equal to the readout of qubit q.
// Two-qubit gate matrices act on the local index  bit(t0) | bit(t1) << 1,
// where (t0, t1) = gate.targets in the order given.

#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "vqs/errors.hpp"

namespace vqs::qsim {

using cplx = std::complex<double>;
using Mat2 = std::array<cplx, 4>;   // row-major
using Mat4 = std::array<cplx, 16>;  // row-major

inline constexpr int kMaxQubits = 12;
inline constexpr double kUnitaryTol = 1e-10;

class StateVector {
 public:
  StateVector(int n, std::vector<cplx> amps) : n_(n), amps_(std::move(amps)) {
    if (n_ < 1 || n_ > kMaxQubits) {
      throw ConfigError("qubit count " + std::to_string(n_) + " outside [1, 12]");
    }
    if (amps_.size() != (std::size_t{1} << n_)) {
      throw ConfigError("amplitude vector length must be 2^n");
    }
  }

  int num_qubits() const { return n_; }
  std::size_t dim() const { return amps_.size(); }

  std::span<const cplx> amps() const { return amps_; }
  std::span<cplx> amps() { return amps_; }
  const cplx& operator[](std::size_t i) const { return amps_[i]; }
  cplx& operator[](std::size_t i) { return amps_[i]; }

  double norm_squared() const {
    double s = 0.0;
    for (const auto& a : amps_) s += std::norm(a);
    return s;
  }

  friend bool operator==(const StateVector&, const StateVector&) = default;

 private:
  int n_;
  std::vector<cplx> amps_;
};

inline StateVector init_zero_state(int n) {
  if (n < 1 || n > kMaxQubits) {
    throw ConfigError("qubit count " + std::to_string(n) + " outside [1, 12]");
  }
  std::vector<cplx> amps(std::size_t{1} << n);
  amps[0] = 1.0;
  return StateVector(n, std::move(amps));
}

class GateOp {
 public:
  static GateOp single(int target, const Mat2& m) {
    GateOp g;
    g.targets_ = {target};
    g.matrix_.assign(m.begin(), m.end());
    return g;
  }

  static GateOp two(int t0, int t1, const Mat4& m) {
    GateOp g;
    g.targets_ = {t0, t1};
    g.matrix_.assign(m.begin(), m.end());
    return g;
  }

  int arity() const { return static_cast<int>(targets_.size()); }
  std::span<const int> targets() const { return targets_; }
  std::span<const cplx> matrix() const { return matrix_; }
  int matrix_dim() const { return 1 << arity(); }

  bool is_unitary(double tol = kUnitaryTol) const {
    const int d = matrix_dim();
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        cplx acc = 0.0;
        for (int k = 0; k < d; ++k) acc += std::conj(matrix_[k * d + i]) * matrix_[k * d + j];
        if (std::abs(acc - (i == j ? 1.0 : 0.0)) > tol) return false;
      }
    }
    return true;
  }

 private:
  GateOp() = default;
  std::vector<int> targets_;
  std::vector<cplx> matrix_;
};

namespace gates {

inline Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
inline Mat2 x() { return {0.0, 1.0, 1.0, 0.0}; }
inline Mat2 h() {
  const double r = std::numbers::sqrt2 / 2.0;
  return {r, r, r, -r};
}
// exp(-i a Z / 2)
inline Mat2 rz(double a) {
  return {std::polar(1.0, -a / 2.0), 0.0, 0.0, std::polar(1.0, a / 2.0)};
}
// exp(-i b Y / 2)
inline Mat2 ry(double b) {
  const double c = std::cos(b / 2.0), s = std::sin(b / 2.0);
  return {c, -s, s, c};
}
inline Mat2 mul(const Mat2& a, const Mat2& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}
// Rz(a) Ry(b) Rz(c): Rz(c) acts first.
inline Mat2 euler_zyz(double a, double b, double c) { return mul(rz(a), mul(ry(b), rz(c))); }

inline Mat4 cz() {
  Mat4 m{};
  m[0] = m[5] = m[10] = 1.0;
  m[15] = -1.0;
  return m;
}
// exp(-i t Z⊗Z / 2)
inline Mat4 zz(double t) {
  Mat4 m{};
  const cplx even = std::polar(1.0, -t / 2.0), odd = std::polar(1.0, t / 2.0);
  m[0] = even;
  m[5] = odd;
  m[10] = odd;
  m[15] = even;
  return m;
}

}  // namespace gates

// In-place application over strided amplitude pairs (1 qubit) or quads (2
// qubits). O(2^n) per gate; no full-register matrix is ever formed.
inline void apply_gate_inplace(StateVector& state, const GateOp& gate) {
  const int n = state.num_qubits();
  for (int t : gate.targets()) {
    if (t < 0 || t >= n) throw IndexError("gate target " + std::to_string(t) + " out of range");
  }
  if (gate.arity() == 2 && gate.targets()[0] == gate.targets()[1]) {
    throw IndexError("two-qubit gate targets must be distinct");
  }
  if (!gate.is_unitary()) throw ValidationError("gate matrix is not unitary");

  auto amps = state.amps();
  const auto m = gate.matrix();
  const std::size_t dim = state.dim();
  if (gate.arity() == 1) {
    const std::size_t bit = std::size_t{1} << gate.targets()[0];
    for (std::size_t i = 0; i < dim; ++i) {
      if (i & bit) continue;
      const cplx a0 = amps[i], a1 = amps[i | bit];
      amps[i] = m[0] * a0 + m[1] * a1;
      amps[i | bit] = m[2] * a0 + m[3] * a1;
    }
    return;
  }
  const std::size_t b0 = std::size_t{1} << gate.targets()[0];
  const std::size_t b1 = std::size_t{1} << gate.targets()[1];
  for (std::size_t i = 0; i < dim; ++i) {
    if (i & (b0 | b1)) continue;
    const std::array<std::size_t, 4> idx{i, i | b0, i | b1, i | b0 | b1};
    std::array<cplx, 4> in{amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]};
    for (int r = 0; r < 4; ++r) {
      cplx acc = 0.0;
      for (int c = 0; c < 4; ++c) acc += m[r * 4 + c] * in[c];
      amps[idx[r]] = acc;
    }
  }
}

inline StateVector apply_gate(StateVector state, const GateOp& gate) {
  apply_gate_inplace(state, gate);
  return state;
}

// p(s) = |amps[s]|^2 in the computational basis.
inline std::vector<double> outcome_probabilities(const StateVector& state) {
  std::vector<double> p(state.dim());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(state[i]);
  return p;
}

}  // namespace vqs::qsim
