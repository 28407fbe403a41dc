#pragma once

// Operators on the two-level system in the Pauli basis, and their compilation
// into real 4x4 maps on unnormalized Bloch vectors.
//
// An unnormalized state rho = (a0 + a1 sx + a2 sy + a3 sz) / 2 is carried as
// Bloch4 a = (a0, a1, a2, a3); a0 = Tr[rho]. Every map used by the simulator
// and the filter (jump, no-jump, diffusive step) is of the form
// rho -> sum K rho L^dag, which is linear in a, so it becomes a Transfer.

#include <array>
#include <complex>

#include "qtraj/bloch.hpp"

namespace qtraj {

using Complex = std::complex<double>;
using Bloch4 = std::array<double, 4>;

/// c0 * 1 + cx * sx + cy * sy + cz * sz.
struct PauliOp {
  Complex c0{};
  Complex cx{};
  Complex cy{};
  Complex cz{};

  static PauliOp identity() { return {1.0, 0.0, 0.0, 0.0}; }
  static PauliOp sigma_x() { return {0.0, 1.0, 0.0, 0.0}; }
  static PauliOp sigma_y() { return {0.0, 0.0, 1.0, 0.0}; }
  static PauliOp sigma_z() { return {0.0, 0.0, 0.0, 1.0}; }
  /// sigma = (sx - i sy) / 2.
  static PauliOp lowering() { return {0.0, 0.5, Complex(0.0, -0.5), 0.0}; }
};

PauliOp operator+(const PauliOp& a, const PauliOp& b);
PauliOp operator-(const PauliOp& a, const PauliOp& b);
PauliOp operator*(Complex s, const PauliOp& a);
PauliOp operator*(const PauliOp& a, const PauliOp& b);
PauliOp adjoint(const PauliOp& a);

/// Matrix exponential, closed form exp(c0) (cosh k + sinh(k)/k (c.sigma)),
/// k^2 = c.c.
PauliOp expm(const PauliOp& a);

/// Row-major real 4x4 map acting on Bloch4.
struct Transfer {
  std::array<double, 16> m{};

  double operator()(int row, int col) const { return m[4 * row + col]; }
  double& operator()(int row, int col) { return m[4 * row + col]; }

  Bloch4 apply(const Bloch4& a) const;
  /// Applies to the normalized vector (1, x, y, z).
  Bloch4 apply(const BlochState& s) const;

  Transfer& operator+=(const Transfer& o);
  friend Transfer operator*(double s, Transfer t);
  friend Transfer compose(const Transfer& outer, const Transfer& inner);
};

/// rho -> K rho K^dag.
Transfer sandwich(const PauliOp& k);
/// rho -> K rho L^dag + L rho K^dag.
Transfer sandwich(const PauliOp& k, const PauliOp& l);

/// Coefficients (e0, e1, e2, e3) of the effect K^dag K, so that
/// Tr[K rho K^dag] = e . a. Equal to row 0 of sandwich(k).
Bloch4 effect(const PauliOp& k);

inline Bloch4 to_bloch4(const BlochState& s) { return {1.0, s.x, s.y, s.z}; }

}  // namespace qtraj
