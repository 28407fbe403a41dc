#include "qtraj/pauli.hpp"

#include <cmath>

namespace qtraj {

PauliOp operator+(const PauliOp& a, const PauliOp& b) {
  return {a.c0 + b.c0, a.cx + b.cx, a.cy + b.cy, a.cz + b.cz};
}

PauliOp operator-(const PauliOp& a, const PauliOp& b) {
  return {a.c0 - b.c0, a.cx - b.cx, a.cy - b.cy, a.cz - b.cz};
}

PauliOp operator*(Complex s, const PauliOp& a) {
  return {s * a.c0, s * a.cx, s * a.cy, s * a.cz};
}

// (p0 + p.s)(q0 + q.s) = p0 q0 + p.q + (p0 q + q0 p + i p x q).s
PauliOp operator*(const PauliOp& p, const PauliOp& q) {
  const Complex i(0.0, 1.0);
  PauliOp r;
  r.c0 = p.c0 * q.c0 + p.cx * q.cx + p.cy * q.cy + p.cz * q.cz;
  r.cx = p.c0 * q.cx + q.c0 * p.cx + i * (p.cy * q.cz - p.cz * q.cy);
  r.cy = p.c0 * q.cy + q.c0 * p.cy + i * (p.cz * q.cx - p.cx * q.cz);
  r.cz = p.c0 * q.cz + q.c0 * p.cz + i * (p.cx * q.cy - p.cy * q.cx);
  return r;
}

PauliOp adjoint(const PauliOp& a) {
  return {std::conj(a.c0), std::conj(a.cx), std::conj(a.cy), std::conj(a.cz)};
}

PauliOp expm(const PauliOp& a) {
  const Complex k2 = a.cx * a.cx + a.cy * a.cy + a.cz * a.cz;
  Complex ch;
  Complex shc;  // sinh(k) / k
  if (std::abs(k2) < 1e-6) {
    ch = 1.0 + k2 / 2.0 + k2 * k2 / 24.0 + k2 * k2 * k2 / 720.0;
    shc = 1.0 + k2 / 6.0 + k2 * k2 / 120.0 + k2 * k2 * k2 / 5040.0;
  } else {
    // cosh and sinh(k)/k are even in k, so the sqrt branch does not matter.
    const Complex k = std::sqrt(k2);
    ch = std::cosh(k);
    shc = std::sinh(k) / k;
  }
  const Complex scale = std::exp(a.c0);
  return {scale * ch, scale * shc * a.cx, scale * shc * a.cy, scale * shc * a.cz};
}

Bloch4 Transfer::apply(const Bloch4& a) const {
  Bloch4 out{};
  for (int r = 0; r < 4; ++r) {
    out[r] = m[4 * r] * a[0] + m[4 * r + 1] * a[1] + m[4 * r + 2] * a[2] + m[4 * r + 3] * a[3];
  }
  return out;
}

Bloch4 Transfer::apply(const BlochState& s) const {
  Bloch4 out{};
  for (int r = 0; r < 4; ++r) {
    out[r] = m[4 * r] + m[4 * r + 1] * s.x + m[4 * r + 2] * s.y + m[4 * r + 3] * s.z;
  }
  return out;
}

Transfer& Transfer::operator+=(const Transfer& o) {
  for (int i = 0; i < 16; ++i) m[i] += o.m[i];
  return *this;
}

Transfer operator*(double s, Transfer t) {
  for (auto& v : t.m) v *= s;
  return t;
}

Transfer compose(const Transfer& outer, const Transfer& inner) {
  Transfer out;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += outer(r, k) * inner(k, c);
      out(r, c) = acc;
    }
  }
  return out;
}

namespace {

// Basis states rho = e_k / 2 for the columns of a Transfer.
PauliOp basis_half(int k) {
  switch (k) {
    case 0: return 0.5 * PauliOp::identity();
    case 1: return 0.5 * PauliOp::sigma_x();
    case 2: return 0.5 * PauliOp::sigma_y();
    default: return 0.5 * PauliOp::sigma_z();
  }
}

}  // namespace

Transfer sandwich(const PauliOp& k, const PauliOp& l) {
  // K rho L^dag + h.c. has Pauli coefficients 2 Re(r), and a = 2 * coefficients.
  const PauliOp l_dag = adjoint(l);
  Transfer t;
  for (int col = 0; col < 4; ++col) {
    const PauliOp r = k * basis_half(col) * l_dag;
    t(0, col) = 4.0 * r.c0.real();
    t(1, col) = 4.0 * r.cx.real();
    t(2, col) = 4.0 * r.cy.real();
    t(3, col) = 4.0 * r.cz.real();
  }
  return t;
}

Transfer sandwich(const PauliOp& k) { return 0.5 * sandwich(k, k); }

Bloch4 effect(const PauliOp& k) {
  const PauliOp e = adjoint(k) * k;
  return {e.c0.real(), e.cx.real(), e.cy.real(), e.cz.real()};
}

}  // namespace qtraj
