#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "qtraj/bloch.hpp"
#include "qtraj/pauli.hpp"

namespace qtraj {

enum class SchemeKind { Direct, Adaptive, HomodyneX, HomodyneY, Heterodyne };

inline constexpr std::array<SchemeKind, 5> kAllSchemes{
    SchemeKind::Direct, SchemeKind::Adaptive, SchemeKind::HomodyneX,
    SchemeKind::HomodyneY, SchemeKind::Heterodyne};

std::string_view to_string(SchemeKind kind);
/// Accepts the names produced by to_string ("direct", "homodyne-y", ...).
std::optional<SchemeKind> parse_scheme(std::string_view name);

struct SchemeConfig {
  SchemeKind kind = SchemeKind::Direct;
  /// Local-oscillator phase; the homodyne current measures x cos(phi) + y sin(phi).
  double phi = 0.0;
  /// |mu| for the adaptive scheme; the jump operator is sqrt(gamma dt)(sigma + mu).
  double mu_magnitude = 0.5;

  /// Canonical configuration for a kind (phi = 0 or pi/2, |mu| = 1/2).
  static SchemeConfig make(SchemeKind kind);

  bool is_jump() const { return kind == SchemeKind::Direct || kind == SchemeKind::Adaptive; }
  void validate() const;
};

/// Index of the adaptive LO branch in StepMaps: +mu -> 0, -mu -> 1.
inline int mu_branch(int mu_sign) { return mu_sign > 0 ? 0 : 1; }

/// Per-step maps for one Rabi frequency, compiled once per (omega, scheme, dt).
///
/// Jump schemes: no_jump[b] is rho -> exp(-zeta dt) rho exp(-zeta^dag dt) with
///   zeta = i Omega sx / 2 + gamma sigma^dag sigma / 2 + mu gamma sigma + gamma mu^2 / 2,
/// and jump[b] is rho -> gamma dt (sigma + mu) rho (sigma + mu)^dag. Direct has mu = 0
/// and uses b = 0 only.
///
/// Diffusive schemes: one step with current I maps
///   rho -> M_I rho M_I^dag,  M_I = U (1 - gamma dt c^dag c / 2 + sqrt(gamma) dt I^(*) c),
/// U the exact Rabi rotation over dt, c = e^{i phi} sigma for homodyne and
/// c = sigma (paired with I^*) for heterodyne. The bracket does not depend on
/// Omega; expanded in I = re + i im it is
///   base + re * lin_re + im * lin_im + (re^2 + im^2) * quad,
/// and U acts as a rotation of (y, z) by the angle Omega dt.
struct StepMaps {
  std::array<Transfer, 2> no_jump{};
  std::array<Transfer, 2> jump{};
  Transfer base{};
  Transfer lin_re{};
  Transfer lin_im{};
  Transfer quad{};
  double rot_cos = 1.0;
  double rot_sin = 0.0;

  /// The Omega-independent part of the diffusive map for one current sample.
  Transfer diffusive_inner(double re, double im) const;
  /// Full diffusive map applied to the normalized state s.
  Bloch4 diffusive(const BlochState& s, double re, double im) const;
};

/// Rotation generated by H = Omega sx / 2 over an angle with the given cos/sin.
inline Bloch4 rotate_x(const Bloch4& a, double c, double s) {
  return {a[0], a[1], c * a[2] - s * a[3], s * a[2] + c * a[3]};
}

StepMaps build_step_maps(double omega, const SchemeConfig& scheme,
                         const SystemParams& params, double dt);

/// zeta for the jump schemes (no-jump generator), exposed for tests.
PauliOp no_jump_generator(double omega, double mu, const SystemParams& params);

}  // namespace qtraj
