#include "qtraj/scheme.hpp"

#include <cmath>
#include <numbers>

#include "qtraj/error.hpp"

namespace qtraj {

std::string_view to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::Direct: return "direct";
    case SchemeKind::Adaptive: return "adaptive";
    case SchemeKind::HomodyneX: return "homodyne-x";
    case SchemeKind::HomodyneY: return "homodyne-y";
    case SchemeKind::Heterodyne: return "heterodyne";
  }
  return "unknown";
}

std::optional<SchemeKind> parse_scheme(std::string_view name) {
  for (SchemeKind k : kAllSchemes) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

SchemeConfig SchemeConfig::make(SchemeKind kind) {
  SchemeConfig s;
  s.kind = kind;
  s.phi = kind == SchemeKind::HomodyneY ? std::numbers::pi / 2.0 : 0.0;
  return s;
}

void SchemeConfig::validate() const {
  if (!(phi >= 0.0 && phi < 2.0 * std::numbers::pi)) {
    throw ConfigError("LO phase must lie in [0, 2 pi)");
  }
  if (!(mu_magnitude > 0.0)) throw ConfigError("mu_magnitude must be positive");
}

PauliOp no_jump_generator(double omega, double mu, const SystemParams& params) {
  const double g = params.gamma;
  const Complex i(0.0, 1.0);
  const PauliOp sigma = PauliOp::lowering();
  const PauliOp excited = adjoint(sigma) * sigma;
  return (i * (omega / 2.0)) * PauliOp::sigma_x() + (g / 2.0) * excited +
         (mu * g) * sigma + (g * mu * mu / 2.0) * PauliOp::identity();
}

Transfer StepMaps::diffusive_inner(double re, double im) const {
  Transfer t;
  const double i2 = re * re + im * im;
  for (int k = 0; k < 16; ++k) {
    t.m[k] = base.m[k] + re * lin_re.m[k] + im * lin_im.m[k] + i2 * quad.m[k];
  }
  return t;
}

Bloch4 StepMaps::diffusive(const BlochState& s, double re, double im) const {
  return rotate_x(diffusive_inner(re, im).apply(s), rot_cos, rot_sin);
}

StepMaps build_step_maps(double omega, const SchemeConfig& scheme,
                         const SystemParams& params, double dt) {
  const double g = params.gamma;
  const Complex i(0.0, 1.0);
  const PauliOp sigma = PauliOp::lowering();
  const PauliOp one = PauliOp::identity();
  StepMaps maps;

  if (scheme.is_jump()) {
    const double mu_mag = scheme.kind == SchemeKind::Adaptive ? scheme.mu_magnitude : 0.0;
    for (int b = 0; b < 2; ++b) {
      const double mu = b == 0 ? mu_mag : -mu_mag;
      const PauliOp zeta = no_jump_generator(omega, mu, params);
      maps.no_jump[b] = sandwich(expm(Complex(-dt) * zeta));
      maps.jump[b] = sandwich(std::sqrt(g * dt) * (sigma + mu * one));
    }
    return maps;
  }

  const PauliOp c = scheme.kind == SchemeKind::Heterodyne
                        ? sigma
                        : std::exp(i * scheme.phi) * sigma;
  const PauliOp a = one - (g * dt / 2.0) * (adjoint(c) * c);
  const PauliOp b = std::sqrt(g) * dt * c;
  maps.base = sandwich(a);
  maps.lin_re = sandwich(b, a);
  if (scheme.kind == SchemeKind::Heterodyne) maps.lin_im = sandwich(-i * b, a);
  maps.quad = sandwich(b);
  maps.rot_cos = std::cos(omega * dt);
  maps.rot_sin = std::sin(omega * dt);
  return maps;
}

}  // namespace qtraj
