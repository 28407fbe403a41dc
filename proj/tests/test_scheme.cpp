#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qtraj/error.hpp"
#include "qtraj/scheme.hpp"

using namespace qtraj;

namespace {

const SystemParams kParams{1.0, 10.0};

// Operator norm of the Hermitian (e0 - 1) + e.sigma.
double completeness_defect(const Bloch4& e) {
  return std::abs(e[0] - 1.0) + std::sqrt(e[1] * e[1] + e[2] * e[2] + e[3] * e[3]);
}

Bloch4 add(const Bloch4& a, const Bloch4& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]}; }

Bloch4 master_step(const BlochState& s, double omega, double dt) {
  const BlochState out = master_evolve(s, omega, kParams, dt, dt / 16.0);
  return {1.0, out.x, out.y, out.z};
}

}  // namespace

TEST(scheme, names_round_trip) {
  for (SchemeKind k : kAllSchemes) EXPECT_EQ(parse_scheme(to_string(k)), k);
  EXPECT_FALSE(parse_scheme("homodyne"));
  EXPECT_EQ(SchemeConfig::make(SchemeKind::HomodyneY).phi, std::numbers::pi / 2.0);
  EXPECT_EQ(SchemeConfig::make(SchemeKind::HomodyneX).phi, 0.0);
  EXPECT_TRUE(SchemeConfig::make(SchemeKind::Adaptive).is_jump());
  EXPECT_FALSE(SchemeConfig::make(SchemeKind::Heterodyne).is_jump());
}

TEST(scheme, validate) {
  SchemeConfig s = SchemeConfig::make(SchemeKind::Adaptive);
  s.mu_magnitude = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = SchemeConfig::make(SchemeKind::HomodyneX);
  s.phi = 2.0 * std::numbers::pi;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(step_maps, jump_effects_complete_to_second_order) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> omega(-10.0, 10.0);
  std::uniform_real_distribution<double> mu(0.01, 1.0);
  for (double dt : {1e-3, 1e-2}) {
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      SchemeConfig s = SchemeConfig::make(SchemeKind::Adaptive);
      s.mu_magnitude = mu(rng);
      const StepMaps m = build_step_maps(omega(rng), s, kParams, dt);
      for (int b = 0; b < 2; ++b) {
        Bloch4 e0, e1;
        for (int c = 0; c < 4; ++c) {
          e0[c] = m.no_jump[b](0, c);
          e1[c] = m.jump[b](0, c);
        }
        worst = std::max(worst, completeness_defect(add(e0, e1)));
      }
    }
    EXPECT_LE(worst, 10.0 * dt * dt) << "dt=" << dt;
  }
}

TEST(step_maps, direct_probabilities) {
  const double dt = 1e-3;
  const StepMaps m = build_step_maps(5.0, SchemeConfig::make(SchemeKind::Direct), kParams, dt);
  const BlochState ss = steady_state(5.0, kParams);
  EXPECT_NEAR(m.jump[0].apply(ss)[0] / dt, 25.0 / 51.0, 1e-13);
  EXPECT_EQ(m.jump[0].apply(kGroundState)[0], 0.0);
  const Bloch4 after = m.jump[0].apply(BlochState{0.3, 0.2, 0.4});
  EXPECT_NEAR(after[3] / after[0], -1.0, 1e-15);
}

TEST(step_maps, adaptive_rate_from_ground) {
  const double dt = 1e-3;
  const StepMaps m = build_step_maps(0.0, SchemeConfig::make(SchemeKind::Adaptive), kParams, dt);
  EXPECT_NEAR(m.jump[mu_branch(1)].apply(kGroundState)[0] / dt, 0.25, 1e-15);
  EXPECT_NEAR(m.jump[mu_branch(-1)].apply(kGroundState)[0] / dt, 0.25, 1e-15);
}

TEST(step_maps, no_jump_generator_first_order) {
  // exp(-zeta dt) and 1 - zeta dt agree up to O(dt^2).
  const PauliOp zeta = no_jump_generator(7.0, 0.5, kParams);
  for (double dt : {1e-2, 1e-3}) {
    const PauliOp diff = expm(Complex(-dt) * zeta) - (PauliOp::identity() - Complex(dt) * zeta);
    const double size = std::abs(diff.c0) + std::abs(diff.cx) + std::abs(diff.cy) + std::abs(diff.cz);
    EXPECT_LE(size, 30.0 * dt * dt);
  }
}

TEST(step_maps, jump_schemes_average_to_master_equation) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const double dt = 1e-3;
  for (SchemeKind kind : {SchemeKind::Direct, SchemeKind::Adaptive}) {
    for (double omega : {-9.0, 0.0, 5.0}) {
      const StepMaps m = build_step_maps(omega, SchemeConfig::make(kind), kParams, dt);
      for (int t = 0; t < 10; ++t) {
        const BlochState s{u(rng), u(rng), u(rng)};
        const Bloch4 ref = master_step(s, omega, dt);
        for (int b = 0; b < 2; ++b) {
          const Bloch4 avg = add(m.no_jump[b].apply(s), m.jump[b].apply(s));
          for (int r = 0; r < 4; ++r) EXPECT_NEAR(avg[r], ref[r], 50.0 * dt * dt);
        }
      }
    }
  }
}

TEST(step_maps, diffusive_schemes_average_to_master_equation) {
  // With I ostensibly Gaussian (mean 0, E|I|^2 = 1/dt), the averaged map is
  // the rotation of base + quad / dt.
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const double dt = 1e-3;
  for (SchemeKind kind : {SchemeKind::HomodyneX, SchemeKind::HomodyneY, SchemeKind::Heterodyne}) {
    for (double omega : {-9.0, 0.0, 5.0}) {
      const StepMaps m = build_step_maps(omega, SchemeConfig::make(kind), kParams, dt);
      for (int t = 0; t < 10; ++t) {
        const BlochState s{u(rng), u(rng), u(rng)};
        const Bloch4 base = m.base.apply(s);
        const Bloch4 quad = m.quad.apply(s);
        Bloch4 avg;
        for (int r = 0; r < 4; ++r) avg[r] = base[r] + quad[r] / dt;
        avg = rotate_x(avg, m.rot_cos, m.rot_sin);
        const Bloch4 ref = master_step(s, omega, dt);
        for (int r = 0; r < 4; ++r) EXPECT_NEAR(avg[r], ref[r], 50.0 * dt * dt);
      }
    }
  }
}

TEST(step_maps, rotation_matches_hamiltonian) {
  const double omega = 3.3, dt = 1e-2;
  const StepMaps m = build_step_maps(omega, SchemeConfig::make(SchemeKind::HomodyneX), kParams, dt);
  const Complex i(0.0, 1.0);
  const Transfer u = sandwich(expm((-i * (omega * dt / 2.0)) * PauliOp::sigma_x()));
  const Bloch4 a{1.0, 0.2, -0.5, 0.4};
  const Bloch4 ref = u.apply(a);
  const Bloch4 got = rotate_x(a, m.rot_cos, m.rot_sin);
  for (int r = 0; r < 4; ++r) EXPECT_NEAR(got[r], ref[r], 1e-15);
}

TEST(step_maps, homodyne_trace_multiplier) {
  // Tr[M_I rho M_I^dag] = 1 + sqrt(gamma) <X> I dt + gamma P_e dt (I^2 dt - 1) + O(dt^2);
  // the last term vanishes under the Ito rule I^2 dt -> 1.
  const double dt = 1e-4;
  for (SchemeKind kind : {SchemeKind::HomodyneX, SchemeKind::HomodyneY}) {
    const SchemeConfig sc = SchemeConfig::make(kind);
    const StepMaps m = build_step_maps(2.0, sc, kParams, dt);
    const BlochState s{0.6, -0.3, 0.2};
    const double quadrature = s.x * std::cos(sc.phi) + s.y * std::sin(sc.phi);
    const double current = 3.0;
    const double tr = m.diffusive(s, current, 0.0)[0];
    const double pe = (1.0 + s.z) / 2.0;
    EXPECT_NEAR(tr, 1.0 + quadrature * current * dt + pe * dt * (current * current * dt - 1.0),
                10.0 * dt * dt);
  }
}

TEST(step_maps, heterodyne_trace_multiplier) {
  // 1 + 2 sqrt(gamma) Re(I^* <sigma>) dt + gamma P_e dt (|I|^2 dt - 1) + O(dt^2).
  const double dt = 1e-4;
  const StepMaps m = build_step_maps(2.0, SchemeConfig::make(SchemeKind::Heterodyne), kParams, dt);
  const BlochState s{0.6, -0.3, 0.2};
  const Complex sig(s.x / 2.0, -s.y / 2.0);
  const Complex current(2.0, -1.5);
  const double tr = m.diffusive(s, current.real(), current.imag())[0];
  const double pe = (1.0 + s.z) / 2.0;
  EXPECT_NEAR(tr, 1.0 + 2.0 * (std::conj(current) * sig).real() * dt +
                      pe * dt * (std::norm(current) * dt - 1.0),
              10.0 * dt * dt);
}
