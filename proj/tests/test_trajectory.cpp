#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "qtraj/error.hpp"
#include "qtraj/trajectory.hpp"

using namespace qtraj;

namespace {

const SystemParams kParams{1.0, 10.0};

struct Moments {
  double mean = 0.0;
  double var = 0.0;
  double se = 0.0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  const double n = static_cast<double>(v.size());
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  for (double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var /= (n - 1.0);
  m.se = std::sqrt(m.var / n);
  return m;
}

// Draws n current samples from a fixed state.
std::vector<Complex> currents(SchemeKind kind, const BlochState& s, double dt, int n) {
  const Stepper stepper(0.0, SchemeConfig::make(kind), kParams, dt);
  Rng rng(123);
  std::vector<Complex> out;
  for (int i = 0; i < n; ++i) out.push_back(stepper.diffusive_step(s, rng).observed.current);
  return out;
}

std::vector<double> reals(const std::vector<Complex>& v) {
  std::vector<double> r;
  for (auto c : v) r.push_back(c.real());
  return r;
}

std::vector<double> imags(const std::vector<Complex>& v) {
  std::vector<double> r;
  for (auto c : v) r.push_back(c.imag());
  return r;
}

}  // namespace

TEST(jump_step, ground_state_does_not_emit) {
  const Stepper stepper(0.0, SchemeConfig::make(SchemeKind::Direct), kParams, 1e-3);
  Rng rng(1);
  BlochState s = kGroundState;
  for (int k = 0; k < 10000; ++k) {
    const StepOutcome out = stepper.jump_step(s, 1, rng);
    ASSERT_EQ(out.observed.jump, 0);
    s = out.state;
  }
  EXPECT_EQ(s, kGroundState);
}

TEST(jump_step, direct_collapse_to_ground) {
  const Stepper stepper(3.0, SchemeConfig::make(SchemeKind::Direct), kParams, 1e-2);
  Rng rng(2);
  BlochState s{0.0, 0.0, 1.0};
  int jumps = 0;
  for (int k = 0; k < 20000; ++k) {
    const StepOutcome out = stepper.jump_step(s, 1, rng);
    if (out.observed.jump) {
      ++jumps;
      EXPECT_LE(distance(out.state, kGroundState), 1e-15);
    }
    s = out.state;
  }
  EXPECT_GT(jumps, 10);
}

TEST(jump_step, probabilities) {
  const double dt = 1e-3;
  const Stepper direct(5.0, SchemeConfig::make(SchemeKind::Direct), kParams, dt);
  Observation jump{1, 1, {}};
  EXPECT_NEAR(direct.probability(steady_state(5.0, kParams), jump) / dt, 25.0 / 51.0, 1e-13);
  const Stepper adaptive(0.0, SchemeConfig::make(SchemeKind::Adaptive), kParams, dt);
  EXPECT_NEAR(adaptive.probability(kGroundState, jump) / dt, 0.25, 1e-14);
}

TEST(jump_step, rejects_probability_outside_unit_interval) {
  const Stepper stepper(0.0, SchemeConfig::make(SchemeKind::Direct), kParams, 1e-3);
  Rng rng(3);
  EXPECT_THROW(stepper.jump_step({0.0, 0.0, -300.0}, 1, rng), Error);
  EXPECT_THROW(Stepper(0.0, SchemeConfig::make(SchemeKind::Direct), kParams, 0.05), ConfigError);
}

TEST(jump_step, adaptive_flips_lo_sign_on_detection) {
  const Stepper stepper(5.0, SchemeConfig::make(SchemeKind::Adaptive), kParams, 1e-2);
  Rng rng(4);
  BlochState s = kGroundState;
  int mu = 1;
  int jumps = 0;
  for (int k = 0; k < 20000; ++k) {
    const StepOutcome out = stepper.jump_step(s, mu, rng);
    EXPECT_EQ(out.observed.mu_sign, mu);
    EXPECT_EQ(out.next_mu_sign, out.observed.jump ? -mu : mu);
    jumps += out.observed.jump;
    s = out.state;
    mu = out.next_mu_sign;
  }
  EXPECT_GT(jumps, 50);
}

TEST(diffusive_step, homodyne_x_current_statistics) {
  const double dt = 1e-3;
  const auto excited_x = moments(reals(currents(SchemeKind::HomodyneX, {1.0, 0.0, 0.0}, dt, 100000)));
  EXPECT_LE(std::abs(excited_x.mean - 1.0), 4.0 * excited_x.se);
  const auto ground = moments(reals(currents(SchemeKind::HomodyneX, kGroundState, dt, 100000)));
  EXPECT_LE(std::abs(ground.mean), 4.0 * ground.se);
  EXPECT_NEAR(ground.var * dt, 1.0, 0.02);
}

TEST(diffusive_step, homodyne_y_measures_y) {
  const double dt = 1e-3;
  const auto y = moments(reals(currents(SchemeKind::HomodyneY, {0.0, 1.0, 0.0}, dt, 100000)));
  EXPECT_LE(std::abs(y.mean - 1.0), 4.0 * y.se);
  const auto x = moments(reals(currents(SchemeKind::HomodyneY, {1.0, 0.0, 0.0}, dt, 100000)));
  EXPECT_LE(std::abs(x.mean), 4.0 * x.se);
}

TEST(diffusive_step, heterodyne_current_statistics) {
  const double dt = 1e-3;
  const auto ground = currents(SchemeKind::Heterodyne, kGroundState, dt, 100000);
  const auto re = moments(reals(ground));
  const auto im = moments(imags(ground));
  EXPECT_LE(std::abs(re.mean), 4.0 * re.se);
  EXPECT_LE(std::abs(im.mean), 4.0 * im.se);
  EXPECT_NEAR((re.var + im.var) * dt, 1.0, 0.02);
  EXPECT_NEAR(re.var * dt, 0.5, 0.01);
  // <sigma> = (x - i y) / 2
  const auto tilted = currents(SchemeKind::Heterodyne, {0.6, 0.8, 0.0}, dt, 100000);
  const auto tre = moments(reals(tilted));
  const auto tim = moments(imags(tilted));
  EXPECT_LE(std::abs(tre.mean - 0.3), 4.0 * tre.se);
  EXPECT_LE(std::abs(tim.mean + 0.4), 4.0 * tim.se);
}

TEST(simulate_record, dark_atom_gives_empty_record) {
  const auto sim = simulate_record(0.0, kGroundState, SchemeConfig::make(SchemeKind::Direct),
                                   kParams, 20.0, 1e-3, 5);
  EXPECT_EQ(sim.record.obs.steps(), 20000u);
  EXPECT_TRUE(std::all_of(sim.record.obs.jumps.begin(), sim.record.obs.jumps.end(),
                          [](auto j) { return j == 0; }));
}

TEST(simulate_record, adaptive_rate_is_gamma_over_four) {
  const double duration = 4000.0;
  const auto sim = simulate_record(5.0, steady_state(5.0, kParams),
                                   SchemeConfig::make(SchemeKind::Adaptive), kParams, duration,
                                   1e-3, 6);
  const double count = std::accumulate(sim.record.obs.jumps.begin(), sim.record.obs.jumps.end(), 0.0);
  const double rate = count / duration;
  const double se = std::sqrt(count) / duration;  // Poissonian
  EXPECT_LE(std::abs(rate - 0.25), 3.0 * se) << rate;
  const auto& mu = sim.record.obs.mu_signs;
  ASSERT_EQ(mu.size(), sim.record.obs.jumps.size());
  EXPECT_EQ(mu.front(), 1);
  for (std::size_t k = 0; k + 1 < mu.size(); ++k) {
    ASSERT_EQ(mu[k + 1], sim.record.obs.jumps[k] ? -mu[k] : mu[k]) << k;
  }
}

TEST(simulate_record, direct_rate_matches_steady_excitation) {
  const double batch = 100.0;
  const int batches = 40;
  const auto sim = simulate_record(5.0, steady_state(5.0, kParams),
                                   SchemeConfig::make(SchemeKind::Direct), kParams,
                                   batch * batches, 1e-3, 7);
  std::vector<double> rates(batches, 0.0);
  const std::size_t per = sim.record.obs.steps() / batches;
  for (std::size_t k = 0; k < sim.record.obs.steps(); ++k) rates[k / per] += sim.record.obs.jumps[k];
  for (double& r : rates) r /= batch;
  const auto m = moments(rates);
  EXPECT_LE(std::abs(m.mean - 25.0 / 51.0), 3.0 * m.se) << m.mean << " +- " << m.se;
}

TEST(simulate_record, adaptive_two_state_jumping) {
  const double omega = 5.0, dt = 1e-3;
  const Stepper stepper(omega, SchemeConfig::make(SchemeKind::Adaptive), kParams, dt);
  const double d = 2.0 * omega * omega + 1.0;
  // With mu = +1/2 the no-jump fixed point has x < 0 (the jump rate there is gamma/4).
  const BlochState fixed_plus{-2.0 * omega * omega / d, 2.0 * omega / d, -1.0 / d};
  const BlochState fixed_minus{-fixed_plus.x, fixed_plus.y, fixed_plus.z};
  Rng rng(8);
  BlochState s = kGroundState;
  int mu = 1;
  int checked = 0;
  for (std::size_t k = 0; k < 200000; ++k) {
    const StepOutcome out = stepper.jump_step(s, mu, rng);
    if (out.observed.jump && k * dt > 20.0) {
      // Before the jump the state sits at the fixed point of the current LO
      // sign; the jump carries it to the other one.
      const BlochState& before = mu > 0 ? fixed_plus : fixed_minus;
      const BlochState& after = mu > 0 ? fixed_minus : fixed_plus;
      EXPECT_LE(distance(s, before), 0.05);
      EXPECT_LE(distance(out.state, after), 0.05);
      ++checked;
    }
    s = out.state;
    mu = out.next_mu_sign;
  }
  EXPECT_GT(checked, 20);
}

TEST(simulate_record, known_omega_diffusive_purity_approaches_one) {
  for (SchemeKind kind : {SchemeKind::HomodyneY, SchemeKind::Heterodyne}) {
    std::vector<double> purities;
    for (std::uint64_t seed = 0; seed < 41; ++seed) {
      const auto sim = simulate_record(5.0, steady_state(5.0, kParams), SchemeConfig::make(kind),
                                       kParams, 10.0, 1e-3, seed, 10000);
      ASSERT_EQ(sim.checkpoints.size(), 2u);
      purities.push_back(purity(sim.checkpoints.back()));
      EXPECT_EQ(sim.clamp_count, 0u);
    }
    std::nth_element(purities.begin(), purities.begin() + 20, purities.end());
    EXPECT_GT(purities[20], 0.95) << to_string(kind);
  }
}

TEST(simulate_record, deterministic_and_seed_sensitive) {
  for (SchemeKind kind : kAllSchemes) {
    const auto a = simulate_record(4.0, kGroundState, SchemeConfig::make(kind), kParams, 5.0, 1e-3, 42);
    const auto b = simulate_record(4.0, kGroundState, SchemeConfig::make(kind), kParams, 5.0, 1e-3, 42);
    const auto c = simulate_record(4.0, kGroundState, SchemeConfig::make(kind), kParams, 5.0, 1e-3, 43);
    EXPECT_EQ(a.record.obs.jumps, b.record.obs.jumps);
    EXPECT_EQ(a.record.obs.mu_signs, b.record.obs.mu_signs);
    EXPECT_EQ(a.record.obs.currents, b.record.obs.currents);
    EXPECT_EQ(a.record.obs.complex_currents, b.record.obs.complex_currents);
    if (kind == SchemeKind::Heterodyne) {
      EXPECT_NE(a.record.obs.complex_currents, c.record.obs.complex_currents);
    } else if (!SchemeConfig::make(kind).is_jump()) {
      EXPECT_NE(a.record.obs.currents, c.record.obs.currents);
    }
  }
}

TEST(simulate_record, requires_whole_number_of_steps) {
  EXPECT_THROW(simulate_record(1.0, kGroundState, SchemeConfig::make(SchemeKind::Direct), kParams,
                               1.0005, 1e-3, 1),
               ConfigError);
  EXPECT_EQ(step_count(50.0, 1e-3), 50000u);
  EXPECT_EQ(step_count(0.0, 1e-3), 0u);
}

TEST(record_io, round_trip_is_exact) {
  const auto dir = std::filesystem::temp_directory_path() / "qtraj_record_io";
  std::filesystem::create_directories(dir);
  for (SchemeKind kind : kAllSchemes) {
    const auto sim = simulate_record(-3.25, steady_state(-3.25, kParams), SchemeConfig::make(kind),
                                     kParams, 2.0, 1e-3, 77);
    const auto path = dir / (std::string(to_string(kind)) + ".csv");
    write_record(path, sim.record);
    const MeasurementRecord back = read_record(path);
    EXPECT_EQ(back.seed, sim.record.seed);
    EXPECT_EQ(back.omega_true, sim.record.omega_true);
    EXPECT_EQ(back.obs.scheme.kind, kind);
    EXPECT_EQ(back.obs.scheme.phi, sim.record.obs.scheme.phi);
    EXPECT_EQ(back.obs.dt, sim.record.obs.dt);
    EXPECT_EQ(back.obs.jumps, sim.record.obs.jumps);
    EXPECT_EQ(back.obs.mu_signs, sim.record.obs.mu_signs);
    EXPECT_EQ(back.obs.currents, sim.record.obs.currents);
    EXPECT_EQ(back.obs.complex_currents, sim.record.obs.complex_currents);
  }
  std::ofstream(dir / "bad.csv") << "# scheme=direct\n# dt=0.001\n# steps=2\nstep,dN,mu\n0,0,1\n";
  EXPECT_THROW(read_record(dir / "bad.csv"), Error);
  std::filesystem::remove_all(dir);
}
