#pragma once

// Measurement records for a known Rabi frequency: the nonlinear (normalized)
// conditioned evolution under each detection scheme.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "qtraj/bloch.hpp"
#include "qtraj/pauli.hpp"
#include "qtraj/rng.hpp"
#include "qtraj/scheme.hpp"

namespace qtraj {

/// What a detector produced: everything the filter is allowed to see.
/// Exactly one payload is filled, according to the scheme.
struct Observations {
  SchemeConfig scheme;
  double dt = 1e-3;
  std::vector<std::uint8_t> jumps;     // Direct, Adaptive
  std::vector<std::int8_t> mu_signs;   // Adaptive: LO sign in force during each step
  std::vector<double> currents;        // HomodyneX, HomodyneY
  std::vector<Complex> complex_currents;  // Heterodyne

  std::size_t steps() const;
  double duration() const { return static_cast<double>(steps()) * dt; }
};

/// An observed record plus the generating values, kept for evaluation and replay.
struct MeasurementRecord {
  Observations obs;
  double omega_true = 0.0;
  std::uint64_t seed = 0;
};

/// One record entry.
struct Observation {
  int jump = 0;
  int mu_sign = 1;
  Complex current{};
};

struct StepOutcome {
  BlochState state;
  Observation observed;
  /// LO sign for the next step (Adaptive flips it on a detection).
  int next_mu_sign = 1;
  bool clamped = false;
};

/// Largest dt accepted by the steppers, in units of 1/gamma.
inline constexpr double kMaxStep = 1e-2;

/// Known-Omega stepper for one scheme.
class Stepper {
 public:
  Stepper(double omega, const SchemeConfig& scheme, const SystemParams& params, double dt);

  /// Direct/Adaptive step. Jumps with probability P(1) = Tr[M1 rho M1^dag];
  /// throws Error if P(1) is outside [0, 1].
  StepOutcome jump_step(const BlochState& state, int mu_sign, Rng& rng) const;
  /// Homodyne/heterodyne step: draws the current from
  /// I = sqrt(gamma) <X> + noise and applies the conditioned update.
  StepOutcome diffusive_step(const BlochState& state, Rng& rng) const;
  StepOutcome step(const BlochState& state, int mu_sign, Rng& rng) const;

  /// Unnormalized post-measurement state M rho M^dag for a given outcome.
  Bloch4 apply(const BlochState& state, const Observation& obs) const;
  /// Tr[M rho M^dag]: the outcome probability for jump schemes, and the
  /// density relative to the ostensible Gaussian for diffusive ones.
  double probability(const BlochState& state, const Observation& obs) const;

  const StepMaps& maps() const { return maps_; }
  double omega() const { return omega_; }

 private:
  double omega_;
  SchemeConfig scheme_;
  SystemParams params_;
  double dt_;
  StepMaps maps_;
};

/// Normalizes an unnormalized Bloch4 (a0 > 0).
BlochState normalized(const Bloch4& a);

struct SimulationResult {
  MeasurementRecord record;
  /// Known-Omega conditioned state at steps 0, stride, 2 stride, ..., steps.
  std::vector<BlochState> checkpoints;
  std::size_t clamp_count = 0;
};

/// Number of steps duration / dt; throws ConfigError if it is not an integer.
std::size_t step_count(double duration, double dt);

SimulationResult simulate_record(double omega_true, const BlochState& initial,
                                 const SchemeConfig& scheme, const SystemParams& params,
                                 double duration, double dt, std::uint64_t seed,
                                 std::size_t checkpoint_stride = 0);

/// CSV layout: '#'-prefixed header lines scheme, dt, steps, seed, omega_true,
/// phi, mu_magnitude; then a column line and one row per step:
///   step,dN,mu        (Direct, Adaptive; mu is the LO sign, +1 for Direct)
///   step,I            (homodyne)
///   step,I_re,I_im    (heterodyne)
void write_record(const std::filesystem::path& path, const MeasurementRecord& record);
MeasurementRecord read_record(const std::filesystem::path& path);

}  // namespace qtraj
