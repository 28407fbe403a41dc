#pragma once

// Two-level atom state algebra in the Bloch representation.
//
// Conventions used throughout the library:
//   rho   = (1 + x sx + y sy + z sz) / 2,  excited state z = +1, ground z = -1
//   sigma = (sx - i sy) / 2 = |g><e|,  so <sigma> = (x - i y) / 2
//   H     = Omega sx / 2
// With these, the master equation d(rho)/dt = -i[H, rho] + gamma D[sigma] rho
// reads
//   dx/dt = -gamma x / 2
//   dy/dt = -gamma y / 2 - Omega z
//   dz/dt =  Omega y - gamma (z + 1)
// and the map (y, Omega) -> (-y, -Omega) is a symmetry of it.

#include <array>
#include <cstddef>
#include <vector>

#include "qtraj/rng.hpp"

namespace qtraj {

/// Decay rate and prior support. gamma sets the unit of time.
struct SystemParams {
  double gamma = 1.0;
  double omega_max = 10.0;

  /// Throws ConfigError unless gamma > 0 and omega_max > 0.
  void validate() const;
};

struct BlochState {
  double x = 0.0;
  double y = 0.0;
  double z = -1.0;

  double norm_squared() const { return x * x + y * y + z * z; }
  friend bool operator==(const BlochState&, const BlochState&) = default;
};

inline constexpr BlochState kGroundState{0.0, 0.0, -1.0};

/// Slack allowed on |r|^2 - 1 before a state is rescaled onto the ball.
inline constexpr double kBlochSlack = 1e-6;

/// Tr[rho^2] = (1 + |r|^2) / 2.
double purity(const BlochState& s);

bool is_valid(const BlochState& s, double slack = kBlochSlack);

/// Rescales s onto the unit sphere if |r|^2 > 1 + slack. Returns true when it
/// had to.
bool clamp_to_ball(BlochState& s, double slack = kBlochSlack);

double distance(const BlochState& a, const BlochState& b);

BlochState steady_state(double omega, const SystemParams& params);

/// Right-hand side of the Bloch master equation.
std::array<double, 3> master_rhs(const BlochState& s, double omega,
                                 const SystemParams& params);

/// Fixed-step RK4 integration of the master equation. The step is
/// duration / ceil(duration / max_step).
BlochState master_evolve(BlochState state, double omega, const SystemParams& params,
                         double duration, double max_step = 1e-3);

/// Discrete prior over the Rabi frequency for an atom at a uniformly random
/// position in a standing wave, Omega = omega_max sin(theta) with theta uniform.
///
/// Points sit at the midpoints of n equal theta-cells on (-pi/2, pi/2), so every
/// cell carries mass 1/n. cell_widths[j] is the Omega-length of cell j and turns
/// masses into densities: P(Omega_j) ~ weights[j] / cell_widths[j].
struct RabiGrid {
  std::vector<double> points;
  std::vector<double> weights;
  std::vector<double> cell_widths;

  std::size_t size() const { return points.size(); }
};

/// n_points must be odd and >= 3 so that Omega = 0 is a point and the grid is
/// exactly symmetric. Throws ConfigError otherwise.
RabiGrid build_grid(const SystemParams& params, std::size_t n_points);

/// Maps a uniform deviate u in [0, 1) to omega_max sin(pi (u - 1/2)).
double prior_quantile(const SystemParams& params, double u);

double sample_prior(const SystemParams& params, Rng& rng);

}  // namespace qtraj
