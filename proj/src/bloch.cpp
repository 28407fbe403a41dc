#include "qtraj/bloch.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qtraj/error.hpp"

namespace qtraj {

void SystemParams::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ConfigError("gamma must be positive, got " + std::to_string(gamma));
  }
  if (!(omega_max > 0.0) || !std::isfinite(omega_max)) {
    throw ConfigError("omega_max must be positive, got " + std::to_string(omega_max));
  }
}

double purity(const BlochState& s) { return 0.5 * (1.0 + s.norm_squared()); }

bool is_valid(const BlochState& s, double slack) {
  return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.z) &&
         s.norm_squared() <= 1.0 + slack;
}

bool clamp_to_ball(BlochState& s, double slack) {
  const double r2 = s.norm_squared();
  if (r2 <= 1.0 + slack) return false;
  const double scale = 1.0 / std::sqrt(r2);
  s.x *= scale;
  s.y *= scale;
  s.z *= scale;
  return true;
}

double distance(const BlochState& a, const BlochState& b) {
  return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z);
}

BlochState steady_state(double omega, const SystemParams& params) {
  const double g = params.gamma;
  const double denom = 2.0 * omega * omega + g * g;
  return {0.0, 2.0 * omega * g / denom, -g * g / denom};
}

std::array<double, 3> master_rhs(const BlochState& s, double omega,
                                 const SystemParams& params) {
  const double g = params.gamma;
  return {-0.5 * g * s.x, -0.5 * g * s.y - omega * s.z, omega * s.y - g * (s.z + 1.0)};
}

BlochState master_evolve(BlochState state, double omega, const SystemParams& params,
                         double duration, double max_step) {
  if (duration < 0.0) throw Error("master_evolve: negative duration");
  if (duration == 0.0) return state;
  const auto n = static_cast<long>(std::ceil(duration / max_step));
  const double h = duration / static_cast<double>(n);

  auto shifted = [](const BlochState& s, const std::array<double, 3>& k, double f) {
    return BlochState{s.x + f * k[0], s.y + f * k[1], s.z + f * k[2]};
  };
  for (long i = 0; i < n; ++i) {
    const auto k1 = master_rhs(state, omega, params);
    const auto k2 = master_rhs(shifted(state, k1, 0.5 * h), omega, params);
    const auto k3 = master_rhs(shifted(state, k2, 0.5 * h), omega, params);
    const auto k4 = master_rhs(shifted(state, k3, h), omega, params);
    state.x += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
    state.y += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    state.z += h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]);
  }
  return state;
}

RabiGrid build_grid(const SystemParams& params, std::size_t n_points) {
  params.validate();
  if (n_points < 3 || n_points % 2 == 0) {
    throw ConfigError("grid size must be odd and >= 3, got " + std::to_string(n_points));
  }
  const double pi = std::numbers::pi;
  const double dtheta = pi / static_cast<double>(n_points);
  const std::size_t mid = n_points / 2;

  RabiGrid grid;
  grid.points.assign(n_points, 0.0);
  grid.cell_widths.assign(n_points, 0.0);
  grid.weights.assign(n_points, 1.0 / static_cast<double>(n_points));

  // Fill the upper half and mirror it so the grid is symmetric bit for bit.
  for (std::size_t j = mid; j < n_points; ++j) {
    const double k = static_cast<double>(j - mid);
    const double theta = k * dtheta;
    const double lo = (k - 0.5) * dtheta;
    const double hi = (k + 0.5) * dtheta;
    const double width = params.omega_max * (std::sin(hi) - std::sin(lo));
    const double point = j == mid ? 0.0 : params.omega_max * std::sin(theta);
    grid.points[j] = point;
    grid.points[n_points - 1 - j] = -point;
    grid.cell_widths[j] = width;
    grid.cell_widths[n_points - 1 - j] = width;
  }
  return grid;
}

double prior_quantile(const SystemParams& params, double u) {
  return params.omega_max * std::sin(std::numbers::pi * (u - 0.5));
}

double sample_prior(const SystemParams& params, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  return prior_quantile(params, uniform(rng));
}

}  // namespace qtraj
