#pragma once

// Bayesian filter over the Rabi-frequency grid.
//
// Each grid point j carries the linear (unnormalized) conditioned state
// rho-bar_j of the observed record. Outcome probabilities are divided by an
// Omega-independent ostensible distribution Lambda, so Tr[rho-bar_j] is the
// likelihood of the record at Omega_j up to a common factor, and the
// posterior is P(Omega_j | I) ~ P0(Omega_j) Tr[rho-bar_j].
//
// rho-bar_j is stored as its normalized Bloch vector plus log Tr[rho-bar_j],
// so long records neither underflow nor overflow.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "qtraj/bloch.hpp"
#include "qtraj/pauli.hpp"
#include "qtraj/scheme.hpp"
#include "qtraj/trajectory.hpp"

namespace qtraj {

enum class InitialPolicy { Steady, Ground };

std::string_view to_string(InitialPolicy policy);
std::optional<InitialPolicy> parse_policy(std::string_view name);

/// Initial state for a given Omega under a policy.
BlochState initial_state(InitialPolicy policy, double omega, const SystemParams& params);

struct Branch {
  BlochState state;
  /// log Tr[rho-bar] is log_norm + log(scale); scale is folded into log_norm
  /// only when it drifts far from 1.
  double log_norm = 0.0;
  double scale = 1.0;
  /// False once the record has zero likelihood at this grid point.
  bool alive = true;

  double log_likelihood() const;
};

/// Jump multipliers at or below this fraction of Lambda(1) annihilate the branch.
inline constexpr double kZeroLikelihood = 1e-13;
/// Jump multipliers below -kNegativeLikelihood signal dt too large.
inline constexpr double kNegativeLikelihood = 1e-12;

/// Direct/Adaptive update of one branch. Divides by Lambda(1) = epsilon dt or
/// Lambda(0) = 1 - epsilon dt.
void linear_jump_step(Branch& branch, const StepMaps& maps, int jump, int mu_sign,
                      double epsilon, double dt);

/// Homodyne/heterodyne update of one branch, given the Omega-independent part
/// of the map for this step's current (StepMaps::diffusive_inner) and the
/// branch's rotation.
void linear_diffusive_step(Branch& branch, const Transfer& inner, double rot_cos,
                           double rot_sin);

struct FilterOptions {
  InitialPolicy initial = InitialPolicy::Steady;
  /// Ostensible jump rate; non-positive means gamma / 4.
  double epsilon = 0.0;
};

class FilterState {
 public:
  FilterState(std::shared_ptr<const RabiGrid> grid, const SchemeConfig& scheme,
              const SystemParams& params, double dt, const FilterOptions& options = {});

  const RabiGrid& grid() const { return *grid_; }
  const std::shared_ptr<const RabiGrid>& grid_ptr() const { return grid_; }
  const SchemeConfig& scheme() const { return scheme_; }
  double dt() const { return dt_; }
  double epsilon() const { return epsilon_; }
  std::size_t steps_done() const { return steps_done_; }
  double time() const { return static_cast<double>(steps_done_) * dt_; }

  std::size_t size() const { return xs_.size(); }
  Branch branch(std::size_t j) const;
  BlochState state(std::size_t j) const { return {xs_[j], ys_[j], zs_[j]}; }

  /// Consumes record entries [steps_done, upto). Throws Error if the record
  /// does not match the filter's scheme and dt or is too short.
  void advance(const Observations& obs, std::size_t upto);

 private:
  std::shared_ptr<const RabiGrid> grid_;
  SchemeConfig scheme_;
  SystemParams params_;
  double dt_;
  double epsilon_;
  std::size_t steps_done_ = 0;

  // Branch data stored by component so that the per-step loops over grid
  // points vectorize. The arithmetic per point matches linear_jump_step and
  // linear_diffusive_step.
  std::vector<double> xs_, ys_, zs_, scales_, log_norms_;
  std::vector<std::uint8_t> alive_;
  StepMaps shared_;                  // Omega-independent parts (jump, diffusive inner)
  std::vector<StepMaps> maps_;       // per grid point, used for jump steps
  std::vector<double> no_jump_;      // [(b * 16 + entry) * n + j]
  std::vector<double> rot_cos_, rot_sin_;
  std::size_t since_fold_ = 0;

  void no_jump_step(int b);
  void jump_step(int b);
  void diffusive_step(const Transfer& inner);
  void fold_scales();
};

/// Advances the filter to time `upto` (rounded to a whole step).
void advance_filter(FilterState& fstate, const Observations& obs, double upto);

struct Posterior {
  std::shared_ptr<const RabiGrid> grid;
  std::vector<double> weights;
};

/// prior_j exp(log_likelihood_j), normalized with a max-log shift. Entries
/// with log-likelihood -infinity get weight exactly 0. Throws Error if every
/// entry does.
std::vector<double> posterior_weights(const std::vector<double>& prior,
                                      const std::vector<double>& log_likelihood);

/// Normalized with a max-log shift. Dead branches get weight exactly 0.
/// Throws Error if every branch is dead.
Posterior posterior(const FilterState& fstate);

/// Posterior-weighted mean of the per-branch conditioned Bloch vectors.
BlochState best_estimate(const FilterState& fstate, const Posterior& post);
BlochState best_estimate(const FilterState& fstate);

struct FilterTrace {
  std::vector<double> times;
  std::vector<std::vector<double>> weights;
  std::vector<BlochState> best;
  /// Known-Omega conditioned state at the same times; empty if not available.
  std::vector<BlochState> known;
};

/// Runs the filter over the whole record and samples it every `stride` steps
/// (stride 0 means only the start and the end).
FilterTrace run_filter(const Observations& obs, std::shared_ptr<const RabiGrid> grid,
                       const SystemParams& params, const FilterOptions& options,
                       std::size_t stride);

/// CSV layout: '#' header lines with grid_points and one "# omega_j=<value>"
/// line per grid point, then columns
///   time, w_0 .. w_{n-1}, best_x, best_y, best_z, best_purity
/// followed by known_x, known_y, known_z, known_purity when trace.known is set.
void write_trace(const std::filesystem::path& path, const RabiGrid& grid,
                 const FilterTrace& trace);

}  // namespace qtraj
