#include "qtraj/filter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "qtraj/error.hpp"
#include "qtraj/io.hpp"

namespace qtraj {

namespace {

constexpr double kScaleLow = 1e-100;
constexpr double kScaleHigh = 1e100;

inline void fold_scale(Branch& b) {
  if (b.scale < kScaleLow || b.scale > kScaleHigh) {
    b.log_norm += std::log(b.scale);
    b.scale = 1.0;
  }
}

}  // namespace

std::string_view to_string(InitialPolicy policy) {
  return policy == InitialPolicy::Steady ? "steady" : "ground";
}

std::optional<InitialPolicy> parse_policy(std::string_view name) {
  if (name == "steady") return InitialPolicy::Steady;
  if (name == "ground") return InitialPolicy::Ground;
  return std::nullopt;
}

BlochState initial_state(InitialPolicy policy, double omega, const SystemParams& params) {
  return policy == InitialPolicy::Steady ? steady_state(omega, params) : kGroundState;
}

double Branch::log_likelihood() const {
  return alive ? log_norm + std::log(scale) : -std::numeric_limits<double>::infinity();
}

void linear_jump_step(Branch& branch, const StepMaps& maps, int jump, int mu_sign,
                      double epsilon, double dt) {
  if (!branch.alive) return;
  const int b = mu_branch(mu_sign);
  if (jump) {
    const Bloch4 v = maps.jump[b].apply(branch.state);
    const double lambda = epsilon * dt;
    const double mult = v[0] / lambda;
    if (mult < -kNegativeLikelihood) {
      throw Error("negative jump likelihood " + format_double(mult) + "; dt too large");
    }
    if (mult <= kZeroLikelihood) {
      branch.alive = false;
      return;
    }
    branch.state = normalized(v);
    branch.scale *= mult;
  } else {
    const Bloch4 v = maps.no_jump[b].apply(branch.state);
    if (!(v[0] > 0.0)) throw Error("non-positive no-jump trace; dt too large");
    branch.state = normalized(v);
    branch.scale *= v[0] / (1.0 - epsilon * dt);
  }
  fold_scale(branch);
}

void linear_diffusive_step(Branch& branch, const Transfer& inner, double rot_cos,
                           double rot_sin) {
  const Bloch4 v = rotate_x(inner.apply(branch.state), rot_cos, rot_sin);
  if (!(v[0] > 0.0)) throw Error("non-positive diffusive trace; dt too large");
  branch.state = normalized(v);
  branch.scale *= v[0];
  fold_scale(branch);
}

FilterState::FilterState(std::shared_ptr<const RabiGrid> grid, const SchemeConfig& scheme,
                         const SystemParams& params, double dt, const FilterOptions& options)
    : grid_(std::move(grid)), scheme_(scheme), params_(params), dt_(dt) {
  if (!grid_ || grid_->size() == 0) throw ConfigError("filter needs a non-empty grid");
  params.validate();
  scheme.validate();
  if (!(dt > 0.0 && dt <= kMaxStep / params.gamma)) {
    throw ConfigError("dt must lie in (0, " + format_double(kMaxStep) + "/gamma]");
  }
  epsilon_ = options.epsilon > 0.0 ? options.epsilon : params.gamma / 4.0;
  if (scheme.is_jump() && !(epsilon_ * dt < 1.0)) {
    throw ConfigError("epsilon * dt must be below 1");
  }
  const std::size_t n = grid_->size();
  xs_.resize(n);
  ys_.resize(n);
  zs_.resize(n);
  scales_.assign(n, 1.0);
  log_norms_.assign(n, 0.0);
  alive_.assign(n, 1);
  maps_.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double omega = grid_->points[j];
    const BlochState s0 = initial_state(options.initial, omega, params);
    xs_[j] = s0.x;
    ys_[j] = s0.y;
    zs_[j] = s0.z;
    maps_.push_back(build_step_maps(omega, scheme, params, dt));
  }
  shared_ = maps_.front();
  if (scheme.is_jump()) {
    no_jump_.resize(2 * 16 * n);
    for (int b = 0; b < 2; ++b) {
      for (int e = 0; e < 16; ++e) {
        for (std::size_t j = 0; j < n; ++j) {
          no_jump_[(b * 16 + e) * n + j] = maps_[j].no_jump[b].m[e];
        }
      }
    }
  } else {
    rot_cos_.resize(n);
    rot_sin_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      rot_cos_[j] = maps_[j].rot_cos;
      rot_sin_[j] = maps_[j].rot_sin;
    }
  }
}

Branch FilterState::branch(std::size_t j) const {
  Branch b;
  b.state = state(j);
  b.log_norm = log_norms_[j];
  b.scale = scales_[j];
  b.alive = alive_[j] != 0;
  return b;
}

void FilterState::fold_scales() {
  for (std::size_t j = 0; j < scales_.size(); ++j) {
    if (scales_[j] < kScaleLow || scales_[j] > kScaleHigh) {
      log_norms_[j] += std::log(scales_[j]);
      scales_[j] = 1.0;
    }
  }
  since_fold_ = 0;
}

void FilterState::no_jump_step(int b) {
  const std::size_t n = size();
  const double* m = no_jump_.data() + static_cast<std::size_t>(b) * 16 * n;
  const double lambda0 = 1.0 - epsilon_ * dt_;
  double* __restrict x = xs_.data();
  double* __restrict y = ys_.data();
  double* __restrict z = zs_.data();
  double* __restrict sc = scales_.data();
  double min_trace = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double v0 = m[0 * n + j] + m[1 * n + j] * x[j] + m[2 * n + j] * y[j] + m[3 * n + j] * z[j];
    const double v1 = m[4 * n + j] + m[5 * n + j] * x[j] + m[6 * n + j] * y[j] + m[7 * n + j] * z[j];
    const double v2 = m[8 * n + j] + m[9 * n + j] * x[j] + m[10 * n + j] * y[j] + m[11 * n + j] * z[j];
    const double v3 =
        m[12 * n + j] + m[13 * n + j] * x[j] + m[14 * n + j] * y[j] + m[15 * n + j] * z[j];
    const double inv = 1.0 / v0;
    x[j] = v1 * inv;
    y[j] = v2 * inv;
    z[j] = v3 * inv;
    sc[j] *= v0 / lambda0;
    min_trace = std::min(min_trace, v0);
  }
  if (!(min_trace > 0.0)) throw Error("non-positive no-jump trace; dt too large");
}

void FilterState::jump_step(int b) {
  const int mu_sign = b == 0 ? 1 : -1;
  for (std::size_t j = 0; j < size(); ++j) {
    if (!alive_[j]) continue;
    Branch br = branch(j);
    linear_jump_step(br, maps_[j], 1, mu_sign, epsilon_, dt_);
    xs_[j] = br.state.x;
    ys_[j] = br.state.y;
    zs_[j] = br.state.z;
    scales_[j] = br.scale;
    log_norms_[j] = br.log_norm;
    alive_[j] = br.alive ? 1 : 0;
  }
}

void FilterState::diffusive_step(const Transfer& inner) {
  const std::size_t n = size();
  const std::array<double, 16> t = inner.m;
  const double* __restrict c = rot_cos_.data();
  const double* __restrict s = rot_sin_.data();
  double* __restrict x = xs_.data();
  double* __restrict y = ys_.data();
  double* __restrict z = zs_.data();
  double* __restrict sc = scales_.data();
  double min_trace = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double v0 = t[0] + t[1] * x[j] + t[2] * y[j] + t[3] * z[j];
    const double v1 = t[4] + t[5] * x[j] + t[6] * y[j] + t[7] * z[j];
    const double a2 = t[8] + t[9] * x[j] + t[10] * y[j] + t[11] * z[j];
    const double a3 = t[12] + t[13] * x[j] + t[14] * y[j] + t[15] * z[j];
    const double v2 = c[j] * a2 - s[j] * a3;
    const double v3 = s[j] * a2 + c[j] * a3;
    const double inv = 1.0 / v0;
    x[j] = v1 * inv;
    y[j] = v2 * inv;
    z[j] = v3 * inv;
    sc[j] *= v0;
    min_trace = std::min(min_trace, v0);
  }
  if (!(min_trace > 0.0)) throw Error("non-positive diffusive trace; dt too large");
}

void FilterState::advance(const Observations& obs, std::size_t upto) {
  if (obs.scheme.kind != scheme_.kind || obs.scheme.phi != scheme_.phi ||
      (scheme_.kind == SchemeKind::Adaptive && obs.scheme.mu_magnitude != scheme_.mu_magnitude)) {
    throw Error("record scheme does not match the filter");
  }
  if (std::abs(obs.dt - dt_) > 1e-12 * dt_) throw Error("record dt does not match the filter");
  if (upto > obs.steps()) throw Error("filter advanced past the end of the record");
  if (upto <= steps_done_) return;

  // Per-step trace multipliers stay within a few orders of magnitude of 1, so
  // folding every kFoldEvery steps keeps scales far from under/overflow.
  constexpr std::size_t kFoldEvery = 64;
  const bool adaptive = scheme_.kind == SchemeKind::Adaptive;
  const bool het = scheme_.kind == SchemeKind::Heterodyne;
  if (adaptive && obs.mu_signs.size() != obs.jumps.size()) {
    throw Error("adaptive record lacks LO signs");
  }
  for (std::size_t k = steps_done_; k < upto; ++k) {
    if (scheme_.is_jump()) {
      const int b = adaptive ? mu_branch(obs.mu_signs[k]) : 0;
      if (obs.jumps[k]) {
        jump_step(b);
      } else {
        no_jump_step(b);
      }
    } else {
      const Complex current = het ? obs.complex_currents[k] : Complex(obs.currents[k], 0.0);
      diffusive_step(shared_.diffusive_inner(current.real(), current.imag()));
    }
    if (++since_fold_ == kFoldEvery) fold_scales();
  }
  steps_done_ = upto;
}

void advance_filter(FilterState& fstate, const Observations& obs, double upto) {
  fstate.advance(obs, step_count(upto, fstate.dt()));
}

std::vector<double> posterior_weights(const std::vector<double>& prior,
                                      const std::vector<double>& log_likelihood) {
  if (prior.size() != log_likelihood.size()) throw Error("posterior_weights: length mismatch");
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < prior.size(); ++j) {
    if (prior[j] > 0.0) top = std::max(top, log_likelihood[j]);
  }
  if (!std::isfinite(top)) throw Error("record has zero likelihood at every grid point");
  std::vector<double> w(prior.size(), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < prior.size(); ++j) {
    if (!std::isfinite(log_likelihood[j])) continue;
    w[j] = prior[j] * std::exp(log_likelihood[j] - top);
    total += w[j];
  }
  for (double& x : w) x /= total;
  return w;
}

Posterior posterior(const FilterState& fstate) {
  std::vector<double> logs(fstate.size());
  for (std::size_t j = 0; j < logs.size(); ++j) logs[j] = fstate.branch(j).log_likelihood();
  return {fstate.grid_ptr(), posterior_weights(fstate.grid().weights, logs)};
}

BlochState best_estimate(const FilterState& fstate, const Posterior& post) {
  BlochState best{0.0, 0.0, 0.0};
  for (std::size_t j = 0; j < fstate.size(); ++j) {
    const double w = post.weights[j];
    if (w == 0.0) continue;
    const BlochState s = fstate.state(j);
    best.x += w * s.x;
    best.y += w * s.y;
    best.z += w * s.z;
  }
  return best;
}

BlochState best_estimate(const FilterState& fstate) {
  return best_estimate(fstate, posterior(fstate));
}

FilterTrace run_filter(const Observations& obs, std::shared_ptr<const RabiGrid> grid,
                       const SystemParams& params, const FilterOptions& options,
                       std::size_t stride) {
  FilterState fstate(std::move(grid), obs.scheme, params, obs.dt, options);
  const std::size_t n = obs.steps();
  FilterTrace trace;
  auto sample = [&] {
    Posterior post = posterior(fstate);
    trace.times.push_back(fstate.time());
    trace.best.push_back(best_estimate(fstate, post));
    trace.weights.push_back(std::move(post.weights));
  };
  sample();
  const std::size_t step = stride == 0 ? std::max<std::size_t>(n, 1) : stride;
  for (std::size_t k = 0; k < n;) {
    k = std::min(n, k + step);
    fstate.advance(obs, k);
    sample();
  }
  return trace;
}

void write_trace(const std::filesystem::path& path, const RabiGrid& grid,
                 const FilterTrace& trace) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  const bool known = !trace.known.empty();
  if (known && trace.known.size() != trace.times.size()) {
    throw Error("known-state column length does not match the trace");
  }
  out << "# grid_points=" << grid.size() << '\n';
  for (std::size_t j = 0; j < grid.size(); ++j) {
    out << "# omega_" << j << '=' << format_double(grid.points[j]) << '\n';
  }
  out << "time";
  for (std::size_t j = 0; j < grid.size(); ++j) out << ",w_" << j;
  out << ",best_x,best_y,best_z,best_purity";
  if (known) out << ",known_x,known_y,known_z,known_purity";
  out << '\n';
  for (std::size_t r = 0; r < trace.times.size(); ++r) {
    out << format_double(trace.times[r]);
    for (double w : trace.weights[r]) out << ',' << format_double(w);
    const BlochState& b = trace.best[r];
    out << ',' << format_double(b.x) << ',' << format_double(b.y) << ',' << format_double(b.z)
        << ',' << format_double(purity(b));
    if (known) {
      const BlochState& s = trace.known[r];
      out << ',' << format_double(s.x) << ',' << format_double(s.y) << ','
          << format_double(s.z) << ',' << format_double(purity(s));
    }
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace qtraj
