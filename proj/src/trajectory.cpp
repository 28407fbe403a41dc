#include "qtraj/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include "qtraj/error.hpp"
#include "qtraj/io.hpp"

namespace qtraj {

std::size_t Observations::steps() const {
  switch (scheme.kind) {
    case SchemeKind::Direct:
    case SchemeKind::Adaptive: return jumps.size();
    case SchemeKind::HomodyneX:
    case SchemeKind::HomodyneY: return currents.size();
    case SchemeKind::Heterodyne: return complex_currents.size();
  }
  return 0;
}

BlochState normalized(const Bloch4& a) {
  const double inv = 1.0 / a[0];
  return {a[1] * inv, a[2] * inv, a[3] * inv};
}

Stepper::Stepper(double omega, const SchemeConfig& scheme, const SystemParams& params,
                 double dt)
    : omega_(omega), scheme_(scheme), params_(params), dt_(dt) {
  params.validate();
  scheme.validate();
  if (!(dt > 0.0 && dt <= kMaxStep / params.gamma)) {
    throw ConfigError("dt must lie in (0, " + format_double(kMaxStep) + "/gamma]");
  }
  maps_ = build_step_maps(omega, scheme, params, dt);
}

Bloch4 Stepper::apply(const BlochState& state, const Observation& obs) const {
  if (scheme_.is_jump()) {
    const int b = mu_branch(obs.mu_sign);
    return obs.jump ? maps_.jump[b].apply(state) : maps_.no_jump[b].apply(state);
  }
  return maps_.diffusive(state, obs.current.real(), obs.current.imag());
}

double Stepper::probability(const BlochState& state, const Observation& obs) const {
  return apply(state, obs)[0];
}

StepOutcome Stepper::jump_step(const BlochState& state, int mu_sign, Rng& rng) const {
  if (!scheme_.is_jump()) throw Error("jump_step called for a diffusive scheme");
  const int b = mu_branch(mu_sign);
  const Bloch4 jumped = maps_.jump[b].apply(state);
  const double p1 = jumped[0];
  if (!(p1 >= 0.0 && p1 <= 1.0)) {
    throw Error("jump probability " + format_double(p1) + " outside [0, 1]; dt too large");
  }
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  StepOutcome out;
  out.observed.mu_sign = mu_sign;
  out.next_mu_sign = mu_sign;
  if (uniform(rng) < p1) {
    out.observed.jump = 1;
    out.state = normalized(jumped);
    if (scheme_.kind == SchemeKind::Adaptive) out.next_mu_sign = -mu_sign;
  } else {
    out.state = normalized(maps_.no_jump[b].apply(state));
  }
  out.clamped = clamp_to_ball(out.state);
  return out;
}

StepOutcome Stepper::diffusive_step(const BlochState& state, Rng& rng) const {
  if (scheme_.is_jump()) throw Error("diffusive_step called for a jump scheme");
  const double sg = std::sqrt(params_.gamma);
  StepOutcome out;
  if (scheme_.kind == SchemeKind::Heterodyne) {
    std::normal_distribution<double> noise(0.0, std::sqrt(0.5 / dt_));
    const double re = noise(rng);
    const double im = noise(rng);
    // <sigma> = (x - i y) / 2
    out.observed.current = Complex(sg * state.x / 2.0 + re, -sg * state.y / 2.0 + im);
  } else {
    std::normal_distribution<double> noise(0.0, std::sqrt(1.0 / dt_));
    const double mean =
        sg * (state.x * std::cos(scheme_.phi) + state.y * std::sin(scheme_.phi));
    out.observed.current = Complex(mean + noise(rng), 0.0);
  }
  const Bloch4 next = apply(state, out.observed);
  if (!(next[0] > 0.0)) throw Error("non-positive trace in diffusive step; dt too large");
  out.state = normalized(next);
  out.clamped = clamp_to_ball(out.state);
  return out;
}

StepOutcome Stepper::step(const BlochState& state, int mu_sign, Rng& rng) const {
  return scheme_.is_jump() ? jump_step(state, mu_sign, rng) : diffusive_step(state, rng);
}

std::size_t step_count(double duration, double dt) {
  if (!(dt > 0.0) || !(duration >= 0.0)) {
    throw ConfigError("duration must be >= 0 and dt > 0");
  }
  const double ratio = duration / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("duration / dt must be an integer");
  }
  return static_cast<std::size_t>(rounded);
}

SimulationResult simulate_record(double omega_true, const BlochState& initial,
                                 const SchemeConfig& scheme, const SystemParams& params,
                                 double duration, double dt, std::uint64_t seed,
                                 std::size_t checkpoint_stride) {
  const std::size_t n = step_count(duration, dt);
  const Stepper stepper(omega_true, scheme, params, dt);
  Rng rng(seed);

  SimulationResult result;
  MeasurementRecord& rec = result.record;
  rec.omega_true = omega_true;
  rec.seed = seed;
  rec.obs.scheme = scheme;
  rec.obs.dt = dt;
  switch (scheme.kind) {
    case SchemeKind::Direct: rec.obs.jumps.reserve(n); break;
    case SchemeKind::Adaptive:
      rec.obs.jumps.reserve(n);
      rec.obs.mu_signs.reserve(n);
      break;
    case SchemeKind::HomodyneX:
    case SchemeKind::HomodyneY: rec.obs.currents.reserve(n); break;
    case SchemeKind::Heterodyne: rec.obs.complex_currents.reserve(n); break;
  }

  BlochState state = initial;
  int mu_sign = 1;
  if (checkpoint_stride > 0) result.checkpoints.push_back(state);
  for (std::size_t k = 0; k < n; ++k) {
    const StepOutcome out = stepper.step(state, mu_sign, rng);
    switch (scheme.kind) {
      case SchemeKind::Adaptive:
        rec.obs.mu_signs.push_back(static_cast<std::int8_t>(mu_sign));
        [[fallthrough]];
      case SchemeKind::Direct:
        rec.obs.jumps.push_back(static_cast<std::uint8_t>(out.observed.jump));
        break;
      case SchemeKind::HomodyneX:
      case SchemeKind::HomodyneY: rec.obs.currents.push_back(out.observed.current.real()); break;
      case SchemeKind::Heterodyne: rec.obs.complex_currents.push_back(out.observed.current); break;
    }
    state = out.state;
    mu_sign = out.next_mu_sign;
    if (out.clamped) ++result.clamp_count;
    if (checkpoint_stride > 0 && (k + 1) % checkpoint_stride == 0) {
      result.checkpoints.push_back(state);
    }
  }
  return result;
}

void write_record(const std::filesystem::path& path, const MeasurementRecord& record) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  const Observations& obs = record.obs;
  out << "# scheme=" << to_string(obs.scheme.kind) << '\n'
      << "# dt=" << format_double(obs.dt) << '\n'
      << "# steps=" << obs.steps() << '\n'
      << "# seed=" << record.seed << '\n'
      << "# omega_true=" << format_double(record.omega_true) << '\n'
      << "# phi=" << format_double(obs.scheme.phi) << '\n'
      << "# mu_magnitude=" << format_double(obs.scheme.mu_magnitude) << '\n';
  const std::size_t n = obs.steps();
  switch (obs.scheme.kind) {
    case SchemeKind::Direct:
    case SchemeKind::Adaptive:
      out << "step,dN,mu\n";
      for (std::size_t k = 0; k < n; ++k) {
        const int mu = obs.mu_signs.empty() ? 1 : obs.mu_signs[k];
        out << k << ',' << int(obs.jumps[k]) << ',' << mu << '\n';
      }
      break;
    case SchemeKind::HomodyneX:
    case SchemeKind::HomodyneY:
      out << "step,I\n";
      for (std::size_t k = 0; k < n; ++k) out << k << ',' << format_double(obs.currents[k]) << '\n';
      break;
    case SchemeKind::Heterodyne:
      out << "step,I_re,I_im\n";
      for (std::size_t k = 0; k < n; ++k) {
        out << k << ',' << format_double(obs.complex_currents[k].real()) << ','
            << format_double(obs.complex_currents[k].imag()) << '\n';
      }
      break;
  }
  if (!out) throw Error("write failed: " + path.string());
}

MeasurementRecord read_record(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  MeasurementRecord rec;
  std::size_t steps = 0;
  bool have_scheme = false;
  bool have_steps = false;
  std::string line;
  std::size_t expect_cols = 0;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string_view body = trim(std::string_view(line).substr(1));
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) throw Error("bad header line: " + line);
      const std::string_view key = trim(body.substr(0, eq));
      const std::string_view val = trim(body.substr(eq + 1));
      if (key == "scheme") {
        const auto kind = parse_scheme(val);
        if (!kind) throw Error("unknown scheme in record: " + std::string(val));
        const double phi = rec.obs.scheme.phi;
        const double mu = rec.obs.scheme.mu_magnitude;
        rec.obs.scheme = SchemeConfig::make(*kind);
        if (have_scheme) {
          rec.obs.scheme.phi = phi;
          rec.obs.scheme.mu_magnitude = mu;
        }
        have_scheme = true;
      } else if (key == "dt") {
        rec.obs.dt = parse_double(val, "dt");
      } else if (key == "steps") {
        steps = parse_uint(val, "steps");
        have_steps = true;
      } else if (key == "seed") {
        rec.seed = parse_uint(val, "seed");
      } else if (key == "omega_true") {
        rec.omega_true = parse_double(val, "omega_true");
      } else if (key == "phi") {
        rec.obs.scheme.phi = parse_double(val, "phi");
      } else if (key == "mu_magnitude") {
        rec.obs.scheme.mu_magnitude = parse_double(val, "mu_magnitude");
      }
      continue;
    }
    if (expect_cols == 0) {
      if (!have_scheme || !have_steps) throw Error("record header incomplete: " + path.string());
      const auto kind = rec.obs.scheme.kind;
      const char* expected = rec.obs.scheme.is_jump() ? "step,dN,mu"
                             : kind == SchemeKind::Heterodyne ? "step,I_re,I_im"
                                                              : "step,I";
      if (trim(line) != expected) throw Error("unexpected record columns: " + line);
      expect_cols = split(expected, ',').size();
      continue;
    }
    const auto cols = split(trim(line), ',');
    if (cols.size() != expect_cols) throw Error("bad record row: " + line);
    if (parse_uint(cols[0], "step") != row) throw Error("record steps out of order");
    switch (rec.obs.scheme.kind) {
      case SchemeKind::Direct:
      case SchemeKind::Adaptive: {
        const auto dn = parse_int(cols[1], "dN");
        const auto mu = parse_int(cols[2], "mu");
        if ((dn != 0 && dn != 1) || (mu != 1 && mu != -1)) throw Error("bad record row: " + line);
        rec.obs.jumps.push_back(static_cast<std::uint8_t>(dn));
        if (rec.obs.scheme.kind == SchemeKind::Adaptive) {
          rec.obs.mu_signs.push_back(static_cast<std::int8_t>(mu));
        }
        break;
      }
      case SchemeKind::HomodyneX:
      case SchemeKind::HomodyneY: rec.obs.currents.push_back(parse_double(cols[1], "I")); break;
      case SchemeKind::Heterodyne:
        rec.obs.complex_currents.emplace_back(parse_double(cols[1], "I_re"),
                                              parse_double(cols[2], "I_im"));
        break;
    }
    ++row;
  }
  if (row != steps) throw Error("record has " + std::to_string(row) + " rows, header says " +
                                std::to_string(steps));
  return rec;
}

}  // namespace qtraj
