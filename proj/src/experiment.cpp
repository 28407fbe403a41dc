#include "qtraj/experiment.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <algorithm>
#include <sstream>
#include <string_view>

#include "qtraj/error.hpp"
#include "qtraj/io.hpp"

#ifndef QTRAJ_VERSION
#define QTRAJ_VERSION "unknown"
#endif

namespace qtraj {

std::string code_version() { return QTRAJ_VERSION; }

ExperimentConfig parse_config(std::istream& in) {
  std::map<std::string, std::string, std::less<>> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    }
    std::string key(trim(body.substr(0, eq)));
    if (kv.count(key)) throw ConfigError("duplicate key '" + key + "'");
    kv.emplace(std::move(key), std::string(trim(body.substr(eq + 1))));
  }

  ExperimentConfig cfg;
  EnsembleConfig& e = cfg.ensemble;
  auto num = [](const std::string& v, const std::string& key) {
    try {
      return parse_double(v, key);
    } catch (const Error& err) {
      throw ConfigError(err.what());
    }
  };
  auto count = [](const std::string& v, const std::string& key) {
    try {
      return parse_uint(v, key);
    } catch (const Error& err) {
      throw ConfigError(err.what());
    }
  };

  // The scheme fixes the default phase, so it is read first.
  if (auto it = kv.find("scheme"); it != kv.end()) {
    const auto kind = parse_scheme(it->second);
    if (!kind) throw ConfigError("unknown scheme '" + it->second + "'");
    e.scheme = SchemeConfig::make(*kind);
    kv.erase(it);
  }
  for (const auto& [key, value] : kv) {
    if (key == "gamma") {
      e.params.gamma = num(value, key);
    } else if (key == "omega_max") {
      e.params.omega_max = num(value, key);
    } else if (key == "dt") {
      e.dt = num(value, key);
    } else if (key == "duration") {
      e.duration = num(value, key);
    } else if (key == "n_records") {
      e.n_records = count(value, key);
    } else if (key == "grid_points") {
      e.grid_points = count(value, key);
    } else if (key == "initial_policy") {
      const auto p = parse_policy(value);
      if (!p) throw ConfigError("unknown initial_policy '" + value + "'");
      e.initial = *p;
    } else if (key == "seed") {
      e.seed = count(value, key);
    } else if (key == "output_dir") {
      cfg.output_dir = value;
    } else if (key == "checkpoint_interval") {
      e.checkpoint_interval = num(value, key);
    } else if (key == "trace_records") {
      e.trace_records = count(value, key);
    } else if (key == "epsilon") {
      e.epsilon = num(value, key);
    } else if (key == "mu_magnitude") {
      e.scheme.mu_magnitude = num(value, key);
    } else if (key == "phi") {
      e.scheme.phi = num(value, key);
    } else if (key == "omega_true") {
      if (value != "prior") e.omega_true = num(value, key);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  return parse_config(in);
}

std::string format_config(const ExperimentConfig& config) {
  const EnsembleConfig& e = config.ensemble;
  std::ostringstream out;
  out << "scheme=" << to_string(e.scheme.kind) << '\n'
      << "gamma=" << format_double(e.params.gamma) << '\n'
      << "omega_max=" << format_double(e.params.omega_max) << '\n'
      << "dt=" << format_double(e.dt) << '\n'
      << "duration=" << format_double(e.duration) << '\n'
      << "n_records=" << e.n_records << '\n'
      << "grid_points=" << e.grid_points << '\n'
      << "initial_policy=" << to_string(e.initial) << '\n'
      << "seed=" << e.seed << '\n'
      << "output_dir=" << config.output_dir.string() << '\n'
      << "checkpoint_interval=" << format_double(e.checkpoint_interval) << '\n'
      << "trace_records=" << e.trace_records << '\n'
      << "epsilon=" << format_double(e.epsilon) << '\n'
      << "mu_magnitude=" << format_double(e.scheme.mu_magnitude) << '\n'
      << "phi=" << format_double(e.scheme.phi) << '\n'
      << "omega_true=" << (e.omega_true ? format_double(*e.omega_true) : "prior") << '\n';
  return out.str();
}

namespace {

// Removes the files it tracked unless released.
class OutputGuard {
 public:
  explicit OutputGuard(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error("cannot create output directory " + dir_.string() + ": " + ec.message());
  }
  ~OutputGuard() {
    if (released_) return;
    std::error_code ec;
    for (const auto& f : files_) std::filesystem::remove(f, ec);
  }
  std::filesystem::path add(const std::string& name) {
    files_.push_back(dir_ / name);
    return files_.back();
  }
  std::vector<std::filesystem::path> release() {
    released_ = true;
    return files_;
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> files_;
  bool released_ = false;
};

void write_manifest(const std::filesystem::path& path, const ExperimentConfig& config,
                    std::string_view command, double wall_seconds) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "# command=" << command << '\n'
      << "# code_version=" << code_version() << '\n'
      << "# wall_seconds=" << format_double(wall_seconds) << '\n'
      << format_config(config);
  if (!out) throw Error("write failed: " + path.string());
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

RunInfo run_experiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  config.ensemble.validate();
  OutputGuard guard(config.output_dir);
  const EnsembleResult result = ensemble_run(config.ensemble);
  write_stats(guard.add(kStatsFile), result.stats);
  for (std::size_t i = 0; i < result.traces.size(); ++i) {
    write_trace(guard.add("filter_trace_" + std::to_string(i) + ".csv"), *result.grid,
                result.traces[i].trace);
    write_record(guard.add("record_" + std::to_string(i) + ".csv"), result.traces[i].record);
  }
  RunInfo info;
  info.wall_seconds = seconds_since(start);
  write_manifest(guard.add(kManifestFile), config, "ensemble", info.wall_seconds);
  info.files = guard.release();
  return info;
}

RunInfo single_trace(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig cfg = config;
  EnsembleConfig& e = cfg.ensemble;
  if (!e.omega_true) e.omega_true = 5.0 * e.params.gamma;
  e.trace_records = 1;
  e.n_records = std::max<std::size_t>(e.n_records, 2);  // validate() wants an ensemble
  e.validate();
  OutputGuard guard(cfg.output_dir);
  auto grid = std::make_shared<const RabiGrid>(build_grid(e.params, e.grid_points));
  TraceArtifact artifact;
  run_record(e, grid, 0, &artifact);
  write_trace(guard.add("filter_trace.csv"), *grid, artifact.trace);
  write_record(guard.add("record.csv"), artifact.record);
  RunInfo info;
  info.wall_seconds = seconds_since(start);
  write_manifest(guard.add(kManifestFile), cfg, "trace", info.wall_seconds);
  info.files = guard.release();
  return info;
}

}  // namespace qtraj
