#pragma once

// Experiment configuration (flat key=value text) and the artifact writers
// behind the command-line tool.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "qtraj/metrics.hpp"

namespace qtraj {

/// Recognized keys: scheme, gamma, omega_max, dt, duration, n_records,
/// grid_points, initial_policy, seed, output_dir, checkpoint_interval,
/// trace_records, epsilon, mu_magnitude, phi, omega_true. Blank lines and
/// lines starting with '#' are ignored; unknown keys are an error.
struct ExperimentConfig {
  EnsembleConfig ensemble;
  std::filesystem::path output_dir = "out";

  ExperimentConfig() { ensemble.trace_records = 1; }
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every key, one per line, in a form parse_config reads back exactly.
std::string format_config(const ExperimentConfig& config);

inline constexpr const char* kStatsFile = "ensemble_stats.csv";
inline constexpr const char* kManifestFile = "manifest.txt";

struct RunInfo {
  std::vector<std::filesystem::path> files;
  double wall_seconds = 0.0;
};

/// Ensemble run. Writes ensemble_stats.csv, filter_trace_<i>.csv and
/// record_<i>.csv for the first trace_records records, and manifest.txt
/// (the config plus '#' lines with the code version and wall time). On
/// failure every file written so far is removed and the error rethrown.
RunInfo run_experiment(const ExperimentConfig& config);

/// One record at the configured omega_true (5 gamma if unset) with its
/// filter trace and the known-Omega trajectory side by side. Writes
/// filter_trace.csv, record.csv and manifest.txt.
RunInfo single_trace(const ExperimentConfig& config);

/// Version string compiled into the library.
std::string code_version();

}  // namespace qtraj
