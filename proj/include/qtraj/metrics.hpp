#pragma once

// Knowledge measures for a posterior over the Rabi-frequency grid, and the
// ensemble experiment: draw Omega_true from the prior, simulate a record, run
// the filter, and average the measures over records.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "qtraj/bloch.hpp"
#include "qtraj/filter.hpp"
#include "qtraj/scheme.hpp"
#include "qtraj/trajectory.hpp"

namespace qtraj {

double posterior_mean(const Posterior& post);
double posterior_second_moment(const Posterior& post);
/// sum w Omega^2 - (sum w Omega)^2, in units of gamma^2.
double posterior_variance(const Posterior& post);

/// Entropy decrease in bits relative to the prior, with densities taken
/// against the Omega-widths of the grid cells:
///   sum w log2(w / c) - sum p log2(p / c),   0 log 0 = 0.
double info_gain(const Posterior& post, const RabiGrid& prior);
double info_gain(const std::vector<double>& weights, const RabiGrid& prior);

/// Half the L1 distance between two mass vectors of equal length.
double total_variation(const std::vector<double>& a, const std::vector<double>& b);

struct EnsembleConfig {
  SchemeConfig scheme;
  SystemParams params;
  InitialPolicy initial = InitialPolicy::Steady;
  std::size_t n_records = 100;
  double duration = 50.0;
  double dt = 1e-3;
  std::size_t grid_points = 201;
  std::uint64_t seed = 1;
  double checkpoint_interval = 0.1;
  /// Ostensible jump rate; non-positive means gamma / 4.
  double epsilon = 0.0;
  /// Worker threads; 0 means the hardware concurrency.
  unsigned threads = 0;
  /// Records (lowest indices) for which the full filter trace is kept.
  std::size_t trace_records = 0;
  /// Use this Omega_true for every record instead of drawing from the prior.
  std::optional<double> omega_true;

  /// Throws ConfigError on invalid values.
  void validate() const;
  std::size_t steps() const;
  std::size_t checkpoint_stride() const;
};

/// Per-record measures at every checkpoint.
struct RecordSummary {
  std::uint64_t seed = 0;
  double omega_true = 0.0;
  std::vector<double> purity;
  std::vector<double> variance;
  std::vector<double> info_gain;
  std::vector<double> mean;
  /// sum w Omega^2.
  std::vector<double> second_moment;
  /// Detections between consecutive checkpoints (jump schemes).
  std::vector<std::uint32_t> interval_jumps;
  std::size_t jumps = 0;
  std::size_t clamps = 0;
};

struct EnsembleStats {
  std::vector<double> times;
  std::vector<double> p_mean, p_se;
  std::vector<double> v_mean, v_se;
  std::vector<double> di_mean, di_se;
  std::size_t n_records = 0;
};

struct TraceArtifact {
  MeasurementRecord record;
  FilterTrace trace;
};

struct EnsembleResult {
  std::shared_ptr<const RabiGrid> grid;
  EnsembleStats stats;
  std::vector<RecordSummary> records;
  std::vector<TraceArtifact> traces;
};

/// Seed of record i: derive_seed(master, i). Omega_true is drawn from the
/// stream derive_seed(seed_i, 0) and the record from seed_i itself, so every
/// record is reproducible on its own and results do not depend on threading.
EnsembleResult ensemble_run(const EnsembleConfig& config);

/// Runs one record end to end (the unit of work of ensemble_run).
RecordSummary run_record(const EnsembleConfig& config,
                         const std::shared_ptr<const RabiGrid>& grid, std::size_t index,
                         TraceArtifact* artifact = nullptr);

/// Mean and standard error (sample sd / sqrt(n)) per checkpoint.
EnsembleStats aggregate(const std::vector<double>& times,
                        const std::vector<RecordSummary>& records);

/// Columns: time,p_mean,p_se,V_mean,V_se,dI_mean,dI_se,n.
void write_stats(const std::filesystem::path& path, const EnsembleStats& stats);

}  // namespace qtraj
