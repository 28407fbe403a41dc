#include "qtraj/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <string>
#include <thread>

#include "qtraj/error.hpp"
#include "qtraj/io.hpp"
#include "qtraj/rng.hpp"

namespace qtraj {

double posterior_mean(const Posterior& post) {
  double m = 0.0;
  for (std::size_t j = 0; j < post.weights.size(); ++j) m += post.weights[j] * post.grid->points[j];
  return m;
}

double posterior_second_moment(const Posterior& post) {
  double m2 = 0.0;
  for (std::size_t j = 0; j < post.weights.size(); ++j) {
    m2 += post.weights[j] * post.grid->points[j] * post.grid->points[j];
  }
  return m2;
}

double posterior_variance(const Posterior& post) {
  double m = 0.0;
  double m2 = 0.0;
  for (std::size_t j = 0; j < post.weights.size(); ++j) {
    const double w = post.weights[j];
    const double o = post.grid->points[j];
    m += w * o;
    m2 += w * o * o;
  }
  return m2 - m * m;
}

namespace {

double neg_entropy(const std::vector<double>& w, const std::vector<double>& widths) {
  double s = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (w[j] > 0.0) s += w[j] * std::log2(w[j] / widths[j]);
  }
  return s;
}

}  // namespace

double info_gain(const std::vector<double>& weights, const RabiGrid& prior) {
  if (weights.size() != prior.size()) throw Error("posterior and prior grids differ");
  return neg_entropy(weights, prior.cell_widths) - neg_entropy(prior.weights, prior.cell_widths);
}

double info_gain(const Posterior& post, const RabiGrid& prior) {
  return info_gain(post.weights, prior);
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error("total_variation: length mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += std::abs(a[j] - b[j]);
  return 0.5 * s;
}

void EnsembleConfig::validate() const {
  params.validate();
  scheme.validate();
  if (n_records < 2) throw ConfigError("n_records must be at least 2");
  if (!(dt > 0.0 && dt <= kMaxStep / params.gamma)) {
    throw ConfigError("dt must lie in (0, " + format_double(kMaxStep) + "/gamma]");
  }
  if (!(duration > 0.0)) throw ConfigError("duration must be positive");
  if (grid_points < 3 || grid_points % 2 == 0) throw ConfigError("grid_points must be odd and >= 3");
  if (!(checkpoint_interval > 0.0)) throw ConfigError("checkpoint_interval must be positive");
  if (steps() % checkpoint_stride() != 0) {
    throw ConfigError("duration must be a whole number of checkpoint intervals");
  }
  if (trace_records > n_records) throw ConfigError("trace_records exceeds n_records");
  if (omega_true && !(std::abs(*omega_true) <= params.omega_max)) {
    throw ConfigError("omega_true must lie within [-omega_max, omega_max]");
  }
}

std::size_t EnsembleConfig::steps() const { return step_count(duration, dt); }

std::size_t EnsembleConfig::checkpoint_stride() const {
  const std::size_t stride = step_count(checkpoint_interval, dt);
  if (stride == 0) throw ConfigError("checkpoint_interval shorter than dt");
  return stride;
}

RecordSummary run_record(const EnsembleConfig& config,
                         const std::shared_ptr<const RabiGrid>& grid, std::size_t index,
                         TraceArtifact* artifact) {
  RecordSummary summary;
  summary.seed = derive_seed(config.seed, index);
  if (config.omega_true) {
    summary.omega_true = *config.omega_true;
  } else {
    Rng omega_rng(derive_seed(summary.seed, 0));
    summary.omega_true = sample_prior(config.params, omega_rng);
  }

  const std::size_t stride = config.checkpoint_stride();
  const std::size_t n = config.steps();
  SimulationResult sim = simulate_record(
      summary.omega_true, initial_state(config.initial, summary.omega_true, config.params),
      config.scheme, config.params, config.duration, config.dt, summary.seed,
      artifact ? stride : 0);
  summary.clamps = sim.clamp_count;
  const auto& jumps = sim.record.obs.jumps;
  if (!jumps.empty()) {
    summary.interval_jumps.assign(n / stride, 0);
    for (std::size_t k = 0; k < jumps.size(); ++k) summary.interval_jumps[k / stride] += jumps[k];
    for (std::uint32_t c : summary.interval_jumps) summary.jumps += c;
  }

  FilterState fstate(grid, config.scheme, config.params, config.dt,
                     FilterOptions{config.initial, config.epsilon});
  const std::size_t checkpoints = n / stride + 1;
  summary.purity.reserve(checkpoints);
  summary.variance.reserve(checkpoints);
  summary.info_gain.reserve(checkpoints);
  summary.mean.reserve(checkpoints);
  summary.second_moment.reserve(checkpoints);
  for (std::size_t c = 0; c < checkpoints; ++c) {
    fstate.advance(sim.record.obs, c * stride);
    Posterior post = posterior(fstate);
    const BlochState best = best_estimate(fstate, post);
    summary.purity.push_back(purity(best));
    summary.variance.push_back(posterior_variance(post));
    summary.info_gain.push_back(info_gain(post, *grid));
    summary.mean.push_back(posterior_mean(post));
    summary.second_moment.push_back(posterior_second_moment(post));
    if (artifact) {
      artifact->trace.times.push_back(fstate.time());
      artifact->trace.best.push_back(best);
      artifact->trace.weights.push_back(std::move(post.weights));
    }
  }
  if (artifact) {
    artifact->trace.known = std::move(sim.checkpoints);
    artifact->record = std::move(sim.record);
  }
  return summary;
}

EnsembleStats aggregate(const std::vector<double>& times,
                        const std::vector<RecordSummary>& records) {
  EnsembleStats stats;
  stats.times = times;
  stats.n_records = records.size();
  const double n = static_cast<double>(records.size());
  auto reduce = [&](auto field, std::vector<double>& mean, std::vector<double>& se) {
    mean.assign(times.size(), 0.0);
    se.assign(times.size(), 0.0);
    for (std::size_t c = 0; c < times.size(); ++c) {
      double s = 0.0;
      for (const auto& r : records) s += (r.*field)[c];
      const double m = s / n;
      double ss = 0.0;
      for (const auto& r : records) {
        const double d = (r.*field)[c] - m;
        ss += d * d;
      }
      mean[c] = m;
      se[c] = n > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    }
  };
  reduce(&RecordSummary::purity, stats.p_mean, stats.p_se);
  reduce(&RecordSummary::variance, stats.v_mean, stats.v_se);
  reduce(&RecordSummary::info_gain, stats.di_mean, stats.di_se);
  return stats;
}

EnsembleResult ensemble_run(const EnsembleConfig& config) {
  config.validate();
  EnsembleResult result;
  result.grid = std::make_shared<const RabiGrid>(build_grid(config.params, config.grid_points));
  result.records.resize(config.n_records);
  result.traces.resize(config.trace_records);

  std::vector<std::exception_ptr> errors(config.n_records);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= config.n_records) return;
      try {
        TraceArtifact* artifact = i < config.trace_records ? &result.traces[i] : nullptr;
        result.records[i] = run_record(config, result.grid, i, artifact);
      } catch (...) {
        errors[i] = std::current_exception();
        failed.store(true);
      }
    }
  };
  unsigned threads = config.threads ? config.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(config.n_records)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw Error("record " + std::to_string(i) + " (seed " +
                  std::to_string(derive_seed(config.seed, i)) + ") failed: " + e.what());
    }
  }

  std::vector<double> times;
  const std::size_t stride = config.checkpoint_stride();
  for (std::size_t k = 0; k <= config.steps(); k += stride) {
    times.push_back(static_cast<double>(k) * config.dt);
  }
  result.stats = aggregate(times, result.records);
  return result;
}

void write_stats(const std::filesystem::path& path, const EnsembleStats& stats) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "time,p_mean,p_se,V_mean,V_se,dI_mean,dI_se,n\n";
  for (std::size_t c = 0; c < stats.times.size(); ++c) {
    out << format_double(stats.times[c]) << ',' << format_double(stats.p_mean[c]) << ','
        << format_double(stats.p_se[c]) << ',' << format_double(stats.v_mean[c]) << ','
        << format_double(stats.v_se[c]) << ',' << format_double(stats.di_mean[c]) << ','
        << format_double(stats.di_se[c]) << ',' << stats.n_records << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace qtraj
