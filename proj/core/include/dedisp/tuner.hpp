#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dedisp/kernels.hpp"
#include "dedisp/setup.hpp"

namespace dedisp {

/// Measured runtimes of one configuration on one instance. mean_time averages
/// the timed repeats; the warm-up run is excluded.
struct TuningRecord {
  KernelConfig config;
  std::vector<double> runs;    // seconds, one entry per timed repeat
  double mean_time = 0.0;      // seconds
  double gflops = 0.0;         // num_dms * s * channels / mean_time / 1e9
  bool timer_warning = false;  // clock resolution coarser than 1% of mean_time
};

/// Statistics over the whole configuration space of one instance, population
/// stddev. snr_optimum and chebyshev_bound are empty when the space is
/// degenerate (stddev zero, e.g. a single configuration).
struct TuningStats {
  double mean_gflops = 0.0;
  double stddev_gflops = 0.0;
  std::optional<double> snr_optimum;      // (best - mean) / stddev
  std::optional<double> chebyshev_bound;  // min(1, 1/snr^2)
  bool degenerate = false;
};

/// Everything measured for one (setup, instance) pair.
struct TuningResult {
  ObservationSetup setup;
  std::uint32_t num_dms = 0;
  bool zero_dm = false;  // measured against an all-zero delay table
  KernelLimits limits{};
  std::uint32_t repeats = 0;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string rng_id;
  double clock_resolution_s = 0.0;
  std::vector<TuningRecord> records;
  std::size_t best_index = 0;
  TuningStats stats{};
  double realtime_threshold_gflops = 0.0;
  bool realtime_pass = false;

  const TuningRecord& best() const { return records[best_index]; }
};

/// Every meaningful configuration for this instance, in lexicographic order
/// of (items_time, items_dm, work_time, work_dm). The candidate values are
/// divisors of their extents; a tuple is kept iff it satisfies all
/// KernelConfig invariants. Throws std::invalid_argument when the limits
/// leave no valid configuration.
std::vector<KernelConfig> enumerate_configs(std::uint32_t num_dms,
                                            std::uint32_t samples_per_second,
                                            const KernelLimits& limits = {});

/// One warm-up run, then `repeats` timed runs of the tiled kernel on a
/// memory-resident input, wall-clocked with a monotonic clock.
TuningRecord benchmark_config(const Filterbank& fb, const DelayTable& table,
                              const KernelConfig& cfg, std::uint32_t repeats = 10,
                              const ExecOptions& options = {});

/// Index of the optimum: highest gflops, ties broken by fewer block items,
/// then by lexicographic config order. Pure; replaying recorded timings
/// reselects the same index.
std::size_t select_best(std::span<const TuningRecord> records);

/// Space statistics, recomputable from the records alone.
TuningStats compute_stats(std::span<const TuningRecord> records, std::size_t best_index);

struct TuneOptions {
  KernelLimits limits{};
  std::uint32_t repeats = 10;
  int threads = 0;  // 0 = hardware concurrency
  std::uint64_t seed = 1;
  ThreadPool* pool = nullptr;
  /// Called after each benchmarked configuration with (done, total).
  std::function<void(std::size_t, std::size_t)> progress;
};

/// Benchmarks every meaningful configuration on a synthetic noise filterbank
/// sized for (setup, num_dms), then selects the optimum and fills all
/// statistics. Configurations are benchmarked sequentially so runs never
/// contend with each other.
TuningResult tune(const ObservationSetup& setup, std::uint32_t num_dms,
                  const TuneOptions& options = {});

/// Same sweep with every shift forced to zero: each trial uses the same input
/// window, exposing perfect reuse. The result is labeled zero_dm.
TuningResult zero_dm_experiment(const ObservationSetup& setup, std::uint32_t num_dms,
                                const TuneOptions& options = {});

/// The fixed configuration that maximizes summed gflops across instances,
/// over configurations valid in every instance, plus the per-instance speedup
/// of each tuned optimum over it (>= 1 by construction).
struct FixedConfigReport {
  KernelConfig config;
  double total_gflops = 0.0;
  std::vector<double> fixed_gflops;          // per result, in input order
  std::vector<double> speedup_over_fixed;    // tuned optimum / fixed
};

/// Throws std::invalid_argument when results is empty, mixes setups, or no
/// configuration is valid in every instance.
FixedConfigReport best_fixed_config(std::span<const TuningResult> results);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

/// Equal-width gflops histogram over [min, max] of the records. Bin counts
/// sum to the record count.
std::vector<HistogramBin> make_histogram(const TuningResult& result, std::size_t bins);

/// The default instance sweep: powers of two from 2 to 4096.
std::vector<std::uint32_t> default_instances();

/// Rough resident footprint of one instance: input + output + delay table.
std::uint64_t estimate_instance_bytes(const ObservationSetup& setup, std::uint32_t num_dms);

/// Measured granularity of the monotonic clock, cached after first call.
double clock_resolution_seconds();

}  // namespace dedisp
