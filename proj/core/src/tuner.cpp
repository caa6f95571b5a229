#include "dedisp/tuner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>

#include "dedisp/analysis.hpp"
#include "dedisp/errors.hpp"
#include "dedisp/filterbank.hpp"

namespace dedisp {

namespace {

std::vector<std::uint32_t> divisors_ascending(std::uint32_t n) {
  std::vector<std::uint32_t> small;
  std::vector<std::uint32_t> large;
  for (std::uint32_t k = 1; static_cast<std::uint64_t>(k) * k <= n; ++k) {
    if (n % k == 0) {
      small.push_back(k);
      if (k != n / k) large.push_back(n / k);
    }
  }
  small.insert(small.end(), large.rbegin(), large.rend());
  return small;
}

// Keeps the optimizer from discarding benchmark runs whose output is unused.
volatile float g_benchmark_sink = 0.0f;

bool config_preferred(const TuningRecord& candidate, const TuningRecord& incumbent) {
  if (candidate.gflops != incumbent.gflops) return candidate.gflops > incumbent.gflops;
  const std::uint32_t a_items = candidate.config.block_items();
  const std::uint32_t b_items = incumbent.config.block_items();
  if (a_items != b_items) return a_items < b_items;
  return candidate.config < incumbent.config;
}

TuningResult run_sweep(const ObservationSetup& setup, std::uint32_t num_dms,
                       const TuneOptions& options, bool zero_dm) {
  setup.validate();
  if (num_dms == 0) throw std::invalid_argument("need at least one trial DM");
  if (options.repeats == 0) throw std::invalid_argument("need at least one timed repeat");

  const std::vector<KernelConfig> configs =
      enumerate_configs(num_dms, setup.samples_per_second, options.limits);

  const DelayTable table = zero_dm ? build_zero_delay_table(setup, num_dms)
                                   : build_delay_table(setup, num_dms);
  const std::uint32_t s = setup.samples_per_second;
  const std::uint64_t blocks = (static_cast<std::uint64_t>(s) + table.max_delay + s - 1) / s;
  const std::uint64_t samples = blocks * s;
  if (samples > std::numeric_limits<std::uint32_t>::max()) {
    throw capacity_error("instance needs more input samples than a filterbank can hold");
  }

  const Filterbank fb =
      noise_filterbank(setup, static_cast<std::uint32_t>(samples), 1.0f, options.seed);

  std::unique_ptr<ThreadPool> local_pool;
  ThreadPool* pool = options.pool;
  if (pool == nullptr) {
    local_pool = std::make_unique<ThreadPool>(
        options.threads > 0 ? static_cast<unsigned>(options.threads) : 0);
    pool = local_pool.get();
  }

  ExecOptions exec;
  exec.threads = static_cast<int>(pool->worker_count());
  exec.limits = options.limits;
  exec.pool = pool;

  TuningResult result;
  result.setup = setup;
  result.num_dms = num_dms;
  result.zero_dm = zero_dm;
  result.limits = options.limits;
  result.repeats = options.repeats;
  result.seed = options.seed;
  result.threads = static_cast<int>(pool->worker_count());
  result.rng_id = kNoiseRngId;
  result.clock_resolution_s = clock_resolution_seconds();
  result.records.reserve(configs.size());

  for (std::size_t i = 0; i < configs.size(); ++i) {
    result.records.push_back(benchmark_config(fb, table, configs[i], options.repeats, exec));
    if (options.progress) options.progress(i + 1, configs.size());
  }

  result.best_index = select_best(result.records);
  result.stats = compute_stats(result.records, result.best_index);
  result.realtime_threshold_gflops = realtime_threshold_gflops(setup, num_dms);
  result.realtime_pass = result.best().gflops >= result.realtime_threshold_gflops;
  return result;
}

}  // namespace

std::vector<KernelConfig> enumerate_configs(std::uint32_t num_dms,
                                            std::uint32_t samples_per_second,
                                            const KernelLimits& limits) {
  if (num_dms == 0 || samples_per_second == 0) {
    throw std::invalid_argument("instance dimensions must be positive");
  }
  const std::vector<std::uint32_t> time_divisors = divisors_ascending(samples_per_second);
  const std::vector<std::uint32_t> dm_divisors = divisors_ascending(num_dms);

  std::vector<KernelConfig> configs;
  for (const std::uint32_t items_time : time_divisors) {
    if (items_time > limits.max_block_items) break;
    for (const std::uint32_t items_dm : dm_divisors) {
      if (static_cast<std::uint64_t>(items_time) * items_dm > limits.max_block_items) break;
      for (const std::uint32_t work_time : time_divisors) {
        if (work_time > limits.max_accumulators) break;
        const std::uint64_t tile_time = static_cast<std::uint64_t>(items_time) * work_time;
        if (tile_time > samples_per_second || samples_per_second % tile_time != 0) continue;
        for (const std::uint32_t work_dm : dm_divisors) {
          if (static_cast<std::uint64_t>(work_time) * work_dm > limits.max_accumulators) break;
          const std::uint64_t tile_dm = static_cast<std::uint64_t>(items_dm) * work_dm;
          if (tile_dm > num_dms || num_dms % tile_dm != 0) continue;
          configs.push_back(KernelConfig{items_time, items_dm, work_time, work_dm});
        }
      }
    }
  }
  if (configs.empty()) {
    throw std::invalid_argument("the limits leave no valid kernel configuration");
  }
  return configs;
}

TuningRecord benchmark_config(const Filterbank& fb, const DelayTable& table,
                              const KernelConfig& cfg, std::uint32_t repeats,
                              const ExecOptions& options) {
  if (repeats == 0) throw std::invalid_argument("need at least one timed repeat");

  TuningRecord record;
  record.config = cfg;
  record.runs.reserve(repeats);

  DedispersedSeries out;
  dedisperse_tiled_into(out, fb, table, cfg, options);  // warm-up, untimed
  g_benchmark_sink = g_benchmark_sink + out.data[0];

  using clock = std::chrono::steady_clock;
  double total = 0.0;
  for (std::uint32_t r = 0; r < repeats; ++r) {
    const auto begin = clock::now();
    dedisperse_tiled_into(out, fb, table, cfg, options);
    const auto end = clock::now();
    g_benchmark_sink = g_benchmark_sink + out.data[0];
    const double seconds = std::chrono::duration<double>(end - begin).count();
    record.runs.push_back(seconds);
    total += seconds;
  }
  record.mean_time = total / repeats;

  const double flop = static_cast<double>(table.num_dms) *
                      static_cast<double>(fb.setup.samples_per_second) *
                      static_cast<double>(fb.setup.channels);
  const double resolution = clock_resolution_seconds();
  record.timer_warning = resolution > 0.01 * record.mean_time;
  // A mean below the clock granularity would divide to nonsense; floor it.
  record.gflops = flop / std::max(record.mean_time, resolution) / 1e9;
  return record;
}

std::size_t select_best(std::span<const TuningRecord> records) {
  if (records.empty()) throw std::invalid_argument("no records to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (config_preferred(records[i], records[best])) best = i;
  }
  return best;
}

TuningStats compute_stats(std::span<const TuningRecord> records, std::size_t best_index) {
  if (records.empty()) throw std::invalid_argument("no records to summarize");
  if (best_index >= records.size()) throw std::invalid_argument("best_index out of range");

  TuningStats stats;
  double sum = 0.0;
  for (const TuningRecord& record : records) sum += record.gflops;
  stats.mean_gflops = sum / static_cast<double>(records.size());

  double variance = 0.0;
  for (const TuningRecord& record : records) {
    const double delta = record.gflops - stats.mean_gflops;
    variance += delta * delta;
  }
  variance /= static_cast<double>(records.size());
  stats.stddev_gflops = std::sqrt(variance);

  if (stats.stddev_gflops > 0.0) {
    const double snr = (records[best_index].gflops - stats.mean_gflops) / stats.stddev_gflops;
    stats.snr_optimum = snr;
    stats.chebyshev_bound = std::min(1.0, 1.0 / (snr * snr));
  } else {
    stats.degenerate = true;
  }
  return stats;
}

TuningResult tune(const ObservationSetup& setup, std::uint32_t num_dms,
                  const TuneOptions& options) {
  return run_sweep(setup, num_dms, options, false);
}

TuningResult zero_dm_experiment(const ObservationSetup& setup, std::uint32_t num_dms,
                                const TuneOptions& options) {
  return run_sweep(setup, num_dms, options, true);
}

FixedConfigReport best_fixed_config(std::span<const TuningResult> results) {
  if (results.empty()) throw std::invalid_argument("no tuning results given");
  const ObservationSetup& first = results.front().setup;
  for (const TuningResult& result : results) {
    if (result.setup.name != first.name ||
        result.setup.samples_per_second != first.samples_per_second ||
        result.setup.channels != first.channels) {
      throw std::invalid_argument("tuning results mix different setups");
    }
    if (result.records.empty()) throw std::invalid_argument("a tuning result holds no records");
  }

  // gflops per config, only for configs measured in every instance.
  std::map<KernelConfig, std::vector<double>> by_config;
  for (std::size_t i = 0; i < results.size(); ++i) {
    for (const TuningRecord& record : results[i].records) {
      auto& series = by_config[record.config];
      if (series.size() == i) series.push_back(record.gflops);
    }
  }

  bool found = false;
  FixedConfigReport report;
  for (const auto& [config, series] : by_config) {
    if (series.size() != results.size()) continue;
    double total = 0.0;
    for (const double gflops : series) total += gflops;
    if (!found || total > report.total_gflops) {
      found = true;
      report.config = config;
      report.total_gflops = total;
      report.fixed_gflops = series;
    }
  }
  if (!found) {
    throw std::invalid_argument("no configuration is valid in every instance");
  }

  report.speedup_over_fixed.reserve(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    report.speedup_over_fixed.push_back(results[i].best().gflops / report.fixed_gflops[i]);
  }
  return report;
}

std::vector<HistogramBin> make_histogram(const TuningResult& result, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("need at least one histogram bin");
  if (result.records.empty()) throw std::invalid_argument("no records to bin");

  double lo = result.records.front().gflops;
  double hi = lo;
  for (const TuningRecord& record : result.records) {
    lo = std::min(lo, record.gflops);
    hi = std::max(hi, record.gflops);
  }

  std::vector<HistogramBin> histogram(bins);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    histogram[i].lo = lo + width * static_cast<double>(i);
    histogram[i].hi = i + 1 == bins ? hi : lo + width * static_cast<double>(i + 1);
  }
  for (const TuningRecord& record : result.records) {
    std::size_t index = bins - 1;
    if (width > 0.0) {
      index = std::min(static_cast<std::size_t>((record.gflops - lo) / width), bins - 1);
    } else {
      index = 0;
    }
    ++histogram[index].count;
  }
  return histogram;
}

std::vector<std::uint32_t> default_instances() {
  std::vector<std::uint32_t> instances;
  for (std::uint32_t d = 2; d <= 4096; d *= 2) instances.push_back(d);
  return instances;
}

std::uint64_t estimate_instance_bytes(const ObservationSetup& setup, std::uint32_t num_dms) {
  const ProblemInstance inst = instance_sizing(setup, num_dms);
  const unsigned __int128 input =
      static_cast<unsigned __int128>(setup.channels) * inst.num_samples * 4;
  const unsigned __int128 output =
      static_cast<unsigned __int128>(num_dms) * setup.samples_per_second * 4;
  const unsigned __int128 table =
      static_cast<unsigned __int128>(num_dms) * setup.channels * 4;
  const unsigned __int128 total = input + output + table;
  if (total > std::numeric_limits<std::uint64_t>::max()) {
    return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(total);
}

double clock_resolution_seconds() {
  static const double resolution = [] {
    using clock = std::chrono::steady_clock;
    auto best = clock::duration::max();
    auto prev = clock::now();
    for (int i = 0; i < 2000; ++i) {
      const auto now = clock::now();
      const auto tick = now - prev;
      if (tick.count() > 0 && tick < best) best = tick;
      prev = now;
    }
    if (best == clock::duration::max()) {
      return std::chrono::duration<double>(clock::duration(1)).count();
    }
    return std::chrono::duration<double>(best).count();
  }();
  return resolution;
}

}  // namespace dedisp
