// dedisp-tune: generate test filterbanks, verify the kernels, sweep the
// tuning space, benchmark single configurations, and analyze result files.
//
// Exit codes: 0 success, 1 runtime error, 2 usage error, 3 verification
// failure.

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dedisp/analysis.hpp"
#include "dedisp/errors.hpp"
#include "dedisp/filterbank.hpp"
#include "dedisp/kernels.hpp"
#include "dedisp/manifest.hpp"
#include "dedisp/report_io.hpp"
#include "dedisp/setup.hpp"
#include "dedisp/tuner.hpp"
#include "dedisp/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitVerification = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

dedisp::KernelLimits parse_limits(const std::string& text) {
  dedisp::KernelLimits limits;
  if (text.empty()) return limits;
  std::stringstream stream(text);
  std::string part;
  while (std::getline(stream, part, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) {
      throw UsageError("--limits expects items=I,acc=A, got '" + part + "'");
    }
    const std::string key = part.substr(0, eq);
    unsigned long value = 0;
    try {
      value = std::stoul(part.substr(eq + 1));
    } catch (const std::exception&) {
      throw UsageError("--limits value in '" + part + "' is not a number");
    }
    if (value == 0 || value > 0xfffffffful) {
      throw UsageError("--limits value in '" + part + "' is out of range");
    }
    if (key == "items") {
      limits.max_block_items = static_cast<std::uint32_t>(value);
    } else if (key == "acc") {
      limits.max_accumulators = static_cast<std::uint32_t>(value);
    } else {
      throw UsageError("--limits key must be items or acc, got '" + key + "'");
    }
  }
  return limits;
}

std::uint64_t parse_mem_cap(const std::string& text) {
  std::size_t end = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &end);
  } catch (const std::exception&) {
    throw UsageError("--mem-cap '" + text + "' is not a size");
  }
  if (!(value > 0.0)) throw UsageError("--mem-cap must be positive");
  std::string suffix = text.substr(end);
  for (char& ch : suffix) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  double scale = 1.0;
  if (suffix.empty() || suffix == "B") {
    scale = 1.0;
  } else if (suffix == "K" || suffix == "KB" || suffix == "KIB") {
    scale = 1024.0;
  } else if (suffix == "M" || suffix == "MB" || suffix == "MIB") {
    scale = 1024.0 * 1024.0;
  } else if (suffix == "G" || suffix == "GB" || suffix == "GIB") {
    scale = 1024.0 * 1024.0 * 1024.0;
  } else {
    throw UsageError("--mem-cap suffix '" + suffix + "' not recognized (use B/KB/MB/GB)");
  }
  const double bytes = value * scale;
  if (bytes >= 1.8e19) return UINT64_MAX;
  return static_cast<std::uint64_t>(bytes);
}

std::uint64_t available_memory_bytes() {
  std::ifstream meminfo("/proc/meminfo");
  std::string key;
  std::uint64_t kb = 0;
  std::string unit;
  while (meminfo >> key >> kb >> unit) {
    if (key == "MemAvailable:") return kb * 1024;
  }
  return 0;
}

std::uint64_t default_mem_cap() {
  const std::uint64_t available = available_memory_bytes();
  if (available == 0) return UINT64_MAX;
  return available / 5 * 4;
}

dedisp::KernelConfig parse_config(const std::string& text) {
  std::uint32_t fields[4];
  std::stringstream stream(text);
  std::string part;
  int i = 0;
  while (std::getline(stream, part, ',')) {
    if (i == 4) throw UsageError("--config expects four comma-separated values");
    unsigned long value = 0;
    try {
      value = std::stoul(part);
    } catch (const std::exception&) {
      throw UsageError("--config entry '" + part + "' is not a number");
    }
    if (value == 0 || value > 0xfffffffful) {
      throw UsageError("--config entry '" + part + "' is out of range");
    }
    fields[i++] = static_cast<std::uint32_t>(value);
  }
  if (i != 4) throw UsageError("--config expects items_time,items_dm,work_time,work_dm");
  return dedisp::KernelConfig{fields[0], fields[1], fields[2], fields[3]};
}

std::pair<double, double> parse_roofline(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) {
    throw UsageError("--roofline expects peak_gflops,peak_gbs");
  }
  try {
    const double gflops = std::stod(text.substr(0, comma));
    const double gbs = std::stod(text.substr(comma + 1));
    if (!(gflops > 0.0) || !(gbs > 0.0)) throw UsageError("--roofline peaks must be positive");
    return {gflops, gbs};
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception&) {
    throw UsageError("--roofline '" + text + "' is not a pair of numbers");
  }
}

std::string config_str(const dedisp::KernelConfig& cfg) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "(%u,%u,%u,%u)", cfg.items_time, cfg.items_dm,
                cfg.work_time, cfg.work_dm);
  return buffer;
}

dedisp::RunManifest make_manifest(const std::string& command, int argc, char** argv,
                                  const std::string& setup_name,
                                  const std::vector<std::uint32_t>& instances,
                                  const dedisp::KernelLimits& limits, std::uint32_t repeats,
                                  std::uint64_t seed, int threads,
                                  const std::vector<std::string>& outputs) {
  dedisp::RunManifest manifest;
  manifest.command = command;
  manifest.argv.assign(argv, argv + argc);
  manifest.setup_name = setup_name;
  manifest.instances = instances;
  manifest.limits = limits;
  manifest.repeats = repeats;
  manifest.seed = seed;
  manifest.threads = threads;
  manifest.rng_id = dedisp::kNoiseRngId;
  manifest.outputs = outputs;
  manifest.tool_version = dedisp::kVersion;
  manifest.timestamp_utc = dedisp::current_timestamp_utc();
  return manifest;
}

// ---------------------------------------------------------------- gen ----

struct GenArgs {
  std::string setup = "Apertif";
  double dm = 0.0;
  double t0 = 0.0;
  double width = 0.001;
  double amp = 1.0;
  double sigma = 0.0;
  std::uint64_t seed = 1;
  std::uint32_t seconds = 1;
  std::string format = "sigproc";
  std::string out;
};

int cmd_gen(const GenArgs& args, int argc, char** argv) {
  const dedisp::ObservationSetup setup = dedisp::resolve_setup(args.setup);
  const std::uint64_t samples =
      static_cast<std::uint64_t>(args.seconds) * setup.samples_per_second;
  if (samples == 0 || samples > 0xffffffffull) {
    throw UsageError("--seconds yields an unusable sample count");
  }
  dedisp::PulseSpec pulse;
  pulse.dm = args.dm;
  pulse.t0 = args.t0;
  pulse.width = args.width;
  pulse.amplitude = static_cast<float>(args.amp);
  pulse.noise_sigma = static_cast<float>(args.sigma);
  pulse.seed = args.seed;

  const dedisp::Filterbank fb =
      dedisp::generate(setup, static_cast<std::uint32_t>(samples), pulse);
  if (args.format == "sigproc") {
    dedisp::write_sigproc(fb, args.out);
  } else if (args.format == "raw") {
    dedisp::write_raw(fb, args.out);
  } else {
    throw UsageError("--format must be sigproc or raw");
  }

  const dedisp::RunManifest manifest =
      make_manifest("gen", argc, argv, setup.name, {}, {}, 0, args.seed, 1, {args.out});
  dedisp::write_manifest(manifest, args.out + ".manifest.json");

  std::printf("wrote %s: %s, %u channels x %u samples, dm %.4g, width %.4g s\n",
              args.out.c_str(), args.format.c_str(), setup.channels, fb.num_samples, args.dm,
              args.width);
  return kExitOk;
}

// ------------------------------------------------------------- verify ----

struct VerifyArgs {
  std::uint64_t seed = 1;
  int threads = 0;
  bool inject_fault = false;
};

dedisp::ObservationSetup random_mini_setup(std::mt19937_64& rng) {
  static const std::uint32_t rates[] = {16, 24, 32, 48, 64, 96, 128, 192, 256};
  std::uniform_int_distribution<std::size_t> rate_pick(0, std::size(rates) - 1);
  std::uniform_int_distribution<std::uint32_t> channel_pick(1, 64);
  std::uniform_real_distribution<double> f_pick(50.0, 400.0);
  std::uniform_real_distribution<double> width_pick(0.05, 2.0);
  std::uniform_real_distribution<double> step_pick(0.05, 1.5);

  dedisp::ObservationSetup setup;
  setup.name = "mini";
  setup.samples_per_second = rates[rate_pick(rng)];
  setup.channels = channel_pick(rng);
  setup.f_min = f_pick(rng);
  setup.channel_width = width_pick(rng);
  setup.dm_first = 0.0;
  setup.dm_step = step_pick(rng);
  return setup;
}

bool equivalence_suite(std::uint64_t seed, dedisp::ThreadPool& pool, bool inject_fault,
                       std::size_t rounds, std::size_t config_samples) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> dm_pick(1, 32);
  const dedisp::KernelLimits limits{64, 32};

  std::size_t mismatches = 0;
  std::size_t comparisons = 0;
  for (std::size_t round = 0; round < rounds; ++round) {
    const dedisp::ObservationSetup setup = random_mini_setup(rng);
    const std::uint32_t num_dms = dm_pick(rng);
    dedisp::DelayTable table = dedisp::build_delay_table(setup, num_dms);
    if (inject_fault) {
      if (table.max_delay == 0) continue;  // nothing below the peak to corrupt
      // Bump the first below-peak entry; reads stay in bounds, sums change.
      for (std::size_t i = 0; i < table.shifts.size(); ++i) {
        if (table.shifts[i] < table.max_delay) {
          ++table.shifts[i];
          break;
        }
      }
    }

    const std::uint32_t t = static_cast<std::uint32_t>(
        ((static_cast<std::uint64_t>(setup.samples_per_second) + table.max_delay +
          setup.samples_per_second - 1) /
         setup.samples_per_second) *
        setup.samples_per_second);
    const dedisp::Filterbank fb = dedisp::noise_filterbank(setup, t, 1.0f, rng());

    // The reference sees the intact table in fault mode, so the comparison
    // must then fail.
    const dedisp::DelayTable clean = inject_fault
                                         ? dedisp::build_delay_table(setup, num_dms)
                                         : table;
    const dedisp::DedispersedSeries expected = dedisp::dedisperse_reference(fb, clean);

    std::vector<dedisp::KernelConfig> configs =
        dedisp::enumerate_configs(num_dms, setup.samples_per_second, limits);
    std::shuffle(configs.begin(), configs.end(), rng);
    if (configs.size() > config_samples) configs.resize(config_samples);

    dedisp::ExecOptions exec;
    exec.limits = limits;
    exec.pool = &pool;
    for (const dedisp::KernelConfig& cfg : configs) {
      const dedisp::DedispersedSeries actual = dedisp::dedisperse_tiled(fb, table, cfg, exec);
      ++comparisons;
      if (actual.data != expected.data) ++mismatches;
    }
  }

  std::printf("  equivalence: %zu comparisons, %zu mismatches\n", comparisons, mismatches);
  return comparisons > 0 && mismatches == 0;
}

bool monotonicity_suite(std::uint64_t seed, std::size_t rounds) {
  std::mt19937_64 rng(seed + 1);
  std::uniform_int_distribution<std::uint32_t> dm_pick(1, 24);
  std::size_t checked = 0;
  for (std::size_t round = 0; round < rounds; ++round) {
    const dedisp::ObservationSetup setup = random_mini_setup(rng);
    const std::uint32_t num_dms = dm_pick(rng);
    const dedisp::DelayTable table = dedisp::build_delay_table(setup, num_dms);
    for (std::uint32_t dm = 0; dm < num_dms; ++dm) {
      if (table.at(setup.channels - 1, dm) != 0) return false;
      for (std::uint32_t ch = 1; ch < setup.channels; ++ch) {
        if (table.at(ch, dm) > table.at(ch - 1, dm)) return false;
        ++checked;
      }
      if (dm > 0) {
        for (std::uint32_t ch = 0; ch < setup.channels; ++ch) {
          if (table.at(ch, dm) < table.at(ch, dm - 1)) return false;
          ++checked;
        }
      }
    }
  }
  std::printf("  delay monotonicity: %zu orderings checked\n", checked);
  return checked > 0;
}

bool pulse_suite(std::uint64_t seed, dedisp::ThreadPool& pool) {
  dedisp::ObservationSetup setup;
  setup.name = "pulse-mini";
  setup.samples_per_second = 1000;
  setup.channels = 16;
  setup.f_min = 100.0;
  setup.channel_width = 10.0;
  setup.dm_first = 0.0;
  setup.dm_step = 0.05;
  const std::uint32_t num_dms = 8;
  const std::uint32_t k = 3;

  const dedisp::DelayTable table = dedisp::build_delay_table(setup, num_dms);
  const std::uint32_t t = static_cast<std::uint32_t>(
      ((static_cast<std::uint64_t>(setup.samples_per_second) + table.max_delay +
        setup.samples_per_second - 1) /
       setup.samples_per_second) *
      setup.samples_per_second);

  dedisp::PulseSpec pulse;
  pulse.dm = setup.trial_dm(k);
  pulse.t0 = 0.2;
  pulse.width = 0.01;
  pulse.amplitude = 1.0f;

  dedisp::ExecOptions exec;
  exec.pool = &pool;

  // Noiseless: the stacked pulse must reach amplitude * channels exactly, on
  // the injected trial row and nowhere else.
  {
    pulse.noise_sigma = 0.0f;
    pulse.seed = seed;
    const dedisp::Filterbank fb = dedisp::generate(setup, t, pulse);
    const dedisp::DedispersedSeries out = dedisp::dedisperse_reference(fb, table);
    const float target = pulse.amplitude * static_cast<float>(setup.channels);
    float peak = 0.0f;
    std::uint32_t peak_dm = 0;
    for (std::uint32_t dm = 0; dm < num_dms; ++dm) {
      for (std::uint32_t j = 0; j < setup.samples_per_second; ++j) {
        if (out.at(dm, j) > peak) {
          peak = out.at(dm, j);
          peak_dm = dm;
        }
      }
    }
    if (peak != target || peak_dm != k) {
      std::printf("  pulse recovery: noiseless peak %.3f at trial %u (want %.3f at %u)\n",
                  peak, peak_dm, target, k);
      return false;
    }
  }

  // Noisy: over 20 seeds the loudest trial must stay within one step of k.
  std::size_t hits = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    pulse.noise_sigma = pulse.amplitude / 5.0f;
    pulse.seed = seed + s;
    const dedisp::Filterbank fb = dedisp::generate(setup, t, pulse);
    const dedisp::DedispersedSeries out = dedisp::dedisperse_reference(fb, table);
    float peak = -1e30f;
    std::uint32_t peak_dm = 0;
    for (std::uint32_t dm = 0; dm < num_dms; ++dm) {
      for (std::uint32_t j = 0; j < setup.samples_per_second; ++j) {
        if (out.at(dm, j) > peak) {
          peak = out.at(dm, j);
          peak_dm = dm;
        }
      }
    }
    if (peak_dm + 1 >= k && peak_dm <= k + 1) ++hits;
  }
  std::printf("  pulse recovery: noiseless exact, noisy argmax within one step %zu/20\n", hits);
  return hits == 20;
}

int cmd_verify(const VerifyArgs& args) {
  dedisp::ThreadPool pool(args.threads > 0 ? static_cast<unsigned>(args.threads) : 0);
  std::printf("verify (seed %" PRIu64 ", %u workers%s)\n", args.seed, pool.worker_count(),
              args.inject_fault ? ", fault injection on: failure expected" : "");

  bool all_ok = true;
  const bool equivalence =
      equivalence_suite(args.seed, pool, args.inject_fault, args.inject_fault ? 12 : 24, 8);
  std::printf("  [%s] kernel equivalence\n", equivalence ? "pass" : "FAIL");
  all_ok &= equivalence;

  if (!args.inject_fault) {
    const bool monotone = monotonicity_suite(args.seed, 40);
    std::printf("  [%s] delay-table monotonicity\n", monotone ? "pass" : "FAIL");
    all_ok &= monotone;

    const bool pulse = pulse_suite(args.seed, pool);
    std::printf("  [%s] pulse recovery\n", pulse ? "pass" : "FAIL");
    all_ok &= pulse;
  }

  std::printf("verify: %s\n", all_ok ? "all suites passed" : "FAILURES");
  return all_ok ? kExitOk : kExitVerification;
}

// --------------------------------------------------------------- tune ----

struct TuneArgs {
  std::string setup = "Apertif";
  std::vector<std::uint32_t> dms;
  std::uint32_t repeats = 10;
  std::string limits_text;
  int threads = 0;
  std::uint64_t seed = 1;
  std::string out = ".";
  std::string format = "both";
  std::string mem_cap_text;
  bool zero_dm = false;
};

int cmd_tune(const TuneArgs& args, int argc, char** argv) {
  const dedisp::ObservationSetup setup = dedisp::resolve_setup(args.setup);
  const dedisp::KernelLimits limits = parse_limits(args.limits_text);
  if (args.format != "json" && args.format != "csv" && args.format != "both") {
    throw UsageError("--format must be json, csv, or both");
  }
  const std::uint64_t mem_cap =
      args.mem_cap_text.empty() ? default_mem_cap() : parse_mem_cap(args.mem_cap_text);
  const std::vector<std::uint32_t> instances =
      args.dms.empty() ? dedisp::default_instances() : args.dms;

  std::filesystem::create_directories(args.out);
  dedisp::ThreadPool pool(args.threads > 0 ? static_cast<unsigned>(args.threads) : 0);

  dedisp::TuneOptions options;
  options.limits = limits;
  options.repeats = args.repeats;
  options.threads = args.threads;
  options.seed = args.seed;
  options.pool = &pool;

  std::vector<std::string> outputs;
  for (const std::uint32_t num_dms : instances) {
    if (num_dms == 0) throw UsageError("--dms entries must be positive");
    const std::uint64_t bytes = dedisp::estimate_instance_bytes(setup, num_dms);
    if (bytes > mem_cap) {
      std::printf("d=%u skipped: needs ~%.2f MiB, cap %.2f MiB\n", num_dms,
                  static_cast<double>(bytes) / 1048576.0,
                  static_cast<double>(mem_cap) / 1048576.0);
      continue;
    }

    const dedisp::TuningResult result = args.zero_dm
                                            ? dedisp::zero_dm_experiment(setup, num_dms, options)
                                            : dedisp::tune(setup, num_dms, options);

    char stem[128];
    std::snprintf(stem, sizeof(stem), "tune_%s_d%u%s", setup.name.c_str(), num_dms,
                  args.zero_dm ? "_zerodm" : "");
    const std::filesystem::path base = std::filesystem::path(args.out) / stem;
    if (args.format != "csv") {
      dedisp::write_tuning_result_json(result, base.string() + ".json");
      outputs.push_back(base.string() + ".json");
    }
    if (args.format != "json") {
      dedisp::write_tuning_result_csv(result, base.string() + ".csv");
      outputs.push_back(base.string() + ".csv");
    }

    const dedisp::TuningRecord& best = result.best();
    if (result.stats.degenerate) {
      std::printf("d=%u best %s %.3f GFLOP/s (degenerate space) real-time %s\n", num_dms,
                  config_str(best.config).c_str(), best.gflops,
                  result.realtime_pass ? "pass" : "FAIL");
    } else {
      std::printf("d=%u best %s %.3f GFLOP/s snr %.2f chebyshev %.4f real-time %s\n", num_dms,
                  config_str(best.config).c_str(), best.gflops, *result.stats.snr_optimum,
                  *result.stats.chebyshev_bound, result.realtime_pass ? "pass" : "FAIL");
    }
    if (best.timer_warning) {
      std::printf("d=%u warning: clock resolution above 1%% of the mean run\n", num_dms);
    }
  }

  const dedisp::RunManifest manifest =
      make_manifest("tune", argc, argv, setup.name, instances, limits, args.repeats, args.seed,
                    static_cast<int>(pool.worker_count()), outputs);
  const std::filesystem::path manifest_path =
      std::filesystem::path(args.out) / "tune.manifest.json";
  dedisp::write_manifest(manifest, manifest_path.string());
  return kExitOk;
}

// -------------------------------------------------------------- bench ----

struct BenchArgs {
  std::string setup = "Apertif";
  std::uint32_t num_dms = 32;
  std::string config_text = "1,1,1,1";
  std::uint32_t repeats = 10;
  int threads = 0;
  std::uint64_t seed = 1;
  bool zero_dm = false;
};

int cmd_bench(const BenchArgs& args) {
  const dedisp::ObservationSetup setup = dedisp::resolve_setup(args.setup);
  const dedisp::KernelConfig cfg = parse_config(args.config_text);
  dedisp::validate_config(cfg, args.num_dms, setup.samples_per_second);

  const dedisp::DelayTable table = args.zero_dm
                                       ? dedisp::build_zero_delay_table(setup, args.num_dms)
                                       : dedisp::build_delay_table(setup, args.num_dms);
  const std::uint32_t s = setup.samples_per_second;
  const std::uint32_t t = static_cast<std::uint32_t>(
      ((static_cast<std::uint64_t>(s) + table.max_delay + s - 1) / s) * s);
  const dedisp::Filterbank fb = dedisp::noise_filterbank(setup, t, 1.0f, args.seed);

  dedisp::ThreadPool pool(args.threads > 0 ? static_cast<unsigned>(args.threads) : 0);
  dedisp::ExecOptions exec;
  exec.pool = &pool;

  const dedisp::TuningRecord record =
      dedisp::benchmark_config(fb, table, cfg, args.repeats, exec);

  const dedisp::MemoryTraffic traffic = dedisp::kernel_traffic(table, cfg, args.num_dms, s);
  const std::uint64_t flop = static_cast<std::uint64_t>(args.num_dms) * s * setup.channels;
  const double ai = dedisp::measured_ai(flop, traffic);
  const dedisp::AiBounds bounds = dedisp::ai_bounds(args.num_dms, s, setup.channels);
  const dedisp::LoadCounts loads = dedisp::count_loads(table, cfg, args.num_dms, s);

  std::printf("%s d=%u cfg %s: mean %.6f s, %.3f GFLOP/s%s\n", setup.name.c_str(), args.num_dms,
              config_str(cfg).c_str(), record.mean_time, record.gflops,
              record.timer_warning ? " (timer warning)" : "");
  std::printf("  staged loads %" PRIu64 ", ideal %" PRIu64 ", redundancy %.3fx\n",
              loads.staged_loads, loads.ideal_loads,
              static_cast<double>(loads.staged_loads) /
                  static_cast<double>(std::max<std::uint64_t>(loads.ideal_loads, 1)));
  std::printf("  measured AI %.4f flop/byte (no-reuse bound %.4f, reuse bound %.4f)\n", ai,
              bounds.no_reuse, bounds.reuse_bound);
  return kExitOk;
}

// ------------------------------------------------------------ analyze ----

struct AnalyzeArgs {
  std::vector<std::string> results;
  std::string out = ".";
  std::string roofline_text;
  std::uint32_t beams = 0;
  double pass_time = 0.0;
};

int cmd_analyze(const AnalyzeArgs& args, int argc, char** argv) {
  if (args.results.empty()) throw UsageError("analyze needs at least one --results file");

  std::vector<dedisp::TuningResult> all;
  all.reserve(args.results.size());
  for (const std::string& path : args.results) {
    all.push_back(dedisp::read_tuning_result_json(path));
  }

  std::vector<dedisp::TuningResult> real;
  std::vector<dedisp::TuningResult> zero;
  for (const dedisp::TuningResult& result : all) {
    (result.zero_dm ? zero : real).push_back(result);
  }
  const std::vector<dedisp::TuningResult>& main_set = real.empty() ? zero : real;

  const dedisp::FixedConfigReport fixed = dedisp::best_fixed_config(main_set);

  std::optional<std::pair<double, double>> roofline;
  if (!args.roofline_text.empty()) roofline = parse_roofline(args.roofline_text);

  nlohmann::ordered_json doc;
  doc["schema"] = "dedisp-analysis/1";
  doc["setup"] = main_set.front().setup.name;
  doc["fixed"] = {{"items_time", fixed.config.items_time},
                  {"items_dm", fixed.config.items_dm},
                  {"work_time", fixed.config.work_time},
                  {"work_dm", fixed.config.work_dm},
                  {"total_gflops", fixed.total_gflops}};

  std::printf("analyze: %zu result(s), setup %s\n", all.size(),
              main_set.front().setup.name.c_str());
  std::printf("best fixed configuration %s, summed %.3f GFLOP/s\n",
              config_str(fixed.config).c_str(), fixed.total_gflops);

  std::string csv = "num_dms,best_gflops,fixed_gflops,threshold_gflops,realtime_pass\n";
  nlohmann::ordered_json instances = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < main_set.size(); ++i) {
    const dedisp::TuningResult& result = main_set[i];
    const dedisp::TuningRecord& best = result.best();

    const dedisp::DelayTable table =
        result.zero_dm ? dedisp::build_zero_delay_table(result.setup, result.num_dms)
                       : dedisp::build_delay_table(result.setup, result.num_dms);
    const std::uint32_t s = result.setup.samples_per_second;
    const std::uint64_t flop =
        static_cast<std::uint64_t>(result.num_dms) * s * result.setup.channels;
    const double ai_best = dedisp::measured_ai(
        flop, dedisp::kernel_traffic(table, best.config, result.num_dms, s));
    const double ai_naive = dedisp::measured_ai(
        flop, dedisp::kernel_traffic(table, dedisp::KernelConfig{1, 1, 1, 1}, result.num_dms, s));
    const dedisp::AiBounds bounds =
        dedisp::ai_bounds(result.num_dms, s, result.setup.channels);

    nlohmann::ordered_json node;
    node["num_dms"] = result.num_dms;
    node["best"] = {{"items_time", best.config.items_time},
                    {"items_dm", best.config.items_dm},
                    {"work_time", best.config.work_time},
                    {"work_dm", best.config.work_dm}};
    node["gflops"] = best.gflops;
    node["fixed_gflops"] = fixed.fixed_gflops[i];
    node["speedup_over_fixed"] = fixed.speedup_over_fixed[i];
    node["threshold_gflops"] = result.realtime_threshold_gflops;
    node["realtime_pass"] = result.realtime_pass;
    node["ai"] = {{"at_best", ai_best},
                  {"naive", ai_naive},
                  {"no_reuse_bound", bounds.no_reuse},
                  {"reuse_bound", bounds.reuse_bound}};
    if (roofline.has_value()) {
      const dedisp::RooflineVerdict verdict =
          dedisp::classify_roofline(ai_best, roofline->first, roofline->second);
      node["roofline"] = {{"memory_bound", verdict.memory_bound},
                          {"ridge_flop_per_byte", verdict.ridge_flop_per_byte},
                          {"attainable_gflops", verdict.attainable_gflops}};
    }
    instances.push_back(std::move(node));

    char line[256];
    std::snprintf(line, sizeof(line), "%u,%.9g,%.9g,%.9g,%d\n", result.num_dms, best.gflops,
                  fixed.fixed_gflops[i], result.realtime_threshold_gflops,
                  result.realtime_pass ? 1 : 0);
    csv += line;

    std::printf(
        "d=%u tuned %.3f GFLOP/s, fixed %.3f, speedup %.2fx, threshold %.3f, real-time %s\n",
        result.num_dms, best.gflops, fixed.fixed_gflops[i], fixed.speedup_over_fixed[i],
        result.realtime_threshold_gflops, result.realtime_pass ? "pass" : "FAIL");
    std::printf("      AI at best %.4f (naive %.4f, reuse bound %.4f)%s\n", ai_best, ai_naive,
                bounds.reuse_bound,
                roofline.has_value()
                    ? (ai_best < roofline->first / roofline->second ? ", memory-bound"
                                                                    : ", compute-bound")
                    : "");
  }
  doc["instances"] = std::move(instances);

  // Zero-DM contrast: same d measured with all shifts zero vs the real table.
  if (!zero.empty() && !real.empty()) {
    std::map<std::uint32_t, double> zero_gflops;
    for (const dedisp::TuningResult& result : zero) {
      zero_gflops[result.num_dms] = result.best().gflops;
    }
    nlohmann::ordered_json contrast = nlohmann::ordered_json::array();
    for (const dedisp::TuningResult& result : real) {
      const auto it = zero_gflops.find(result.num_dms);
      if (it == zero_gflops.end()) continue;
      const double ratio = it->second / result.best().gflops;
      contrast.push_back({{"num_dms", result.num_dms},
                          {"real_gflops", result.best().gflops},
                          {"zero_dm_gflops", it->second},
                          {"ratio", ratio}});
      std::printf("d=%u zero-DM %.3f vs real %.3f GFLOP/s (%.2fx)\n", result.num_dms,
                  it->second, result.best().gflops, ratio);
    }
    doc["zero_dm_contrast"] = std::move(contrast);
  }

  if (args.beams > 0) {
    const dedisp::TuningResult* largest = &main_set.front();
    for (const dedisp::TuningResult& result : main_set) {
      if (result.num_dms > largest->num_dms) largest = &result;
    }
    double pass_time = args.pass_time;
    if (pass_time <= 0.0) pass_time = largest->best().mean_time;
    const dedisp::DeploymentPlan plan =
        dedisp::deployment_sizing(largest->setup, largest->num_dms, args.beams, pass_time);
    doc["deployment"] = {{"beams", args.beams},
                         {"pass_time_s", pass_time},
                         {"beams_per_device", plan.beams_per_device},
                         {"devices", plan.devices}};
    std::printf("deployment: %u beams at %.4f s/pass -> %u beams/device, %" PRIu64 " device(s)\n",
                args.beams, pass_time, plan.beams_per_device, plan.devices);
  }

  doc["notes"] = {"measured AI counts staged loads, output writes, and delay reads at 4 bytes "
                  "per element; unaligned-access overhead is not modeled"};

  std::filesystem::create_directories(args.out);
  const std::filesystem::path json_path = std::filesystem::path(args.out) / "analysis.json";
  const std::filesystem::path csv_path = std::filesystem::path(args.out) / "analysis.csv";
  {
    std::ofstream out(json_path);
    if (!out) throw std::runtime_error("cannot open " + json_path.string() + " for writing");
    out << doc.dump(2) << "\n";
  }
  {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot open " + csv_path.string() + " for writing");
    out << csv;
  }

  std::vector<std::uint32_t> instance_list;
  for (const dedisp::TuningResult& result : main_set) instance_list.push_back(result.num_dms);
  const dedisp::RunManifest manifest = make_manifest(
      "analyze", argc, argv, main_set.front().setup.name, instance_list, main_set.front().limits,
      main_set.front().repeats, main_set.front().seed, main_set.front().threads,
      {json_path.string(), csv_path.string()});
  dedisp::write_manifest(manifest,
                         (std::filesystem::path(args.out) / "analysis.manifest.json").string());

  std::printf("wrote %s and %s\n", json_path.string().c_str(), csv_path.string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Brute-force incoherent dedispersion with an exhaustive kernel auto-tuner"};
  app.set_version_flag("--version", dedisp::kVersion);
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "Generate a synthetic dispersed filterbank");
  gen_cmd->add_option("--setup", gen.setup, "Built-in setup name or key=value file");
  gen_cmd->add_option("--dm", gen.dm, "Pulse dispersion measure (pc/cm^3)");
  gen_cmd->add_option("--t0", gen.t0, "Arrival time at the highest frequency (s)");
  gen_cmd->add_option("--width", gen.width, "Boxcar width (s)");
  gen_cmd->add_option("--amp", gen.amp, "Pulse amplitude");
  gen_cmd->add_option("--sigma", gen.sigma, "Gaussian noise stddev");
  gen_cmd->add_option("--seed", gen.seed, "Noise seed");
  gen_cmd->add_option("--seconds", gen.seconds, "Length of the filterbank (s)");
  gen_cmd->add_option("--format", gen.format, "sigproc or raw");
  gen_cmd->add_option("--out", gen.out, "Output file")->required();

  VerifyArgs verify;
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "Run the kernel correctness suites on mini instances");
  verify_cmd->add_option("--seed", verify.seed, "Suite seed");
  verify_cmd->add_option("--threads", verify.threads, "Worker threads (0 = hardware)");
  verify_cmd->add_flag("--inject-fault", verify.inject_fault,
                       "Corrupt one delay entry; the equivalence suite must then fail");

  TuneArgs tune;
  CLI::App* tune_cmd =
      app.add_subcommand("tune", "Benchmark every valid configuration per instance");
  tune_cmd->add_option("--setup", tune.setup, "Built-in setup name or key=value file");
  tune_cmd->add_option("--dms", tune.dms, "Trial-DM instance list (default: 2..4096)")
      ->delimiter(',');
  tune_cmd->add_option("--repeats", tune.repeats, "Timed repeats per configuration");
  tune_cmd->add_option("--limits", tune.limits_text, "items=I,acc=A kernel limits");
  tune_cmd->add_option("--threads", tune.threads, "Worker threads (0 = hardware)");
  tune_cmd->add_option("--seed", tune.seed, "Noise seed");
  tune_cmd->add_option("--out", tune.out, "Output directory");
  tune_cmd->add_option("--format", tune.format, "json, csv, or both");
  tune_cmd->add_option("--mem-cap", tune.mem_cap_text,
                       "Skip instances above this size (default: 80% of free memory)");
  tune_cmd->add_flag("--zero-dm", tune.zero_dm, "Tune against an all-zero delay table");

  BenchArgs bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Benchmark one configuration");
  bench_cmd->add_option("--setup", bench.setup, "Built-in setup name or key=value file");
  bench_cmd->add_option("--dms", bench.num_dms, "Trial-DM count");
  bench_cmd->add_option("--config", bench.config_text, "items_time,items_dm,work_time,work_dm");
  bench_cmd->add_option("--repeats", bench.repeats, "Timed repeats");
  bench_cmd->add_option("--threads", bench.threads, "Worker threads (0 = hardware)");
  bench_cmd->add_option("--seed", bench.seed, "Noise seed");
  bench_cmd->add_flag("--zero-dm", bench.zero_dm, "Use an all-zero delay table");

  AnalyzeArgs analyze;
  CLI::App* analyze_cmd =
      app.add_subcommand("analyze", "Summarize tuning result files into a report");
  analyze_cmd->add_option("--results", analyze.results, "TuningResult JSON files")->required();
  analyze_cmd->add_option("--out", analyze.out, "Output directory");
  analyze_cmd->add_option("--roofline", analyze.roofline_text,
                          "peak_gflops,peak_gbs for a memory/compute-bound verdict");
  analyze_cmd->add_option("--beams", analyze.beams, "Beams for deployment sizing");
  analyze_cmd->add_option("--pass-time", analyze.pass_time,
                          "Seconds per pass (default: measured optimum of the largest instance)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen(gen, argc, argv);
    if (verify_cmd->parsed()) return cmd_verify(verify);
    if (tune_cmd->parsed()) return cmd_tune(tune, argc, argv);
    if (bench_cmd->parsed()) return cmd_bench(bench);
    if (analyze_cmd->parsed()) return cmd_analyze(analyze, argc, argv);
  } catch (const UsageError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitUsage;
  } catch (const std::invalid_argument& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitUsage;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
