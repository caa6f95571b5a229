#include <cstdint>

#include <benchmark/benchmark.h>

#include "dedisp/filterbank.hpp"
#include "dedisp/kernels.hpp"
#include "dedisp/setup.hpp"
#include "dedisp/tuner.hpp"

namespace {

dedisp::ObservationSetup bench_setup() {
  dedisp::ObservationSetup setup;
  setup.name = "bench";
  setup.samples_per_second = 256;
  setup.channels = 32;
  setup.f_min = 100.0;
  setup.channel_width = 5.0;
  setup.dm_first = 0.0;
  setup.dm_step = 0.1;
  return setup;
}

struct BenchInstance {
  dedisp::DelayTable table;
  dedisp::Filterbank fb;
};

constexpr std::uint32_t kBenchDms = 64;

const BenchInstance& instance() {
  static const BenchInstance inst = [] {
    const dedisp::ObservationSetup setup = bench_setup();
    dedisp::DelayTable table = dedisp::build_delay_table(setup, kBenchDms);
    const std::uint32_t s = setup.samples_per_second;
    const std::uint32_t t = static_cast<std::uint32_t>(
        ((static_cast<std::uint64_t>(s) + table.max_delay + s - 1) / s) * s);
    dedisp::Filterbank fb = dedisp::noise_filterbank(setup, t, 1.0f, 1);
    return BenchInstance{std::move(table), std::move(fb)};
  }();
  return inst;
}

void flops_counters(benchmark::State& state) {
  const dedisp::ObservationSetup setup = bench_setup();
  const double flop_per_pass =
      static_cast<double>(kBenchDms) * setup.samples_per_second * setup.channels;
  state.counters["gflops"] = benchmark::Counter(
      flop_per_pass * static_cast<double>(state.iterations()) / 1e9, benchmark::Counter::kIsRate);
}

void BM_reference(benchmark::State& state) {
  const BenchInstance& inst = instance();
  dedisp::DedispersedSeries out;
  for (auto _ : state) {
    dedisp::dedisperse_reference_into(out, inst.fb, inst.table);
    benchmark::DoNotOptimize(out.data.data());
  }
  flops_counters(state);
}
BENCHMARK(BM_reference);

void BM_tiled(benchmark::State& state) {
  const BenchInstance& inst = instance();
  const dedisp::KernelConfig cfg{
      static_cast<std::uint32_t>(state.range(0)), static_cast<std::uint32_t>(state.range(1)),
      static_cast<std::uint32_t>(state.range(2)), static_cast<std::uint32_t>(state.range(3))};
  dedisp::ExecOptions options;
  options.threads = 1;
  dedisp::DedispersedSeries out;
  for (auto _ : state) {
    dedisp::dedisperse_tiled_into(out, inst.fb, inst.table, cfg, options);
    benchmark::DoNotOptimize(out.data.data());
  }
  flops_counters(state);
}
BENCHMARK(BM_tiled)
    ->Args({1, 1, 1, 1})
    ->Args({16, 1, 1, 1})
    ->Args({16, 4, 1, 1})
    ->Args({16, 4, 4, 2})
    ->Args({32, 8, 2, 2})
    ->Args({64, 16, 4, 4});

void BM_enumerate(benchmark::State& state) {
  const std::uint32_t d = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(dedisp::enumerate_configs(d, 20000));
  }
}
BENCHMARK(BM_enumerate)->Arg(32)->Arg(1024);

void BM_delay_table(benchmark::State& state) {
  const dedisp::ObservationSetup setup = bench_setup();
  for (auto _ : state) {
    benchmark::DoNotOptimize(dedisp::build_delay_table(setup, 1024));
  }
}
BENCHMARK(BM_delay_table);

}  // namespace

BENCHMARK_MAIN();
