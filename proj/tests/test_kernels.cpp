#include <algorithm>
#include <cstring>
#include <iterator>
#include <random>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "dedisp/filterbank.hpp"
#include "dedisp/kernels.hpp"
#include "dedisp/thread_pool.hpp"
#include "dedisp/tuner.hpp"
#include "support/oracles.hpp"

namespace {

bool bit_identical(const dedisp::DedispersedSeries& a, const dedisp::DedispersedSeries& b) {
  return a.data.size() == b.data.size() &&
         std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0;
}

// Detected power is nonnegative; signed noise would cancel in the sums and
// make a fixed ULP tolerance meaningless near zero.
dedisp::Filterbank power_filterbank(const dedisp::ObservationSetup& setup, std::uint32_t t,
                                    std::uint64_t seed) {
  dedisp::Filterbank fb;
  fb.setup = setup;
  fb.num_samples = t;
  fb.data.resize(static_cast<std::size_t>(setup.channels) * t);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> power(0.0f, 1.0f);
  for (float& sample : fb.data) sample = power(rng);
  return fb;
}

}  // namespace

TEST_CASE("config validity follows the divisibility and budget rules") {
  const std::uint32_t d = 16;
  const std::uint32_t s = 64;

  CHECK(dedisp::config_valid({1, 1, 1, 1}, d, s));
  CHECK(dedisp::config_valid({4, 2, 8, 2}, d, s));   // tile 32x4
  CHECK(dedisp::config_valid({64, 16, 1, 1}, d, s));  // whole problem in items

  CHECK_FALSE(dedisp::config_valid({3, 1, 1, 1}, d, s));   // 3 does not divide 64
  CHECK_FALSE(dedisp::config_valid({1, 3, 1, 1}, d, s));   // 3 does not divide 16
  CHECK_FALSE(dedisp::config_valid({0, 1, 1, 1}, d, s));
  CHECK_FALSE(dedisp::config_valid({1, 1, 0, 1}, d, s));

  dedisp::KernelLimits tight;
  tight.max_block_items = 8;
  tight.max_accumulators = 4;
  CHECK(dedisp::config_valid({4, 2, 2, 2}, d, s, tight));
  CHECK_FALSE(dedisp::config_valid({8, 2, 1, 1}, d, s, tight));  // 16 items > 8
  CHECK_FALSE(dedisp::config_valid({1, 1, 4, 2}, d, s, tight));  // 8 accumulators > 4

  CHECK_THROWS_AS(dedisp::validate_config({8, 2, 1, 1}, d, s, tight), std::invalid_argument);
  CHECK_NOTHROW(dedisp::validate_config({4, 2, 2, 2}, d, s, tight));
}

TEST_CASE("tile extents multiply out") {
  const dedisp::KernelConfig cfg{4, 2, 8, 3};
  CHECK(cfg.tile_time() == 32);
  CHECK(cfg.tile_dm() == 6);
  CHECK(cfg.block_items() == 8);
  CHECK(cfg.accumulators() == 24);
}

TEST_CASE("reference kernel matches the double-precision oracle within 4 ulp") {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 12; ++trial) {
    const dedisp::ObservationSetup setup =
        oracles::mini_setup(32 + 16 * (trial % 4), 2 + trial % 7, 0.25 + 0.1 * (trial % 3));
    const std::uint32_t d = 1 + rng() % 12;
    const dedisp::DelayTable table = dedisp::build_delay_table(setup, d);
    const dedisp::ProblemInstance inst = dedisp::instance_sizing(setup, d);

    const dedisp::Filterbank fb =
        power_filterbank(setup, static_cast<std::uint32_t>(inst.num_samples), trial);
    const dedisp::DedispersedSeries out = dedisp::dedisperse_reference(fb, table);
    const std::vector<double> expect = oracles::dedisperse_double(fb, table);

    REQUIRE(out.data.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
      CHECK(oracles::ulp_distance(out.data[i], expect[i]) <= 4);
    }
  }
}

TEST_CASE("a 16-channel scaled band stays within 4 ulp of the oracle") {
  dedisp::ObservationSetup setup;
  setup.name = "scaled";
  setup.samples_per_second = 64;
  setup.channels = 16;
  setup.f_min = 1420.0;
  setup.channel_width = 18.75;  // 16 channels spanning 1420 to 1720 MHz
  setup.dm_first = 0.0;
  setup.dm_step = 25.0;

  const std::uint32_t d = 8;
  const dedisp::DelayTable table = dedisp::build_delay_table(setup, d);
  CHECK(table.max_delay > 0);
  const dedisp::ProblemInstance inst = dedisp::instance_sizing(setup, d);
  const dedisp::Filterbank fb =
      power_filterbank(setup, static_cast<std::uint32_t>(inst.num_samples), 2024);

  const dedisp::DedispersedSeries out = dedisp::dedisperse_reference(fb, table);
  const std::vector<double> expect = oracles::dedisperse_double(fb, table);
  for (std::size_t i = 0; i < expect.size(); ++i) {
    CHECK(oracles::ulp_distance(out.data[i], expect[i]) <= 4);
  }
}

TEST_CASE("tiled kernel is bit-identical to the reference for every valid config") {
  const dedisp::ObservationSetup setup = oracles::mini_setup(48, 6, 0.5);
  const std::uint32_t d = 12;
  const dedisp::DelayTable table = dedisp::build_delay_table(setup, d);
  const dedisp::ProblemInstance inst = dedisp::instance_sizing(setup, d);
  const dedisp::Filterbank fb =
      dedisp::noise_filterbank(setup, static_cast<std::uint32_t>(inst.num_samples), 1.0f, 99);

  const dedisp::DedispersedSeries ref = dedisp::dedisperse_reference(fb, table);

  dedisp::KernelLimits limits;
  limits.max_block_items = 64;
  limits.max_accumulators = 32;
  const std::vector<dedisp::KernelConfig> configs = dedisp::enumerate_configs(d, 48, limits);
  REQUIRE(configs.size() > 20);

  for (const dedisp::KernelConfig& cfg : configs) {
    dedisp::ExecOptions options;
    options.limits = limits;
    options.threads = 1;
    const dedisp::DedispersedSeries out = dedisp::dedisperse_tiled(fb, table, cfg, options);
    CHECK(bit_identical(out, ref));
  }
}

TEST_CASE("thread count does not change tiled results") {
  const dedisp::ObservationSetup setup = oracles::mini_setup(64, 8, 0.5);
  const std::uint32_t d = 8;
  const dedisp::DelayTable table = dedisp::build_delay_table(setup, d);
  const dedisp::ProblemInstance inst = dedisp::instance_sizing(setup, d);
  const dedisp::Filterbank fb =
      dedisp::noise_filterbank(setup, static_cast<std::uint32_t>(inst.num_samples), 1.0f, 5);
  const dedisp::KernelConfig cfg{8, 2, 2, 2};

  dedisp::ExecOptions serial;
  serial.threads = 1;
  const dedisp::DedispersedSeries a = dedisp::dedisperse_tiled(fb, table, cfg, serial);

  dedisp::ExecOptions parallel;
  parallel.threads = 3;
  const dedisp::DedispersedSeries b = dedisp::dedisperse_tiled(fb, table, cfg, parallel);
  CHECK(bit_identical(a, b));

  dedisp::ThreadPool pool(2);
  dedisp::ExecOptions pooled;
  pooled.pool = &pool;
  const dedisp::DedispersedSeries c = dedisp::dedisperse_tiled(fb, table, cfg, pooled);
  CHECK(bit_identical(a, c));
}

TEST_CASE("a zero-DM table reduces to per-column channel sums") {
  const dedisp::ObservationSetup setup = oracles::mini_setup(32, 5);
  const std::uint32_t d = 4;
  const dedisp::DelayTable table = dedisp::build_zero_delay_table(setup, d);
  CHECK(table.max_delay == 0);

  const dedisp::Filterbank fb = dedisp::noise_filterbank(setup, 32, 1.0f, 17);
  const dedisp::DedispersedSeries out = dedisp::dedisperse_reference(fb, table);
  for (std::uint32_t dm = 0; dm < d; ++dm) {
    for (std::uint32_t j = 0; j < 32; ++j) {
      float sum = 0.0f;
      for (std::uint32_t ch = 0; ch < setup.channels; ++ch) sum += fb.at(ch, j);
      CHECK(out.at(dm, j) == sum);
    }
  }
}

TEST_CASE("kernels reject inconsistent inputs") {
  const dedisp::ObservationSetup setup = oracles::mini_setup(32, 4);
  const dedisp::DelayTable table = dedisp::build_delay_table(setup, 4);

  dedisp::Filterbank short_fb = dedisp::noise_filterbank(setup, 32, 0.0f, 0);
  if (table.max_delay > 0) {
    // 32 samples cannot cover 32 outputs plus a positive delay.
    CHECK_THROWS_AS(dedisp::dedisperse_reference(short_fb, table), std::invalid_argument);
  }

  const dedisp::ObservationSetup other = oracles::mini_setup(32, 8);
  const dedisp::Filterbank mismatched = dedisp::noise_filterbank(other, 64, 0.0f, 0);
  CHECK_THROWS_AS(dedisp::dedisperse_reference(mismatched, table), std::invalid_argument);

  const dedisp::ProblemInstance inst = dedisp::instance_sizing(setup, 4);
  const dedisp::Filterbank fb =
      dedisp::noise_filterbank(setup, static_cast<std::uint32_t>(inst.num_samples), 0.0f, 0);
  CHECK_THROWS_AS(dedisp::dedisperse_tiled(fb, table, {3, 1, 1, 1}), std::invalid_argument);
}

TEST_CASE("flop counters count one addition per channel per output") {
  const dedisp::ObservationSetup setup = oracles::mini_setup(64, 6, 0.5);
  const std::uint32_t d = 8;
  const dedisp::DelayTable table = dedisp::build_delay_table(setup, d);
  const dedisp::ProblemInstance inst = dedisp::instance_sizing(setup, d);
  const dedisp::Filterbank fb =
      dedisp::noise_filterbank(setup, static_cast<std::uint32_t>(inst.num_samples), 1.0f, 1);
  const std::uint64_t expected_flop = std::uint64_t{8} * 64 * 6;

  dedisp::KernelStats stats;
  (void)dedisp::dedisperse_reference(fb, table, &stats);
  CHECK(stats.flop_additions.load() == expected_flop);
  CHECK(stats.staged_loads.load() == expected_flop);

  stats.reset();
  CHECK(stats.flop_additions.load() == 0);

  const dedisp::KernelConfig cfg{8, 2, 2, 2};
  dedisp::ExecOptions options;
  options.stats = &stats;
  options.threads = 1;
  (void)dedisp::dedisperse_tiled(fb, table, cfg, options);
  CHECK(stats.flop_additions.load() == expected_flop);
  CHECK(stats.staged_loads.load() == dedisp::count_loads(table, cfg, d, 64).staged_loads);
}

TEST_CASE("count_loads agrees with an independent scan") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const dedisp::ObservationSetup setup =
        oracles::mini_setup(16 << (trial % 3), 1 + rng() % 10, 0.2 + 0.15 * (trial % 5));
    const std::uint32_t d = 1 + rng() % 16;
    const std::uint32_t s = setup.samples_per_second;
    const dedisp::DelayTable table = dedisp::build_delay_table(setup, d);

    dedisp::KernelLimits loose;
    loose.max_block_items = 1 << 20;
    loose.max_accumulators = 1 << 20;
    const std::vector<dedisp::KernelConfig> configs = dedisp::enumerate_configs(d, s, loose);

    std::vector<dedisp::KernelConfig> sample;
    std::sample(configs.begin(), configs.end(), std::back_inserter(sample), 6, rng);
    for (const dedisp::KernelConfig& cfg : sample) {
      const dedisp::LoadCounts got = dedisp::count_loads(table, cfg, d, s);
      const oracles::LoadCountsOracle want = oracles::count_loads_oracle(table, cfg, d, s);
      CHECK(got.staged_loads == want.staged);
      CHECK(got.ideal_loads == want.ideal);
      CHECK(got.ideal_loads <= got.staged_loads);
    }
  }
}

TEST_CASE("staged loads shrink as DM tiles widen") {
  const dedisp::ObservationSetup setup = oracles::mini_setup(128, 16, 0.5);
  const std::uint32_t d = 16;
  const dedisp::DelayTable table = dedisp::build_delay_table(setup, d);

  const auto narrow = dedisp::count_loads(table, {1, 1, 1, 1}, d, 128);
  const auto wide = dedisp::count_loads(table, {128, 16, 1, 1}, d, 128);
  CHECK(wide.staged_loads <= narrow.staged_loads);
  // One full-problem tile stages each needed input element exactly once.
  CHECK(wide.staged_loads == wide.ideal_loads);
}

TEST_CASE("into variants reuse the caller's buffers") {
  const dedisp::ObservationSetup setup = oracles::mini_setup(32, 4);
  const dedisp::DelayTable table = dedisp::build_delay_table(setup, 4);
  const dedisp::ProblemInstance inst = dedisp::instance_sizing(setup, 4);
  const dedisp::Filterbank fb =
      dedisp::noise_filterbank(setup, static_cast<std::uint32_t>(inst.num_samples), 1.0f, 8);

  dedisp::DedispersedSeries out;
  dedisp::dedisperse_reference_into(out, fb, table);
  const dedisp::DedispersedSeries fresh = dedisp::dedisperse_reference(fb, table);
  CHECK(out.num_dms == 4);
  CHECK(out.samples_per_second == 32);
  CHECK(bit_identical(out, fresh));

  dedisp::dedisperse_tiled_into(out, fb, table, {4, 2, 2, 2});
  CHECK(bit_identical(out, fresh));
}
