#include "dedisp/kernels.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>
#include <string>

namespace dedisp {

namespace {

std::uint64_t mul64(std::uint32_t a, std::uint32_t b) {
  return static_cast<std::uint64_t>(a) * b;
}

void check_pair(const Filterbank& fb, const DelayTable& table) {
  if (fb.setup.channels != table.setup.channels ||
      fb.setup.samples_per_second != table.setup.samples_per_second) {
    throw std::invalid_argument("filterbank and delay table describe different setups");
  }
  if (table.num_dms == 0) throw std::invalid_argument("delay table holds no trials");
  const std::uint64_t needed =
      static_cast<std::uint64_t>(fb.setup.samples_per_second) + table.max_delay;
  if (fb.num_samples < needed) {
    throw std::invalid_argument("filterbank too short: need " + std::to_string(needed) +
                                " samples per channel, have " + std::to_string(fb.num_samples));
  }
}

void prepare_output(DedispersedSeries& out, std::uint32_t num_dms, std::uint32_t s) {
  out.num_dms = num_dms;
  out.samples_per_second = s;
  out.data.resize(mul64(num_dms, s));
}

// Scratch buffers reused across tiles; one set per worker thread.
float* scratch(std::vector<float>& buf, std::size_t n) {
  if (buf.size() < n) buf.resize(n);
  return buf.data();
}

}  // namespace

bool config_valid(const KernelConfig& cfg, std::uint32_t num_dms,
                  std::uint32_t samples_per_second, const KernelLimits& limits) noexcept {
  if (cfg.items_time == 0 || cfg.items_dm == 0 || cfg.work_time == 0 || cfg.work_dm == 0) {
    return false;
  }
  const std::uint64_t tile_time = mul64(cfg.items_time, cfg.work_time);
  const std::uint64_t tile_dm = mul64(cfg.items_dm, cfg.work_dm);
  if (tile_time > samples_per_second || samples_per_second % tile_time != 0) return false;
  if (tile_dm > num_dms || num_dms % tile_dm != 0) return false;
  if (mul64(cfg.items_time, cfg.items_dm) > limits.max_block_items) return false;
  if (mul64(cfg.work_time, cfg.work_dm) > limits.max_accumulators) return false;
  return true;
}

void validate_config(const KernelConfig& cfg, std::uint32_t num_dms,
                     std::uint32_t samples_per_second, const KernelLimits& limits) {
  if (cfg.items_time == 0 || cfg.items_dm == 0 || cfg.work_time == 0 || cfg.work_dm == 0) {
    throw std::invalid_argument("kernel config parameters must all be positive");
  }
  const std::uint64_t tile_time = mul64(cfg.items_time, cfg.work_time);
  const std::uint64_t tile_dm = mul64(cfg.items_dm, cfg.work_dm);
  if (tile_time > samples_per_second || samples_per_second % tile_time != 0) {
    throw std::invalid_argument("items_time * work_time = " + std::to_string(tile_time) +
                                " does not divide s = " + std::to_string(samples_per_second));
  }
  if (tile_dm > num_dms || num_dms % tile_dm != 0) {
    throw std::invalid_argument("items_dm * work_dm = " + std::to_string(tile_dm) +
                                " does not divide the trial count " + std::to_string(num_dms));
  }
  if (mul64(cfg.items_time, cfg.items_dm) > limits.max_block_items) {
    throw std::invalid_argument("items_time * items_dm exceeds the block limit of " +
                                std::to_string(limits.max_block_items));
  }
  if (mul64(cfg.work_time, cfg.work_dm) > limits.max_accumulators) {
    throw std::invalid_argument("work_time * work_dm exceeds the accumulator limit of " +
                                std::to_string(limits.max_accumulators));
  }
}

void dedisperse_reference_into(DedispersedSeries& out, const Filterbank& fb,
                               const DelayTable& table, KernelStats* stats) {
  check_pair(fb, table);
  const std::uint32_t d = table.num_dms;
  const std::uint32_t s = fb.setup.samples_per_second;
  const std::uint32_t c = fb.setup.channels;
  prepare_output(out, d, s);

  for (std::uint32_t dm = 0; dm < d; ++dm) {
    const std::uint32_t* shifts = table.row(dm);
    float* out_row = out.data.data() + mul64(dm, s);
    for (std::uint32_t j = 0; j < s; ++j) {
      float acc = 0.0f;
      for (std::uint32_t ch = 0; ch < c; ++ch) {
        acc += fb.data[static_cast<std::size_t>(ch) * fb.num_samples + j + shifts[ch]];
      }
      out_row[j] = acc;
    }
  }
  if (stats != nullptr) {
    const std::uint64_t total = mul64(d, s) * c;
    stats->flop_additions.fetch_add(total, std::memory_order_relaxed);
    // The direct kernel fetches one input element per addition.
    stats->staged_loads.fetch_add(total, std::memory_order_relaxed);
  }
}

DedispersedSeries dedisperse_reference(const Filterbank& fb, const DelayTable& table,
                                       KernelStats* stats) {
  DedispersedSeries out;
  dedisperse_reference_into(out, fb, table, stats);
  return out;
}

void dedisperse_tiled_into(DedispersedSeries& out, const Filterbank& fb,
                           const DelayTable& table, const KernelConfig& cfg,
                           const ExecOptions& options) {
  check_pair(fb, table);
  const std::uint32_t d = table.num_dms;
  const std::uint32_t s = fb.setup.samples_per_second;
  const std::uint32_t c = fb.setup.channels;
  validate_config(cfg, d, s, options.limits);
  prepare_output(out, d, s);

  const std::uint32_t tile_time = cfg.tile_time();
  const std::uint32_t tile_dm = cfg.tile_dm();
  const std::uint32_t tiles_time = s / tile_time;
  const std::uint32_t tiles_dm = d / tile_dm;
  const std::uint64_t tiles = mul64(tiles_time, tiles_dm);
  const std::uint32_t t = fb.num_samples;

  auto run_tile = [&](std::size_t tile) {
    static thread_local std::vector<float> acc_buf;
    static thread_local std::vector<float> stage_buf;

    const std::uint32_t dm0 =
        static_cast<std::uint32_t>(tile / tiles_time) * tile_dm;
    const std::uint32_t t0 =
        static_cast<std::uint32_t>(tile % tiles_time) * tile_time;

    float* acc = scratch(acc_buf, mul64(tile_dm, tile_time));
    std::fill_n(acc, mul64(tile_dm, tile_time), 0.0f);
    std::uint64_t fetched = 0;

    for (std::uint32_t ch = 0; ch < c; ++ch) {
      // Shift extent over this tile's trials; found by scanning because no
      // ordering of table entries is assumed here.
      std::uint32_t lo = table.at(ch, dm0);
      std::uint32_t hi = lo;
      for (std::uint32_t ld = 1; ld < tile_dm; ++ld) {
        const std::uint32_t shift = table.at(ch, dm0 + ld);
        lo = std::min(lo, shift);
        hi = std::max(hi, shift);
      }
      const std::uint32_t span = hi - lo + tile_time;
      const float* src = fb.data.data() + static_cast<std::size_t>(ch) * t + t0 + lo;
      float* stage = scratch(stage_buf, span);
      std::copy_n(src, span, stage);
      fetched += span;

      // Lane-blocked accumulation. Each output element has a private
      // accumulator and sees channels in ascending order, so the sum is
      // bit-identical to the direct kernel for any configuration.
      for (std::uint32_t wd = 0; wd < cfg.work_dm; ++wd) {
        for (std::uint32_t id = 0; id < cfg.items_dm; ++id) {
          const std::uint32_t ld = wd * cfg.items_dm + id;
          const float* shifted = stage + (table.at(ch, dm0 + ld) - lo);
          float* arow = acc + mul64(ld, tile_time);
          for (std::uint32_t wt = 0; wt < cfg.work_time; ++wt) {
            const std::uint32_t base = wt * cfg.items_time;
            for (std::uint32_t it = 0; it < cfg.items_time; ++it) {
              arow[base + it] += shifted[base + it];
            }
          }
        }
      }
    }

    for (std::uint32_t ld = 0; ld < tile_dm; ++ld) {
      std::memcpy(out.data.data() + mul64(dm0 + ld, s) + t0, acc + mul64(ld, tile_time),
                  static_cast<std::size_t>(tile_time) * sizeof(float));
    }
    if (options.stats != nullptr) {
      options.stats->staged_loads.fetch_add(fetched, std::memory_order_relaxed);
    }
  };

  if (options.pool != nullptr) {
    options.pool->for_each_index(tiles, run_tile);
  } else {
    const unsigned workers =
        options.threads > 0 ? static_cast<unsigned>(options.threads) : 0;
    if (options.threads == 1 || tiles == 1) {
      for (std::uint64_t tile = 0; tile < tiles; ++tile) run_tile(tile);
    } else {
      ThreadPool pool(workers);
      pool.for_each_index(tiles, run_tile);
    }
  }

  if (options.stats != nullptr) {
    options.stats->flop_additions.fetch_add(mul64(d, s) * c, std::memory_order_relaxed);
  }
}

DedispersedSeries dedisperse_tiled(const Filterbank& fb, const DelayTable& table,
                                   const KernelConfig& cfg, const ExecOptions& options) {
  DedispersedSeries out;
  dedisperse_tiled_into(out, fb, table, cfg, options);
  return out;
}

}  // namespace dedisp
