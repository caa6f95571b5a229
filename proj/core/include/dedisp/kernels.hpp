#pragma once

#include <atomic>
#include <compare>
#include <cstdint>
#include <vector>

#include "dedisp/filterbank.hpp"
#include "dedisp/setup.hpp"
#include "dedisp/thread_pool.hpp"

namespace dedisp {

/// One dedispersed time series per trial DM: a num_dms x samples_per_second
/// matrix of single-precision channel sums.
struct DedispersedSeries {
  std::uint32_t num_dms = 0;
  std::uint32_t samples_per_second = 0;
  std::vector<float> data;  // num_dms x samples_per_second, DM-major

  float at(std::uint32_t dm, std::uint32_t sample) const {
    return data[static_cast<std::size_t>(dm) * samples_per_second + sample];
  }
  const float* row(std::uint32_t dm) const {
    return data.data() + static_cast<std::size_t>(dm) * samples_per_second;
  }
};

/// Platform caps on the tiled kernel. Both are configurable; the defaults
/// mirror common accelerator limits.
struct KernelLimits {
  std::uint32_t max_block_items = 1024;   // items_time * items_dm cap
  std::uint32_t max_accumulators = 256;   // work_time * work_dm cap
};

/// The four tuning parameters of the tiled kernel. items_* set the number of
/// lanes per tile in each dimension, work_* the number of output elements
/// each lane accumulates. tile_time = items_time * work_time must divide the
/// output length s; tile_dm = items_dm * work_dm must divide the trial count.
struct KernelConfig {
  std::uint32_t items_time = 1;
  std::uint32_t items_dm = 1;
  std::uint32_t work_time = 1;
  std::uint32_t work_dm = 1;

  std::uint32_t tile_time() const { return items_time * work_time; }
  std::uint32_t tile_dm() const { return items_dm * work_dm; }
  std::uint32_t block_items() const { return items_time * items_dm; }
  std::uint32_t accumulators() const { return work_time * work_dm; }

  friend auto operator<=>(const KernelConfig&, const KernelConfig&) = default;
};

/// Debug counters, accumulated when attached to ExecOptions. flop_additions
/// is exactly num_dms * s * channels for any valid configuration.
struct KernelStats {
  std::atomic<std::uint64_t> flop_additions{0};
  std::atomic<std::uint64_t> staged_loads{0};

  void reset() {
    flop_additions.store(0, std::memory_order_relaxed);
    staged_loads.store(0, std::memory_order_relaxed);
  }
};

struct ExecOptions {
  int threads = 0;               // 0 = hardware concurrency; 1 = sequential
  KernelLimits limits{};
  KernelStats* stats = nullptr;  // optional debug counters
  ThreadPool* pool = nullptr;    // reused pool; overrides `threads` when set
};

/// True when cfg satisfies every KernelConfig invariant for this instance.
bool config_valid(const KernelConfig& cfg, std::uint32_t num_dms,
                  std::uint32_t samples_per_second, const KernelLimits& limits = {}) noexcept;

/// Throws std::invalid_argument naming the violated constraint.
void validate_config(const KernelConfig& cfg, std::uint32_t num_dms,
                     std::uint32_t samples_per_second, const KernelLimits& limits = {});

/// Sequential direct dedispersion: output[dm][j] is the sum over channels of
/// input[ch][j + shift(ch, dm)], accumulated in single precision in ascending
/// channel order, one scalar accumulator per output element. This is the
/// correctness reference for every other implementation.
DedispersedSeries dedisperse_reference(const Filterbank& fb, const DelayTable& table,
                                       KernelStats* stats = nullptr);

/// Same computation into a caller-owned buffer (resized as needed), so timed
/// benchmark runs exclude output allocation.
void dedisperse_reference_into(DedispersedSeries& out, const Filterbank& fb,
                               const DelayTable& table, KernelStats* stats = nullptr);

/// Tiled data-parallel dedispersion. The (DM, time) output plane is cut into
/// independent tile_dm x tile_time tiles; within a tile each channel row is
/// staged once through a block buffer spanning the [min, max] shift of the
/// tile's DMs, and every output element keeps a private accumulator filled in
/// ascending channel order. Bit-identical to dedisperse_reference for every
/// valid configuration and any worker count.
DedispersedSeries dedisperse_tiled(const Filterbank& fb, const DelayTable& table,
                                   const KernelConfig& cfg, const ExecOptions& options = {});

void dedisperse_tiled_into(DedispersedSeries& out, const Filterbank& fb,
                           const DelayTable& table, const KernelConfig& cfg,
                           const ExecOptions& options = {});

struct LoadCounts {
  std::uint64_t staged_loads = 0;  // elements fetched into block buffers, per-tile fetches counted once each
  std::uint64_t ideal_loads = 0;   // distinct (channel, time index) input elements touched
};

/// Memory-traffic model of the tiled kernel: how many input elements the
/// staging scheme fetches under cfg versus the distinct elements any schedule
/// must touch. staged_loads >= ideal_loads always.
LoadCounts count_loads(const DelayTable& table, const KernelConfig& cfg,
                       std::uint32_t num_dms, std::uint32_t samples_per_second);

}  // namespace dedisp
