#include <algorithm>
#include <stdexcept>
#include <vector>

#include "dedisp/kernels.hpp"

namespace dedisp {

LoadCounts count_loads(const DelayTable& table, const KernelConfig& cfg,
                       std::uint32_t num_dms, std::uint32_t samples_per_second) {
  if (num_dms == 0 || num_dms != table.num_dms) {
    throw std::invalid_argument("delay table does not cover the requested trial count");
  }
  if (cfg.items_time == 0 || cfg.items_dm == 0 || cfg.work_time == 0 || cfg.work_dm == 0) {
    throw std::invalid_argument("kernel config parameters must all be positive");
  }
  const std::uint64_t tile_time = static_cast<std::uint64_t>(cfg.items_time) * cfg.work_time;
  const std::uint64_t tile_dm = static_cast<std::uint64_t>(cfg.items_dm) * cfg.work_dm;
  if (tile_time > samples_per_second || samples_per_second % tile_time != 0 ||
      tile_dm > num_dms || num_dms % tile_dm != 0) {
    throw std::invalid_argument("kernel config does not tile this instance");
  }

  const std::uint32_t channels = table.setup.channels;
  const std::uint64_t tiles_time = samples_per_second / tile_time;
  const std::uint32_t tiles_dm = static_cast<std::uint32_t>(num_dms / tile_dm);

  LoadCounts counts;

  // Staged traffic: every (dm tile, time tile, channel) fetches a contiguous
  // run covering the tile's shift extent plus tile_time samples. The extent
  // is the same for every time tile of a dm tile.
  for (std::uint32_t dt = 0; dt < tiles_dm; ++dt) {
    const std::uint32_t dm0 = dt * static_cast<std::uint32_t>(tile_dm);
    for (std::uint32_t ch = 0; ch < channels; ++ch) {
      std::uint32_t lo = table.at(ch, dm0);
      std::uint32_t hi = lo;
      for (std::uint32_t ld = 1; ld < tile_dm; ++ld) {
        const std::uint32_t shift = table.at(ch, dm0 + ld);
        lo = std::min(lo, shift);
        hi = std::max(hi, shift);
      }
      counts.staged_loads += (static_cast<std::uint64_t>(hi - lo) + tile_time) * tiles_time;
    }
  }

  // Ideal traffic: the distinct input elements any schedule must read. Per
  // channel each trial needs the window [shift, shift + s); the union of
  // those windows is measured by merging, with no ordering assumed.
  std::vector<std::uint32_t> shifts(num_dms);
  for (std::uint32_t ch = 0; ch < channels; ++ch) {
    for (std::uint32_t dm = 0; dm < num_dms; ++dm) shifts[dm] = table.at(ch, dm);
    std::sort(shifts.begin(), shifts.end());
    std::uint64_t begin = shifts[0];
    std::uint64_t end = begin + samples_per_second;
    for (std::uint32_t dm = 1; dm < num_dms; ++dm) {
      const std::uint64_t next = shifts[dm];
      if (next > end) {
        counts.ideal_loads += end - begin;
        begin = next;
      }
      end = next + samples_per_second;
    }
    counts.ideal_loads += end - begin;
  }

  return counts;
}

}  // namespace dedisp
