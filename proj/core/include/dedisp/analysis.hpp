#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "dedisp/kernels.hpp"
#include "dedisp/setup.hpp"

namespace dedisp {

/// Arithmetic-intensity ceilings for an instance, in FLOP/byte.
/// no_reuse is the strict upper bound of the one-load-per-addition regime
/// (the residual traffic of delay reads and output writes only lowers it).
/// reuse_bound is the ceiling once loads are shared across trials, time, and
/// channels: 1 / (4 * (1/d + 1/s + 1/c)).
struct AiBounds {
  double no_reuse = 0.25;
  double reuse_bound = 0.0;
};

AiBounds ai_bounds(std::uint64_t num_dms, std::uint64_t samples_per_second,
                   std::uint64_t channels);

/// Byte-traffic inputs for a measured arithmetic intensity. All three counts
/// are in elements of 4 bytes (samples, output sums, and 32-bit shifts alike).
struct MemoryTraffic {
  std::uint64_t staged_loads = 0;
  std::uint64_t output_writes = 0;
  std::uint64_t delay_reads = 0;
};

/// Assembles the traffic of one tiled-kernel pass: staged input loads from
/// count_loads, one write per output element, one read per table entry.
MemoryTraffic kernel_traffic(const DelayTable& table, const KernelConfig& cfg,
                             std::uint32_t num_dms, std::uint32_t samples_per_second);

/// flops / (4 * (staged_loads + output_writes + delay_reads)).
/// Throws std::invalid_argument when the denominator is zero.
double measured_ai(std::uint64_t flops, const MemoryTraffic& traffic);

/// Throughput needed to dedisperse one second of data in one second of
/// computation: num_dms * s * channels / 1e9, in GFLOP/s.
double realtime_threshold_gflops(const ObservationSetup& setup, std::uint32_t num_dms);

struct DeploymentPlan {
  std::uint32_t beams_per_device = 0;
  std::uint64_t devices = 0;
};

/// How many devices cover `beams` beams in real time when one pass over one
/// beam takes measured_time_per_pass seconds. Throws not_real_time_error when
/// a single pass already takes a second or longer.
DeploymentPlan deployment_sizing(const ObservationSetup& setup, std::uint32_t num_dms,
                                 std::uint32_t beams, double measured_time_per_pass);

/// Published peak numbers of one device, for roofline annotation.
struct DevicePeaks {
  std::string name;
  double peak_gflops = 0.0;
  double peak_gbs = 0.0;

  double ridge_flop_per_byte() const { return peak_gflops / peak_gbs; }
};

/// Reference peaks of five accelerator cards, shipped for report annotation
/// only (also available as data/reference_devices.json).
std::span<const DevicePeaks> reference_devices();

struct RooflineVerdict {
  bool memory_bound = false;
  double ridge_flop_per_byte = 0.0;
  double attainable_gflops = 0.0;  // min(peak, ai * bandwidth)
};

/// Places an arithmetic intensity against a machine roofline.
RooflineVerdict classify_roofline(double ai_flop_per_byte, double peak_gflops,
                                  double peak_gbs);

}  // namespace dedisp
