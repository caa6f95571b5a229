#include "dedisp/analysis.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "dedisp/errors.hpp"

namespace dedisp {

AiBounds ai_bounds(std::uint64_t num_dms, std::uint64_t samples_per_second,
                   std::uint64_t channels) {
  if (num_dms == 0 || samples_per_second == 0 || channels == 0) {
    throw std::invalid_argument("instance dimensions must all be positive");
  }
  AiBounds bounds;
  bounds.reuse_bound = 1.0 / (4.0 * (1.0 / static_cast<double>(num_dms) +
                                     1.0 / static_cast<double>(samples_per_second) +
                                     1.0 / static_cast<double>(channels)));
  return bounds;
}

MemoryTraffic kernel_traffic(const DelayTable& table, const KernelConfig& cfg,
                             std::uint32_t num_dms, std::uint32_t samples_per_second) {
  const LoadCounts loads = count_loads(table, cfg, num_dms, samples_per_second);
  MemoryTraffic traffic;
  traffic.staged_loads = loads.staged_loads;
  traffic.output_writes = static_cast<std::uint64_t>(num_dms) * samples_per_second;
  traffic.delay_reads = static_cast<std::uint64_t>(num_dms) * table.setup.channels;
  return traffic;
}

double measured_ai(std::uint64_t flops, const MemoryTraffic& traffic) {
  const std::uint64_t elements =
      traffic.staged_loads + traffic.output_writes + traffic.delay_reads;
  if (elements == 0) throw std::invalid_argument("no memory traffic to divide by");
  return static_cast<double>(flops) / (4.0 * static_cast<double>(elements));
}

double realtime_threshold_gflops(const ObservationSetup& setup, std::uint32_t num_dms) {
  setup.validate();
  if (num_dms == 0) throw std::invalid_argument("need at least one trial DM");
  return static_cast<double>(num_dms) * static_cast<double>(setup.samples_per_second) *
         static_cast<double>(setup.channels) / 1e9;
}

DeploymentPlan deployment_sizing(const ObservationSetup& setup, std::uint32_t num_dms,
                                 std::uint32_t beams, double measured_time_per_pass) {
  setup.validate();
  if (num_dms == 0) throw std::invalid_argument("need at least one trial DM");
  if (beams == 0) throw std::invalid_argument("need at least one beam");
  if (!std::isfinite(measured_time_per_pass) || measured_time_per_pass <= 0.0) {
    throw std::invalid_argument("pass time must be a positive number of seconds");
  }
  if (measured_time_per_pass >= 1.0) {
    throw not_real_time_error(
        "one pass takes " + std::to_string(measured_time_per_pass) +
        " s; a device cannot keep up with even a single beam");
  }
  DeploymentPlan plan;
  plan.beams_per_device = static_cast<std::uint32_t>(1.0 / measured_time_per_pass);
  plan.devices = (static_cast<std::uint64_t>(beams) + plan.beams_per_device - 1) /
                 plan.beams_per_device;
  return plan;
}

std::span<const DevicePeaks> reference_devices() {
  static const std::array<DevicePeaks, 5> devices{{
      {"AMD HD7970", 3788.0, 264.0},
      {"Intel Xeon Phi 5110P", 2022.0, 320.0},
      {"NVIDIA GTX 680", 3090.0, 192.0},
      {"NVIDIA K20", 3519.0, 208.0},
      {"NVIDIA GTX Titan", 4500.0, 288.0},
  }};
  return devices;
}

RooflineVerdict classify_roofline(double ai_flop_per_byte, double peak_gflops,
                                  double peak_gbs) {
  if (!std::isfinite(ai_flop_per_byte) || ai_flop_per_byte <= 0.0) {
    throw std::invalid_argument("arithmetic intensity must be positive");
  }
  if (!std::isfinite(peak_gflops) || peak_gflops <= 0.0 || !std::isfinite(peak_gbs) ||
      peak_gbs <= 0.0) {
    throw std::invalid_argument("device peaks must be positive");
  }
  RooflineVerdict verdict;
  verdict.ridge_flop_per_byte = peak_gflops / peak_gbs;
  verdict.memory_bound = ai_flop_per_byte < verdict.ridge_flop_per_byte;
  verdict.attainable_gflops = std::min(peak_gflops, ai_flop_per_byte * peak_gbs);
  return verdict;
}

}  // namespace dedisp
