#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dedisp/kernels.hpp"

namespace dedisp {

/// Record of one CLI invocation, written alongside every output artifact.
/// Re-running the stored command line reproduces all configuration choices
/// (timings may differ).
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::string setup_name;
  std::vector<std::uint32_t> instances;
  KernelLimits limits{};
  std::uint32_t repeats = 0;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string rng_id;
  std::vector<std::string> outputs;
  std::string tool_version;
  std::string timestamp_utc;
};

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& text);
void write_manifest(const RunManifest& manifest, const std::string& path);

std::string current_timestamp_utc();

}  // namespace dedisp
