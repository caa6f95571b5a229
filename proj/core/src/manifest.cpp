#include "dedisp/manifest.hpp"

#include <ctime>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "dedisp/errors.hpp"

namespace dedisp {

std::string manifest_to_json(const RunManifest& manifest) {
  nlohmann::ordered_json doc;
  doc["schema"] = "dedisp-run-manifest/1";
  doc["command"] = manifest.command;
  doc["argv"] = manifest.argv;
  doc["setup"] = manifest.setup_name;
  doc["instances"] = manifest.instances;
  doc["limits"] = {{"max_block_items", manifest.limits.max_block_items},
                   {"max_accumulators", manifest.limits.max_accumulators}};
  doc["repeats"] = manifest.repeats;
  doc["seed"] = manifest.seed;
  doc["threads"] = manifest.threads;
  doc["rng"] = manifest.rng_id;
  doc["outputs"] = manifest.outputs;
  doc["tool_version"] = manifest.tool_version;
  doc["timestamp_utc"] = manifest.timestamp_utc;
  return doc.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  try {
    const nlohmann::json doc = nlohmann::json::parse(text);
    if (doc.at("schema").get<std::string>() != "dedisp-run-manifest/1") {
      throw format_error("unrecognized manifest schema", 0);
    }
    RunManifest manifest;
    manifest.command = doc.at("command").get<std::string>();
    manifest.argv = doc.at("argv").get<std::vector<std::string>>();
    manifest.setup_name = doc.at("setup").get<std::string>();
    manifest.instances = doc.at("instances").get<std::vector<std::uint32_t>>();
    manifest.limits.max_block_items =
        doc.at("limits").at("max_block_items").get<std::uint32_t>();
    manifest.limits.max_accumulators =
        doc.at("limits").at("max_accumulators").get<std::uint32_t>();
    manifest.repeats = doc.at("repeats").get<std::uint32_t>();
    manifest.seed = doc.at("seed").get<std::uint64_t>();
    manifest.threads = doc.at("threads").get<int>();
    manifest.rng_id = doc.at("rng").get<std::string>();
    manifest.outputs = doc.at("outputs").get<std::vector<std::string>>();
    manifest.tool_version = doc.at("tool_version").get<std::string>();
    manifest.timestamp_utc = doc.at("timestamp_utc").get<std::string>();
    return manifest;
  } catch (const nlohmann::json::exception& err) {
    throw format_error(std::string("bad manifest document: ") + err.what(), 0);
  }
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << manifest_to_json(manifest);
  if (!out) throw std::runtime_error("short write to " + path);
}

std::string current_timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm parts{};
  gmtime_r(&now, &parts);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &parts);
  return buffer;
}

}  // namespace dedisp
