#include "dedisp/report_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dedisp/errors.hpp"

namespace dedisp {

namespace {

constexpr const char* kSchema = "dedisp-tuning-result/1";

nlohmann::ordered_json setup_to_json(const ObservationSetup& setup) {
  return {
      {"name", setup.name},
      {"samples_per_second", setup.samples_per_second},
      {"channels", setup.channels},
      {"f_min_mhz", setup.f_min},
      {"channel_width_mhz", setup.channel_width},
      {"dm_first", setup.dm_first},
      {"dm_step", setup.dm_step},
  };
}

ObservationSetup setup_from_json(const nlohmann::json& node) {
  ObservationSetup setup;
  setup.name = node.at("name").get<std::string>();
  setup.samples_per_second = node.at("samples_per_second").get<std::uint32_t>();
  setup.channels = node.at("channels").get<std::uint32_t>();
  setup.f_min = node.at("f_min_mhz").get<double>();
  setup.channel_width = node.at("channel_width_mhz").get<double>();
  setup.dm_first = node.at("dm_first").get<double>();
  setup.dm_step = node.at("dm_step").get<double>();
  return setup;
}

void write_text(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("short write to " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

std::string tuning_result_to_json(const TuningResult& result) {
  nlohmann::ordered_json doc;
  doc["schema"] = kSchema;
  doc["setup"] = setup_to_json(result.setup);
  doc["num_dms"] = result.num_dms;
  doc["zero_dm"] = result.zero_dm;
  doc["limits"] = {{"max_block_items", result.limits.max_block_items},
                   {"max_accumulators", result.limits.max_accumulators}};
  doc["repeats"] = result.repeats;
  doc["seed"] = result.seed;
  doc["environment"] = {{"threads", result.threads},
                        {"rng", result.rng_id},
                        {"clock_resolution_s", result.clock_resolution_s}};

  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  for (const TuningRecord& record : result.records) {
    nlohmann::ordered_json node;
    node["items_time"] = record.config.items_time;
    node["items_dm"] = record.config.items_dm;
    node["work_time"] = record.config.work_time;
    node["work_dm"] = record.config.work_dm;
    node["runs_s"] = record.runs;
    node["mean_time_s"] = record.mean_time;
    node["gflops"] = record.gflops;
    node["timer_warning"] = record.timer_warning;
    records.push_back(std::move(node));
  }
  doc["records"] = std::move(records);
  doc["best_index"] = result.best_index;

  nlohmann::ordered_json stats;
  stats["mean_gflops"] = result.stats.mean_gflops;
  stats["stddev_gflops"] = result.stats.stddev_gflops;
  if (result.stats.snr_optimum.has_value()) {
    stats["snr_optimum"] = *result.stats.snr_optimum;
    stats["chebyshev_bound"] = *result.stats.chebyshev_bound;
  } else {
    stats["snr_optimum"] = nullptr;
    stats["chebyshev_bound"] = nullptr;
  }
  stats["degenerate"] = result.stats.degenerate;
  doc["stats"] = std::move(stats);

  doc["realtime"] = {{"threshold_gflops", result.realtime_threshold_gflops},
                     {"pass", result.realtime_pass}};
  return doc.dump(2) + "\n";
}

TuningResult tuning_result_from_json(const std::string& text) {
  try {
    const nlohmann::json doc = nlohmann::json::parse(text);
    if (doc.at("schema").get<std::string>() != kSchema) {
      throw format_error("unrecognized schema '" + doc.at("schema").get<std::string>() + "'", 0);
    }
    TuningResult result;
    result.setup = setup_from_json(doc.at("setup"));
    result.num_dms = doc.at("num_dms").get<std::uint32_t>();
    result.zero_dm = doc.at("zero_dm").get<bool>();
    result.limits.max_block_items = doc.at("limits").at("max_block_items").get<std::uint32_t>();
    result.limits.max_accumulators =
        doc.at("limits").at("max_accumulators").get<std::uint32_t>();
    result.repeats = doc.at("repeats").get<std::uint32_t>();
    result.seed = doc.at("seed").get<std::uint64_t>();
    result.threads = doc.at("environment").at("threads").get<int>();
    result.rng_id = doc.at("environment").at("rng").get<std::string>();
    result.clock_resolution_s = doc.at("environment").at("clock_resolution_s").get<double>();

    for (const nlohmann::json& node : doc.at("records")) {
      TuningRecord record;
      record.config.items_time = node.at("items_time").get<std::uint32_t>();
      record.config.items_dm = node.at("items_dm").get<std::uint32_t>();
      record.config.work_time = node.at("work_time").get<std::uint32_t>();
      record.config.work_dm = node.at("work_dm").get<std::uint32_t>();
      record.runs = node.at("runs_s").get<std::vector<double>>();
      record.mean_time = node.at("mean_time_s").get<double>();
      record.gflops = node.at("gflops").get<double>();
      record.timer_warning = node.at("timer_warning").get<bool>();
      result.records.push_back(std::move(record));
    }
    result.best_index = doc.at("best_index").get<std::size_t>();
    if (result.records.empty() || result.best_index >= result.records.size()) {
      throw format_error("best_index does not point into records", 0);
    }

    const nlohmann::json& stats = doc.at("stats");
    result.stats.mean_gflops = stats.at("mean_gflops").get<double>();
    result.stats.stddev_gflops = stats.at("stddev_gflops").get<double>();
    if (!stats.at("snr_optimum").is_null()) {
      result.stats.snr_optimum = stats.at("snr_optimum").get<double>();
    }
    if (!stats.at("chebyshev_bound").is_null()) {
      result.stats.chebyshev_bound = stats.at("chebyshev_bound").get<double>();
    }
    result.stats.degenerate = stats.at("degenerate").get<bool>();

    result.realtime_threshold_gflops = doc.at("realtime").at("threshold_gflops").get<double>();
    result.realtime_pass = doc.at("realtime").at("pass").get<bool>();
    return result;
  } catch (const nlohmann::json::exception& err) {
    throw format_error(std::string("bad tuning-result document: ") + err.what(), 0);
  }
}

void write_tuning_result_json(const TuningResult& result, const std::string& path) {
  write_text(tuning_result_to_json(result), path);
}

TuningResult read_tuning_result_json(const std::string& path) {
  return tuning_result_from_json(read_text(path));
}

std::string tuning_result_to_csv(const TuningResult& result) {
  std::ostringstream out;
  out.precision(17);
  out << "items_time,items_dm,work_time,work_dm,mean_time_s,gflops\n";
  for (const TuningRecord& record : result.records) {
    out << record.config.items_time << ',' << record.config.items_dm << ','
        << record.config.work_time << ',' << record.config.work_dm << ','
        << record.mean_time << ',' << record.gflops << '\n';
  }
  return out.str();
}

void write_tuning_result_csv(const TuningResult& result, const std::string& path) {
  write_text(tuning_result_to_csv(result), path);
}

}  // namespace dedisp
