#pragma once

#include <string>

#include "dedisp/tuner.hpp"

namespace dedisp {

/// JSON document for one TuningResult (schema "dedisp-tuning-result/1",
/// described in the README). Round-trips through tuning_result_from_json.
std::string tuning_result_to_json(const TuningResult& result);

/// Parses a tuning-result document. Throws format_error on malformed input.
TuningResult tuning_result_from_json(const std::string& text);

void write_tuning_result_json(const TuningResult& result, const std::string& path);
TuningResult read_tuning_result_json(const std::string& path);

/// Flat CSV: one row per configuration with the four parameters, mean time,
/// and gflops. For plotting.
std::string tuning_result_to_csv(const TuningResult& result);
void write_tuning_result_csv(const TuningResult& result, const std::string& path);

}  // namespace dedisp
