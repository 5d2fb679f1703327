#pragma once

// Structured-text (JSON) forms of configs and reports. Parsers reject unknown
// keys and wrong types with a ConfigError naming the key path.

#include <string>

#include "json.hpp"
#include "urveda/metrics.h"
#include "urveda/network.h"
#include "urveda/trainer.h"

namespace urveda {

nlohmann::json to_json(const NetworkConfig& config);
// Keys absent from `j` keep their value from `base`.
NetworkConfig network_config_from_json(const nlohmann::json& j, const NetworkConfig& base = {},
                                       const std::string& path = "network");

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j, const TrainConfig& base = {},
                                   const std::string& path = "training");

struct RunConfig {
  NetworkConfig network;
  TrainConfig training;
};

nlohmann::json to_json(const RunConfig& config);
// Top level: {"network": {...}, "training": {...}}, both optional.
RunConfig run_config_from_json(const nlohmann::json& j, const RunConfig& base = {});
RunConfig read_run_config(const std::filesystem::path& path, const RunConfig& base = {});

nlohmann::json to_json(const MetricReport& report);
nlohmann::json to_json(const ReportTable& table);
nlohmann::json to_json(const CrossValidationReport& report);

}  // namespace urveda
