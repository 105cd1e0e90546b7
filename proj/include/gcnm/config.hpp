// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcnm/forecaster.hpp"
#include "gcnm/masking.hpp"

namespace gcnm {

struct ScenarioSpec {
  MissingKind kind = MissingKind::mix_range;
  double rate = 0.4;
};

struct RunConfig {
  ModelConfig model;
  std::string series_path;
  std::string graph_path;
  std::vector<ScenarioSpec> scenarios;
  std::vector<std::string> baselines;
  std::string output_dir;
  std::uint64_t seed = 0;

  // Validates against the published schema first; errors name the JSON path
  // and surface as UsageError.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

const nlohmann::json& run_config_schema();

}  // namespace gcnm
