// SPDX-License-Identifier: Apache-2.0
#include "gcnm/config.hpp"

#include <fstream>

#include "gcnm/error.hpp"
#include "gcnm/json_schema.hpp"
#include "run_config_schema.hpp"

namespace gcnm {

using nlohmann::json;

const json& run_config_schema() {
  static const json schema = json::parse(detail::kRunConfigSchema);
  return schema;
}

RunConfig RunConfig::from_json(const json& j) {
  const auto errors = validate_json(j, run_config_schema());
  if (!errors.empty()) {
    std::string msg = "invalid run config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw UsageError(msg);
  }
  RunConfig c;
  c.model = ModelConfig::from_json(j);
  if (j.contains("seed")) {
    c.seed = j.at("seed").get<std::uint64_t>();
    c.model.seed = c.seed;
  }
  if (j.contains("data")) {
    c.series_path = j.at("data").value("series", "");
    c.graph_path = j.at("data").value("graph", "");
  }
  if (j.contains("scenarios"))
    for (const auto& s : j.at("scenarios"))
      c.scenarios.push_back({parse_missing_kind(s.at("kind").get<std::string>()), s.at("rate").get<double>()});
  if (j.contains("baselines")) c.baselines = j.at("baselines").get<std::vector<std::string>>();
  c.output_dir = j.value("output_dir", "");
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

json RunConfig::to_json() const {
  json j = model.to_json();
  j["seed"] = seed;
  if (!series_path.empty() || !graph_path.empty()) j["data"] = {{"series", series_path}, {"graph", graph_path}};
  json sc = json::array();
  for (const auto& s : scenarios) sc.push_back({{"kind", missing_kind_name(s.kind)}, {"rate", s.rate}});
  j["scenarios"] = sc;
  j["baselines"] = baselines;
  if (!output_dir.empty()) j["output_dir"] = output_dir;
  return j;
}

}  // namespace gcnm
