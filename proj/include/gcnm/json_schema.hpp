// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace gcnm {

// Validates against the subset of JSON Schema used by the run config: type,
// enum, properties, required, additionalProperties, items, minItems,
// maxItems, minimum, maximum, exclusiveMinimum, exclusiveMaximum.
// Each error reads "<json pointer>: <problem>".
std::vector<std::string> validate_json(const nlohmann::json& instance, const nlohmann::json& schema);

}  // namespace gcnm
