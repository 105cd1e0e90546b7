// SPDX-License-Identifier: Apache-2.0
#include "gcnm/json_schema.hpp"

#include <cmath>

namespace gcnm {

using nlohmann::json;

namespace {

bool has_type(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  if (type == "number") return v.is_number();
  if (type == "integer") {
    if (v.is_number_integer()) return true;
    if (v.is_number_float()) {
      const double d = v.get<double>();
      return std::isfinite(d) && std::floor(d) == d;
    }
    return false;
  }
  return false;
}

// RFC 6901 token escaping.
std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~')
      out += "~0";
    else if (c == '/')
      out += "~1";
    else
      out += c;
  }
  return out;
}

std::string at(const std::string& path) { return path.empty() ? "/" : path; }

void check(const json& v, const json& s, const std::string& path, std::vector<std::string>& errors) {
  if (s.contains("type")) {
    const auto& t = s.at("type");
    bool ok = false;
    std::string names;
    if (t.is_string()) {
      ok = has_type(v, t.get<std::string>());
      names = t.get<std::string>();
    } else {
      for (const auto& one : t) {
        ok = ok || has_type(v, one.get<std::string>());
        names += (names.empty() ? "" : "|") + one.get<std::string>();
      }
    }
    if (!ok) {
      errors.push_back(at(path) + ": expected " + names);
      return;
    }
  }
  if (s.contains("enum")) {
    bool found = false;
    for (const auto& e : s.at("enum")) found = found || e == v;
    if (!found) errors.push_back(at(path) + ": value " + v.dump() + " not in " + s.at("enum").dump());
  }
  if (v.is_number()) {
    const double d = v.get<double>();
    if (s.contains("minimum") && d < s.at("minimum").get<double>())
      errors.push_back(at(path) + ": must be >= " + s.at("minimum").dump());
    if (s.contains("maximum") && d > s.at("maximum").get<double>())
      errors.push_back(at(path) + ": must be <= " + s.at("maximum").dump());
    if (s.contains("exclusiveMinimum") && d <= s.at("exclusiveMinimum").get<double>())
      errors.push_back(at(path) + ": must be > " + s.at("exclusiveMinimum").dump());
    if (s.contains("exclusiveMaximum") && d >= s.at("exclusiveMaximum").get<double>())
      errors.push_back(at(path) + ": must be < " + s.at("exclusiveMaximum").dump());
  }
  if (v.is_object()) {
    const json empty = json::object();
    const json& props = s.contains("properties") ? s.at("properties") : empty;
    if (s.contains("required"))
      for (const auto& r : s.at("required"))
        if (!v.contains(r.get<std::string>()))
          errors.push_back(at(path) + ": missing required key '" + r.get<std::string>() + "'");
    for (const auto& [key, child] : v.items()) {
      const std::string child_path = path + "/" + escape_token(key);
      if (props.contains(key)) {
        check(child, props.at(key), child_path, errors);
      } else if (s.contains("additionalProperties")) {
        const auto& ap = s.at("additionalProperties");
        if (ap.is_boolean() && !ap.get<bool>())
          errors.push_back(child_path + ": unknown key");
        else if (ap.is_object())
          check(child, ap, child_path, errors);
      }
    }
  }
  if (v.is_array()) {
    if (s.contains("minItems") && v.size() < s.at("minItems").get<std::size_t>())
      errors.push_back(at(path) + ": needs at least " + s.at("minItems").dump() + " items");
    if (s.contains("maxItems") && v.size() > s.at("maxItems").get<std::size_t>())
      errors.push_back(at(path) + ": allows at most " + s.at("maxItems").dump() + " items");
    if (s.contains("items"))
      for (std::size_t i = 0; i < v.size(); ++i) check(v[i], s.at("items"), path + "/" + std::to_string(i), errors);
  }
}

}  // namespace

std::vector<std::string> validate_json(const json& instance, const json& schema) {
  std::vector<std::string> errors;
  check(instance, schema, "", errors);
  return errors;
}

}  // namespace gcnm
