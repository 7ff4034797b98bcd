#pragma once

// Typed field access over nlohmann::json that reports schema violations as
// Error(E_SCHEMA) naming the offending field.

#include <cmath>
#include <string>
#include <string_view>

#include <json.hpp>

#include "rebar2bim/error.hpp"

namespace rebar2bim::detail {

using nlohmann::json;

inline json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Schema, std::string(what) + ": " + e.what());
  }
}

inline const json& field(const json& obj, const char* name, std::string_view ctx) {
  if (!obj.is_object()) throw Error(ErrorCode::Schema, std::string(ctx) + ": expected object");
  auto it = obj.find(name);
  if (it == obj.end()) {
    throw Error(ErrorCode::Schema, std::string(ctx) + ": missing field '" + name + "'");
  }
  return *it;
}

inline double get_number(const json& obj, const char* name, std::string_view ctx) {
  const json& v = field(obj, name, ctx);
  if (!v.is_number()) {
    throw Error(ErrorCode::Schema, std::string(ctx) + ": field '" + name + "' must be a number");
  }
  double d = v.get<double>();
  if (!std::isfinite(d)) {
    throw Error(ErrorCode::Schema, std::string(ctx) + ": field '" + name + "' must be finite");
  }
  return d;
}

inline long long get_int(const json& obj, const char* name, std::string_view ctx) {
  const json& v = field(obj, name, ctx);
  if (!v.is_number_integer()) {
    throw Error(ErrorCode::Schema, std::string(ctx) + ": field '" + name + "' must be an integer");
  }
  return v.get<long long>();
}

inline std::string get_string(const json& obj, const char* name, std::string_view ctx) {
  const json& v = field(obj, name, ctx);
  if (!v.is_string()) {
    throw Error(ErrorCode::Schema, std::string(ctx) + ": field '" + name + "' must be a string");
  }
  return v.get<std::string>();
}

inline const json& get_array(const json& obj, const char* name, std::string_view ctx,
                             std::size_t expected_size = 0) {
  const json& v = field(obj, name, ctx);
  if (!v.is_array()) {
    throw Error(ErrorCode::Schema, std::string(ctx) + ": field '" + name + "' must be an array");
  }
  if (expected_size != 0 && v.size() != expected_size) {
    throw Error(ErrorCode::Schema, std::string(ctx) + ": field '" + name + "' must have " +
                                       std::to_string(expected_size) + " entries");
  }
  for (const auto& e : v) {
    if (expected_size != 0 && !e.is_number()) {
      throw Error(ErrorCode::Schema,
                  std::string(ctx) + ": field '" + name + "' must hold numbers");
    }
  }
  return v;
}

}  // namespace rebar2bim::detail
