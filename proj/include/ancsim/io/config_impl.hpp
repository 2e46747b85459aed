#pragma once

#include "ancsim/error.hpp"

namespace ancsim::io {

template <typename T>
T require_as(const Json& obj, std::string_view key, std::string_view where) {
  const Json& v = require(obj, key, where);
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config field '" + join_path(where, key) + "' has the wrong type: " + e.what());
  }
}

template <typename T>
T value_or(const Json& obj, std::string_view key, T fallback, std::string_view where) {
  if (!obj.is_object()) throw ConfigError("config section '" + std::string(where) + "' must be an object");
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config field '" + join_path(where, key) + "' has the wrong type: " + e.what());
  }
}

}  // namespace ancsim::io
