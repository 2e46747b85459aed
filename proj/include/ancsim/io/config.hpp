#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace ancsim::io {

using Json = nlohmann::json;

// Parses a JSON config file. Syntax errors become ConfigError with the file
// name, line and column of the offending byte.
Json load_config(const std::filesystem::path& path);
Json parse_config(std::string_view text, std::string_view origin = "<config>");

// Field access helpers. `where` is a dotted path used in messages, e.g.
// require(j, "geometry", "scene") reports "scene.geometry".
const Json& require(const Json& obj, std::string_view key, std::string_view where);

template <typename T>
T require_as(const Json& obj, std::string_view key, std::string_view where);

template <typename T>
T value_or(const Json& obj, std::string_view key, T fallback, std::string_view where);

std::string join_path(std::string_view where, std::string_view key);

}  // namespace ancsim::io

#include "ancsim/io/config_impl.hpp"
