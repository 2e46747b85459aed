#include "ancsim/io/config.hpp"

#include <fstream>
#include <sstream>

#include "ancsim/error.hpp"

namespace ancsim::io {
namespace {

std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

std::string join_path(std::string_view where, std::string_view key) {
  if (where.empty()) return std::string(key);
  return std::string(where) + "." + std::string(key);
}

Json parse_config(std::string_view text, std::string_view origin) {
  try {
    return Json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte);
    std::string what = e.what();
    const auto pos = what.find(": ");
    const auto detail = what.find("syntax error");
    if (detail != std::string::npos) what = what.substr(detail);
    else if (pos != std::string::npos) what = what.substr(pos + 2);
    throw ConfigError(std::string(origin) + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": " + what);
  }
}

Json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

const Json& require(const Json& obj, std::string_view key, std::string_view where) {
  if (!obj.is_object()) {
    throw ConfigError("config section '" + std::string(where.empty() ? "<root>" : where) +
                      "' must be an object");
  }
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    throw ConfigError("missing required config field '" + join_path(where, key) + "'");
  }
  return *it;
}

}  // namespace ancsim::io
