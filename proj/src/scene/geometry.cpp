#include "ancsim/scene/geometry.hpp"

#include <cmath>
#include <numbers>

#include "ancsim/error.hpp"
#include "ancsim/io/config.hpp"

namespace ancsim::scene {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

Vec3 vec_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("config field '" + where + "' must be a 3-element array");
  try {
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config field '" + where + "' must contain numbers");
  }
}

nlohmann::json vec_to_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

Vec3 flip_y(const Vec3& v) { return {v.x, -v.y, v.z}; }

}  // namespace

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

Vec3 direction_from_angles(double azimuth_deg, double elevation_deg) {
  const double az = azimuth_deg * kDegToRad, el = elevation_deg * kDegToRad;
  return {std::cos(el) * std::cos(az), -std::cos(el) * std::sin(az), std::sin(el)};
}

std::string to_string(Side side) { return side == Side::kLeft ? "left" : "right"; }

Side side_from_string(const std::string& name) {
  if (name == "left") return Side::kLeft;
  if (name == "right") return Side::kRight;
  throw InvalidArgument("unknown side '" + name + "' (expected left or right)");
}

void ArrayGeometry::validate() const {
  if (mic_positions.empty() || mic_positions.size() > kMaxMics) {
    throw InvalidArgument("array geometry needs 1 to 6 microphones, got " + std::to_string(mic_positions.size()));
  }
  auto check = [](const Vec3& p, const std::string& what) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw InvalidArgument(what + " position is not finite");
    }
    if (p.norm() > kHeadRadiusLimit) {
      throw InvalidArgument(what + " lies " + std::to_string(p.norm()) + " m from the head center (limit 0.25 m)");
    }
  };
  for (std::size_t m = 0; m < mic_positions.size(); ++m) check(mic_positions[m], "mic " + std::to_string(m));
  check(speaker_position, "speaker");
  check(ear_position, "ear");
}

ArrayGeometry ArrayGeometry::mirrored() const {
  ArrayGeometry g;
  for (const auto& p : mic_positions) g.mic_positions.push_back(flip_y(p));
  g.speaker_position = flip_y(speaker_position);
  g.ear_position = flip_y(ear_position);
  g.side = side == Side::kLeft ? Side::kRight : Side::kLeft;
  return g;
}

ArrayGeometry ArrayGeometry::subset(const std::vector<std::size_t>& mic_indices) const {
  ArrayGeometry g = *this;
  g.mic_positions.clear();
  for (auto i : mic_indices) {
    if (i >= mic_positions.size()) throw InvalidArgument("mic subset index out of range");
    g.mic_positions.push_back(mic_positions[i]);
  }
  return g;
}

nlohmann::json to_json(const ArrayGeometry& g) {
  nlohmann::json mics = nlohmann::json::array();
  for (const auto& p : g.mic_positions) mics.push_back(vec_to_json(p));
  return {{"side", to_string(g.side)},
          {"ear", vec_to_json(g.ear_position)},
          {"speaker", vec_to_json(g.speaker_position)},
          {"mics", mics}};
}

ArrayGeometry geometry_from_json(const nlohmann::json& j, const std::string& where) {
  ArrayGeometry g;
  try {
    g.side = side_from_string(io::value_or<std::string>(j, "side", "left", where));
  } catch (const InvalidArgument& e) {
    throw ConfigError(io::join_path(where, "side") + ": " + e.what());
  }
  g.ear_position = vec_from_json(io::require(j, "ear", where), io::join_path(where, "ear"));
  g.speaker_position = vec_from_json(io::require(j, "speaker", where), io::join_path(where, "speaker"));
  const auto& mics = io::require(j, "mics", where);
  if (!mics.is_array()) throw ConfigError("config field '" + io::join_path(where, "mics") + "' must be an array");
  for (std::size_t m = 0; m < mics.size(); ++m) {
    g.mic_positions.push_back(vec_from_json(mics[m], io::join_path(where, "mics[" + std::to_string(m) + "]")));
  }
  try {
    g.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return g;
}

}  // namespace ancsim::scene
