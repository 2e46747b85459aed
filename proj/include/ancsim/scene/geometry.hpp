#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace ancsim::scene {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  bool operator==(const Vec3&) const = default;
  double norm() const;
};

double distance(const Vec3& a, const Vec3& b);

// Head frame: x forward, y toward the left ear, z up. Azimuth is measured
// clockwise seen from above, so 90 is the right side and 270 the left.
Vec3 direction_from_angles(double azimuth_deg, double elevation_deg);

enum class Side { kLeft, kRight };
std::string to_string(Side side);
Side side_from_string(const std::string& name);

inline constexpr std::size_t kMaxMics = 6;
inline constexpr double kHeadRadiusLimit = 0.25;

struct ArrayGeometry {
  std::vector<Vec3> mic_positions;
  Vec3 speaker_position;
  Vec3 ear_position;
  Side side = Side::kLeft;

  std::size_t num_mics() const { return mic_positions.size(); }

  // 1..6 mics, every point within 0.25 m of the head center.
  void validate() const;

  // Reflection through the median plane (y -> -y) with the side flipped.
  ArrayGeometry mirrored() const;

  // Keeps the listed mics in the given order.
  ArrayGeometry subset(const std::vector<std::size_t>& mic_indices) const;
};

nlohmann::json to_json(const ArrayGeometry& g);
// Accepts {"side", "ear", "speaker", "mics"}; errors name the missing field.
ArrayGeometry geometry_from_json(const nlohmann::json& j, const std::string& where = "geometry");

}  // namespace ancsim::scene
