#pragma once

#include <cstdint>
#include <string>

#include "ancsim/scene/geometry.hpp"
#include "ancsim/signal.hpp"

namespace ancsim::scene {

enum class PathKind { kAnechoic, kReverberant };
std::string to_string(PathKind kind);
PathKind path_kind_from_string(const std::string& name);

struct PathModel {
  PathKind kind = PathKind::kAnechoic;
  double rt60_s = 0.0;
  std::uint64_t reflection_seed = 0;
  double speed_of_sound = 343.0;
  int path_length_taps = 512;

  // Diffuse tail: total energy of the tail envelope extrapolated back to
  // n = 0, in dB relative to the direct-path energy of a source at 1 m.
  double tail_level_db = -10.0;
  // Silence between the direct arrival and the first tail sample.
  double tail_gap_s = 0.002;
  // Fraction of tail power shared by every receiver of one emitter.
  double tail_coherence = 0.9;

  void validate() const;
};

// Identifiers that select the tail noise streams. Paths with the same
// (emitter, receiver) ids under one reflection seed share their tails, which
// keeps mirrored geometries statistically identical.
struct PathRoles {
  std::uint64_t emitter = 0;
  std::uint64_t receiver = 0;
};

// Direct path: windowed-sinc fractional delay of distance/c*fs samples with
// amplitude 1/distance. Reverberant models add a seeded exponentially
// decaying tail whose energy falls 60 dB in rt60 seconds.
FirFilter synthesize_path(const Vec3& a, const Vec3& b, const PathModel& model, int fs,
                          PathRoles roles = {});

}  // namespace ancsim::scene
