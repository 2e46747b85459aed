#include "ancsim/scene/path_model.hpp"

#include <cmath>
#include <random>

#include "ancsim/dsp/fractional_delay.hpp"
#include "ancsim/dsp/noise.hpp"
#include "ancsim/error.hpp"

namespace ancsim::scene {
namespace {

constexpr std::uint64_t kSharedTag = 0x7368617265ULL;
constexpr std::uint64_t kOwnTag = 0x6f776eULL;

std::vector<double> gaussian(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

}  // namespace

std::string to_string(PathKind kind) { return kind == PathKind::kAnechoic ? "anechoic" : "reverberant"; }

PathKind path_kind_from_string(const std::string& name) {
  if (name == "anechoic") return PathKind::kAnechoic;
  if (name == "reverberant") return PathKind::kReverberant;
  throw InvalidArgument("unknown path model kind '" + name + "' (expected anechoic or reverberant)");
}

void PathModel::validate() const {
  if (path_length_taps < 64) throw InvalidArgument("path_length_taps must be >= 64");
  if (!(speed_of_sound > 0.0)) throw InvalidArgument("speed_of_sound must be positive");
  if (kind == PathKind::kAnechoic && rt60_s != 0.0) throw InvalidArgument("anechoic path model requires rt60 = 0");
  if (kind == PathKind::kReverberant && !(rt60_s > 0.0)) {
    throw InvalidArgument("reverberant path model requires rt60 > 0");
  }
  if (!(tail_coherence >= 0.0 && tail_coherence <= 1.0)) throw InvalidArgument("tail_coherence must lie in [0, 1]");
  if (!(tail_gap_s >= 0.0)) throw InvalidArgument("tail_gap_s must be non-negative");
}

FirFilter synthesize_path(const Vec3& a, const Vec3& b, const PathModel& model, int fs, PathRoles roles) {
  model.validate();
  if (fs <= 0) throw InvalidArgument("synthesize_path: sample rate must be positive");
  const double dist = distance(a, b);
  if (!(dist > 0.0)) throw InvalidArgument("synthesize_path: endpoints must be distinct");
  const double delay = dist / model.speed_of_sound * fs;
  const auto length = static_cast<std::size_t>(model.path_length_taps);
  if (delay + dsp::kDefaultSincHalfWidth > static_cast<double>(length)) {
    throw InvalidArgument("synthesize_path: path_length_taps " + std::to_string(length) +
                          " cannot hold a direct delay of " + std::to_string(delay) + " samples");
  }

  std::vector<double> taps(length, 0.0);
  // Half width capped by the delay keeps every tap at n <= 0 silent.
  dsp::add_windowed_sinc(taps, delay, 1.0 / dist, std::min(dsp::kDefaultSincHalfWidth, delay));

  if (model.kind == PathKind::kReverberant) {
    const auto start = static_cast<std::size_t>(std::ceil(delay)) +
                       static_cast<std::size_t>(std::lround(model.tail_gap_s * fs));
    if (start < length) {
      const double r2 = std::pow(10.0, -6.0 / (model.rt60_s * fs));
      const double amp = std::sqrt(std::pow(10.0, model.tail_level_db / 10.0) * (1.0 - r2));
      const double decay = std::sqrt(r2);
      const auto shared = gaussian(length, dsp::mix_seed(model.reflection_seed, roles.emitter, kSharedTag));
      const auto own = gaussian(length, dsp::mix_seed(dsp::mix_seed(model.reflection_seed, roles.emitter, kOwnTag),
                                                      roles.receiver));
      const double ws = std::sqrt(model.tail_coherence), wo = std::sqrt(1.0 - model.tail_coherence);
      for (std::size_t n = start; n < length; ++n) {
        taps[n] += amp * std::pow(decay, static_cast<double>(n)) * (ws * shared[n] + wo * own[n]);
      }
    }
  }
  return {std::move(taps), fs};
}

}  // namespace ancsim::scene
