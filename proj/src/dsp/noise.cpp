#include "ancsim/dsp/noise.hpp"

#include <cmath>
#include <random>

#include "ancsim/dsp/butterworth.hpp"
#include "ancsim/error.hpp"

namespace ancsim::dsp {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Fourth-order 1/f approximation (-3 dB/octave within about 0.3 dB over the
// audio band); designed for 44.1 kHz, adequate at 22.05 kHz above ~20 Hz.
std::vector<double> pink_filter(const std::vector<double>& white) {
  constexpr double b[4] = {0.049922035, -0.095993537, 0.050612699, -0.004408786};
  constexpr double a[4] = {1.0, -2.494956002, 2.017265875, -0.522189400};
  std::vector<double> y(white.size());
  double z[3] = {0.0, 0.0, 0.0};
  for (std::size_t n = 0; n < white.size(); ++n) {
    const double x = white[n];
    const double out = b[0] * x + z[0];
    z[0] = b[1] * x - a[1] * out + z[1];
    z[1] = b[2] * x - a[2] * out + z[2];
    z[2] = b[3] * x - a[3] * out;
    y[n] = out;
  }
  return y;
}

void normalize_rms(std::vector<double>& x) {
  double ms = 0.0;
  for (double v : x) ms += v * v;
  ms /= static_cast<double>(x.size());
  if (ms <= 0.0) return;
  const double g = 1.0 / std::sqrt(ms);
  for (double& v : x) v *= g;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return splitmix(splitmix(splitmix(a) ^ b) ^ c);
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kWhite: return "white";
    case NoiseKind::kPink: return "pink";
    case NoiseKind::kBandlimited: return "bandlimited";
  }
  return "white";
}

NoiseKind noise_kind_from_string(const std::string& name) {
  if (name == "white") return NoiseKind::kWhite;
  if (name == "pink") return NoiseKind::kPink;
  if (name == "bandlimited") return NoiseKind::kBandlimited;
  throw InvalidArgument("unknown noise kind '" + name + "' (expected white, pink, bandlimited)");
}

std::vector<double> seeded_noise_samples(const NoiseSpec& spec, std::size_t num_samples, int fs,
                                         std::uint64_t seed) {
  if (num_samples == 0) throw InvalidArgument("seeded_noise: duration must be positive");
  const std::size_t preroll = spec.kind == NoiseKind::kWhite ? 0 : static_cast<std::size_t>(fs) / 2;
  std::mt19937_64 rng(mix_seed(seed, 0x6e6f697365ULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> white(num_samples + preroll);
  for (double& v : white) v = normal(rng);

  std::vector<double> shaped;
  switch (spec.kind) {
    case NoiseKind::kWhite:
      shaped = std::move(white);
      break;
    case NoiseKind::kPink:
      shaped = pink_filter(white);
      break;
    case NoiseKind::kBandlimited:
      shaped = sos_filter(white, design_butterworth_bandpass(4, spec.low_hz, spec.high_hz, fs));
      break;
  }
  std::vector<double> out(shaped.begin() + static_cast<std::ptrdiff_t>(preroll), shaped.end());
  normalize_rms(out);
  return out;
}

Waveform seeded_noise(const NoiseSpec& spec, double duration_s, int fs, std::uint64_t seed) {
  if (!(duration_s > 0.0)) throw InvalidArgument("seeded_noise: duration must be positive");
  if (fs <= 0) throw InvalidArgument("seeded_noise: sample rate must be positive");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs));
  return {seeded_noise_samples(spec, n, fs, seed), fs};
}

}  // namespace ancsim::dsp
