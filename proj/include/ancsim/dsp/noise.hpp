#pragma once

#include <cstdint>
#include <string>

#include "ancsim/signal.hpp"

namespace ancsim::dsp {

enum class NoiseKind { kWhite, kPink, kBandlimited };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kWhite;
  // Band edges for kBandlimited.
  double low_hz = 100.0;
  double high_hz = 1000.0;
};

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& name);

// Deterministic Gaussian-based noise normalized to unit RMS. Pink and
// bandlimited noise are shaped from seeded white noise; a discarded pre-roll
// removes the shaping filter's start-up transient.
Waveform seeded_noise(const NoiseSpec& spec, double duration_s, int fs, std::uint64_t seed);
std::vector<double> seeded_noise_samples(const NoiseSpec& spec, std::size_t num_samples, int fs,
                                         std::uint64_t seed);

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace ancsim::dsp
