#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace ancsim {

inline constexpr int kDefaultSampleRate = 22050;

// Sampled mono audio at a declared rate.
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = kDefaultSampleRate;

  Waveform() = default;
  Waveform(std::vector<double> s, int fs) : samples(std::move(s)), sample_rate_hz(fs) {}

  std::size_t size() const { return samples.size(); }
  std::span<const double> view() const { return samples; }

  // Throws InvalidArgument when the rate is not positive or a sample is not finite.
  void validate(std::string_view what = "waveform") const;
};

// Equal-length channels sharing one sample rate.
struct MultiChannelWaveform {
  std::vector<std::vector<double>> channels;
  int sample_rate_hz = kDefaultSampleRate;

  MultiChannelWaveform() = default;
  MultiChannelWaveform(std::size_t num_channels, std::size_t num_samples, int fs)
      : channels(num_channels, std::vector<double>(num_samples, 0.0)), sample_rate_hz(fs) {}

  std::size_t num_channels() const { return channels.size(); }
  std::size_t num_samples() const { return channels.empty() ? 0 : channels.front().size(); }
  Waveform channel(std::size_t c) const { return {channels.at(c), sample_rate_hz}; }

  void validate(std::string_view what = "multichannel waveform") const;
};

struct FirFilter {
  std::vector<double> taps;
  int sample_rate_hz = kDefaultSampleRate;

  FirFilter() = default;
  FirFilter(std::vector<double> t, int fs) : taps(std::move(t)), sample_rate_hz(fs) {}

  std::size_t size() const { return taps.size(); }
  std::span<const double> view() const { return taps; }

  void validate(std::string_view what = "FIR filter") const;
};

using FirFilterBank = std::vector<FirFilter>;

// Unit impulse delayed by `delay` samples within `length` taps.
FirFilter unit_impulse(std::size_t length, std::size_t delay = 0, int fs = kDefaultSampleRate);

// Prepends `delay` zero taps.
FirFilter delayed(const FirFilter& h, std::size_t delay);

// Resizes to exactly `length` taps, truncating or zero-padding at the end.
FirFilter resized(const FirFilter& h, std::size_t length);

double energy(std::span<const double> x);
double mean_square(std::span<const double> x);

// Normalized mean-square error 10*log10(|estimate - reference|^2 / |reference|^2);
// the shorter sequence is zero-extended.
double nmse_db(std::span<const double> estimate, std::span<const double> reference);

}  // namespace ancsim
