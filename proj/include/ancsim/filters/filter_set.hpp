#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "ancsim/signal.hpp"

namespace ancsim::filters {

// Per-channel control filters w_m, all of one length and rate.
struct AncFilterSet {
  FirFilterBank filters;
  int sample_rate_hz = kDefaultSampleRate;
  double beta_used = 0.0;
  std::string side = "left";

  std::size_t num_channels() const { return filters.size(); }
  std::size_t length() const { return filters.empty() ? 0 : filters.front().size(); }

  void validate() const;
  static AncFilterSet zeros(std::size_t channels, std::size_t length, int fs = kDefaultSampleRate);
};

bool operator==(const AncFilterSet& a, const AncFilterSet& b);

// Binary layout (little-endian): char[4] "ANCW", u32 version, u32 fs, u32 M,
// u32 L_C, f64 beta, then M*L_C float64 taps channel by channel.
void write_filter_set(const std::filesystem::path& path, const AncFilterSet& set);
AncFilterSet read_filter_set(const std::filesystem::path& path);

// r_m = s_hat * x_m per channel, causal, input length.
MultiChannelWaveform filtered_reference(const MultiChannelWaveform& x, const FirFilter& s_hat);

}  // namespace ancsim::filters
