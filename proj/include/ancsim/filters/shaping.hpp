#pragma once

#include <cstddef>
#include <vector>

#include "ancsim/dsp/fft.hpp"
#include "ancsim/filters/filter_set.hpp"

namespace ancsim::filters {

// One-sided spectra (n_fft/2 + 1 bins) indexed [frame][channel][bin],
// sampled at fs_low.
struct FrequencyFilters {
  int fs_low = 0;
  std::size_t n_fft = 0;
  std::vector<std::vector<std::vector<dsp::Complex>>> frames;

  std::size_t num_frames() const { return frames.size(); }
  std::size_t num_channels() const { return frames.empty() ? 0 : frames.front().size(); }
  void validate() const;
};

struct ShapingOptions {
  double taper_fraction = 0.125;
  double fade_fraction = 0.1;
  bool fade = true;
};

// Half-cosine from 1 at 87.5% of Nyquist down to 0 at Nyquist, in place.
void apply_half_cosine_taper(std::vector<dsp::Complex>& spectrum, double taper_fraction = 0.125);

// Raised-cosine fade over the last round(fraction * L) taps; the final tap
// becomes exactly zero.
void apply_fade(std::vector<double>& taps, double fade_fraction = 0.1);

AncFilterSet shape_filters(const FrequencyFilters& in, int target_fs, std::size_t filter_length,
                           const ShapingOptions& options = {});

}  // namespace ancsim::filters
