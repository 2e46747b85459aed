#include "ancsim/filters/shaping.hpp"

#include <cmath>
#include <numbers>

#include "ancsim/error.hpp"

namespace ancsim::filters {

void FrequencyFilters::validate() const {
  if (fs_low <= 0) throw InvalidArgument("shaping: fs_low must be positive");
  if (n_fft < 2 || !dsp::is_power_of_two(n_fft)) throw InvalidArgument("shaping: N_fft must be a power of two >= 2");
  if (frames.empty()) throw InvalidArgument("shaping: no spectral frames");
  const std::size_t bins = n_fft / 2 + 1;
  for (const auto& frame : frames) {
    if (frame.empty() || frame.size() != frames.front().size()) {
      throw InvalidArgument("shaping: frames disagree on channel count");
    }
    for (const auto& ch : frame) {
      if (ch.size() != bins) {
        throw InvalidArgument("shaping: spectrum has " + std::to_string(ch.size()) + " bins, expected " +
                              std::to_string(bins));
      }
    }
  }
}

void apply_half_cosine_taper(std::vector<dsp::Complex>& spectrum, double taper_fraction) {
  if (spectrum.size() < 2) return;
  if (!(taper_fraction > 0.0 && taper_fraction <= 1.0)) throw InvalidArgument("taper fraction must be in (0, 1]");
  // Bin k sits at k / (bins - 1) of Nyquist.
  const double nyq = static_cast<double>(spectrum.size() - 1);
  const double f0 = (1.0 - taper_fraction) * nyq;
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    const double f = static_cast<double>(k);
    if (f <= f0) continue;
    spectrum[k] *= 0.5 * (1.0 + std::cos(std::numbers::pi * (f - f0) / (nyq - f0)));
  }
}

void apply_fade(std::vector<double>& taps, double fade_fraction) {
  if (!(fade_fraction >= 0.0 && fade_fraction <= 1.0)) throw InvalidArgument("fade fraction must be in [0, 1]");
  const auto len = taps.size();
  const auto span = static_cast<std::size_t>(std::lround(fade_fraction * static_cast<double>(len)));
  if (span == 0) return;
  for (std::size_t i = 0; i < span; ++i) {
    taps[len - span + i] *= 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(i + 1) / static_cast<double>(span)));
  }
}

AncFilterSet shape_filters(const FrequencyFilters& in, int target_fs, std::size_t filter_length,
                           const ShapingOptions& options) {
  in.validate();
  if (target_fs <= 0 || target_fs % in.fs_low != 0) {
    throw InvalidArgument("shaping: fs_low " + std::to_string(in.fs_low) + " does not divide target rate " +
                          std::to_string(target_fs));
  }
  const auto ratio = static_cast<std::size_t>(target_fs / in.fs_low);
  if (in.n_fft * ratio != filter_length) {
    throw InvalidArgument("shaping: N_fft * (target_fs / fs_low) = " + std::to_string(in.n_fft * ratio) +
                          " does not match L_C = " + std::to_string(filter_length));
  }

  const std::size_t bins_low = in.n_fft / 2 + 1, bins_high = filter_length / 2 + 1;
  const std::size_t channels = in.num_channels();
  const double inv_frames = 1.0 / static_cast<double>(in.num_frames());
  dsp::RealFft fft(filter_length);

  AncFilterSet out;
  out.sample_rate_hz = target_fs;
  for (std::size_t c = 0; c < channels; ++c) {
    std::vector<dsp::Complex> mean(bins_low);
    for (const auto& frame : in.frames) {
      for (std::size_t k = 0; k < bins_low; ++k) mean[k] += frame[c][k];
    }
    for (auto& v : mean) v *= inv_frames;
    apply_half_cosine_taper(mean, options.taper_fraction);
    std::vector<dsp::Complex> full(bins_high);
    std::copy(mean.begin(), mean.end(), full.begin());
    std::vector<double> taps(filter_length);
    fft.inverse(full, taps);
    if (options.fade) apply_fade(taps, options.fade_fraction);
    out.filters.emplace_back(std::move(taps), target_fs);
  }
  return out;
}

}  // namespace ancsim::filters
