#pragma once

#include <span>

#include "ancsim/signal.hpp"

namespace ancsim::dsp {

inline constexpr double kDefaultSincHalfWidth = 16.0;

// Hann-windowed sinc delaying by `delay_samples` (0 <= delay <= num_taps-1).
// The window half-width shrinks near either end of the filter so the kernel
// stays symmetric about the delay; integer delays give an exact unit impulse.
FirFilter fractional_delay_fir(double delay_samples, int num_taps, int fs = kDefaultSampleRate,
                               double max_half_width = kDefaultSincHalfWidth);

// Accumulates gain * windowed-sinc(n - delay) into `taps` over the taps with
// |n - delay| < half_width. The kernel is normalized to unit DC gain before
// scaling. Taps outside the buffer are dropped.
void add_windowed_sinc(std::span<double> taps, double delay, double gain, double half_width);

}  // namespace ancsim::dsp
