#pragma once

#include <cstddef>

#include "ancsim/signal.hpp"

namespace ancsim::sysid {

struct EssSignal {
  Waveform sweep;
  // Time-reversed sweep with +6 dB/octave amplitude compensation, scaled so
  // that sweep * inverse peaks at 1.
  Waveform inverse;
  double f1_hz = 0.0;
  double f2_hz = 0.0;
};

// Exponential sine sweep rising from f1 to f2 over duration_s.
EssSignal generate_ess(double f1_hz, double f2_hz, double duration_s, int fs);

enum class IrAlignment {
  // Tap `guard` holds the zero-lag reference of the deconvolution.
  kReference,
  // Tap `guard` holds the largest-magnitude sample of the response.
  kPeak,
};

struct DeconvolveOptions {
  // Divide out the residual sweep*inverse spectrum so the result is flat
  // down to DC instead of band-limited to [f1, f2].
  bool equalize = true;
  // Bins with |C|^2 below regularization * max|C|^2 are attenuated.
  double regularization = 1e-10;
  IrAlignment alignment = IrAlignment::kReference;
  std::size_t guard = 16;
  double min_peak_to_median_db = 20.0;
};

// Recovers out_taps samples of the impulse response from a recording of
// ess.sweep. Throws MeasurementError when the response peak does not rise
// min_peak_to_median_db above the median magnitude.
FirFilter deconvolve_ir(const Waveform& recorded, const EssSignal& ess, std::size_t out_taps,
                        const DeconvolveOptions& options = {});

// Ratio in dB between the peak of |x| and the largest |x| more than
// `exclusion` samples away from it.
double peak_to_sidelobe_db(std::span<const double> x, std::size_t exclusion);

}  // namespace ancsim::sysid
