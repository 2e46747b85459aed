#pragma once

#include <cstddef>
#include <span>

#include "ancsim/dsp/butterworth.hpp"
#include "ancsim/signal.hpp"

namespace ancsim::eval {

struct EvalProtocol {
  double band_low_hz = 100.0;
  double band_high_hz = 1000.0;
  int butterworth_order = 4;
  double chunk_s = 0.5;
  double context_s = 2.0;
  double application_delay_s = 0.2;

  void validate(int fs) const;
  dsp::SosChain bandpass(int fs) const;
};

// 10 log10(sum d~^2 / sum e~^2) with d~, e~ the causally bandpassed signals.
// Returns +inf when e~ carries no energy.
double noise_reduction_db(const Waveform& d, const Waveform& e, const EvalProtocol& protocol = {});

// Same ratio restricted to samples [begin, end) of already-filtered signals.
double band_ratio_db(std::span<const double> d_band, std::span<const double> e_band, std::size_t begin,
                     std::size_t end);

}  // namespace ancsim::eval
