#pragma once

#include <complex>
#include <span>
#include <vector>

#include "ancsim/signal.hpp"

namespace ancsim::dsp {

// y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct SosChain {
  std::vector<Biquad> sections;

  // Largest pole radius over all sections (0 for an empty chain).
  double max_pole_radius() const;
  bool is_stable() const { return max_pole_radius() < 1.0; }
};

// Digital Butterworth bandpass from an analog prototype of `order` poles,
// band-transformed and mapped through the bilinear transform with pre-warped
// edges. The result has 2*order poles arranged as `order` sections and is
// normalized to unit gain at the geometric band center.
SosChain design_butterworth_bandpass(int order, double low_hz, double high_hz, int fs);

// Cascade in section order, zero initial state, transposed direct form II.
Waveform sos_filter(const Waveform& x, const SosChain& chain);
std::vector<double> sos_filter(std::span<const double> x, const SosChain& chain);

std::complex<double> frequency_response(const SosChain& chain, double freq_hz, int fs);

}  // namespace ancsim::dsp
