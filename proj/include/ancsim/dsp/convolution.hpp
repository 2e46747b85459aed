#pragma once

#include <span>
#include <vector>

#include "ancsim/signal.hpp"

namespace ancsim::dsp {

// Causal convolution y[n] = sum_k h[k] x[n-k] with zero initial state,
// truncated to the input length. Rates must match.
Waveform fir_convolve(const Waveform& x, const FirFilter& h);

// Same as fir_convolve on raw sample spans. Long filters go through an
// FFT overlap-add path; the result agrees with the direct sum to rounding.
std::vector<double> convolve_same(std::span<const double> x, std::span<const double> h);

// Full linear convolution, length x.size() + h.size() - 1.
std::vector<double> convolve_full(std::span<const double> x, std::span<const double> h);

// Direct O(N*L) evaluation; reference path for tests and short filters.
std::vector<double> convolve_direct(std::span<const double> x, std::span<const double> h,
                                    std::size_t out_len);

// out[k] = sum_n a[n] b[n+k] for k in [0, max_lag], i.e. the cross-correlation
// of b against a at non-negative lags.
std::vector<double> cross_correlate(std::span<const double> a, std::span<const double> b,
                                    std::size_t max_lag);

}  // namespace ancsim::dsp
