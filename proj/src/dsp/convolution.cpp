#include "ancsim/dsp/convolution.hpp"

#include <algorithm>

#include "ancsim/dsp/fft.hpp"
#include "ancsim/error.hpp"

namespace ancsim::dsp {
namespace {

constexpr std::size_t kDirectTapLimit = 48;

// Overlap-add convolution producing the first out_len output samples.
std::vector<double> convolve_fft(std::span<const double> x, std::span<const double> h,
                                 std::size_t out_len) {
  const std::size_t nfft = std::max<std::size_t>(1024, next_power_of_two(2 * h.size()));
  const std::size_t step = nfft - h.size() + 1;
  RealFft fft(nfft);
  std::vector<Complex> hspec(fft.bins());
  fft.forward(h, hspec);

  std::vector<double> out(out_len, 0.0);
  std::vector<Complex> spec(fft.bins());
  std::vector<double> block(nfft);
  for (std::size_t start = 0; start < x.size() && start < out_len; start += step) {
    const std::size_t len = std::min(step, x.size() - start);
    fft.forward(x.subspan(start, len), spec);
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= hspec[k];
    fft.inverse(spec, block);
    const std::size_t valid = std::min(nfft, out_len - start);
    for (std::size_t i = 0; i < valid; ++i) out[start + i] += block[i];
  }
  return out;
}

std::vector<double> convolve_auto(std::span<const double> x, std::span<const double> h,
                                  std::size_t out_len) {
  if (x.empty() || h.empty()) return std::vector<double>(out_len, 0.0);
  if (h.size() <= kDirectTapLimit || x.size() <= kDirectTapLimit) {
    return convolve_direct(x, h, out_len);
  }
  return convolve_fft(x, h, out_len);
}

}  // namespace

std::vector<double> convolve_direct(std::span<const double> x, std::span<const double> h,
                                    std::size_t out_len) {
  std::vector<double> y(out_len, 0.0);
  for (std::size_t n = 0; n < out_len; ++n) {
    const std::size_t kmax = std::min(h.size() - 1, n);
    double acc = 0.0;
    for (std::size_t k = (n >= x.size() ? n - x.size() + 1 : 0); k <= kmax; ++k) {
      acc += h[k] * x[n - k];
    }
    y[n] = acc;
  }
  return y;
}

std::vector<double> convolve_same(std::span<const double> x, std::span<const double> h) {
  return convolve_auto(x, h, x.size());
}

std::vector<double> convolve_full(std::span<const double> x, std::span<const double> h) {
  if (x.empty() || h.empty()) return {};
  return convolve_auto(x, h, x.size() + h.size() - 1);
}

Waveform fir_convolve(const Waveform& x, const FirFilter& h) {
  if (x.sample_rate_hz != h.sample_rate_hz) {
    throw InvalidArgument("fir_convolve: sample-rate mismatch (signal " +
                          std::to_string(x.sample_rate_hz) + " Hz, filter " +
                          std::to_string(h.sample_rate_hz) + " Hz)");
  }
  h.validate("fir_convolve filter");
  return {convolve_same(x.samples, h.taps), x.sample_rate_hz};
}

std::vector<double> cross_correlate(std::span<const double> a, std::span<const double> b,
                                    std::size_t max_lag) {
  std::vector<double> out(max_lag + 1, 0.0);
  if (a.empty() || b.empty()) return out;
  const std::size_t nfft = next_power_of_two(a.size() + b.size() + max_lag);
  RealFft fft(nfft);
  std::vector<Complex> sa(fft.bins()), sb(fft.bins());
  fft.forward(a, sa);
  fft.forward(b, sb);
  for (std::size_t k = 0; k < sa.size(); ++k) sa[k] = std::conj(sa[k]) * sb[k];
  std::vector<double> full(nfft);
  fft.inverse(sa, full);
  std::copy_n(full.begin(), max_lag + 1, out.begin());
  return out;
}

}  // namespace ancsim::dsp
