#include "ancsim/sysid/ess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ancsim/dsp/convolution.hpp"
#include "ancsim/dsp/fft.hpp"
#include "ancsim/error.hpp"

namespace ancsim::sysid {

EssSignal generate_ess(double f1_hz, double f2_hz, double duration_s, int fs) {
  if (fs <= 0) throw InvalidArgument("generate_ess: sample rate must be positive");
  if (!(f1_hz > 0.0 && f1_hz < f2_hz && f2_hz <= fs / 2.0)) {
    throw InvalidArgument("generate_ess: need 0 < f1 < f2 <= fs/2");
  }
  if (!(duration_s > 0.0)) throw InvalidArgument("generate_ess: duration must be positive");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs));
  const double rate = std::log(f2_hz / f1_hz);
  const double k = 2.0 * std::numbers::pi * f1_hz * duration_s / rate;

  EssSignal ess;
  ess.f1_hz = f1_hz;
  ess.f2_hz = f2_hz;
  ess.sweep = Waveform(std::vector<double>(n), fs);
  ess.inverse = Waveform(std::vector<double>(n), fs);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    ess.sweep.samples[i] = std::sin(k * (std::exp(t * rate / duration_s) - 1.0));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    ess.inverse.samples[i] = ess.sweep.samples[n - 1 - i] * std::exp(-t * rate / duration_s);
  }
  const auto response = dsp::convolve_full(ess.sweep.samples, ess.inverse.samples);
  double peak = 0.0;
  for (double v : response) peak = std::max(peak, std::abs(v));
  for (double& v : ess.inverse.samples) v /= peak;
  return ess;
}

FirFilter deconvolve_ir(const Waveform& recorded, const EssSignal& ess, std::size_t out_taps,
                        const DeconvolveOptions& options) {
  const auto& sweep = ess.sweep.samples;
  const auto& inverse = ess.inverse.samples;
  if (out_taps == 0) throw InvalidArgument("deconvolve_ir: out_taps must be positive");
  if (recorded.sample_rate_hz != ess.sweep.sample_rate_hz) {
    throw InvalidArgument("deconvolve_ir: recording rate differs from the sweep rate");
  }
  if (recorded.size() < sweep.size()) throw InvalidArgument("deconvolve_ir: recording shorter than the sweep");

  const std::size_t nfft = dsp::next_power_of_two(recorded.size() + inverse.size());
  dsp::RealFft fft(nfft);
  std::vector<dsp::Complex> y(fft.bins()), inv(fft.bins()), x(fft.bins());
  fft.forward(recorded.samples, y);
  fft.forward(inverse, inv);
  for (std::size_t k = 0; k < y.size(); ++k) y[k] *= inv[k];

  // Zero lag sits at index sweep.size()-1 of the plain deconvolution and at
  // index 0 once the sweep*inverse spectrum is divided out.
  std::size_t reference = sweep.size() - 1;
  if (options.equalize) {
    fft.forward(sweep, x);
    double cmax = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] *= inv[k];
      cmax = std::max(cmax, std::norm(x[k]));
    }
    const double floor = options.regularization * cmax;
    for (std::size_t k = 0; k < y.size(); ++k) y[k] *= std::conj(x[k]) / (std::norm(x[k]) + floor);
    reference = 0;
  }
  std::vector<double> ir(nfft);
  fft.inverse(y, ir);

  std::size_t peak = 0;
  for (std::size_t i = 0; i < nfft; ++i) {
    if (std::abs(ir[i]) > std::abs(ir[peak])) peak = i;
  }
  std::vector<double> mags(nfft);
  for (std::size_t i = 0; i < nfft; ++i) mags[i] = std::abs(ir[i]);
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(nfft / 2), mags.end());
  const double median = mags[nfft / 2];
  const double peak_mag = std::abs(ir[peak]);
  if (!(peak_mag > 0.0) || !std::isfinite(peak_mag) ||
      20.0 * std::log10(peak_mag / std::max(median, 1e-300)) < options.min_peak_to_median_db) {
    throw MeasurementError("deconvolution found no response above the noise floor (peak/median below " +
                           std::to_string(options.min_peak_to_median_db) + " dB)");
  }

  const std::size_t anchor = options.alignment == IrAlignment::kReference ? reference : peak;
  std::vector<double> taps(out_taps);
  for (std::size_t i = 0; i < out_taps; ++i) {
    // Circular indexing: negative lags of the equalized response wrap around.
    const std::size_t idx = (anchor + nfft - options.guard + i) % nfft;
    taps[i] = ir[idx];
  }
  return {std::move(taps), recorded.sample_rate_hz};
}

double peak_to_sidelobe_db(std::span<const double> x, std::size_t exclusion) {
  if (x.empty()) throw InvalidArgument("peak_to_sidelobe_db: empty input");
  std::size_t peak = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(x[i]) > std::abs(x[peak])) peak = i;
  }
  double side = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t dist = i > peak ? i - peak : peak - i;
    if (dist > exclusion) side = std::max(side, std::abs(x[i]));
  }
  return 20.0 * std::log10(std::abs(x[peak]) / side);
}

}  // namespace ancsim::sysid
