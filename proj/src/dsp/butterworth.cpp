#include "ancsim/dsp/butterworth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ancsim/error.hpp"

namespace ancsim::dsp {
namespace {

using cd = std::complex<double>;

double biquad_pole_radius(const Biquad& s) {
  // Roots of z^2 + a1 z + a2.
  const cd disc = std::sqrt(cd(s.a1 * s.a1 - 4.0 * s.a2, 0.0));
  const cd r1 = (-s.a1 + disc) / 2.0;
  const cd r2 = (-s.a1 - disc) / 2.0;
  return std::max(std::abs(r1), std::abs(r2));
}

cd biquad_response(const Biquad& s, cd z) {
  const cd zi = 1.0 / z;
  return (s.b0 + s.b1 * zi + s.b2 * zi * zi) / (1.0 + s.a1 * zi + s.a2 * zi * zi);
}

}  // namespace

double SosChain::max_pole_radius() const {
  double r = 0.0;
  for (const auto& s : sections) r = std::max(r, biquad_pole_radius(s));
  return r;
}

SosChain design_butterworth_bandpass(int order, double low_hz, double high_hz, int fs) {
  if (order < 2 || order % 2 != 0) {
    throw InvalidArgument("design_butterworth_bandpass: order must be a positive even integer");
  }
  if (fs <= 0 || !(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < fs / 2.0)) {
    throw InvalidArgument("design_butterworth_bandpass: band edges must satisfy 0 < low < high < fs/2");
  }
  const double pi = std::numbers::pi;
  const double two_fs = 2.0 * fs;
  // Pre-warped analog edges.
  const double wl = two_fs * std::tan(pi * low_hz / fs);
  const double wh = two_fs * std::tan(pi * high_hz / fs);
  const double bw = wh - wl;
  const double w0sq = wl * wh;

  SosChain chain;
  // Upper-half-plane prototype poles; each maps to two bandpass poles whose
  // conjugates come from the mirrored prototype pole.
  for (int k = 0; k < order / 2; ++k) {
    const double theta = pi * (2.0 * k + 1.0 + order) / (2.0 * order);
    const cd p = std::polar(1.0, theta);
    const cd pb = p * bw / 2.0;
    const cd root = std::sqrt(pb * pb - w0sq);
    for (const cd s : {pb + root, pb - root}) {
      const cd z = (1.0 + s / two_fs) / (1.0 - s / two_fs);
      Biquad q;
      // Zeros at z = 1 and z = -1 (analog zeros at DC and infinity).
      q.b0 = 1.0;
      q.b1 = 0.0;
      q.b2 = -1.0;
      q.a1 = -2.0 * z.real();
      q.a2 = std::norm(z);
      chain.sections.push_back(q);
    }
  }
  // Unit gain at the digital image of the analog center frequency.
  const double f0 = fs / pi * std::atan(std::sqrt(w0sq) / two_fs);
  const double g = std::abs(frequency_response(chain, f0, fs));
  const double per_section = std::pow(g, -1.0 / static_cast<double>(chain.sections.size()));
  for (auto& s : chain.sections) {
    s.b0 *= per_section;
    s.b1 *= per_section;
    s.b2 *= per_section;
  }
  return chain;
}

std::vector<double> sos_filter(std::span<const double> x, const SosChain& chain) {
  std::vector<double> y(x.begin(), x.end());
  for (const auto& s : chain.sections) {
    double z1 = 0.0;
    double z2 = 0.0;
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

Waveform sos_filter(const Waveform& x, const SosChain& chain) {
  return {sos_filter(x.samples, chain), x.sample_rate_hz};
}

std::complex<double> frequency_response(const SosChain& chain, double freq_hz, int fs) {
  const cd z = std::polar(1.0, 2.0 * std::numbers::pi * freq_hz / fs);
  cd h(1.0, 0.0);
  for (const auto& s : chain.sections) h *= biquad_response(s, z);
  return h;
}

}  // namespace ancsim::dsp
