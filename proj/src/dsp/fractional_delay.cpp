#include "ancsim/dsp/fractional_delay.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "ancsim/error.hpp"

namespace ancsim::dsp {
namespace {

double sinc(double t) {
  if (t == 0.0) return 1.0;
  const double x = std::numbers::pi * t;
  return std::sin(x) / x;
}

}  // namespace

void add_windowed_sinc(std::span<double> taps, double delay, double gain, double half_width) {
  if (!(half_width > 0.0)) throw InvalidArgument("add_windowed_sinc: half width must be positive");
  const auto first = static_cast<long>(std::floor(delay - half_width)) + 1;
  const auto last = static_cast<long>(std::ceil(delay + half_width)) - 1;
  std::vector<std::pair<long, double>> kernel;
  double sum = 0.0;
  for (long n = first; n <= last; ++n) {
    const double t = static_cast<double>(n) - delay;
    if (std::abs(t) >= half_width) continue;
    const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * t / half_width));
    const double v = w * sinc(t);
    kernel.emplace_back(n, v);
    sum += v;
  }
  if (sum == 0.0) return;
  for (const auto& [n, v] : kernel) {
    if (n >= 0 && static_cast<std::size_t>(n) < taps.size()) taps[n] += gain * v / sum;
  }
}

FirFilter fractional_delay_fir(double delay_samples, int num_taps, int fs, double max_half_width) {
  if (num_taps < 1) throw InvalidArgument("fractional_delay_fir: num_taps must be >= 1");
  if (!(delay_samples >= 0.0) || delay_samples > num_taps - 1) {
    throw InvalidArgument("fractional_delay_fir: delay " + std::to_string(delay_samples) +
                          " outside representable range [0, " + std::to_string(num_taps - 1) + "]");
  }
  const double half_width =
      std::min({max_half_width, delay_samples + 1.0, static_cast<double>(num_taps) - delay_samples});
  std::vector<double> taps(static_cast<std::size_t>(num_taps), 0.0);
  add_windowed_sinc(taps, delay_samples, 1.0, half_width);
  return {std::move(taps), fs};
}

}  // namespace ancsim::dsp
