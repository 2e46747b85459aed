#include "ancsim/signal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ancsim/error.hpp"

namespace ancsim {
namespace {

void check_finite(std::span<const double> x, std::string_view what) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      throw InvalidArgument(std::string(what) + ": non-finite sample at index " + std::to_string(i));
    }
  }
}

void check_rate(int fs, std::string_view what) {
  if (fs <= 0) throw InvalidArgument(std::string(what) + ": sample rate must be positive");
}

}  // namespace

void Waveform::validate(std::string_view what) const {
  check_rate(sample_rate_hz, what);
  check_finite(samples, what);
}

void MultiChannelWaveform::validate(std::string_view what) const {
  check_rate(sample_rate_hz, what);
  for (const auto& ch : channels) {
    if (ch.size() != num_samples()) {
      throw InvalidArgument(std::string(what) + ": channels have unequal lengths");
    }
    check_finite(ch, what);
  }
}

void FirFilter::validate(std::string_view what) const {
  check_rate(sample_rate_hz, what);
  if (taps.empty()) throw InvalidArgument(std::string(what) + ": filter must have at least one tap");
  check_finite(taps, what);
}

FirFilter unit_impulse(std::size_t length, std::size_t delay, int fs) {
  if (delay >= length) throw InvalidArgument("unit_impulse: delay must be smaller than length");
  std::vector<double> taps(length, 0.0);
  taps[delay] = 1.0;
  return {std::move(taps), fs};
}

FirFilter delayed(const FirFilter& h, std::size_t delay) {
  std::vector<double> taps(delay, 0.0);
  taps.insert(taps.end(), h.taps.begin(), h.taps.end());
  return {std::move(taps), h.sample_rate_hz};
}

FirFilter resized(const FirFilter& h, std::size_t length) {
  FirFilter out = h;
  out.taps.resize(length, 0.0);
  return out;
}

double energy(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc;
}

double mean_square(std::span<const double> x) {
  return x.empty() ? 0.0 : energy(x) / static_cast<double>(x.size());
}

double nmse_db(std::span<const double> estimate, std::span<const double> reference) {
  const std::size_t n = std::max(estimate.size(), reference.size());
  double err = 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = i < estimate.size() ? estimate[i] : 0.0;
    const double r = i < reference.size() ? reference[i] : 0.0;
    err += (e - r) * (e - r);
    ref += r * r;
  }
  if (ref == 0.0) return err == 0.0 ? -std::numeric_limits<double>::infinity()
                                    : std::numeric_limits<double>::infinity();
  if (err == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(err / ref);
}

}  // namespace ancsim
