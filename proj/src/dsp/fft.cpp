#include "ancsim/dsp/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <string>

#include "ancsim/error.hpp"

namespace ancsim::dsp {
namespace {

// FFTW's planner is not reentrant; plan creation and destruction serialize here.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n == 0) throw InvalidArgument("RealFft: length must be positive");
  real_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
  spec_ = static_cast<Complex*>(fftw_malloc(sizeof(Complex) * bins()));
  if (real_ == nullptr || spec_ == nullptr) {
    release();
    throw std::bad_alloc();
  }
  std::lock_guard lock(planner_mutex());
  auto* spec = reinterpret_cast<fftw_complex*>(spec_);
  forward_plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_, spec, FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() { release(); }

RealFft::RealFft(RealFft&& other) noexcept
    : n_(other.n_),
      real_(other.real_),
      spec_(other.spec_),
      forward_plan_(other.forward_plan_),
      inverse_plan_(other.inverse_plan_) {
  other.n_ = 0;
  other.real_ = nullptr;
  other.spec_ = nullptr;
  other.forward_plan_ = nullptr;
  other.inverse_plan_ = nullptr;
}

RealFft& RealFft::operator=(RealFft&& other) noexcept {
  if (this != &other) {
    release();
    std::swap(n_, other.n_);
    std::swap(real_, other.real_);
    std::swap(spec_, other.spec_);
    std::swap(forward_plan_, other.forward_plan_);
    std::swap(inverse_plan_, other.inverse_plan_);
  }
  return *this;
}

void RealFft::release() noexcept {
  if (forward_plan_ != nullptr || inverse_plan_ != nullptr) {
    std::lock_guard lock(planner_mutex());
    if (forward_plan_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
    if (inverse_plan_ != nullptr) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  }
  forward_plan_ = nullptr;
  inverse_plan_ = nullptr;
  if (real_ != nullptr) fftw_free(real_);
  if (spec_ != nullptr) fftw_free(spec_);
  real_ = nullptr;
  spec_ = nullptr;
}

void RealFft::forward(std::span<const double> in, std::span<Complex> out) {
  if (in.size() > n_) throw InvalidArgument("RealFft::forward: input longer than transform");
  if (out.size() < bins()) throw InvalidArgument("RealFft::forward: output span too small");
  std::copy(in.begin(), in.end(), real_);
  std::fill(real_ + in.size(), real_ + n_, 0.0);
  fftw_execute(static_cast<fftw_plan>(forward_plan_));
  std::copy(spec_, spec_ + bins(), out.begin());
}

void RealFft::inverse(std::span<const Complex> in, std::span<double> out) {
  if (in.size() < bins()) throw InvalidArgument("RealFft::inverse: spectrum too short");
  std::copy(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(bins()), spec_);
  // c2r requires purely real DC and Nyquist bins.
  spec_[0] = Complex(spec_[0].real(), 0.0);
  if (n_ % 2 == 0) spec_[n_ / 2] = Complex(spec_[n_ / 2].real(), 0.0);
  fftw_execute(static_cast<fftw_plan>(inverse_plan_));
  const double scale = 1.0 / static_cast<double>(n_);
  const std::size_t count = std::min(out.size(), n_);
  for (std::size_t i = 0; i < count; ++i) out[i] = real_[i] * scale;
}

std::vector<Complex> rfft(std::span<const double> block, std::size_t n) {
  if (!is_power_of_two(n)) {
    throw InvalidArgument("rfft: transform length " + std::to_string(n) + " is not a power of two");
  }
  if (block.size() > n) throw InvalidArgument("rfft: block longer than transform length");
  RealFft fft(n);
  std::vector<Complex> out(fft.bins());
  fft.forward(block, out);
  return out;
}

std::vector<double> irfft(std::span<const Complex> spectrum, std::size_t n) {
  if (!is_power_of_two(n)) {
    throw InvalidArgument("irfft: transform length " + std::to_string(n) + " is not a power of two");
  }
  if (spectrum.size() != n / 2 + 1) throw InvalidArgument("irfft: spectrum must have n/2+1 bins");
  RealFft fft(n);
  std::vector<double> out(n);
  fft.inverse(spectrum, out);
  return out;
}

}  // namespace ancsim::dsp
