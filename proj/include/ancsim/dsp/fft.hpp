#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace ancsim::dsp {

using Complex = std::complex<double>;

bool is_power_of_two(std::size_t n);
std::size_t next_power_of_two(std::size_t n);

// Real-to-complex transform of a fixed length backed by an FFTW plan. The
// object owns aligned scratch buffers, so one instance must not be used from
// two threads at once; distinct instances are independent.
//
// forward() produces n/2+1 bins of the unnormalized DFT. inverse() applies the
// 1/n normalization, so inverse(forward(x)) == x.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  RealFft(RealFft&& other) noexcept;
  RealFft& operator=(RealFft&& other) noexcept;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  // `in` may be shorter than size(); the remainder is zero-filled.
  void forward(std::span<const double> in, std::span<Complex> out);
  // Writes min(out.size(), size()) samples.
  void inverse(std::span<const Complex> in, std::span<double> out);

 private:
  void release() noexcept;

  std::size_t n_ = 0;
  double* real_ = nullptr;
  Complex* spec_ = nullptr;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

// Spectrum of `block` zero-padded to `n` points (n a power of two).
std::vector<Complex> rfft(std::span<const double> block, std::size_t n);
// Inverse of rfft for an n-point transform (n a power of two).
std::vector<double> irfft(std::span<const Complex> spectrum, std::size_t n);

}  // namespace ancsim::dsp
