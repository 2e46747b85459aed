#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ancsim/dsp/fft.hpp"
#include "ancsim/filters/filter_set.hpp"
#include "ancsim/signal.hpp"

namespace ancsim::filters {

struct WienerProblem {
  MultiChannelWaveform filtered_refs;  // r_m[n]
  Waveform target;                     // d[n]
  std::size_t filter_length = 0;       // L_C
  // nullopt selects 1e-4 * trace(Phi) / (M * L_C).
  std::optional<double> beta;

  void validate() const;
};

enum class WienerSolver { kConjugateGradient, kDense };

struct WienerOptions {
  WienerSolver solver = WienerSolver::kConjugateGradient;
  double tolerance = 1e-8;  // relative residual |r| / |phi|
  std::size_t max_iterations = 0;  // 0 selects M * L_C
  bool precondition = true;
  // Starting point for CG, stacked channel-major; empty starts from zero.
  std::vector<double> initial_guess;
};

struct WienerDiagnostics {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  double beta = 0.0;
};

// Biased correlation statistics over the window. With R_ab[k] =
// (1/N) sum_n r_a[n] r_b[n+k] and phi_a[i] = (1/N) sum_n r_a[n] d[n+i],
// Phi is block Toeplitz with blocks Phi_ab[i][j] = R_ab[i-j] (negative lags
// via R_ba), which equals the mean outer product of the stacked regressors
// when the data are taken as zero outside the window.
class WienerSystem {
 public:
  explicit WienerSystem(const WienerProblem& problem);

  std::size_t channels() const { return m_; }
  std::size_t length() const { return l_; }
  double trace() const;
  double default_beta() const { return 1e-4 * trace() / static_cast<double>(m_ * l_); }
  double target_power() const { return d_power_; }

  // R_ab[k] for k in (-L, L).
  double correlation(std::size_t a, std::size_t b, long lag) const;
  const std::vector<double>& cross(std::size_t a) const { return phi_[a]; }
  std::vector<double> stacked_cross() const;

  // y = (Phi + beta I) w, w stacked channel-major.
  void multiply(std::span<const double> w, double beta, std::span<double> y) const;

  // Dense (M L)^2 matrix; intended for small verification problems.
  std::vector<double> dense(double beta) const;

 private:
  friend class CirculantPreconditioner;
  std::size_t m_ = 0, l_ = 0;
  // auto_[a][b][k] = R_ab[k], k in [0, L).
  std::vector<std::vector<std::vector<double>>> auto_;
  std::vector<std::vector<double>> phi_;
  double d_power_ = 0.0;
  // Circulant embedding of size 2L for the fast product.
  std::size_t nfft_ = 0;
  std::vector<std::vector<std::vector<dsp::Complex>>> embed_;
  mutable dsp::RealFft fft_{2};
};

// w = -(Phi + beta I)^{-1} phi. Throws NumericalError when beta == 0 and
// Phi is numerically singular.
AncFilterSet wiener_solve(const WienerProblem& problem, const WienerOptions& options = {},
                          WienerDiagnostics* diagnostics = nullptr);

// J(w) = (1/N) sum_n e[n]^2 + beta |w|^2 with e = d + sum_m w_m * r_m
// evaluated over the full convolution support [0, N + L_C - 1).
double empirical_cost(const WienerProblem& problem, const AncFilterSet& w, double beta);

}  // namespace ancsim::filters
