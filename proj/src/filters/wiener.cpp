#include "ancsim/filters/wiener.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ancsim/dsp/convolution.hpp"
#include "ancsim/error.hpp"

namespace ancsim::filters {

using dsp::Complex;

void WienerProblem::validate() const {
  const std::size_t m = filtered_refs.num_channels();
  if (m == 0) throw InvalidArgument("Wiener problem has no reference channels");
  if (filter_length == 0) throw InvalidArgument("Wiener filter length must be positive");
  for (const auto& ch : filtered_refs.channels) {
    if (ch.size() != target.size()) throw InvalidArgument("Wiener references and target differ in length");
  }
  if (filtered_refs.sample_rate_hz != target.sample_rate_hz) {
    throw InvalidArgument("Wiener references and target differ in sample rate");
  }
  if (target.size() < 2 * filter_length) {
    throw InvalidArgument("Wiener window of " + std::to_string(target.size()) + " samples is shorter than 2*L_C = " +
                          std::to_string(2 * filter_length));
  }
  if (beta && !(*beta >= 0.0)) throw InvalidArgument("Wiener regularization beta must be >= 0");
}

WienerSystem::WienerSystem(const WienerProblem& problem) {
  problem.validate();
  m_ = problem.filtered_refs.num_channels();
  l_ = problem.filter_length;
  const std::size_t n = problem.target.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  const std::size_t nfft = dsp::next_power_of_two(n + l_);
  dsp::RealFft big(nfft);
  std::vector<std::vector<Complex>> spec(m_, std::vector<Complex>(big.bins()));
  for (std::size_t a = 0; a < m_; ++a) big.forward(problem.filtered_refs.channels[a], spec[a]);
  std::vector<Complex> dspec(big.bins()), prod(big.bins());
  big.forward(problem.target.samples, dspec);
  std::vector<double> corr(nfft);

  auto_.assign(m_, std::vector<std::vector<double>>(m_, std::vector<double>(l_)));
  for (std::size_t a = 0; a < m_; ++a) {
    for (std::size_t b = a; b < m_; ++b) {
      for (std::size_t k = 0; k < prod.size(); ++k) prod[k] = std::conj(spec[a][k]) * spec[b][k];
      big.inverse(prod, corr);
      // corr[k] = sum_n r_a[n] r_b[n+k]; negative lags wrap to the end.
      for (std::size_t k = 0; k < l_; ++k) {
        auto_[a][b][k] = corr[k] * inv_n;
        auto_[b][a][k] = corr[(nfft - k) % nfft] * inv_n;
      }
    }
  }
  phi_.assign(m_, std::vector<double>(l_));
  for (std::size_t a = 0; a < m_; ++a) {
    for (std::size_t k = 0; k < prod.size(); ++k) prod[k] = std::conj(spec[a][k]) * dspec[k];
    big.inverse(prod, corr);
    for (std::size_t i = 0; i < l_; ++i) phi_[a][i] = corr[i] * inv_n;
  }
  d_power_ = energy(problem.target.view()) * inv_n;

  nfft_ = 2 * l_;
  fft_ = dsp::RealFft(nfft_);
  embed_.assign(m_, std::vector<std::vector<Complex>>(m_, std::vector<Complex>(fft_.bins())));
  std::vector<double> seq(nfft_);
  for (std::size_t a = 0; a < m_; ++a) {
    for (std::size_t b = 0; b < m_; ++b) {
      std::fill(seq.begin(), seq.end(), 0.0);
      for (std::size_t k = 0; k < l_; ++k) seq[k] = auto_[a][b][k];
      for (std::size_t k = 1; k < l_; ++k) seq[nfft_ - k] = auto_[b][a][k];
      fft_.forward(seq, embed_[a][b]);
    }
  }
}

double WienerSystem::trace() const {
  double t = 0.0;
  for (std::size_t a = 0; a < m_; ++a) t += auto_[a][a][0];
  return t * static_cast<double>(l_);
}

double WienerSystem::correlation(std::size_t a, std::size_t b, long lag) const {
  if (lag >= 0) return auto_[a][b][static_cast<std::size_t>(lag)];
  return auto_[b][a][static_cast<std::size_t>(-lag)];
}

std::vector<double> WienerSystem::stacked_cross() const {
  std::vector<double> out;
  out.reserve(m_ * l_);
  for (const auto& p : phi_) out.insert(out.end(), p.begin(), p.end());
  return out;
}

void WienerSystem::multiply(std::span<const double> w, double beta, std::span<double> y) const {
  const std::size_t bins = fft_.bins();
  std::vector<std::vector<Complex>> wspec(m_, std::vector<Complex>(bins));
  for (std::size_t b = 0; b < m_; ++b) fft_.forward(w.subspan(b * l_, l_), wspec[b]);
  std::vector<Complex> acc(bins);
  std::vector<double> out(nfft_);
  for (std::size_t a = 0; a < m_; ++a) {
    std::fill(acc.begin(), acc.end(), Complex{});
    for (std::size_t b = 0; b < m_; ++b) {
      const auto& e = embed_[a][b];
      for (std::size_t k = 0; k < bins; ++k) acc[k] += e[k] * wspec[b][k];
    }
    fft_.inverse(acc, out);
    for (std::size_t i = 0; i < l_; ++i) y[a * l_ + i] = out[i] + beta * w[a * l_ + i];
  }
}

std::vector<double> WienerSystem::dense(double beta) const {
  const std::size_t dim = m_ * l_;
  std::vector<double> mat(dim * dim);
  for (std::size_t a = 0; a < m_; ++a) {
    for (std::size_t i = 0; i < l_; ++i) {
      for (std::size_t b = 0; b < m_; ++b) {
        for (std::size_t j = 0; j < l_; ++j) {
          mat[(a * l_ + i) * dim + b * l_ + j] =
              correlation(a, b, static_cast<long>(i) - static_cast<long>(j)) + (a == b && i == j ? beta : 0.0);
        }
      }
    }
  }
  return mat;
}

// Block-circulant approximation of Phi + beta I (T. Chan's optimal circulant
// per block), inverted bin by bin.
class CirculantPreconditioner {
 public:
  CirculantPreconditioner(const WienerSystem& sys, double beta) : m_(sys.m_), l_(sys.l_), fft_(sys.l_) {
    const std::size_t bins = fft_.bins();
    std::vector<std::vector<std::vector<Complex>>> spec(m_, std::vector<std::vector<Complex>>(m_, std::vector<Complex>(bins)));
    std::vector<double> c(l_);
    const double inv_l = 1.0 / static_cast<double>(l_);
    for (std::size_t a = 0; a < m_; ++a) {
      for (std::size_t b = 0; b < m_; ++b) {
        for (std::size_t k = 0; k < l_; ++k) {
          const double wrap = k == 0 ? 0.0 : sys.correlation(a, b, static_cast<long>(k) - static_cast<long>(l_));
          c[k] = (static_cast<double>(l_ - k) * sys.correlation(a, b, static_cast<long>(k)) +
                  static_cast<double>(k) * wrap) * inv_l;
        }
        fft_.forward(c, spec[a][b]);
      }
    }
    inverse_.resize(bins);
    min_ratio_ = 1.0;
    double global_max = 0.0;
    std::vector<Eigen::VectorXd> eigvals(bins);
    std::vector<Eigen::MatrixXcd> eigvecs(bins);
    for (std::size_t k = 0; k < bins; ++k) {
      Eigen::MatrixXcd p(m_, m_);
      for (std::size_t a = 0; a < m_; ++a) {
        for (std::size_t b = 0; b < m_; ++b) p(a, b) = spec[a][b][k];
      }
      // Hermitian by construction up to rounding.
      p = 0.5 * (p + p.adjoint().eval());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(p);
      eigvals[k] = es.eigenvalues();
      eigvecs[k] = es.eigenvectors();
      global_max = std::max(global_max, eigvals[k].maxCoeff());
    }
    const double floor = std::max(global_max * 1e-12, std::numeric_limits<double>::min());
    for (std::size_t k = 0; k < bins; ++k) {
      Eigen::VectorXd lam = eigvals[k];
      if (global_max > 0.0) min_ratio_ = std::min(min_ratio_, lam.minCoeff() / global_max);
      for (Eigen::Index i = 0; i < lam.size(); ++i) lam[i] = 1.0 / std::max(lam[i] + beta, floor + beta);
      inverse_[k] = eigvecs[k] * lam.asDiagonal() * eigvecs[k].adjoint();
    }
  }

  // Smallest per-bin eigenvalue relative to the largest over all bins.
  double min_eigen_ratio() const { return min_ratio_; }

  void apply(std::span<const double> r, std::span<double> z) {
    const std::size_t bins = fft_.bins();
    std::vector<std::vector<Complex>> rs(m_, std::vector<Complex>(bins));
    for (std::size_t b = 0; b < m_; ++b) fft_.forward(r.subspan(b * l_, l_), rs[b]);
    std::vector<std::vector<Complex>> zs(m_, std::vector<Complex>(bins));
    for (std::size_t k = 0; k < bins; ++k) {
      for (std::size_t a = 0; a < m_; ++a) {
        Complex acc{};
        for (std::size_t b = 0; b < m_; ++b) acc += inverse_[k](a, b) * rs[b][k];
        zs[a][k] = acc;
      }
    }
    std::vector<double> out(l_);
    for (std::size_t a = 0; a < m_; ++a) {
      fft_.inverse(zs[a], out);
      std::copy(out.begin(), out.end(), z.begin() + static_cast<std::ptrdiff_t>(a * l_));
    }
  }

 private:
  std::size_t m_, l_;
  dsp::RealFft fft_;
  std::vector<Eigen::MatrixXcd> inverse_;
  double min_ratio_ = 1.0;
};

namespace {

constexpr double kSingularRatio = 1e-12;
constexpr std::size_t kDenseLimit = 256;

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

[[noreturn]] void throw_singular() {
  throw NumericalError("Wiener system is numerically singular with beta = 0; use a regularization beta > 0");
}

AncFilterSet to_filter_set(const std::vector<double>& w, std::size_t m, std::size_t l, int fs, double beta) {
  AncFilterSet set;
  set.sample_rate_hz = fs;
  set.beta_used = beta;
  for (std::size_t a = 0; a < m; ++a) {
    set.filters.emplace_back(std::vector<double>(w.begin() + static_cast<std::ptrdiff_t>(a * l),
                                                 w.begin() + static_cast<std::ptrdiff_t>((a + 1) * l)),
                             fs);
  }
  return set;
}

}  // namespace

AncFilterSet wiener_solve(const WienerProblem& problem, const WienerOptions& options, WienerDiagnostics* diagnostics) {
  const WienerSystem sys(problem);
  const std::size_t m = sys.channels(), l = sys.length(), dim = m * l;
  const double beta = problem.beta.value_or(sys.default_beta());
  const int fs = problem.target.sample_rate_hz;
  if (beta == 0.0 && !(sys.trace() > 0.0)) throw_singular();

  std::vector<double> rhs = sys.stacked_cross();
  for (auto& v : rhs) v = -v;
  const double rhs_norm = std::sqrt(dot(rhs, rhs));
  WienerDiagnostics diag;
  diag.beta = beta;

  std::vector<double> x(dim, 0.0);
  if (options.solver == WienerSolver::kDense) {
    if (l > kDenseLimit) throw InvalidArgument("dense Wiener solve is limited to L_C <= 256");
    const auto mat = sys.dense(beta);
    const Eigen::Map<const Eigen::MatrixXd> a(mat.data(), static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(dim));
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success || (beta == 0.0 && ldlt.rcond() < kSingularRatio)) throw_singular();
    Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(dim)) = ldlt.solve(b);
    std::vector<double> ax(dim);
    sys.multiply(x, beta, ax);
    double rr = 0.0;
    for (std::size_t i = 0; i < dim; ++i) rr += (rhs[i] - ax[i]) * (rhs[i] - ax[i]);
    diag.relative_residual = rhs_norm > 0.0 ? std::sqrt(rr) / rhs_norm : 0.0;
  } else if (rhs_norm > 0.0) {
    std::optional<CirculantPreconditioner> pre;
    if (options.precondition || beta == 0.0) {
      pre.emplace(sys, beta);
      if (beta == 0.0 && pre->min_eigen_ratio() <= kSingularRatio) throw_singular();
      if (!options.precondition) pre.reset();
    }
    const std::size_t max_iter = options.max_iterations ? options.max_iterations : dim;
    std::vector<double> r = rhs, z(dim), p(dim), q(dim);
    if (!options.initial_guess.empty()) {
      if (options.initial_guess.size() != dim) throw InvalidArgument("CG initial guess has the wrong size");
      x = options.initial_guess;
      sys.multiply(x, beta, q);
      for (std::size_t i = 0; i < dim; ++i) r[i] -= q[i];
    }
    auto precondition = [&](std::span<const double> in, std::span<double> out) {
      if (pre) pre->apply(in, out);
      else std::copy(in.begin(), in.end(), out.begin());
    };
    precondition(r, z);
    p = z;
    double rz = dot(r, z);
    double rel = std::sqrt(dot(r, r)) / rhs_norm;
    std::size_t it = 0;
    while (rel > options.tolerance && it < max_iter) {
      sys.multiply(p, beta, q);
      const double pq = dot(p, q);
      if (!(pq > 0.0)) {
        if (beta == 0.0) throw_singular();
        throw NumericalError("Wiener CG lost positive definiteness");
      }
      const double alpha = rz / pq;
      for (std::size_t i = 0; i < dim; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      ++it;
      rel = std::sqrt(dot(r, r)) / rhs_norm;
      if (rel <= options.tolerance) break;
      precondition(r, z);
      const double rz_next = dot(r, z);
      const double ratio = rz_next / rz;
      rz = rz_next;
      for (std::size_t i = 0; i < dim; ++i) p[i] = z[i] + ratio * p[i];
    }
    // Recompute the true residual; the recursive one drifts.
    sys.multiply(x, beta, q);
    double rr = 0.0;
    for (std::size_t i = 0; i < dim; ++i) rr += (rhs[i] - q[i]) * (rhs[i] - q[i]);
    diag.iterations = it;
    diag.relative_residual = std::sqrt(rr) / rhs_norm;
    if (!std::isfinite(diag.relative_residual) || (beta == 0.0 && diag.relative_residual > 1e-6)) throw_singular();
  }
  if (diagnostics) *diagnostics = diag;
  return to_filter_set(x, m, l, fs, beta);
}

double empirical_cost(const WienerProblem& problem, const AncFilterSet& w, double beta) {
  problem.validate();
  if (w.num_channels() != problem.filtered_refs.num_channels()) {
    throw InvalidArgument("empirical_cost: channel count mismatch");
  }
  const std::size_t n = problem.target.size();
  std::vector<double> e(n + w.length() - 1, 0.0);
  std::copy(problem.target.samples.begin(), problem.target.samples.end(), e.begin());
  double wnorm = 0.0;
  for (std::size_t a = 0; a < w.num_channels(); ++a) {
    const auto y = dsp::convolve_full(problem.filtered_refs.channels[a], w.filters[a].taps);
    for (std::size_t i = 0; i < y.size(); ++i) e[i] += y[i];
    wnorm += energy(w.filters[a].view());
  }
  return energy(e) / static_cast<double>(n) + beta * wnorm;
}

}  // namespace ancsim::filters
