#include "ancsim/engine/engine.hpp"

#include <algorithm>
#include <numeric>

#include "ancsim/error.hpp"

namespace ancsim::engine {

void EngineConfig::validate() const {
  if (block_size == 0 || !dsp::is_power_of_two(block_size)) throw InvalidArgument("block size B must be a power of two");
  if (filter_length % block_size != 0) {
    throw InvalidArgument("filter length " + std::to_string(filter_length) + " is not divisible by B = " +
                          std::to_string(block_size));
  }
  if (filter_length < 2 * block_size) throw InvalidArgument("filter length must be at least 2B");
  if (sample_rate_hz <= 0) throw InvalidArgument("engine sample rate must be positive");
  if (injected_latency_samples < 1) throw InvalidArgument("injected latency must be at least one sample");
}

void UpdateSchedule::validate() const {
  if (!(context_s > 0.0 && update_period_s > 0.0 && application_delay_s > 0.0)) {
    throw InvalidArgument("update schedule durations must be positive");
  }
}

struct AncEngine::FilterState {
  std::vector<std::vector<double>> head_rev;  // [m][2B], reversed
  std::vector<std::vector<std::vector<dsp::Complex>>> spectra;  // [m][p][B+1]
  std::vector<double> tail[2];  // tail output for blocks of each parity
};

AncEngine::AncEngine(const filters::AncFilterSet& w, const FirFilterBank& g_hat, const EngineConfig& config,
                     TailMode mode)
    : config_(config), mode_(mode) {
  config_.validate();
  w.validate();
  m_ = w.num_channels();
  b_ = config_.block_size;
  parts_ = config_.tail_partitions();
  depth_ = parts_ + 1;
  fade_len_ = config_.crossfade();
  fft_ = dsp::RealFft(2 * b_);
  acc_.resize(b_ + 1);
  time_.resize(2 * b_);

  in_.assign(m_, std::vector<double>(4 * b_, 0.0));
  staged_.assign(m_, std::vector<double>(2 * b_, 0.0));
  fdl_.assign(m_, std::vector<std::vector<dsp::Complex>>(depth_, std::vector<dsp::Complex>(b_ + 1)));
  active_ = make_state(w);

  if (!g_hat.empty() && g_hat.size() != m_) {
    throw InvalidArgument("feedback estimate has " + std::to_string(g_hat.size()) + " channels, filters have " +
                          std::to_string(m_));
  }
  std::size_t g_len = 0;
  for (const auto& g : g_hat) {
    g.validate("feedback estimate");
    if (g.sample_rate_hz != config_.sample_rate_hz) throw InvalidArgument("feedback estimate rate differs from engine rate");
    g_len = std::max(g_len, g.size());
  }
  if (g_len > 0) {
    g_rev_.assign(m_, std::vector<double>(g_len, 0.0));
    for (std::size_t m = 0; m < m_; ++m) {
      const auto& taps = g_hat[m].taps;
      for (std::size_t k = 0; k < taps.size(); ++k) g_rev_[m][g_len - 1 - k] = taps[k];
    }
    drive_cap_ = g_len + config_.injected_latency_samples;
    drive_.assign(2 * drive_cap_, 0.0);
  }
  clean_.assign(m_, 0.0);

  if (mode_ == TailMode::kBackground) worker_ = std::thread([this] { worker_loop(); });
}

AncEngine::~AncEngine() {
  if (worker_.joinable()) {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    worker_.join();
  }
}

std::unique_ptr<AncEngine::FilterState> AncEngine::make_state(const filters::AncFilterSet& w) const {
  if (w.num_channels() != m_ && m_ != 0) {
    throw InvalidArgument("filter update has " + std::to_string(w.num_channels()) + " channels, engine has " +
                          std::to_string(m_));
  }
  if (w.length() != config_.filter_length) {
    throw InvalidArgument("filters have " + std::to_string(w.length()) + " taps, engine expects L_C = " +
                          std::to_string(config_.filter_length));
  }
  if (w.sample_rate_hz != config_.sample_rate_hz) throw InvalidArgument("filter rate differs from engine rate");

  auto s = std::make_unique<FilterState>();
  const std::size_t head = 2 * b_;
  s->head_rev.assign(w.num_channels(), std::vector<double>(head));
  s->spectra.assign(w.num_channels(), std::vector<std::vector<dsp::Complex>>(parts_, std::vector<dsp::Complex>(b_ + 1)));
  for (std::size_t m = 0; m < w.num_channels(); ++m) {
    const auto& taps = w.filters[m].taps;
    for (std::size_t i = 0; i < head; ++i) s->head_rev[m][i] = taps[head - 1 - i];
    for (std::size_t p = 0; p < parts_; ++p) {
      fft_.forward(std::span<const double>(taps).subspan(head + p * b_, b_), s->spectra[m][p]);
    }
  }
  s->tail[0].assign(b_, 0.0);
  s->tail[1].assign(b_, 0.0);
  return s;
}

// Overlap-save: the last B points of IFFT(X_j H_p) are the partition's
// output for block j + 2 + p.
void AncEngine::fill_tail(FilterState& s, long block) const {
  auto& out = s.tail[block & 1];
  if (parts_ == 0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  std::fill(acc_.begin(), acc_.end(), dsp::Complex{});
  for (std::size_t p = 0; p < parts_; ++p) {
    const long j = block - 2 - static_cast<long>(p);
    if (j < 0) break;
    const auto slot = static_cast<std::size_t>(j) % depth_;
    for (std::size_t m = 0; m < m_; ++m) {
      const auto& x = fdl_[m][slot];
      const auto& h = s.spectra[m][p];
      for (std::size_t k = 0; k <= b_; ++k) acc_[k] += x[k] * h[k];
    }
  }
  fft_.inverse(acc_, time_);
  std::copy(time_.begin() + static_cast<std::ptrdiff_t>(b_), time_.end(), out.begin());
}

void AncEngine::compute_boundary(long block) {
  const auto slot = static_cast<std::size_t>(block) % depth_;
  if (parts_ > 0) {
    for (std::size_t m = 0; m < m_; ++m) fft_.forward(staged_[m], fdl_[m][slot]);
  }
  fill_tail(*active_, block + 2);
  if (pending_) fill_tail(*pending_, block + 2);
}

void AncEngine::on_block_boundary() {
  const long block = static_cast<long>(n_ / b_) - 1;
  const std::size_t h = 2 * b_;
  const std::size_t start = n_ % h;  // oldest sample of the last 2B
  if (mode_ == TailMode::kDeterministic) {
    for (std::size_t m = 0; m < m_; ++m) std::copy_n(in_[m].begin() + static_cast<std::ptrdiff_t>(start), h, staged_[m].begin());
    compute_boundary(block);
    return;
  }
  wait_idle();
  for (std::size_t m = 0; m < m_; ++m) std::copy_n(in_[m].begin() + static_cast<std::ptrdiff_t>(start), h, staged_[m].begin());
  {
    std::lock_guard lock(mu_);
    job_block_ = block;
    job_ = true;
  }
  cv_.notify_all();
}

void AncEngine::wait_idle() {
  if (mode_ != TailMode::kBackground) return;
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return !job_; });
}

void AncEngine::worker_loop() {
  std::unique_lock lock(mu_);
  for (;;) {
    cv_.wait(lock, [this] { return job_ || stop_; });
    if (stop_) return;
    const long block = job_block_;
    lock.unlock();
    compute_boundary(block);
    lock.lock();
    job_ = false;
    cv_.notify_all();
  }
}

double AncEngine::process_sample(std::span<const double> raw_mics, double playback) {
  if (raw_mics.size() != m_) {
    throw InvalidArgument("engine expects " + std::to_string(m_) + " mic samples, got " +
                          std::to_string(raw_mics.size()));
  }
  const std::size_t h = 2 * b_;
  const std::size_t idx = n_ % h;
  const std::size_t drive_pos = drive_cap_ ? n_ % drive_cap_ : 0;

  for (std::size_t m = 0; m < m_; ++m) {
    double x = raw_mics[m];
    if (drive_cap_) {
      // Window index 1 + i holds y[n - latency - (G - 1 - i)].
      const double* win = drive_.data() + drive_pos + 1;
      const auto& g = g_rev_[m];
      x -= std::inner_product(g.begin(), g.end(), win, 0.0);
    }
    clean_[m] = x;
    in_[m][idx] = x;
    in_[m][idx + h] = x;
  }

  auto output = [&](const FilterState& s) {
    double y = 0.0;
    for (std::size_t m = 0; m < m_; ++m) {
      const double* win = in_[m].data() + idx + 1;
      y += std::inner_product(s.head_rev[m].begin(), s.head_rev[m].end(), win, 0.0);
    }
    return y + s.tail[(n_ / b_) & 1][n_ % b_];
  };

  double anti = output(*active_);
  if (pending_) {
    const double alpha = static_cast<double>(fade_pos_ + 1) / static_cast<double>(fade_len_);
    const double next = output(*pending_);
    anti += alpha * (next - anti);
    ++fade_pos_;
  }
  const double y = anti + playback;

  if (drive_cap_) {
    drive_[drive_pos] = y;
    drive_[drive_pos + drive_cap_] = y;
  }
  ++n_;
  if (n_ % b_ == 0) on_block_boundary();
  if (pending_ && fade_pos_ >= fade_len_) {
    wait_idle();
    active_ = std::move(pending_);
    fade_pos_ = 0;
  }
  return y;
}

void AncEngine::update_filters(const filters::AncFilterSet& w_new) {
  w_new.validate();
  wait_idle();
  auto next = make_state(w_new);
  const long block = static_cast<long>(n_ / b_);
  fill_tail(*next, block);
  fill_tail(*next, block + 1);
  if (!pending_) fade_pos_ = 0;
  pending_ = std::move(next);
}

}  // namespace ancsim::engine
