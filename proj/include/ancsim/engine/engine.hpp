#pragma once

#include <condition_variable>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "ancsim/dsp/fft.hpp"
#include "ancsim/filters/filter_set.hpp"
#include "ancsim/signal.hpp"

namespace ancsim::engine {

struct EngineConfig {
  std::size_t block_size = 128;  // B
  std::size_t filter_length = 2048;  // L_C
  int sample_rate_hz = kDefaultSampleRate;
  std::size_t injected_latency_samples = 1;
  std::size_t crossfade_samples = 0;  // 0 selects B

  void validate() const;
  std::size_t crossfade() const { return crossfade_samples ? crossfade_samples : block_size; }
  std::size_t tail_partitions() const { return filter_length / block_size - 2; }
};

struct UpdateSchedule {
  double context_s = 2.0;  // L_N
  double update_period_s = 0.2;  // L_D
  double application_delay_s = 0.2;

  void validate() const;
};

enum class TailMode { kDeterministic, kBackground };

// Sample-synchronous feedforward engine:
//   x_m[n] = x'_m[n] - (g_hat_m * y)[n - latency]
//   y[n]   = sum_m (w_m * x_m)[n] + playback[n]
// with w split into a 2B-tap time-domain head and B-tap partitions
// convolved block-wise through a frequency delay line.
class AncEngine {
 public:
  AncEngine(const filters::AncFilterSet& w, const FirFilterBank& g_hat, const EngineConfig& config,
            TailMode mode = TailMode::kDeterministic);
  ~AncEngine();
  AncEngine(const AncEngine&) = delete;
  AncEngine& operator=(const AncEngine&) = delete;

  // Returns the speaker drive y[n] (anti-noise plus playback).
  double process_sample(std::span<const double> raw_mics, double playback = 0.0);

  // Crossfades to w_new over crossfade() samples, starting with the next
  // sample. A second call during a crossfade replaces the pending set.
  void update_filters(const filters::AncFilterSet& w_new);

  // AFC output x_m[n] of the most recent sample.
  std::span<const double> clean_refs() const { return clean_; }
  bool crossfading() const { return pending_ != nullptr; }
  std::size_t num_channels() const { return m_; }
  std::size_t head_taps() const { return 2 * b_; }
  std::size_t tail_partitions() const { return parts_; }
  std::size_t delay_line_depth() const { return depth_; }
  const EngineConfig& config() const { return config_; }
  std::size_t samples_processed() const { return n_; }

 private:
  struct FilterState;

  std::unique_ptr<FilterState> make_state(const filters::AncFilterSet& w) const;
  void fill_tail(FilterState& s, long block) const;
  void on_block_boundary();
  void compute_boundary(long block);
  void wait_idle();
  void worker_loop();

  EngineConfig config_;
  TailMode mode_;
  std::size_t m_ = 0, b_ = 0, parts_ = 0, depth_ = 0, fade_len_ = 0;
  std::size_t n_ = 0;

  // Input history per mic, mirrored so the last 2B samples are contiguous.
  std::vector<std::vector<double>> in_;
  // fdl_[m][slot] holds the spectrum of the 2B window ending at block slot.
  std::vector<std::vector<std::vector<dsp::Complex>>> fdl_;
  std::vector<std::vector<double>> staged_;  // windows captured at a boundary
  mutable dsp::RealFft fft_{2};
  mutable std::vector<dsp::Complex> acc_;
  mutable std::vector<double> time_;

  std::unique_ptr<FilterState> active_, pending_;
  std::size_t fade_pos_ = 0;

  // AFC
  std::vector<std::vector<double>> g_rev_;  // reversed, zero-padded g_hat per mic
  std::vector<double> drive_;  // mirrored drive history
  std::size_t drive_cap_ = 0;
  std::vector<double> clean_;

  // Background tail worker.
  std::thread worker_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool job_ = false, stop_ = false;
  long job_block_ = 0;
};

}  // namespace ancsim::engine
