#include "ancsim/engine/bench.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "ancsim/engine/engine.hpp"
#include "ancsim/error.hpp"

namespace ancsim::engine {
namespace {

using Clock = std::chrono::steady_clock;

Timing summarize(const std::vector<double>& v) {
  Timing t;
  t.mean_ns = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - t.mean_ns) * (x - t.mean_ns);
  t.std_ns = v.size() > 1 ? std::sqrt(acc / static_cast<double>(v.size() - 1)) : 0.0;
  return t;
}

template <typename Proc>
double time_per_sample(const std::vector<std::vector<double>>& frames, Proc&& proc) {
  volatile double sink = 0.0;
  const auto t0 = Clock::now();
  for (const auto& f : frames) sink = sink + proc(f.data());
  const auto t1 = Clock::now();
  return std::chrono::duration<double, std::nano>(t1 - t0).count() / static_cast<double>(frames.size());
}

filters::AncFilterSet random_set(std::size_t m, std::size_t len, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(static_cast<double>(len)));
  auto w = filters::AncFilterSet::zeros(m, len, kDefaultSampleRate);
  for (auto& f : w.filters) {
    for (auto& t : f.taps) t = g(rng);
  }
  return w;
}

}  // namespace

DirectFir::DirectFir(std::vector<std::vector<double>> taps) {
  if (taps.empty() || taps.front().empty()) throw InvalidArgument("direct FIR needs taps");
  len_ = taps.front().size();
  for (auto& t : taps) {
    if (t.size() != len_) throw InvalidArgument("direct FIR channels differ in length");
    rev_.emplace_back(t.rbegin(), t.rend());
    hist_.emplace_back(2 * len_, 0.0);
  }
}

double DirectFir::process_sample(const double* frame) {
  double y = 0.0;
  for (std::size_t c = 0; c < rev_.size(); ++c) {
    auto& h = hist_[c];
    h[pos_] = h[pos_ + len_] = frame[c];
    // h[pos_ + 1 .. pos_ + len_] holds the last len_ inputs, oldest first.
    const double* x = h.data() + pos_ + 1;
    const double* r = rev_[c].data();
    double acc = 0.0;
    for (std::size_t k = 0; k < len_; ++k) acc += r[k] * x[k];
    y += acc;
  }
  pos_ = pos_ + 1 == len_ ? 0 : pos_ + 1;
  return y;
}

BenchRow bench_convolution(std::size_t taps, std::size_t block, const BenchOptions& options) {
  if (options.repeats < 1 || !(options.seconds > 0.0) || options.channels == 0) {
    throw InvalidArgument("bench needs repeats >= 1, seconds > 0 and at least one channel");
  }
  EngineConfig cfg;
  cfg.block_size = block;
  cfg.filter_length = taps;
  cfg.validate();
  EngineConfig head_cfg = cfg;
  head_cfg.filter_length = 2 * block;

  std::mt19937_64 rng(options.seed);
  const std::size_t m = options.channels;
  const auto n = static_cast<std::size_t>(options.seconds * cfg.sample_rate_hz);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> frames(n, std::vector<double>(m));
  for (auto& f : frames) {
    for (auto& v : f) v = g(rng);
  }
  const auto w = random_set(m, taps, rng);
  auto w_head = w;
  for (auto& f : w_head.filters) f.taps.resize(2 * block);
  std::vector<std::vector<double>> direct_taps;
  for (const auto& f : w.filters) direct_taps.push_back(f.taps);

  std::vector<double> hybrid, head, direct;
  for (int r = 0; r < options.repeats; ++r) {
    AncEngine eng(w, {}, cfg);
    hybrid.push_back(time_per_sample(frames, [&](const double* x) { return eng.process_sample({x, m}); }));
    AncEngine eng_head(w_head, {}, head_cfg);
    head.push_back(time_per_sample(frames, [&](const double* x) { return eng_head.process_sample({x, m}); }));
    DirectFir fir(direct_taps);
    direct.push_back(time_per_sample(frames, [&](const double* x) { return fir.process_sample(x); }));
  }
  std::vector<double> tail(hybrid.size());
  for (std::size_t i = 0; i < tail.size(); ++i) tail[i] = hybrid[i] - head[i];

  BenchRow row;
  row.taps = taps;
  row.block = block;
  row.channels = m;
  row.hybrid = summarize(hybrid);
  row.head = summarize(head);
  row.tail = summarize(tail);
  row.direct = summarize(direct);
  return row;
}

}  // namespace ancsim::engine
