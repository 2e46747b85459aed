#include "ancsim/engine/closed_loop.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <json.hpp>

#include "ancsim/dsp/convolution.hpp"
#include "ancsim/error.hpp"

namespace ancsim::engine {
namespace {

std::size_t to_samples(double seconds, int fs) { return static_cast<std::size_t>(std::llround(seconds * fs)); }

}  // namespace

FirFilter latency_inclusive(const FirFilter& s, std::size_t latency) { return delayed(s, latency); }

std::vector<std::pair<std::size_t, std::size_t>> chunk_grid(std::size_t num_samples, int fs,
                                                            const UpdateSchedule& schedule, double chunk_s) {
  const std::size_t start = to_samples(schedule.context_s, fs) + to_samples(schedule.application_delay_s, fs);
  const std::size_t len = to_samples(chunk_s, fs);
  if (len == 0) throw InvalidArgument("chunk length rounds to zero samples");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t b = start; b + len <= num_samples; b += len) out.emplace_back(b, b + len);
  return out;
}

ClosedLoopResult simulate_closed_loop(const scene::SceneRender& scene, const filters::FilterEstimator& estimator,
                                      const EngineConfig& config, const UpdateSchedule& schedule,
                                      const ClosedLoopOptions& options) {
  config.validate();
  schedule.validate();
  const int fs = scene.sample_rate_hz();
  if (fs != config.sample_rate_hz) throw InvalidArgument("scene rate differs from engine rate");
  const std::size_t n_total = scene.mic_signals.num_samples();
  const std::size_t m = scene.num_mics();
  const std::size_t ctx = to_samples(schedule.context_s, fs);
  const std::size_t period = std::max<std::size_t>(1, to_samples(schedule.update_period_s, fs));
  const std::size_t delay = to_samples(schedule.application_delay_s, fs);
  if (n_total < ctx + period) {
    throw InvalidArgument("scene is shorter than one context window plus one update period");
  }
  if (options.playback && options.playback->size() < n_total) throw InvalidArgument("playback is shorter than the scene");
  if (estimator.filter_length() != config.filter_length) {
    throw InvalidArgument("estimator produces " + std::to_string(estimator.filter_length()) +
                          " taps, engine expects " + std::to_string(config.filter_length));
  }

  const std::size_t latency = config.injected_latency_samples;
  const FirFilter s_hat = latency_inclusive(options.s_hat.value_or(scene.true_secondary), latency);
  FirFilterBank g_hat;
  if (options.afc_enabled) g_hat = options.g_hat.value_or(scene.true_feedback);

  AncEngine eng(options.initial_filters.value_or(filters::AncFilterSet::zeros(m, config.filter_length, fs)), g_hat,
                config, options.tail_mode);

  // True feedback, reversed and zero-padded, driven by the emitted signal.
  std::size_t g_len = 0;
  for (const auto& g : scene.true_feedback) g_len = std::max(g_len, g.size());
  std::vector<std::vector<double>> g_rev(m, std::vector<double>(g_len, 0.0));
  for (std::size_t c = 0; c < m && c < scene.true_feedback.size(); ++c) {
    const auto& taps = scene.true_feedback[c].taps;
    for (std::size_t k = 0; k < taps.size(); ++k) g_rev[c][g_len - 1 - k] = taps[k];
  }
  std::vector<double> emit_hist(2 * std::max<std::size_t>(g_len, 1), 0.0);

  ClosedLoopResult res;
  res.primary = scene.ear_signal;
  res.drive = Waveform(std::vector<double>(n_total, 0.0), fs);
  res.emitted = Waveform(std::vector<double>(n_total, 0.0), fs);
  res.clean_refs = MultiChannelWaveform(m, n_total, fs);

  std::multimap<std::size_t, filters::AncFilterSet> scheduled;
  std::vector<double> raw(m);
  for (std::size_t n = 0; n < n_total; ++n) {
    if (n >= ctx && (n - ctx) % period == 0) {
      UpdateEvent ev;
      ev.context_end = n;
      ev.applied_at = n + delay;
      try {
        MultiChannelWaveform window(m, ctx, fs);
        for (std::size_t c = 0; c < m; ++c) {
          std::copy_n(res.clean_refs.channels[c].begin() + static_cast<std::ptrdiff_t>(n - ctx), ctx,
                      window.channels[c].begin());
        }
        std::optional<Waveform> ear;
        if (options.oracle_ear) {
          ear = Waveform(std::vector<double>(scene.ear_signal.samples.begin() + static_cast<std::ptrdiff_t>(n - ctx),
                                             scene.ear_signal.samples.begin() + static_cast<std::ptrdiff_t>(n)),
                         fs);
        }
        auto w = estimator.estimate(window, s_hat, ear ? &*ear : nullptr);
        if (w.length() != config.filter_length || w.num_channels() != m) {
          throw InvalidArgument("estimator returned filters of the wrong shape");
        }
        scheduled.emplace(ev.applied_at, std::move(w));
      } catch (const std::exception& e) {
        ev.ok = false;
        ev.message = e.what();
      }
      res.updates.push_back(std::move(ev));
    }
    for (auto it = scheduled.begin(); it != scheduled.end() && it->first <= n;) {
      eng.update_filters(it->second);
      it = scheduled.erase(it);
    }

    const double emitted =
        n >= latency ? std::clamp(res.drive.samples[n - latency], -options.drive_limit, options.drive_limit) : 0.0;
    res.emitted.samples[n] = emitted;
    if (g_len) {
      const std::size_t pos = n % g_len;
      emit_hist[pos] = emitted;
      emit_hist[pos + g_len] = emitted;
    }
    for (std::size_t c = 0; c < m; ++c) {
      double fb = 0.0;
      if (g_len) {
        // Window [pos + 1, pos + g_len] holds emitted[n - g_len + 1 .. n].
        const double* win = emit_hist.data() + (n % g_len) + 1;
        fb = std::inner_product(g_rev[c].begin(), g_rev[c].end(), win, 0.0);
      }
      raw[c] = scene.mic_signals.channels[c][n] + fb;
    }
    const double playback = options.playback ? options.playback->samples[n] : 0.0;
    res.drive.samples[n] = eng.process_sample(raw, playback);
    const auto clean = eng.clean_refs();
    for (std::size_t c = 0; c < m; ++c) res.clean_refs.channels[c][n] = clean[c];
  }

  const auto anti = dsp::convolve_same(res.emitted.samples, scene.true_secondary.taps);
  res.residual = Waveform(std::vector<double>(n_total), fs);
  for (std::size_t n = 0; n < n_total; ++n) res.residual.samples[n] = scene.ear_signal.samples[n] + anti[n];

  const auto chain = options.protocol.bandpass(fs);
  const auto d_band = dsp::sos_filter(res.primary.view(), chain);
  const auto e_band = dsp::sos_filter(res.residual.view(), chain);
  for (const auto& [b, e] : chunk_grid(n_total, fs, schedule, options.protocol.chunk_s)) {
    res.chunks.push_back({b, e, eval::band_ratio_db(d_band, e_band, b, e)});
  }
  return res;
}

void ClosedLoopResult::write_log(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open log " + path.string() + " for writing");
  const double fs = residual.sample_rate_hz;
  std::vector<std::pair<std::size_t, nlohmann::json>> lines;
  for (const auto& u : updates) {
    lines.emplace_back(u.context_end, nlohmann::json{{"event", "filter_update"},
                                                      {"t_s", u.context_end / fs},
                                                      {"applied_s", u.applied_at / fs},
                                                      {"ok", u.ok},
                                                      {"message", u.message}});
  }
  for (const auto& c : chunks) {
    lines.emplace_back(c.end, nlohmann::json{{"event", "chunk"},
                                              {"t_s", c.end / fs},
                                              {"begin_s", c.begin / fs},
                                              {"reduction_db", c.reduction_db}});
  }
  std::stable_sort(lines.begin(), lines.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [t, j] : lines) out << j.dump() << '\n';
  if (!out) throw IoError("failed writing log " + path.string());
}

}  // namespace ancsim::engine
