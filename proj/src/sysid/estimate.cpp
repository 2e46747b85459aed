#include "ancsim/sysid/estimate.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "ancsim/dsp/convolution.hpp"
#include "ancsim/dsp/noise.hpp"
#include "ancsim/error.hpp"

namespace ancsim::sysid {

SimulatedPlayback::SimulatedPlayback(FirFilterBank paths, double snr_db, std::uint64_t noise_seed)
    : paths_(std::move(paths)), snr_db_(snr_db), seed_(noise_seed) {
  if (paths_.empty()) throw InvalidArgument("SimulatedPlayback needs at least one path");
  for (const auto& p : paths_) p.validate("playback path");
}

MultiChannelWaveform SimulatedPlayback::record(const Waveform& excitation, int take) {
  std::size_t longest = 0;
  for (const auto& p : paths_) longest = std::max(longest, p.size());
  const std::size_t n = excitation.size() + longest - 1;
  MultiChannelWaveform out(paths_.size(), n, excitation.sample_rate_hz);
  for (std::size_t c = 0; c < paths_.size(); ++c) {
    if (paths_[c].sample_rate_hz != excitation.sample_rate_hz) {
      throw InvalidArgument("SimulatedPlayback: path rate differs from the excitation rate");
    }
    auto y = dsp::convolve_full(excitation.samples, paths_[c].taps);
    std::copy(y.begin(), y.end(), out.channels[c].begin());
    if (std::isfinite(snr_db_)) {
      const double sigma = std::sqrt(mean_square(out.channels[c]) * std::pow(10.0, -snr_db_ / 10.0));
      std::mt19937_64 rng(dsp::mix_seed(seed_, static_cast<std::uint64_t>(take), c));
      std::normal_distribution<double> normal(0.0, sigma);
      for (auto& v : out.channels[c]) v += normal(rng);
    }
  }
  return out;
}

Waveform apply_shelf(const Waveform& x, const ShelfPrefilter& shelf) {
  if (!shelf.enabled) return x;
  const int fs = x.sample_rate_hz;
  if (!(shelf.corner_hz > 0.0 && shelf.corner_hz < fs / 2.0)) {
    throw InvalidArgument("shelf corner must lie inside (0, fs/2)");
  }
  // Bilinear transform of H(s) = (g s + w) / (s + w).
  const double g = std::pow(10.0, shelf.gain_db / 20.0);
  const double k = std::tan(std::numbers::pi * shelf.corner_hz / fs);
  const double a0 = 1.0 + k;
  const double b0 = (g + k) / a0, b1 = (k - g) / a0, a1 = (k - 1.0) / a0;
  Waveform y(std::vector<double>(x.size()), fs);
  double x1 = 0.0, y1 = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double v = b0 * x.samples[n] + b1 * x1 - a1 * y1;
    x1 = x.samples[n];
    y1 = v;
    y.samples[n] = v;
  }
  return y;
}

FirFilterBank measure_paths(PlaybackChannel& channel, std::size_t out_taps, const SysidOptions& options, int fs) {
  if (options.num_sweeps < 1) throw InvalidArgument("sysid needs at least one sweep");
  EssSignal ess = generate_ess(options.f1_hz, options.f2_hz, options.duration_s, fs);
  // Deconvolve against what was actually played.
  ess.sweep = apply_shelf(ess.sweep, options.shelf);

  MultiChannelWaveform sum;
  for (int take = 0; take < options.num_sweeps; ++take) {
    auto rec = channel.record(ess.sweep, take);
    if (take == 0) {
      sum = std::move(rec);
    } else {
      if (rec.num_channels() != sum.num_channels() || rec.num_samples() != sum.num_samples()) {
        throw MeasurementError("sysid recordings differ in shape between takes");
      }
      for (std::size_t c = 0; c < sum.num_channels(); ++c) {
        for (std::size_t n = 0; n < sum.num_samples(); ++n) sum.channels[c][n] += rec.channels[c][n];
      }
    }
  }
  const double scale = 1.0 / options.num_sweeps;
  FirFilterBank out;
  for (std::size_t c = 0; c < sum.num_channels(); ++c) {
    Waveform avg(std::move(sum.channels[c]), sum.sample_rate_hz);
    for (auto& v : avg.samples) v *= scale;
    auto ir = deconvolve_ir(avg, ess, out_taps + options.deconvolution.guard, options.deconvolution);
    ir.taps.erase(ir.taps.begin(), ir.taps.begin() + static_cast<std::ptrdiff_t>(options.deconvolution.guard));
    out.push_back(std::move(ir));
  }
  return out;
}

FirFilter estimate_secondary_path(PlaybackChannel& speaker_to_ear, const SysidOptions& options, int fs) {
  if (speaker_to_ear.num_receivers() != 1) throw InvalidArgument("secondary path measurement expects one receiver");
  return measure_paths(speaker_to_ear, kSecondaryPathTaps, options, fs).front();
}

FirFilterBank estimate_feedback_paths(PlaybackChannel& speaker_to_mics, const SysidOptions& options, int fs) {
  return measure_paths(speaker_to_mics, kFeedbackPathTaps, options, fs);
}

FirFilter estimate_secondary_path(const scene::SceneRender& scene, const SysidOptions& options, double snr_db,
                                  std::uint64_t noise_seed) {
  SimulatedPlayback playback({scene.true_secondary}, snr_db, noise_seed);
  return estimate_secondary_path(playback, options, scene.sample_rate_hz());
}

FirFilterBank estimate_feedback_paths(const scene::SceneRender& scene, const SysidOptions& options, double snr_db,
                                      std::uint64_t noise_seed) {
  SimulatedPlayback playback(scene.true_feedback, snr_db, noise_seed);
  return estimate_feedback_paths(playback, options, scene.sample_rate_hz());
}

}  // namespace ancsim::sysid
