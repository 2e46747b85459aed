#pragma once

#include <cstdint>
#include <limits>

#include "ancsim/scene/scene.hpp"
#include "ancsim/signal.hpp"
#include "ancsim/sysid/ess.hpp"

namespace ancsim::sysid {

// Plays an excitation and returns what the receivers recorded. `take`
// distinguishes repeated measurements so their noise is independent.
class PlaybackChannel {
 public:
  virtual ~PlaybackChannel() = default;
  virtual MultiChannelWaveform record(const Waveform& excitation, int take) = 0;
  virtual std::size_t num_receivers() const = 0;
};

// Speaker-to-receiver FIR paths plus seeded white measurement noise whose
// level sits snr_db below each receiver's noiseless recording power.
class SimulatedPlayback : public PlaybackChannel {
 public:
  SimulatedPlayback(FirFilterBank paths, double snr_db = std::numeric_limits<double>::infinity(),
                    std::uint64_t noise_seed = 0);

  MultiChannelWaveform record(const Waveform& excitation, int take) override;
  std::size_t num_receivers() const override { return paths_.size(); }

 private:
  FirFilterBank paths_;
  double snr_db_;
  std::uint64_t seed_;
};

// First-order shelf applied to the excitation before playback. Bypassed by
// default; gain_db applies above corner_hz.
struct ShelfPrefilter {
  bool enabled = false;
  double gain_db = 0.0;
  double corner_hz = 1000.0;
};

Waveform apply_shelf(const Waveform& x, const ShelfPrefilter& shelf);

struct SysidOptions {
  double f1_hz = 20.0;
  double f2_hz = 11025.0;
  double duration_s = 20.0;
  int num_sweeps = 2;
  ShelfPrefilter shelf;
  DeconvolveOptions deconvolution;
};

inline constexpr std::size_t kSecondaryPathTaps = 1024;
inline constexpr std::size_t kFeedbackPathTaps = 256;

// Averages num_sweeps recordings, deconvolves each receiver and returns
// causal responses whose tap 0 is the zero-lag reference (the guard region
// is dropped). Propagates MeasurementError.
FirFilterBank measure_paths(PlaybackChannel& channel, std::size_t out_taps, const SysidOptions& options,
                            int fs);

FirFilter estimate_secondary_path(PlaybackChannel& speaker_to_ear, const SysidOptions& options = {},
                                  int fs = kDefaultSampleRate);
FirFilterBank estimate_feedback_paths(PlaybackChannel& speaker_to_mics, const SysidOptions& options = {},
                                      int fs = kDefaultSampleRate);

// Scene conveniences: measure the scene's true paths through SimulatedPlayback.
FirFilter estimate_secondary_path(const scene::SceneRender& scene, const SysidOptions& options = {},
                                  double snr_db = std::numeric_limits<double>::infinity(),
                                  std::uint64_t noise_seed = 0);
FirFilterBank estimate_feedback_paths(const scene::SceneRender& scene, const SysidOptions& options = {},
                                      double snr_db = std::numeric_limits<double>::infinity(),
                                      std::uint64_t noise_seed = 0);

}  // namespace ancsim::sysid
