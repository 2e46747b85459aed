#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ancsim/engine/engine.hpp"
#include "ancsim/eval/metric.hpp"
#include "ancsim/filters/estimator.hpp"
#include "ancsim/scene/scene.hpp"

namespace ancsim::engine {

struct ClosedLoopOptions {
  bool oracle_ear = true;
  bool afc_enabled = true;
  // Defaults to the scene's true paths.
  std::optional<FirFilter> s_hat;
  std::optional<FirFilterBank> g_hat;
  std::optional<Waveform> playback;
  std::optional<filters::AncFilterSet> initial_filters;
  TailMode tail_mode = TailMode::kDeterministic;
  // Emitted samples saturate at +-drive_limit, like a DAC rail.
  double drive_limit = 1e3;
  eval::EvalProtocol protocol;  // band and chunk length for logged reductions
};

struct UpdateEvent {
  std::size_t context_end = 0;  // sample index one past the context window
  std::size_t applied_at = 0;
  bool ok = true;
  std::string message;
};

struct ChunkReduction {
  std::size_t begin = 0, end = 0;
  double reduction_db = 0.0;
};

struct ClosedLoopResult {
  Waveform residual;  // e = d + s * emitted
  Waveform primary;   // d
  Waveform drive;     // engine output y
  Waveform emitted;   // y delayed by the injected latency
  MultiChannelWaveform clean_refs;  // AFC output x_m
  std::vector<UpdateEvent> updates;
  std::vector<ChunkReduction> chunks;

  // One JSON object per line: update events and chunk reductions in time order.
  void write_log(const std::filesystem::path& path) const;
};

// Chunks start once the first filters are applied (context + delay) and
// advance by the protocol chunk length.
std::vector<std::pair<std::size_t, std::size_t>> chunk_grid(std::size_t num_samples, int fs,
                                                            const UpdateSchedule& schedule, double chunk_s);

ClosedLoopResult simulate_closed_loop(const scene::SceneRender& scene, const filters::FilterEstimator& estimator,
                                      const EngineConfig& config, const UpdateSchedule& schedule,
                                      const ClosedLoopOptions& options = {});

// delta[latency] * s: the response from engine output to the ear.
FirFilter latency_inclusive(const FirFilter& s, std::size_t latency);

}  // namespace ancsim::engine
