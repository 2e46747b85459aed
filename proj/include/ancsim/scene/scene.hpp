#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "ancsim/dsp/noise.hpp"
#include "ancsim/scene/geometry.hpp"
#include "ancsim/scene/path_model.hpp"
#include "ancsim/signal.hpp"

namespace ancsim::scene {

inline constexpr double kMinSourceDistance = 0.3;
inline constexpr double kMinSceneDuration = 3.0;

struct NoiseSource {
  double azimuth_deg = 0.0;
  double distance_m = 1.5;
  double elevation_deg = 0.0;
  double gain_db = 0.0;
  // Generated from the scene seed when `signal` is empty.
  dsp::NoiseSpec noise;
  // Explicit source waveform. If it is at least pre-roll + duration long its
  // head feeds the path pre-roll; otherwise it starts at t = 0 from silence.
  std::optional<Waveform> signal;
  // Identity used for the noise stream and tail seeds; defaults to the
  // source's index in the scene.
  std::optional<std::uint64_t> id;

  Vec3 position() const;
  void validate() const;
};

struct SceneSpec {
  ArrayGeometry geometry;
  std::vector<NoiseSource> sources;
  PathModel model;
  double duration_s = 10.0;
  std::uint64_t seed = 1;
  int fs = kDefaultSampleRate;
  // Energy of the speaker-to-nearest-mic path relative to the secondary path.
  // -inf disables feedback entirely.
  double feedback_coupling_db = -20.0;
  int feedback_length_taps = 256;

  void validate() const;
};

struct SceneRender {
  MultiChannelWaveform mic_signals;  // x_m[n], feedback-free
  Waveform ear_signal;               // d[n]
  FirFilter true_secondary;          // speaker -> ear
  FirFilterBank true_feedback;       // speaker -> mic m
  // Indexed [source * M + mic] and [source].
  FirFilterBank source_to_mic_paths;
  FirFilterBank source_to_ear_paths;
  SceneSpec spec;

  std::size_t num_mics() const { return mic_signals.num_channels(); }
  int sample_rate_hz() const { return mic_signals.sample_rate_hz; }
};

SceneRender render_scene(const SceneSpec& spec);
SceneRender render_scene(const ArrayGeometry& geometry, const std::vector<NoiseSource>& sources,
                         const PathModel& model, double duration_s, std::uint64_t seed,
                         int fs = kDefaultSampleRate);

// Only the speaker-related paths of a scene; no source rendering.
struct SpeakerPaths {
  FirFilter secondary;
  FirFilterBank feedback;
};
SpeakerPaths synthesize_speaker_paths(const SceneSpec& spec);

// One render per azimuth. The first source of `base` is rotated to each angle;
// the geometry, source signal and distance stay fixed. Renders run in
// parallel and are identical to sequential evaluation.
std::vector<SceneRender> doa_sweep(const SceneSpec& base, const std::vector<double>& azimuths_deg);

// N evenly spaced azimuths starting at 0.
std::vector<double> even_azimuths(std::size_t count);

nlohmann::json to_json(const PathModel& model);
PathModel path_model_from_json(const nlohmann::json& j, const std::string& where = "path_model");
nlohmann::json to_json(const SceneSpec& spec);
// Geometry may be inline or a string naming a JSON file relative to base_dir.
SceneSpec scene_spec_from_json(const nlohmann::json& j, const std::string& base_dir = ".");

}  // namespace ancsim::scene
