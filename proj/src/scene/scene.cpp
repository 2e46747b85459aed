#include "ancsim/scene/scene.hpp"

#include <cmath>
#include <filesystem>
#include <limits>

#include "ancsim/dsp/convolution.hpp"
#include "ancsim/error.hpp"
#include "ancsim/io/config.hpp"
#include "ancsim/io/hash.hpp"
#include "ancsim/parallel.hpp"

namespace ancsim::scene {
namespace {

constexpr std::uint64_t kSpeakerRole = 1;
constexpr std::uint64_t kEarRole = 100;
constexpr std::uint64_t kSourceRoleBase = 1000;

double db_to_gain(double db) { return std::isinf(db) && db < 0 ? 0.0 : std::pow(10.0, db / 20.0); }

// "-inf" strings and numbers are both accepted for gains in dB.
double db_from_json(const nlohmann::json& j, const std::string& key, double fallback, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (it->is_string()) {
    const auto s = it->get<std::string>();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ConfigError("config field '" + io::join_path(where, key) + "' must be a number or \"-inf\"");
  }
  if (!it->is_number()) throw ConfigError("config field '" + io::join_path(where, key) + "' must be a number");
  return it->get<double>();
}

nlohmann::json db_to_json(double db) {
  if (std::isinf(db) && db < 0) return "-inf";
  return db;
}

std::vector<double> source_signal(const NoiseSource& src, std::uint64_t id, const SceneSpec& spec,
                                  std::size_t preroll, std::size_t n) {
  if (!src.signal) {
    return dsp::seeded_noise_samples(src.noise, preroll + n, spec.fs,
                                     dsp::mix_seed(spec.seed, kSourceRoleBase + id));
  }
  const auto& s = src.signal->samples;
  if (src.signal->sample_rate_hz != spec.fs) throw InvalidArgument("source signal rate differs from the scene rate");
  std::vector<double> out(preroll + n, 0.0);
  if (s.size() >= preroll + n) {
    std::copy(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(preroll + n), out.begin());
  } else if (s.size() >= n) {
    std::copy(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n), out.begin() + static_cast<std::ptrdiff_t>(preroll));
  } else {
    throw InvalidArgument("source signal shorter than the scene duration");
  }
  return out;
}

std::vector<double> render_through(const std::vector<double>& signal, const FirFilter& h, std::size_t preroll) {
  auto full = dsp::convolve_same(signal, h.taps);
  return {full.begin() + static_cast<std::ptrdiff_t>(preroll), full.end()};
}

}  // namespace

Vec3 NoiseSource::position() const { return direction_from_angles(azimuth_deg, elevation_deg) * distance_m; }

void NoiseSource::validate() const {
  if (!std::isfinite(azimuth_deg) || !std::isfinite(elevation_deg)) throw InvalidArgument("source angles must be finite");
  if (!(distance_m >= kMinSourceDistance)) {
    throw InvalidArgument("source distance " + std::to_string(distance_m) + " m is below the 0.3 m minimum");
  }
  if (std::isnan(gain_db) || gain_db == std::numeric_limits<double>::infinity()) {
    throw InvalidArgument("source gain must be finite or -inf");
  }
  if (signal) signal->validate("source signal");
}

void SceneSpec::validate() const {
  geometry.validate();
  model.validate();
  if (sources.empty()) throw InvalidArgument("scene needs at least one noise source");
  for (const auto& s : sources) s.validate();
  if (fs <= 0) throw InvalidArgument("scene sample rate must be positive");
  if (!(duration_s >= kMinSceneDuration)) {
    throw InvalidArgument("scene duration " + std::to_string(duration_s) + " s is below the 3 s minimum");
  }
  if (feedback_length_taps < 1) throw InvalidArgument("feedback_length_taps must be positive");
  if (std::isnan(feedback_coupling_db) || feedback_coupling_db == std::numeric_limits<double>::infinity()) {
    throw InvalidArgument("feedback coupling must be finite or -inf");
  }
}

SpeakerPaths synthesize_speaker_paths(const SceneSpec& spec) {
  const auto& g = spec.geometry;
  SpeakerPaths out;
  out.secondary = synthesize_path(g.speaker_position, g.ear_position, spec.model, spec.fs, {kSpeakerRole, kEarRole});

  PathModel fb_model = spec.model;
  fb_model.path_length_taps = std::max(spec.feedback_length_taps, 64);
  std::size_t nearest = 0;
  for (std::size_t m = 0; m < g.num_mics(); ++m) {
    out.feedback.push_back(synthesize_path(g.speaker_position, g.mic_positions[m], fb_model, spec.fs, {kSpeakerRole, m}));
    out.feedback.back() = resized(out.feedback.back(), static_cast<std::size_t>(spec.feedback_length_taps));
    if (distance(g.speaker_position, g.mic_positions[m]) < distance(g.speaker_position, g.mic_positions[nearest])) {
      nearest = m;
    }
  }
  const double near_energy = energy(out.feedback[nearest].view());
  const double scale = db_to_gain(spec.feedback_coupling_db) * std::sqrt(energy(out.secondary.view()) / near_energy);
  for (auto& f : out.feedback) {
    for (auto& t : f.taps) t *= scale;
  }
  return out;
}

SceneRender render_scene(const SceneSpec& spec) {
  spec.validate();
  const auto& g = spec.geometry;
  const std::size_t n = static_cast<std::size_t>(std::llround(spec.duration_s * spec.fs));
  const std::size_t preroll = static_cast<std::size_t>(spec.model.path_length_taps);
  const std::size_t mics = g.num_mics();

  SceneRender r;
  r.spec = spec;
  r.mic_signals = MultiChannelWaveform(mics, n, spec.fs);
  r.ear_signal = Waveform(std::vector<double>(n, 0.0), spec.fs);

  for (std::size_t i = 0; i < spec.sources.size(); ++i) {
    const auto& src = spec.sources[i];
    const std::uint64_t id = src.id.value_or(i);
    const Vec3 pos = src.position();
    for (std::size_t m = 0; m < mics; ++m) {
      r.source_to_mic_paths.push_back(synthesize_path(pos, g.mic_positions[m], spec.model, spec.fs, {kSourceRoleBase + id, m}));
    }
    r.source_to_ear_paths.push_back(synthesize_path(pos, g.ear_position, spec.model, spec.fs, {kSourceRoleBase + id, kEarRole}));

    const double gain = db_to_gain(src.gain_db);
    if (gain == 0.0) continue;
    const auto signal = source_signal(src, id, spec, preroll, n);
    for (std::size_t m = 0; m < mics; ++m) {
      const auto y = render_through(signal, r.source_to_mic_paths[i * mics + m], preroll);
      auto& ch = r.mic_signals.channels[m];
      for (std::size_t k = 0; k < n; ++k) ch[k] += gain * y[k];
    }
    const auto d = render_through(signal, r.source_to_ear_paths[i], preroll);
    for (std::size_t k = 0; k < n; ++k) r.ear_signal.samples[k] += gain * d[k];
  }

  auto speaker = synthesize_speaker_paths(spec);
  r.true_secondary = std::move(speaker.secondary);
  r.true_feedback = std::move(speaker.feedback);
  return r;
}

SceneRender render_scene(const ArrayGeometry& geometry, const std::vector<NoiseSource>& sources,
                         const PathModel& model, double duration_s, std::uint64_t seed, int fs) {
  SceneSpec spec;
  spec.geometry = geometry;
  spec.sources = sources;
  spec.model = model;
  spec.duration_s = duration_s;
  spec.seed = seed;
  spec.fs = fs;
  return render_scene(spec);
}

std::vector<SceneRender> doa_sweep(const SceneSpec& base, const std::vector<double>& azimuths_deg) {
  if (azimuths_deg.empty()) throw InvalidArgument("doa_sweep: no azimuths given");
  if (base.sources.empty()) throw InvalidArgument("doa_sweep: base scene has no source");
  std::vector<SceneRender> out(azimuths_deg.size());
  parallel_for(azimuths_deg.size(), [&](std::size_t i) {
    SceneSpec spec = base;
    spec.sources.front().azimuth_deg = azimuths_deg[i];
    out[i] = render_scene(spec);
  });
  return out;
}

std::vector<double> even_azimuths(std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = 360.0 * static_cast<double>(i) / static_cast<double>(count);
  return out;
}

nlohmann::json to_json(const PathModel& m) {
  return {{"kind", to_string(m.kind)},          {"rt60_s", m.rt60_s},
          {"reflection_seed", m.reflection_seed}, {"speed_of_sound", m.speed_of_sound},
          {"path_length_taps", m.path_length_taps}, {"tail_level_db", m.tail_level_db},
          {"tail_gap_s", m.tail_gap_s},          {"tail_coherence", m.tail_coherence}};
}

PathModel path_model_from_json(const nlohmann::json& j, const std::string& where) {
  PathModel m;
  try {
    m.kind = path_kind_from_string(io::value_or<std::string>(j, "kind", "anechoic", where));
  } catch (const InvalidArgument& e) {
    throw ConfigError(io::join_path(where, "kind") + ": " + e.what());
  }
  m.rt60_s = io::value_or<double>(j, "rt60_s", 0.0, where);
  m.reflection_seed = io::value_or<std::uint64_t>(j, "reflection_seed", 0, where);
  m.speed_of_sound = io::value_or<double>(j, "speed_of_sound", 343.0, where);
  m.path_length_taps = io::value_or<int>(j, "path_length_taps", m.kind == PathKind::kAnechoic ? 512 : 4096, where);
  m.tail_level_db = io::value_or<double>(j, "tail_level_db", m.tail_level_db, where);
  m.tail_gap_s = io::value_or<double>(j, "tail_gap_s", m.tail_gap_s, where);
  m.tail_coherence = io::value_or<double>(j, "tail_coherence", m.tail_coherence, where);
  try {
    m.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return m;
}

nlohmann::json to_json(const SceneSpec& spec) {
  nlohmann::json sources = nlohmann::json::array();
  for (const auto& s : spec.sources) {
    nlohmann::json js = {{"azimuth_deg", s.azimuth_deg},
                         {"distance_m", s.distance_m},
                         {"elevation_deg", s.elevation_deg},
                         {"gain_db", db_to_json(s.gain_db)}};
    if (s.signal) {
      js["signal"] = {{"samples", s.signal->size()}, {"sha256", io::sha256_hex(s.signal->view())}};
    } else {
      js["noise"] = {{"kind", dsp::to_string(s.noise.kind)}, {"low_hz", s.noise.low_hz}, {"high_hz", s.noise.high_hz}};
    }
    if (s.id) js["id"] = *s.id;
    sources.push_back(js);
  }
  return {{"fs", spec.fs},
          {"duration_s", spec.duration_s},
          {"seed", spec.seed},
          {"geometry", to_json(spec.geometry)},
          {"path_model", to_json(spec.model)},
          {"feedback_coupling_db", db_to_json(spec.feedback_coupling_db)},
          {"feedback_length_taps", spec.feedback_length_taps},
          {"sources", sources}};
}

SceneSpec scene_spec_from_json(const nlohmann::json& j, const std::string& base_dir) {
  const std::string where = "scene";
  if (!j.is_object()) throw ConfigError("scene config must be a JSON object");
  SceneSpec spec;
  spec.fs = io::value_or<int>(j, "fs", kDefaultSampleRate, where);
  spec.duration_s = io::value_or<double>(j, "duration_s", 10.0, where);
  spec.seed = io::value_or<std::uint64_t>(j, "seed", 1, where);

  const auto& geom = io::require(j, "geometry", where);
  if (geom.is_string()) {
    const auto path = std::filesystem::path(base_dir) / geom.get<std::string>();
    spec.geometry = geometry_from_json(io::load_config(path), io::join_path(where, "geometry"));
  } else {
    spec.geometry = geometry_from_json(geom, io::join_path(where, "geometry"));
  }
  if (j.contains("path_model")) spec.model = path_model_from_json(j.at("path_model"), io::join_path(where, "path_model"));
  spec.feedback_coupling_db = db_from_json(j, "feedback_coupling_db", -20.0, where);
  spec.feedback_length_taps = io::value_or<int>(j, "feedback_length_taps", 256, where);

  const auto& sources = io::require(j, "sources", where);
  if (!sources.is_array() || sources.empty()) {
    throw ConfigError("config field '" + io::join_path(where, "sources") + "' must be a non-empty array");
  }
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const std::string sw = io::join_path(where, "sources[" + std::to_string(i) + "]");
    const auto& js = sources[i];
    NoiseSource s;
    s.azimuth_deg = io::require_as<double>(js, "azimuth_deg", sw);
    s.distance_m = io::value_or<double>(js, "distance_m", 1.5, sw);
    s.elevation_deg = io::value_or<double>(js, "elevation_deg", 0.0, sw);
    s.gain_db = db_from_json(js, "gain_db", 0.0, sw);
    if (js.contains("id")) s.id = io::require_as<std::uint64_t>(js, "id", sw);
    if (js.contains("noise")) {
      const auto& jn = js.at("noise");
      const std::string nw = io::join_path(sw, "noise");
      try {
        if (jn.is_string()) {
          s.noise.kind = dsp::noise_kind_from_string(jn.get<std::string>());
        } else {
          s.noise.kind = dsp::noise_kind_from_string(io::require_as<std::string>(jn, "kind", nw));
          s.noise.low_hz = io::value_or<double>(jn, "low_hz", 100.0, nw);
          s.noise.high_hz = io::value_or<double>(jn, "high_hz", 1000.0, nw);
        }
      } catch (const InvalidArgument& e) {
        throw ConfigError(nw + ": " + e.what());
      }
    }
    spec.sources.push_back(s);
  }
  try {
    spec.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return spec;
}

}  // namespace ancsim::scene
