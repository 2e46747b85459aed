#include "ancsim/eval/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ancsim/dsp/convolution.hpp"
#include "ancsim/error.hpp"
#include "ancsim/io/config.hpp"
#include "ancsim/io/hash.hpp"
#include "ancsim/parallel.hpp"

namespace ancsim::eval {
namespace {

std::size_t to_samples(double seconds, int fs) { return static_cast<std::size_t>(std::llround(seconds * fs)); }

nlohmann::json provenance_for(const scene::SceneRender& scene, const EvalSettings& settings) {
  const auto geom = scene::to_json(scene.spec.geometry).dump();
  return {{"scene_seed", scene.spec.seed},
          {"geometry_sha256", io::sha256_hex(geom)},
          {"ear_signal_sha256", io::sha256_hex(scene.ear_signal.view())},
          {"scene", scene::to_json(scene.spec)},
          {"settings", to_json(settings)}};
}

EvalReport offline_eval(const scene::SceneRender& scene, const filters::FilterEstimator& estimator,
                        const EvalSettings& settings) {
  const int fs = scene.sample_rate_hz();
  const std::size_t n_total = scene.mic_signals.num_samples(), m = scene.num_mics();
  const auto schedule = settings.schedule();
  const std::size_t ctx = to_samples(schedule.context_s, fs), delay = to_samples(schedule.application_delay_s, fs);
  const std::size_t latency = settings.engine.injected_latency_samples;
  const FirFilter s_hat = engine::latency_inclusive(scene.true_secondary, latency);
  const auto chain = settings.protocol.bandpass(fs);
  const std::size_t pad = settings.engine.filter_length + latency + scene.true_secondary.size() + to_samples(0.25, fs);

  EvalReport rep;
  rep.mode = to_string(EvalMode::kOffline);
  for (const auto& [b, e] : engine::chunk_grid(n_total, fs, schedule, settings.protocol.chunk_s)) {
    const std::size_t ctx_end = b - delay, ctx_begin = ctx_end - ctx;
    MultiChannelWaveform window(m, ctx, fs);
    for (std::size_t c = 0; c < m; ++c) {
      const auto& src = scene.mic_signals.channels[c];
      std::copy(src.begin() + static_cast<std::ptrdiff_t>(ctx_begin), src.begin() + static_cast<std::ptrdiff_t>(ctx_end),
                window.channels[c].begin());
    }
    const Waveform ear(std::vector<double>(scene.ear_signal.samples.begin() + static_cast<std::ptrdiff_t>(ctx_begin),
                                           scene.ear_signal.samples.begin() + static_cast<std::ptrdiff_t>(ctx_end)),
                       fs);
    filters::AncFilterSet w;
    try {
      w = estimator.estimate(window, s_hat, &ear);
      if (w.num_channels() != m) throw InvalidArgument("estimator returned the wrong channel count");
    } catch (const std::exception& ex) {
      rep.failures.push_back(ex.what());
      w = filters::AncFilterSet::zeros(m, settings.engine.filter_length, fs);
    }

    // Steady-state application: the same filters run from seg_begin so the
    // chunk carries no start-up transient.
    const std::size_t seg_begin = b > pad ? b - pad : 0, seg_len = e - seg_begin;
    std::vector<double> anti(seg_len, 0.0);
    for (std::size_t c = 0; c < m; ++c) {
      const auto& src = scene.mic_signals.channels[c];
      const auto y = dsp::convolve_same(
          std::span<const double>(src).subspan(seg_begin, seg_len), w.filters[c].taps);
      for (std::size_t i = 0; i < seg_len; ++i) anti[i] += y[i];
    }
    std::vector<double> emitted(seg_len, 0.0);
    for (std::size_t i = latency; i < seg_len; ++i) emitted[i] = anti[i - latency];
    const auto at_ear = dsp::convolve_same(emitted, scene.true_secondary.taps);
    std::vector<double> d_seg(scene.ear_signal.samples.begin() + static_cast<std::ptrdiff_t>(seg_begin),
                              scene.ear_signal.samples.begin() + static_cast<std::ptrdiff_t>(e));
    std::vector<double> e_seg(seg_len);
    for (std::size_t i = 0; i < seg_len; ++i) e_seg[i] = d_seg[i] + at_ear[i];
    const auto d_band = dsp::sos_filter(d_seg, chain);
    const auto e_band = dsp::sos_filter(e_seg, chain);
    rep.chunk_start_s.push_back(static_cast<double>(b) / fs);
    rep.chunk_reductions_db.push_back(band_ratio_db(d_band, e_band, b - seg_begin, seg_len));
  }
  return rep;
}

template <typename Task>
std::vector<EvalReport> run_tasks(std::size_t count, Task task) {
  std::vector<EvalReport> out(count);
  parallel_for(count, [&](std::size_t i) { out[i] = task(i); });
  return out;
}

SweepResult assemble(const std::string& kind, const std::string& axis, std::vector<SweepPoint> points,
                     const EvalSettings& base) {
  SweepResult r;
  r.kind = kind;
  r.axis = axis;
  for (auto& p : points) p.finalize();
  r.points = std::move(points);
  r.provenance = {{"settings", to_json(base)}};
  return r;
}

}  // namespace

std::string to_string(EvalMode mode) { return mode == EvalMode::kOffline ? "offline" : "closed_loop"; }

EvalMode eval_mode_from_string(const std::string& name) {
  if (name == "offline") return EvalMode::kOffline;
  if (name == "closed_loop") return EvalMode::kClosedLoop;
  throw ConfigError("unknown evaluation mode '" + name + "' (expected offline or closed_loop)");
}

engine::UpdateSchedule EvalSettings::schedule() const {
  return {protocol.context_s, update_period_s, protocol.application_delay_s};
}

filters::OracleWienerConfig EvalSettings::estimator_config() const {
  filters::OracleWienerConfig c;
  c.filter_length = engine.filter_length;
  c.beta = beta;
  c.solver.tolerance = solver_tolerance;
  return c;
}

void EvalSettings::validate() const {
  engine.validate();
  protocol.validate(engine.sample_rate_hz);
  schedule().validate();
  if (beta && !(*beta >= 0.0)) throw InvalidArgument("beta must be non-negative");
  if (!(solver_tolerance > 0.0)) throw InvalidArgument("solver tolerance must be positive");
}

nlohmann::json to_json(const EvalSettings& s) {
  return {{"mode", to_string(s.mode)},
          {"estimator", s.estimator},
          {"beta", s.beta ? nlohmann::json(*s.beta) : nlohmann::json(nullptr)},
          {"solver_tolerance", s.solver_tolerance},
          {"update_period_s", s.update_period_s},
          {"protocol",
           {{"band_low_hz", s.protocol.band_low_hz},
            {"band_high_hz", s.protocol.band_high_hz},
            {"butterworth_order", s.protocol.butterworth_order},
            {"chunk_s", s.protocol.chunk_s},
            {"context_s", s.protocol.context_s},
            {"application_delay_s", s.protocol.application_delay_s}}},
          {"engine",
           {{"block_size", s.engine.block_size},
            {"filter_length", s.engine.filter_length},
            {"sample_rate_hz", s.engine.sample_rate_hz},
            {"injected_latency_samples", s.engine.injected_latency_samples},
            {"crossfade_samples", s.engine.crossfade_samples}}}};
}

EvalSettings eval_settings_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config field '" + where + "' must be an object");
  EvalSettings s;
  s.mode = eval_mode_from_string(io::value_or<std::string>(j, "mode", "offline", where));
  s.estimator = io::value_or<std::string>(j, "estimator", s.estimator, where);
  if (j.contains("beta") && !j.at("beta").is_null()) s.beta = io::require_as<double>(j, "beta", where);
  s.solver_tolerance = io::value_or<double>(j, "solver_tolerance", s.solver_tolerance, where);
  s.update_period_s = io::value_or<double>(j, "update_period_s", s.update_period_s, where);
  if (j.contains("protocol")) {
    const auto& p = j.at("protocol");
    const auto w = io::join_path(where, "protocol");
    s.protocol.band_low_hz = io::value_or<double>(p, "band_low_hz", s.protocol.band_low_hz, w);
    s.protocol.band_high_hz = io::value_or<double>(p, "band_high_hz", s.protocol.band_high_hz, w);
    s.protocol.butterworth_order = io::value_or<int>(p, "butterworth_order", s.protocol.butterworth_order, w);
    s.protocol.chunk_s = io::value_or<double>(p, "chunk_s", s.protocol.chunk_s, w);
    s.protocol.context_s = io::value_or<double>(p, "context_s", s.protocol.context_s, w);
    s.protocol.application_delay_s = io::value_or<double>(p, "application_delay_s", s.protocol.application_delay_s, w);
  }
  if (j.contains("engine")) {
    const auto& e = j.at("engine");
    const auto w = io::join_path(where, "engine");
    s.engine.block_size = io::value_or<std::size_t>(e, "block_size", s.engine.block_size, w);
    s.engine.filter_length = io::value_or<std::size_t>(e, "filter_length", s.engine.filter_length, w);
    s.engine.sample_rate_hz = io::value_or<int>(e, "sample_rate_hz", s.engine.sample_rate_hz, w);
    s.engine.injected_latency_samples =
        io::value_or<std::size_t>(e, "injected_latency_samples", s.engine.injected_latency_samples, w);
    s.engine.crossfade_samples = io::value_or<std::size_t>(e, "crossfade_samples", s.engine.crossfade_samples, w);
  }
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return s;
}

EvalReport run_chunked_eval(const scene::SceneRender& scene, const filters::FilterEstimator& estimator,
                            const EvalSettings& settings, const std::string& label,
                            const engine::ClosedLoopOptions& loop_options) {
  settings.validate();
  if (scene.sample_rate_hz() != settings.engine.sample_rate_hz) throw InvalidArgument("scene rate differs from engine rate");
  const auto schedule = settings.schedule();
  const auto grid = engine::chunk_grid(scene.mic_signals.num_samples(), scene.sample_rate_hz(), schedule,
                                       settings.protocol.chunk_s);
  if (grid.size() < 4) {
    throw InvalidArgument("scene '" + label + "' is too short: " + std::to_string(grid.size()) +
                          " chunks, at least 4 required");
  }
  EvalReport rep;
  if (settings.mode == EvalMode::kOffline) {
    rep = offline_eval(scene, estimator, settings);
  } else {
    auto opts = loop_options;
    opts.protocol = settings.protocol;
    const auto res = engine::simulate_closed_loop(scene, estimator, settings.engine, schedule, opts);
    rep.mode = to_string(EvalMode::kClosedLoop);
    for (const auto& c : res.chunks) {
      rep.chunk_start_s.push_back(static_cast<double>(c.begin) / scene.sample_rate_hz());
      rep.chunk_reductions_db.push_back(c.reduction_db);
    }
    for (const auto& u : res.updates) {
      if (!u.ok) rep.failures.push_back(u.message);
    }
  }
  rep.label = label;
  rep.provenance = provenance_for(scene, settings);
  rep.provenance["estimator"] = estimator.name();
  rep.finalize();
  return rep;
}

Suite suite_from_json(const nlohmann::json& j, const std::string& base_dir) {
  if (!j.is_object()) throw ConfigError("suite config must be a JSON object");
  Suite s;
  s.name = io::value_or<std::string>(j, "name", "suite", "suite");
  if (j.contains("eval")) s.settings = eval_settings_from_json(j.at("eval"), "suite.eval");
  const auto& scenes = io::require(j, "scenes", "suite");
  if (!scenes.is_array()) throw ConfigError("config field 'suite.scenes' must be an array");
  if (scenes.empty()) throw ConfigError("suite 'suite.scenes' is empty");
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const std::string w = "suite.scenes[" + std::to_string(i) + "]";
    SuiteScene sc;
    sc.name = io::require_as<std::string>(scenes[i], "name", w);
    try {
      sc.spec = scene::scene_spec_from_json(io::require(scenes[i], "scene", w), base_dir);
    } catch (const ConfigError& e) {
      throw ConfigError(w + "." + e.what());
    }
    s.scenes.push_back(std::move(sc));
  }
  return s;
}

Suite load_suite(const std::filesystem::path& path) {
  return suite_from_json(io::load_config(path), path.parent_path().string());
}

std::vector<RenderedScene> render_suite(const Suite& suite) {
  std::vector<RenderedScene> out(suite.scenes.size());
  parallel_for(out.size(), [&](std::size_t i) {
    out[i] = {suite.scenes[i].name, scene::render_scene(suite.scenes[i].spec)};
  });
  return out;
}

scene::SceneRender select_mics(const scene::SceneRender& scene, const std::vector<std::size_t>& mics) {
  if (mics.empty()) throw InvalidArgument("mic subset is empty");
  const std::size_t m = scene.num_mics();
  scene::SceneRender out;
  out.ear_signal = scene.ear_signal;
  out.true_secondary = scene.true_secondary;
  out.source_to_ear_paths = scene.source_to_ear_paths;
  out.spec = scene.spec;
  out.spec.geometry = scene.spec.geometry.subset(mics);
  out.mic_signals.sample_rate_hz = scene.mic_signals.sample_rate_hz;
  const std::size_t sources = scene.source_to_ear_paths.size();
  for (std::size_t idx : mics) {
    if (idx >= m) throw InvalidArgument("mic index " + std::to_string(idx) + " out of range");
    out.mic_signals.channels.push_back(scene.mic_signals.channels[idx]);
    if (idx < scene.true_feedback.size()) out.true_feedback.push_back(scene.true_feedback[idx]);
  }
  for (std::size_t s = 0; s < sources; ++s) {
    for (std::size_t idx : mics) out.source_to_mic_paths.push_back(scene.source_to_mic_paths.at(s * m + idx));
  }
  return out;
}

SweepResult sweep_taps(const std::vector<RenderedScene>& scenes, const EvalSettings& base,
                       const std::vector<std::size_t>& lengths) {
  if (scenes.empty()) throw InvalidArgument("taps sweep needs at least one scene");
  for (auto len : lengths) {
    auto s = base;
    s.engine.filter_length = len;
    s.engine.validate();
  }
  const std::size_t ns = scenes.size();
  const auto reports = run_tasks(lengths.size() * ns, [&](std::size_t i) {
    auto s = base;
    s.engine.filter_length = lengths[i / ns];
    const auto est = filters::make_estimator(s.estimator, s.estimator_config());
    return run_chunked_eval(scenes[i % ns].render, *est, s, scenes[i % ns].name);
  });
  std::vector<SweepPoint> points(lengths.size());
  for (std::size_t k = 0; k < lengths.size(); ++k) {
    points[k].axis_label = std::to_string(lengths[k]);
    points[k].axis_value = static_cast<double>(lengths[k]);
    points[k].scenes.assign(reports.begin() + static_cast<std::ptrdiff_t>(k * ns),
                            reports.begin() + static_cast<std::ptrdiff_t>((k + 1) * ns));
  }
  return assemble("taps", "filter_length", std::move(points), base);
}

SweepResult sweep_latency(const std::vector<RenderedScene>& scenes, const EvalSettings& base,
                          const std::vector<std::size_t>& latencies) {
  if (scenes.empty()) throw InvalidArgument("latency sweep needs at least one scene");
  const std::size_t ns = scenes.size();
  const auto reports = run_tasks(latencies.size() * ns, [&](std::size_t i) {
    auto s = base;
    s.engine.injected_latency_samples = latencies[i / ns];
    const auto est = filters::make_estimator(s.estimator, s.estimator_config());
    return run_chunked_eval(scenes[i % ns].render, *est, s, scenes[i % ns].name);
  });
  std::vector<SweepPoint> points(latencies.size());
  for (std::size_t k = 0; k < latencies.size(); ++k) {
    points[k].axis_label = std::to_string(latencies[k]);
    points[k].axis_value = static_cast<double>(latencies[k]);
    points[k].scenes.assign(reports.begin() + static_cast<std::ptrdiff_t>(k * ns),
                            reports.begin() + static_cast<std::ptrdiff_t>((k + 1) * ns));
  }
  return assemble("latency", "injected_latency_samples", std::move(points), base);
}

SweepResult sweep_doa(const scene::SceneSpec& base, const EvalSettings& settings, std::size_t num_angles,
                      bool both_sides) {
  if (base.sources.empty()) throw InvalidArgument("DOA sweep needs a source to rotate");
  if (num_angles == 0) throw InvalidArgument("DOA sweep needs at least one angle");
  const auto az = scene::even_azimuths(num_angles);
  const std::size_t sides = both_sides ? 2 : 1;
  struct Job {
    scene::SceneSpec spec;
    std::string label;
    double azimuth;
  };
  std::vector<Job> jobs;
  for (std::size_t side = 0; side < sides; ++side) {
    for (double a : az) {
      Job j{base, "", a};
      if (side == 1) {
        j.spec.geometry = base.geometry.mirrored();
        j.azimuth = std::fmod(360.0 - a, 360.0);
      }
      j.spec.sources[0].azimuth_deg = j.azimuth;
      j.label = scene::to_string(j.spec.geometry.side) + ":" + std::to_string(static_cast<long>(std::lround(j.azimuth)));
      jobs.push_back(std::move(j));
    }
  }
  const auto reports = run_tasks(jobs.size(), [&](std::size_t i) {
    const auto render = scene::render_scene(jobs[i].spec);
    const auto est = filters::make_estimator(settings.estimator, settings.estimator_config());
    return run_chunked_eval(render, *est, settings, jobs[i].label);
  });
  std::vector<SweepPoint> points(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    points[i].axis_label = jobs[i].label;
    points[i].axis_value = jobs[i].azimuth;
    points[i].scenes = {reports[i]};
  }
  return assemble("doa", "azimuth_deg", std::move(points), settings);
}

SweepResult sweep_mics(const std::vector<RenderedScene>& scenes, const EvalSettings& base,
                       const std::vector<std::size_t>& counts_in) {
  if (scenes.empty()) throw InvalidArgument("mic sweep needs at least one scene");
  const std::size_t m = scenes.front().render.num_mics();
  for (const auto& s : scenes) {
    if (s.render.num_mics() != m) throw InvalidArgument("mic sweep scenes differ in mic count");
  }
  std::vector<std::size_t> counts = counts_in;
  if (counts.empty()) {
    for (std::size_t c = 1; c <= m; ++c) counts.push_back(c);
  }
  std::vector<std::vector<std::size_t>> subsets;
  for (std::size_t mask = 1; mask < (std::size_t{1} << m); ++mask) {
    std::vector<std::size_t> idx;
    for (std::size_t b = 0; b < m; ++b) {
      if (mask & (std::size_t{1} << b)) idx.push_back(b);
    }
    if (std::find(counts.begin(), counts.end(), idx.size()) != counts.end()) subsets.push_back(idx);
  }
  const std::size_t ns = scenes.size();
  const auto reports = run_tasks(subsets.size() * ns, [&](std::size_t i) {
    const auto render = select_mics(scenes[i % ns].render, subsets[i / ns]);
    const auto est = filters::make_estimator(base.estimator, base.estimator_config());
    return run_chunked_eval(render, *est, base, scenes[i % ns].name);
  });

  std::vector<SweepPoint> points;
  for (std::size_t c : counts) {
    SweepPoint best;
    bool found = false;
    for (std::size_t k = 0; k < subsets.size(); ++k) {
      if (subsets[k].size() != c) continue;
      SweepPoint p;
      std::string name;
      for (std::size_t idx : subsets[k]) name += (name.empty() ? "" : "+") + std::to_string(idx);
      p.axis_label = std::to_string(c) + ":" + name;
      p.axis_value = static_cast<double>(c);
      p.scenes.assign(reports.begin() + static_cast<std::ptrdiff_t>(k * ns),
                      reports.begin() + static_cast<std::ptrdiff_t>((k + 1) * ns));
      p.finalize();
      if (!found || p.mean_db > best.mean_db) best = std::move(p);
      found = true;
    }
    if (!found) throw InvalidArgument("mic count " + std::to_string(c) + " exceeds the array size");
    points.push_back(std::move(best));
  }
  return assemble("mics", "mic_count", std::move(points), base);
}

SweepResult sweep_sources(const Suite& suite, const EvalSettings& base, const std::vector<std::size_t>& counts) {
  if (suite.scenes.empty()) throw InvalidArgument("source sweep needs at least one scene");
  constexpr std::size_t kMax = std::size(kExtraSourceOffsetsDeg);
  for (std::size_t c : counts) {
    if (c < 1 || c > kMax) throw InvalidArgument("source count must be in [1, 3]");
  }
  const std::size_t ns = suite.scenes.size();
  const auto reports = run_tasks(counts.size() * ns, [&](std::size_t i) {
    auto spec = suite.scenes[i % ns].spec;
    const auto first = spec.sources.at(0);
    spec.sources.clear();
    for (std::size_t k = 0; k < counts[i / ns]; ++k) {
      auto src = first;
      src.azimuth_deg = std::fmod(first.azimuth_deg + kExtraSourceOffsetsDeg[k], 360.0);
      if (first.id) src.id = *first.id + k;
      spec.sources.push_back(src);
    }
    const auto render = scene::render_scene(spec);
    const auto est = filters::make_estimator(base.estimator, base.estimator_config());
    return run_chunked_eval(render, *est, base, suite.scenes[i % ns].name);
  });
  std::vector<SweepPoint> points(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    points[k].axis_label = std::to_string(counts[k]);
    points[k].axis_value = static_cast<double>(counts[k]);
    points[k].scenes.assign(reports.begin() + static_cast<std::ptrdiff_t>(k * ns),
                            reports.begin() + static_cast<std::ptrdiff_t>((k + 1) * ns));
  }
  return assemble("sources", "num_sources", std::move(points), base);
}

}  // namespace ancsim::eval
