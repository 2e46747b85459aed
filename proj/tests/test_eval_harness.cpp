#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "ancsim/error.hpp"
#include "ancsim/eval/harness.hpp"
#include "test_util.hpp"

using namespace ancsim;
using namespace ancsim::eval;

namespace {

constexpr int kFs = 22050;

Waveform noise(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  return {testutil::random_vector(n, seed, scale), kFs};
}

scene::SceneSpec frame_scene(double azimuth, double duration) {
  scene::SceneSpec spec;
  spec.geometry.ear_position = {0.0, 0.075, 0.0};
  spec.geometry.speaker_position = {0.015, 0.07, 0.012};
  spec.geometry.mic_positions = {{0.09, 0.045, 0.02}, {0.06, 0.063, 0.02}, {0.03, 0.067, 0.02}, {-0.035, 0.065, 0.015}};
  scene::NoiseSource src;
  src.azimuth_deg = azimuth;
  spec.sources = {src};
  spec.duration_s = duration;
  spec.seed = 9;
  return spec;
}

EvalSettings settings_with(const std::string& estimator, std::size_t taps = 1024) {
  EvalSettings s;
  s.estimator = estimator;
  s.engine.filter_length = taps;
  return s;
}

EvalReport evaluate(const scene::SceneRender& r, const EvalSettings& s, const std::string& label = "scene") {
  const auto est = filters::make_estimator(s.estimator, s.estimator_config());
  return run_chunked_eval(r, *est, s, label);
}

}  // namespace

TEST_CASE("metric identity and half amplitude") {
  const auto d = noise(22050, 1);
  CHECK(noise_reduction_db(d, d) == 0.0);
  Waveform half = d;
  for (auto& v : half.samples) v *= 0.5;
  CHECK(std::abs(noise_reduction_db(d, half) - 20.0 * std::log10(2.0)) <= 1e-3);
}

TEST_CASE("metric is antisymmetric and scale invariant") {
  const auto d = noise(22050, 2);
  const auto e = noise(22050, 3, 0.3);
  const double r = noise_reduction_db(d, e);
  CHECK(std::abs(r + noise_reduction_db(e, d)) <= 1e-9);
  for (double k : {1e-3, 7.5, 1e4}) {
    Waveform ds = d, es = e;
    for (auto& v : ds.samples) v *= k;
    for (auto& v : es.samples) v *= k;
    CHECK(std::abs(noise_reduction_db(ds, es) - r) <= 1e-9);
  }
}

TEST_CASE("out-of-band tone barely moves the metric") {
  const auto d = noise(44100, 4);
  const auto e = noise(44100, 5, 0.2);
  Waveform dt = d, et = e;
  for (std::size_t n = 0; n < d.size(); ++n) {
    const double tone = std::sin(2.0 * std::numbers::pi * 5000.0 * static_cast<double>(n) / kFs);
    dt.samples[n] += tone;
    et.samples[n] += tone;
  }
  CHECK(std::abs(noise_reduction_db(dt, et) - noise_reduction_db(d, e)) <= 0.05);
}

TEST_CASE("silent residual gives +inf") {
  const auto d = noise(4096, 6);
  const Waveform e(std::vector<double>(4096, 0.0), kFs);
  const double r = noise_reduction_db(d, e);
  CHECK(std::isinf(r));
  CHECK(r > 0);
}

TEST_CASE("metric rejects mismatched inputs") {
  CHECK_THROWS_AS(noise_reduction_db(noise(100, 1), noise(101, 1)), InvalidArgument);
  EvalProtocol p;
  p.band_high_hz = 20000.0;
  CHECK_THROWS_AS(p.validate(kFs), InvalidArgument);
}

TEST_CASE("chunk grid of a 10 s scene and zero estimator") {
  const auto r = scene::render_scene(frame_scene(30.0, 10.0));
  const auto rep = evaluate(r, settings_with("zero"));
  CHECK(rep.chunk_reductions_db.size() == 15);
  CHECK(rep.mode == "offline");
  for (double v : rep.chunk_reductions_db) CHECK(v == 0.0);
  CHECK(rep.mean_db == 0.0);
  CHECK(rep.failures.empty());
  CHECK(rep.provenance.contains("geometry_sha256"));
  CHECK(rep.provenance["scene_seed"] == 9);
  CHECK(rep.provenance["estimator"] == "zero");
}

TEST_CASE("scene too short for four chunks is rejected") {
  const auto r = scene::render_scene(frame_scene(30.0, 3.5));
  CHECK_THROWS_AS(evaluate(r, settings_with("zero")), InvalidArgument);
}

TEST_CASE("oracle on a stationary scene: high and stable reduction") {
  auto spec = frame_scene(0.0, 6.0);
  spec.model.kind = scene::PathKind::kReverberant;
  spec.model.rt60_s = 0.25;
  const auto rep = evaluate(scene::render_scene(spec), settings_with("oracle_wiener", 2048));
  REQUIRE(rep.chunk_reductions_db.size() == 7);
  const double mean =
      std::accumulate(rep.chunk_reductions_db.begin(), rep.chunk_reductions_db.end(), 0.0) / 7.0;
  CHECK(std::abs(mean - rep.mean_db) <= 1e-9);
  CHECK(rep.mean_db >= 20.0);

  std::vector<double> rest(rep.chunk_reductions_db.begin() + 1, rep.chunk_reductions_db.end());
  const double m = std::accumulate(rest.begin(), rest.end(), 0.0) / static_cast<double>(rest.size());
  double acc = 0.0;
  for (double v : rest) acc += (v - m) * (v - m);
  CHECK(std::sqrt(acc / static_cast<double>(rest.size() - 1)) <= 2.0);
}

TEST_CASE("closed-loop mode is labeled and zero filters leave the ear untouched") {
  const auto r = scene::render_scene(frame_scene(30.0, 4.5));
  auto s = settings_with("zero");
  s.mode = EvalMode::kClosedLoop;
  const auto rep = evaluate(r, s);
  CHECK(rep.mode == "closed_loop");
  REQUIRE(!rep.chunk_reductions_db.empty());
  for (double v : rep.chunk_reductions_db) CHECK(std::abs(v) <= 1e-9);
}

TEST_CASE("estimator failures are recorded and scored as zero filters") {
  struct Failing final : filters::FilterEstimator {
    std::string name() const override { return "failing"; }
    std::size_t filter_length() const override { return 1024; }
    filters::AncFilterSet estimate(const MultiChannelWaveform&, const FirFilter&, const Waveform*) const override {
      throw NumericalError("no solution");
    }
  };
  const auto r = scene::render_scene(frame_scene(30.0, 4.5));
  const auto rep = run_chunked_eval(r, Failing{}, settings_with("zero"));
  CHECK(rep.failures.size() == rep.chunk_reductions_db.size());
  for (double v : rep.chunk_reductions_db) CHECK(v == 0.0);
}

TEST_CASE("report mean and std follow the chunk list") {
  EvalReport rep;
  rep.chunk_reductions_db = {1.0, 2.0, 4.0, 9.0};
  rep.chunk_start_s = {2.2, 2.7, 3.2, 3.7};
  rep.finalize();
  CHECK(rep.mean_db == doctest::Approx(4.0));
  CHECK(rep.std_db == doctest::Approx(std::sqrt(38.0 / 3.0)));
  rep.chunk_reductions_db.push_back(std::numeric_limits<double>::infinity());
  rep.chunk_start_s.push_back(4.2);
  rep.finalize();
  CHECK(to_json(rep)["mean_db"] == "inf");
}

TEST_CASE("sweep outputs: CSV rows and plot data") {
  SweepResult s;
  s.kind = "taps";
  s.axis = "filter_length";
  for (int k = 0; k < 2; ++k) {
    SweepPoint p;
    p.axis_label = std::to_string(512 << k);
    p.axis_value = 512 << k;
    for (int sc = 0; sc < 3; ++sc) {
      EvalReport r;
      r.label = "s" + std::to_string(sc);
      r.chunk_reductions_db = {1.0 + k, 2.0 + sc};
      r.chunk_start_s = {2.2, 2.7};
      r.finalize();
      p.scenes.push_back(r);
    }
    p.finalize();
    s.points.push_back(p);
  }
  CHECK(s.means() == std::vector<double>{2.0, 2.5});
  const auto csv = to_csv(s);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 3 * 2);
  const auto plot = to_plot_data(s);
  CHECK(plot.rfind("# ", 0) == 0);
  CHECK(std::count(plot.begin(), plot.end(), '\n') == 3);
  CHECK(to_json(s)["points"].size() == 2);
}

TEST_CASE("taps sweep: single value and divisibility") {
  const std::vector<RenderedScene> scenes{{"a", scene::render_scene(frame_scene(30.0, 4.5))}};
  const auto one = sweep_taps(scenes, settings_with("zero"), {2048});
  REQUIRE(one.points.size() == 1);
  CHECK(one.points[0].scenes.size() == 1);
  CHECK(one.points[0].axis_value == 2048);
  CHECK_THROWS_AS(sweep_taps(scenes, settings_with("zero"), {1000}), InvalidArgument);
  CHECK_THROWS_AS(sweep_taps({}, settings_with("zero")), InvalidArgument);
}

TEST_CASE("latency sweep is ordered by axis") {
  const std::vector<RenderedScene> scenes{{"a", scene::render_scene(frame_scene(0.0, 4.5))}};
  const auto r = sweep_latency(scenes, settings_with("oracle_wiener", 512), {1, 16});
  REQUIRE(r.points.size() == 2);
  CHECK(r.points[0].axis_value == 1);
  CHECK(r.points[0].mean_db > r.points[1].mean_db + 3.0);
}

TEST_CASE("DOA sweep mirrors between sides") {
  auto base = frame_scene(0.0, 4.5);
  const auto r = sweep_doa(base, settings_with("oracle_wiener", 512), 4, true);
  REQUIRE(r.points.size() == 8);
  CHECK(r.points[0].axis_label == "left:0");
  CHECK(r.points[5].axis_label == "right:270");
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(r.points[i].mean_db - r.points[i + 4].mean_db) <= 1.0);
  const auto single = sweep_doa(base, settings_with("zero"), 1, false);
  CHECK(single.points.size() == 1);
}

TEST_CASE("mic subsets keep matching channels and paths") {
  const auto r = scene::render_scene(frame_scene(30.0, 4.0));
  const auto sub = select_mics(r, {3, 1});
  REQUIRE(sub.num_mics() == 2);
  CHECK(sub.mic_signals.channels[0] == r.mic_signals.channels[3]);
  CHECK(sub.mic_signals.channels[1] == r.mic_signals.channels[1]);
  CHECK(sub.true_feedback[0].taps == r.true_feedback[3].taps);
  CHECK(sub.spec.geometry.mic_positions.size() == 2);
  CHECK(sub.ear_signal.samples == r.ear_signal.samples);
  CHECK_THROWS_AS(select_mics(r, {}), InvalidArgument);
  CHECK_THROWS_AS(select_mics(r, {4}), InvalidArgument);
}

TEST_CASE("mic sweep: full count is the full set") {
  const std::vector<RenderedScene> scenes{{"a", scene::render_scene(frame_scene(30.0, 4.5))}};
  const auto r = sweep_mics(scenes, settings_with("zero"), {1, 4});
  REQUIRE(r.points.size() == 2);
  CHECK(r.points[1].axis_label == "4:0+1+2+3");
}

TEST_CASE("source sweep with one source equals a direct evaluation") {
  Suite suite;
  suite.scenes = {{"a", frame_scene(30.0, 4.5)}};
  const auto s = settings_with("oracle_wiener", 512);
  const auto r = sweep_sources(suite, s, {1});
  const auto direct = evaluate(scene::render_scene(suite.scenes[0].spec), s, "a");
  REQUIRE(r.points.size() == 1);
  CHECK(r.points[0].mean_db == direct.mean_db);
  CHECK_THROWS_AS(sweep_sources(suite, s, {4}), InvalidArgument);
}

TEST_CASE("suite config: committed suite and error cases") {
  const auto suite = load_suite(ANCSIM_CONFIG_DIR "/standard_suite.json");
  CHECK(suite.scenes.size() == 12);
  CHECK(suite.settings.engine.filter_length == 2048);
  std::vector<std::string> names;
  for (const auto& sc : suite.scenes) names.push_back(sc.name);
  std::sort(names.begin(), names.end());
  CHECK(std::adjacent_find(names.begin(), names.end()) == names.end());

  CHECK_THROWS_AS(suite_from_json(nlohmann::json{{"scenes", nlohmann::json::array()}}, "."), ConfigError);
  CHECK_THROWS_AS(suite_from_json(nlohmann::json{{"name", "x"}}, "."), ConfigError);
  CHECK_THROWS_AS(eval_settings_from_json(nlohmann::json{{"mode", "live"}}), ConfigError);
  CHECK_THROWS_AS(eval_settings_from_json(nlohmann::json{{"engine", {{"filter_length", 1000}}}}), ConfigError);
}

TEST_CASE("settings JSON roundtrip") {
  EvalSettings s;
  s.mode = EvalMode::kClosedLoop;
  s.beta = 0.25;
  s.engine.filter_length = 1024;
  s.engine.injected_latency_samples = 4;
  s.protocol.chunk_s = 0.25;
  const auto back = eval_settings_from_json(to_json(s));
  CHECK(to_json(back) == to_json(s));
  CHECK(back.beta == 0.25);
}
