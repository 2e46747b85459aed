#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "ancsim/engine/bench.hpp"
#include "ancsim/engine/closed_loop.hpp"
#include "ancsim/engine/engine.hpp"
#include "ancsim/error.hpp"
#include "test_util.hpp"

using namespace ancsim;
using namespace ancsim::engine;
using filters::AncFilterSet;

namespace {

constexpr int kFs = 22050;

AncFilterSet random_filters(std::size_t m, std::size_t len, std::uint64_t seed) {
  auto w = AncFilterSet::zeros(m, len, kFs);
  for (std::size_t c = 0; c < m; ++c) w.filters[c].taps = testutil::random_vector(len, seed + c, 1.0 / std::sqrt(len));
  return w;
}

// Direct oracle: y[n] = sum_m (w_m * x_m)[n].
std::vector<double> direct_output(const AncFilterSet& w, const std::vector<std::vector<double>>& x) {
  std::vector<double> y(x.front().size(), 0.0);
  for (std::size_t c = 0; c < x.size(); ++c) {
    const auto part = testutil::naive_convolve(x[c], w.filters[c].taps);
    for (std::size_t n = 0; n < y.size(); ++n) y[n] += part[n];
  }
  return y;
}

std::vector<double> run(AncEngine& eng, const std::vector<std::vector<double>>& x,
                        const std::vector<double>* playback = nullptr) {
  std::vector<double> y(x.front().size());
  std::vector<double> frame(x.size());
  for (std::size_t n = 0; n < y.size(); ++n) {
    for (std::size_t c = 0; c < x.size(); ++c) frame[c] = x[c][n];
    y[n] = eng.process_sample(frame, playback ? (*playback)[n] : 0.0);
  }
  return y;
}

std::vector<std::vector<double>> random_inputs(std::size_t m, std::size_t n, std::uint64_t seed) {
  std::vector<std::vector<double>> x;
  for (std::size_t c = 0; c < m; ++c) x.push_back(testutil::random_vector(n, seed + 17 * c));
  return x;
}

EngineConfig config_for(std::size_t len) {
  EngineConfig cfg;
  cfg.filter_length = len;
  return cfg;
}

scene::SceneSpec frame_scene(double azimuth, double duration = 4.0) {
  scene::SceneSpec spec;
  spec.geometry.ear_position = {0.0, 0.075, 0.0};
  spec.geometry.speaker_position = {0.015, 0.07, 0.012};
  spec.geometry.mic_positions = {{0.09, 0.045, 0.02}, {0.06, 0.063, 0.02}, {0.03, 0.067, 0.02}, {-0.035, 0.065, 0.015}};
  scene::NoiseSource src;
  src.azimuth_deg = azimuth;
  spec.sources = {src};
  spec.duration_s = duration;
  spec.seed = 5;
  return spec;
}

double mean_reduction(const ClosedLoopResult& r) {
  double acc = 0.0;
  for (const auto& c : r.chunks) acc += c.reduction_db;
  return acc / static_cast<double>(r.chunks.size());
}

}  // namespace

TEST_CASE("engine configuration and partition layout") {
  const auto w = AncFilterSet::zeros(2, 2048, kFs);
  AncEngine eng(w, {}, config_for(2048));
  CHECK(eng.head_taps() == 256);
  CHECK(eng.tail_partitions() == 14);
  CHECK(eng.delay_line_depth() == 15);

  AncEngine small(AncFilterSet::zeros(1, 256, kFs), {}, config_for(256));
  CHECK(small.tail_partitions() == 0);

  EngineConfig bad = config_for(2000);
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = config_for(128);
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = config_for(2048);
  bad.block_size = 96;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = config_for(2048);
  bad.injected_latency_samples = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK_THROWS_AS(AncEngine(AncFilterSet::zeros(1, 1024, kFs), {}, config_for(2048)), InvalidArgument);
  CHECK_THROWS_AS(eng.process_sample(std::vector<double>{1.0}), InvalidArgument);
}

TEST_CASE("zero filters give silence and -delta[0] inverts") {
  const auto x = random_inputs(1, 3000, 3);
  AncEngine zero(AncFilterSet::zeros(1, 512, kFs), {}, config_for(512));
  for (double y : run(zero, x)) CHECK(y == 0.0);

  auto w = AncFilterSet::zeros(1, 512, kFs);
  w.filters[0].taps[0] = -1.0;
  AncEngine inv(w, {}, config_for(512));
  const auto playback = testutil::random_vector(3000, 4);
  const auto y = run(inv, x, &playback);
  for (std::size_t n = 0; n < y.size(); ++n) CHECK(y[n] == -x[0][n] + playback[n]);
}

TEST_CASE("hybrid output equals direct convolution") {
  for (std::size_t len : {256u, 1024u, 2048u}) {
    const auto w = random_filters(2, len, len);
    const auto x = random_inputs(2, 10 * len, len + 1);
    AncEngine eng(w, {}, config_for(len));
    const auto y = run(eng, x);
    const auto ref = direct_output(w, x);
    double worst = 0.0;
    for (std::size_t n = 0; n < y.size(); ++n) worst = std::max(worst, std::abs(y[n] - ref[n]));
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("tap 0 acts on the current sample") {
  auto w = AncFilterSet::zeros(1, 1024, kFs);
  w.filters[0].taps[0] = 0.5;
  w.filters[0].taps[700] = 0.25;
  AncEngine eng(w, {}, config_for(1024));
  std::vector<std::vector<double>> x(1, std::vector<double>(2000, 0.0));
  x[0][333] = 1.0;
  const auto y = run(eng, x);
  CHECK(y[333] == 0.5);
  CHECK(y[1033] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(y[332] == 0.0);
}

TEST_CASE("background tail worker matches deterministic mode") {
  const auto w = random_filters(3, 2048, 50);
  const auto w2 = random_filters(3, 2048, 60);
  const auto x = random_inputs(3, 12000, 51);
  AncEngine det(w, {}, config_for(2048));
  AncEngine bg(w, {}, config_for(2048), TailMode::kBackground);
  std::vector<double> frame(3);
  double worst = 0.0;
  for (std::size_t n = 0; n < 12000; ++n) {
    if (n == 5000) {
      det.update_filters(w2);
      bg.update_filters(w2);
    }
    for (std::size_t c = 0; c < 3; ++c) frame[c] = x[c][n];
    worst = std::max(worst, std::abs(det.process_sample(frame) - bg.process_sample(frame)));
  }
  CHECK(worst == 0.0);
}

TEST_CASE("updating to the same filters is bit-identical") {
  const auto w = random_filters(2, 1024, 70);
  const auto x = random_inputs(2, 6000, 71);
  AncEngine a(w, {}, config_for(1024)), b(w, {}, config_for(1024));
  std::vector<double> frame(2);
  for (std::size_t n = 0; n < 6000; ++n) {
    if (n == 1234 || n == 4100) b.update_filters(w);
    for (std::size_t c = 0; c < 2; ++c) frame[c] = x[c][n];
    CHECK(a.process_sample(frame) == b.process_sample(frame));
  }
}

TEST_CASE("crossfade from w to -w has no discontinuity") {
  auto w = AncFilterSet::zeros(1, 512, kFs);
  w.filters[0].taps[0] = 1.0;
  auto neg = w;
  neg.filters[0].taps[0] = -1.0;
  std::vector<std::vector<double>> x(1, std::vector<double>(4000));
  for (std::size_t n = 0; n < 4000; ++n) x[0][n] = std::sin(2.0 * std::numbers::pi * 50.0 * n / kFs);
  AncEngine eng(w, {}, config_for(512));
  std::vector<double> y(4000);
  for (std::size_t n = 0; n < 4000; ++n) {
    if (n == 2000) eng.update_filters(neg);
    y[n] = eng.process_sample(std::vector<double>{x[0][n]});
  }
  double peak = 0.0, jump = 0.0;
  for (std::size_t n = 0; n < y.size(); ++n) peak = std::max(peak, std::abs(y[n]));
  for (std::size_t n = 1; n < y.size(); ++n) jump = std::max(jump, std::abs(y[n] - y[n - 1]));
  CHECK(jump <= 2.0 * peak / 128.0 * 4.0);
  CHECK(y[3000] == doctest::Approx(-x[0][3000]));
}

TEST_CASE("update during a crossfade ends on the newest filters") {
  const auto w0 = random_filters(2, 1024, 80), w1 = random_filters(2, 1024, 81), w2 = random_filters(2, 1024, 82);
  const auto x = random_inputs(2, 8000, 83);
  auto cfg = config_for(1024);
  cfg.crossfade_samples = 300;
  AncEngine eng(w0, {}, cfg);
  AncEngine ref(w2, {}, cfg);
  std::vector<double> frame(2);
  double worst = 0.0;
  for (std::size_t n = 0; n < 8000; ++n) {
    if (n == 3000) eng.update_filters(w1);
    if (n == 3100) {
      CHECK(eng.crossfading());
      eng.update_filters(w2);
    }
    for (std::size_t c = 0; c < 2; ++c) frame[c] = x[c][n];
    const double a = eng.process_sample(frame), b = ref.process_sample(frame);
    if (n >= 3400) worst = std::max(worst, std::abs(a - b));
  }
  CHECK_FALSE(eng.crossfading());
  CHECK(worst <= 1e-12);
}

TEST_CASE("AFC with exact feedback estimate recovers the clean references") {
  auto spec = frame_scene(30.0, 3.0);
  spec.feedback_coupling_db = -5.0;
  const auto scene = scene::render_scene(spec);
  filters::OracleWienerConfig oc;
  oc.filter_length = 1024;
  const filters::OracleWienerEstimator est(oc);
  EngineConfig cfg = config_for(1024);
  const auto res = simulate_closed_loop(scene, est, cfg, {});
  double drive = 0.0;
  for (double v : res.emitted.samples) drive = std::max(drive, std::abs(v));
  REQUIRE(drive > 0.01);
  for (std::size_t m = 0; m < scene.num_mics(); ++m) {
    CHECK(nmse_db(res.clean_refs.channels[m], scene.mic_signals.channels[m]) <= -60.0);
  }

  // Without AFC the raw mic signals carry the speaker leakage.
  ClosedLoopOptions off;
  off.afc_enabled = false;
  const auto leaky = simulate_closed_loop(scene, est, cfg, {}, off);
  CHECK(nmse_db(leaky.clean_refs.channels[0], scene.mic_signals.channels[0]) > -30.0);
}

TEST_CASE("closed loop with zero filters leaves the ear signal untouched") {
  const auto scene = scene::render_scene(frame_scene(0.0, 3.0));
  const auto res = simulate_closed_loop(scene, filters::ZeroEstimator(2048), {}, {});
  CHECK(res.residual.samples == scene.ear_signal.samples);
  REQUIRE(res.chunks.size() == 1);
  CHECK(res.chunks[0].reduction_db == 0.0);
  CHECK(res.updates.size() == 5);
}

TEST_CASE("estimator failures are logged and the engine keeps running") {
  struct Failing final : filters::FilterEstimator {
    std::string name() const override { return "failing"; }
    std::size_t filter_length() const override { return 2048; }
    AncFilterSet estimate(const MultiChannelWaveform&, const FirFilter&, const Waveform*) const override {
      throw NumericalError("no convergence");
    }
  };
  const auto scene = scene::render_scene(frame_scene(0.0, 3.0));
  const auto res = simulate_closed_loop(scene, Failing{}, {}, {});
  REQUIRE_FALSE(res.updates.empty());
  for (const auto& u : res.updates) {
    CHECK_FALSE(u.ok);
    CHECK(u.message == "no convergence");
  }
  CHECK(res.residual.samples == scene.ear_signal.samples);

  const auto path = std::filesystem::temp_directory_path() / "ancsim_closed_loop.jsonl";
  res.write_log(path);
  std::ifstream in(path);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == res.updates.size() + res.chunks.size());
}

TEST_CASE("oracle Wiener cancels a frontal anechoic source") {
  const auto scene = scene::render_scene(frame_scene(0.0));
  const filters::OracleWienerEstimator est;
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = simulate_closed_loop(scene, est, {}, {});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MESSAGE("closed loop 4 s scene: " << secs << " s, mean reduction " << mean_reduction(res) << " dB");
  CHECK(mean_reduction(res) >= 20.0);
}

TEST_CASE("AFC improves reduction under strong feedback") {
  auto spec = frame_scene(30.0);
  spec.feedback_coupling_db = -5.0;
  const auto scene = scene::render_scene(spec);
  const filters::OracleWienerEstimator est;
  ClosedLoopOptions off;
  off.afc_enabled = false;
  const double on_db = mean_reduction(simulate_closed_loop(scene, est, {}, {}));
  const double off_db = mean_reduction(simulate_closed_loop(scene, est, {}, {}, off));
  MESSAGE("AFC on " << on_db << " dB, off " << off_db << " dB");
  CHECK(on_db > off_db);
}

TEST_CASE("reduction does not grow with injected latency") {
  const auto scene = scene::render_scene(frame_scene(20.0));
  const filters::OracleWienerEstimator est;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t lat : {1u, 4u, 16u}) {
    EngineConfig cfg;
    cfg.injected_latency_samples = lat;
    const double r = mean_reduction(simulate_closed_loop(scene, est, cfg, {}));
    MESSAGE("latency " << lat << ": " << r << " dB");
    CHECK(r <= prev + 0.3);
    prev = r;
  }
}

TEST_CASE("direct FIR reference matches naive convolution") {
  const auto x = random_inputs(2, 3000, 61);
  const auto w = random_filters(2, 300, 62);
  std::vector<std::vector<double>> taps{w.filters[0].taps, w.filters[1].taps};
  DirectFir fir(taps);
  const auto ref = direct_output(w, x);
  double worst = 0.0;
  for (std::size_t n = 0; n < ref.size(); ++n) {
    const double frame[2] = {x[0][n], x[1][n]};
    worst = std::max(worst, std::abs(fir.process_sample(frame) - ref[n]));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("bench reports every timing and rejects bad options") {
  BenchOptions opts;
  opts.seconds = 0.05;
  opts.repeats = 2;
  const auto row = bench_convolution(512, 128, opts);
  CHECK(row.taps == 512);
  CHECK(row.hybrid.mean_ns > 0.0);
  CHECK(row.direct.mean_ns > 0.0);
  CHECK(row.tail.mean_ns == doctest::Approx(row.hybrid.mean_ns - row.head.mean_ns));
  CHECK_THROWS_AS(bench_convolution(1000, 128, opts), InvalidArgument);
  opts.repeats = 0;
  CHECK_THROWS_AS(bench_convolution(512, 128, opts), InvalidArgument);
}
