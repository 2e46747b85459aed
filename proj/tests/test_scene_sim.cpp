#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "ancsim/dsp/convolution.hpp"
#include "ancsim/error.hpp"
#include "ancsim/io/config.hpp"
#include "ancsim/scene/scene.hpp"
#include "test_util.hpp"

using namespace ancsim;
using namespace ancsim::scene;

namespace {

constexpr int kFs = 22050;

ArrayGeometry left_frame() {
  ArrayGeometry g;
  g.side = Side::kLeft;
  g.ear_position = {0.0, 0.075, 0.0};
  g.speaker_position = {0.015, 0.07, 0.012};
  g.mic_positions = {{0.09, 0.045, 0.02}, {0.06, 0.063, 0.02}, {0.03, 0.067, 0.02}, {-0.035, 0.065, 0.015}};
  return g;
}

NoiseSource source_at(double az, dsp::NoiseKind kind = dsp::NoiseKind::kWhite) {
  NoiseSource s;
  s.azimuth_deg = az;
  s.distance_m = 1.5;
  s.noise.kind = kind;
  return s;
}

// Lag of b relative to a, refined by parabolic interpolation of the
// cross-correlation peak.
double correlation_lag(const std::vector<double>& a, const std::vector<double>& b, std::size_t max_lag) {
  const auto c = dsp::cross_correlate(a, b, max_lag);
  const auto k = static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
  if (k == 0 || k + 1 >= c.size()) return static_cast<double>(k);
  return static_cast<double>(k) + 0.5 * (c[k - 1] - c[k + 1]) / (c[k - 1] - 2.0 * c[k] + c[k + 1]);
}

// Two-sided version: lag of b relative to a in [-max_lag, max_lag].
double signed_lag(const std::vector<double>& a, const std::vector<double>& b, std::size_t max_lag) {
  const auto pos = dsp::cross_correlate(a, b, max_lag);
  const auto neg = dsp::cross_correlate(b, a, max_lag);
  std::vector<double> c;
  for (std::size_t k = max_lag; k > 0; --k) c.push_back(neg[k]);
  c.insert(c.end(), pos.begin(), pos.end());
  const auto k = static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
  double frac = 0.0;
  if (k > 0 && k + 1 < c.size()) frac = 0.5 * (c[k - 1] - c[k + 1]) / (c[k - 1] - 2.0 * c[k] + c[k + 1]);
  return static_cast<double>(k) + frac - static_cast<double>(max_lag);
}

double rms(const std::vector<double>& x) { return std::sqrt(mean_square(x)); }

}  // namespace

TEST_CASE("direction vectors follow the head frame") {
  const auto front = direction_from_angles(0.0, 0.0);
  const auto left = direction_from_angles(270.0, 0.0);
  const auto right = direction_from_angles(90.0, 0.0);
  CHECK(front.x == doctest::Approx(1.0));
  CHECK(left.y == doctest::Approx(1.0));
  CHECK(right.y == doctest::Approx(-1.0));
  CHECK(direction_from_angles(0.0, 90.0).z == doctest::Approx(1.0));
}

TEST_CASE("geometry validation, mirroring and subsets") {
  auto g = left_frame();
  CHECK_NOTHROW(g.validate());
  const auto m = g.mirrored();
  CHECK(m.side == Side::kRight);
  CHECK(m.ear_position.y == doctest::Approx(-0.075));
  CHECK(m.mirrored().mic_positions == g.mic_positions);
  const auto s = g.subset({3, 0});
  REQUIRE(s.num_mics() == 2);
  CHECK(s.mic_positions[0] == g.mic_positions[3]);

  auto far = g;
  far.mic_positions[0] = {0.3, 0.0, 0.0};
  CHECK_THROWS_AS(far.validate(), InvalidArgument);
  auto none = g;
  none.mic_positions.clear();
  CHECK_THROWS_AS(none.validate(), InvalidArgument);
  auto seven = g;
  seven.mic_positions.resize(7, {0.01, 0.0, 0.0});
  CHECK_THROWS_AS(seven.validate(), InvalidArgument);
}

TEST_CASE("geometry JSON roundtrip and missing fields") {
  const auto g = left_frame();
  const auto back = geometry_from_json(to_json(g));
  CHECK(back.mic_positions == g.mic_positions);
  CHECK(back.speaker_position == g.speaker_position);

  auto j = to_json(g);
  j.erase("speaker");
  try {
    geometry_from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("geometry.speaker") != std::string::npos);
  }
}

TEST_CASE("direct path delay of 0.343 m at 22050 Hz") {
  PathModel model;
  const auto h = synthesize_path({0, 0, 0}, {0.343, 0, 0}, model, kFs);
  CHECK(h.size() == 512);
  const auto x = dsp::seeded_noise({dsp::NoiseKind::kBandlimited, 100.0, 1000.0}, 2.0, kFs, 3);
  const auto y = dsp::convolve_same(x.samples, h.taps);
  const double lag = correlation_lag(x.samples, y, 64);
  CHECK(std::abs(lag - 22.05) <= 0.05);

  // Amplitude follows 1/r: DC gain of the direct path equals 1/distance.
  double dc = 0.0;
  for (double t : h.taps) dc += t;
  CHECK(dc == doctest::Approx(1.0 / 0.343).epsilon(1e-9));
}

TEST_CASE("paths are deterministic and causal") {
  PathModel model{PathKind::kReverberant, 0.3, 11, 343.0, 4096};
  const Vec3 a{1.0, 0.5, 0.0}, b{0.05, 0.07, 0.0};
  const auto h1 = synthesize_path(a, b, model, kFs, {7, 2});
  const auto h2 = synthesize_path(a, b, model, kFs, {7, 2});
  CHECK(h1.taps == h2.taps);
  const auto h3 = synthesize_path(a, b, model, kFs, {7, 3});
  CHECK(h1.taps != h3.taps);

  const double delay = distance(a, b) / 343.0 * kFs;
  CHECK(h1.taps[0] == 0.0);
  for (std::size_t n = 0; static_cast<double>(n) <= delay - 16.0; ++n) CHECK(h1.taps[n] == 0.0);

  const auto short_path = synthesize_path({0, 0, 0}, {0.02, 0, 0}, PathModel{}, kFs);
  CHECK(short_path.taps[0] == 0.0);
}

TEST_CASE("path errors") {
  CHECK_THROWS_AS(synthesize_path({0, 0, 0}, {0, 0, 0}, PathModel{}, kFs), InvalidArgument);
  PathModel tiny;
  tiny.path_length_taps = 64;
  CHECK_THROWS_AS(synthesize_path({0, 0, 0}, {2.0, 0, 0}, tiny, kFs), InvalidArgument);
  PathModel bad;
  bad.path_length_taps = 32;
  CHECK_THROWS_AS(synthesize_path({0, 0, 0}, {0.1, 0, 0}, bad, kFs), InvalidArgument);
  PathModel anechoic_with_rt;
  anechoic_with_rt.rt60_s = 0.3;
  CHECK_THROWS_AS(anechoic_with_rt.validate(), InvalidArgument);
}

TEST_CASE("reverberant tail decays at the requested rate") {
  PathModel model{PathKind::kReverberant, 0.5, 5, 343.0, 16384};
  const auto h = synthesize_path({1.0, 0.0, 0.0}, {0.0, 0.075, 0.0}, model, kFs);
  auto window_energy = [&](double t0, double t1) {
    double e = 0.0;
    for (auto n = static_cast<std::size_t>(t0 * kFs); n < static_cast<std::size_t>(t1 * kFs); ++n) {
      e += h.taps[n] * h.taps[n];
    }
    return e;
  };
  CHECK(testutil::db(window_energy(0.5, 0.6) / window_energy(0.0, 0.01)) <= -55.0);

  // Schroeder backward integration; slope fitted between -5 and -25 dB.
  std::vector<double> edc(h.size());
  double acc = 0.0;
  for (std::size_t n = h.size(); n-- > 0;) {
    acc += h.taps[n] * h.taps[n];
    edc[n] = acc;
  }
  // Start the curve at the tail onset to exclude the direct sound.
  const auto onset = static_cast<std::size_t>(std::ceil(distance({1.0, 0.0, 0.0}, {0.0, 0.075, 0.0}) / 343.0 * kFs)) +
                     static_cast<std::size_t>(std::lround(0.002 * kFs));
  std::vector<double> t, level;
  for (std::size_t n = onset; n < h.size(); ++n) {
    const double l = testutil::db(edc[n] / edc[onset]);
    if (l <= -5.0 && l >= -25.0) {
      t.push_back(static_cast<double>(n) / kFs);
      level.push_back(l);
    }
  }
  REQUIRE(t.size() > 100);
  double mt = 0.0, ml = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    mt += t[i];
    ml += level[i];
  }
  mt /= static_cast<double>(t.size());
  ml /= static_cast<double>(t.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    num += (t[i] - mt) * (level[i] - ml);
    den += (t[i] - mt) * (t[i] - mt);
  }
  const double rt60 = -60.0 / (num / den);
  CHECK(std::abs(rt60 - 0.5) <= 0.15 * 0.5);
}

TEST_CASE("render shape and determinism") {
  const auto g = left_frame();
  const auto r1 = render_scene(g, {source_at(30.0)}, PathModel{}, 10.0, 5);
  CHECK(r1.mic_signals.num_channels() == 4);
  CHECK(r1.mic_signals.num_samples() == 220500);
  CHECK(r1.ear_signal.size() == 220500);
  CHECK(r1.true_feedback.size() == 4);
  CHECK(r1.true_feedback[0].size() == 256);
  CHECK(r1.source_to_mic_paths.size() == 4);
  CHECK(r1.source_to_ear_paths.size() == 1);
  const auto r2 = render_scene(g, {source_at(30.0)}, PathModel{}, 10.0, 5);
  CHECK(r1.mic_signals.channels == r2.mic_signals.channels);
  CHECK(r1.ear_signal.samples == r2.ear_signal.samples);
}

TEST_CASE("render rejects short durations and empty source lists") {
  const auto g = left_frame();
  CHECK_THROWS_AS(render_scene(g, {source_at(0.0)}, PathModel{}, 2.5, 1), InvalidArgument);
  CHECK_THROWS_AS(render_scene(g, {}, PathModel{}, 5.0, 1), InvalidArgument);
  auto near = source_at(0.0);
  near.distance_m = 0.2;
  CHECK_THROWS_AS(render_scene(g, {near}, PathModel{}, 5.0, 1), InvalidArgument);
}

TEST_CASE("secondary path is causal with at least one sample of delay") {
  const auto r = render_scene(left_frame(), {source_at(0.0)}, PathModel{}, 3.0, 1);
  CHECK(r.true_secondary.taps[0] == 0.0);
  CHECK(energy(r.true_secondary.view()) > 0.0);
}

TEST_CASE("ear lags a collinear upstream mic by the geometric delay") {
  ArrayGeometry g;
  g.ear_position = {0.0, 0.0, 0.0};
  g.speaker_position = {0.0, 0.02, 0.0};
  g.mic_positions = {{0.06, 0.0, 0.0}};
  auto src = source_at(0.0, dsp::NoiseKind::kBandlimited);
  const auto r = render_scene(g, {src}, PathModel{}, 3.0, 2);
  const double expected = (distance(src.position(), g.ear_position) - distance(src.position(), g.mic_positions[0])) /
                          343.0 * kFs;
  const double lag = correlation_lag(r.mic_signals.channels[0], r.ear_signal.samples, 32);
  CHECK(std::abs(lag - expected) <= 0.1);
}

TEST_CASE("silent second source leaves the render unchanged") {
  const auto g = left_frame();
  auto quiet = source_at(120.0);
  quiet.gain_db = -std::numeric_limits<double>::infinity();
  const auto one = render_scene(g, {source_at(30.0)}, PathModel{}, 3.0, 9);
  const auto two = render_scene(g, {source_at(30.0), quiet}, PathModel{}, 3.0, 9);
  CHECK(one.mic_signals.channels == two.mic_signals.channels);
  CHECK(one.ear_signal.samples == two.ear_signal.samples);
}

TEST_CASE("renders superpose") {
  const auto g = left_frame();
  PathModel model{PathKind::kReverberant, 0.3, 4, 343.0, 2048};
  auto a = source_at(30.0, dsp::NoiseKind::kPink);
  auto b = source_at(200.0);
  a.id = 0;
  b.id = 1;
  b.gain_db = -3.0;
  const auto both = render_scene(g, {a, b}, model, 3.0, 12);
  const auto ra = render_scene(g, {a}, model, 3.0, 12);
  const auto rb = render_scene(g, {b}, model, 3.0, 12);
  double err = 0.0;
  for (std::size_t m = 0; m < 4; ++m) {
    for (std::size_t n = 0; n < both.mic_signals.num_samples(); ++n) {
      err = std::max(err, std::abs(both.mic_signals.channels[m][n] - ra.mic_signals.channels[m][n] -
                                   rb.mic_signals.channels[m][n]));
    }
  }
  for (std::size_t n = 0; n < both.ear_signal.size(); ++n) {
    err = std::max(err, std::abs(both.ear_signal.samples[n] - ra.ear_signal.samples[n] - rb.ear_signal.samples[n]));
  }
  CHECK(err <= 1e-10);
}

TEST_CASE("feedback paths are scaled to the coupling level") {
  SceneSpec spec;
  spec.geometry = left_frame();
  spec.sources = {source_at(0.0)};
  const auto paths = synthesize_speaker_paths(spec);
  std::size_t nearest = 0;
  for (std::size_t m = 1; m < 4; ++m) {
    if (distance(spec.geometry.speaker_position, spec.geometry.mic_positions[m]) <
        distance(spec.geometry.speaker_position, spec.geometry.mic_positions[nearest])) {
      nearest = m;
    }
  }
  const double ratio = testutil::db(energy(paths.feedback[nearest].view()) / energy(paths.secondary.view()));
  CHECK(ratio == doctest::Approx(-20.0).epsilon(1e-9));
  for (std::size_t m = 0; m < 4; ++m) CHECK(energy(paths.feedback[m].view()) <= energy(paths.feedback[nearest].view()));

  spec.feedback_coupling_db = -std::numeric_limits<double>::infinity();
  for (const auto& f : synthesize_speaker_paths(spec).feedback) CHECK(energy(f.view()) == 0.0);
}

TEST_CASE("doa sweep with a single angle equals a direct render") {
  SceneSpec spec;
  spec.geometry = left_frame();
  spec.sources = {source_at(90.0)};
  spec.duration_s = 3.0;
  const auto sweep = doa_sweep(spec, {0.0});
  REQUIRE(sweep.size() == 1);
  spec.sources[0].azimuth_deg = 0.0;
  const auto direct = render_scene(spec);
  CHECK(sweep[0].mic_signals.channels == direct.mic_signals.channels);
  CHECK(sweep[0].ear_signal.samples == direct.ear_signal.samples);
  CHECK_THROWS_AS(doa_sweep(spec, {}), InvalidArgument);
}

TEST_CASE("doa sweep: 36 renders with continuously varying mic-to-ear delays") {
  SceneSpec spec;
  spec.geometry = left_frame().subset({0});
  spec.sources = {source_at(0.0, dsp::NoiseKind::kBandlimited)};
  spec.duration_s = 3.0;
  const auto angles = even_azimuths(36);
  const auto renders = doa_sweep(spec, angles);
  REQUIRE(renders.size() == 36);
  std::vector<double> measured, expected;
  for (std::size_t i = 0; i < 36; ++i) {
    const double lag = signed_lag(renders[i].mic_signals.channels[0], renders[i].ear_signal.samples, 16);
    auto src = spec.sources[0];
    src.azimuth_deg = angles[i];
    expected.push_back((distance(src.position(), spec.geometry.ear_position) -
                        distance(src.position(), spec.geometry.mic_positions[0])) / 343.0 * kFs);
    CHECK(std::abs(lag - expected.back()) <= 0.1);
    measured.push_back(lag);
  }
  for (std::size_t i = 0; i < 36; ++i) {
    const std::size_t j = (i + 1) % 36;
    CHECK(std::abs((measured[j] - measured[i]) - (expected[j] - expected[i])) <= 0.2);
  }
}

TEST_CASE("mirrored geometry swaps the sides of the sweep") {
  SceneSpec left;
  left.geometry = left_frame();
  left.sources = {source_at(0.0)};
  left.duration_s = 3.0;
  left.model = PathModel{PathKind::kReverberant, 0.3, 3, 343.0, 2048};
  SceneSpec right = left;
  right.geometry = left.geometry.mirrored();
  for (double theta : {0.0, 40.0, 130.0, 270.0}) {
    const auto rl = doa_sweep(left, {theta})[0];
    const auto rr = doa_sweep(right, {std::fmod(360.0 - theta, 360.0)})[0];
    for (std::size_t m = 0; m < 4; ++m) {
      CHECK(rms(rl.mic_signals.channels[m]) == doctest::Approx(rms(rr.mic_signals.channels[m])).epsilon(1e-9));
    }
    CHECK(rms(rl.ear_signal.samples) == doctest::Approx(rms(rr.ear_signal.samples)).epsilon(1e-9));
  }
}

TEST_CASE("scene config parsing") {
  const auto j = io::parse_config(R"({
    "duration_s": 4, "seed": 3,
    "geometry": {"ear": [0, 0.075, 0], "speaker": [0.015, 0.07, 0.012], "mics": [[0.05, 0.06, 0.02]]},
    "path_model": {"kind": "reverberant", "rt60_s": 0.3},
    "feedback_coupling_db": "-inf",
    "sources": [{"azimuth_deg": 45, "noise": {"kind": "bandlimited", "low_hz": 150}}]
  })");
  const auto spec = scene_spec_from_json(j);
  CHECK(spec.duration_s == 4.0);
  CHECK(spec.model.kind == PathKind::kReverberant);
  CHECK(spec.model.path_length_taps == 4096);
  CHECK(std::isinf(spec.feedback_coupling_db));
  CHECK(spec.sources[0].noise.low_hz == 150.0);
  const auto again = scene_spec_from_json(to_json(spec));
  CHECK(to_json(again) == to_json(spec));

  auto missing = j;
  missing.erase("geometry");
  try {
    scene_spec_from_json(missing);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("scene.geometry") != std::string::npos);
  }
  auto bad_kind = j;
  bad_kind["sources"][0]["noise"]["kind"] = "brown";
  CHECK_THROWS_AS(scene_spec_from_json(bad_kind), ConfigError);
}
