// ancsim: scene synthesis, path measurement, closed-loop runs, sweeps and
// convolution benchmarks from the command line.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ancsim/engine/bench.hpp"
#include "ancsim/engine/closed_loop.hpp"
#include "ancsim/error.hpp"
#include "ancsim/eval/harness.hpp"
#include "ancsim/io/config.hpp"
#include "ancsim/io/hash.hpp"
#include "ancsim/io/path_file.hpp"
#include "ancsim/io/wav.hpp"
#include "ancsim/scene/scene.hpp"
#include "ancsim/sysid/estimate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ancsim;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

// A scene plus the evaluation settings that go with it.
struct Target {
  std::string name;
  scene::SceneSpec spec;
  eval::EvalSettings settings;
  json inputs;  // content hashes of the files that produced it
};

json load(const fs::path& p) {
  if (!fs::exists(p)) throw IoError("no such file: " + p.string());
  return io::load_config(p);
}

std::string base_dir(const fs::path& p) {
  const auto parent = p.parent_path();
  return parent.empty() ? "." : parent.string();
}

// Accepts a scene config, a suite config (picking `selector`, a name or an
// index) or a scene bundle directory.
Target resolve_target(const fs::path& path, const std::string& selector) {
  const fs::path file = fs::is_directory(path) ? path / "scene.json" : path;
  const json j = load(file);
  Target t;
  t.inputs = {{file.filename().string(), io::sha256_file(file)}};
  if (j.is_object() && j.contains("scenes")) {
    const auto suite = eval::suite_from_json(j, base_dir(file));
    const eval::SuiteScene* pick = nullptr;
    for (const auto& sc : suite.scenes) {
      if (sc.name == selector) pick = &sc;
    }
    if (!pick) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(selector, &used);
        if (used != selector.size()) throw std::invalid_argument(selector);
      } catch (const std::logic_error&) {
        throw ConfigError("suite has no scene named '" + selector + "'");
      }
      if (idx >= suite.scenes.size()) throw ConfigError("scene index " + selector + " out of range");
      pick = &suite.scenes[idx];
    }
    t.name = pick->name;
    t.spec = pick->spec;
    t.settings = suite.settings;
    return t;
  }
  t.spec = scene::scene_spec_from_json(j, base_dir(file));
  t.name = file.stem().string();
  if (j.contains("eval")) t.settings = eval::eval_settings_from_json(j.at("eval"));
  return t;
}

void write_json(const fs::path& p, const json& j) { eval::write_text(p, j.dump(2) + "\n"); }

void print_sweep(const eval::SweepResult& r) {
  std::printf("%-14s %10s %10s\n", r.axis.c_str(), "mean_db", "std_db");
  for (const auto& p : r.points) std::printf("%-14s %10.3f %10.3f\n", p.axis_label.c_str(), p.mean_db, p.std_db);
}

// ---- scene ----------------------------------------------------------------

struct SceneArgs {
  std::string config;
  std::string out;
  std::string selector = "0";
  std::optional<std::uint64_t> seed;
};

int cmd_scene(const SceneArgs& a) {
  auto t = resolve_target(a.config, a.selector);
  if (a.seed) t.spec.seed = *a.seed;
  const auto r = scene::render_scene(t.spec);
  const fs::path out = a.out;
  fs::create_directories(out);
  io::write_wav(out / "mics.wav", r.mic_signals);
  io::write_wav(out / "ear.wav", r.ear_signal);
  io::write_path_file(out / "secondary.ancp", {r.true_secondary});
  io::write_path_file(out / "feedback.ancp", r.true_feedback);
  write_json(out / "scene.json", scene::to_json(t.spec));
  json files = json::object();
  for (const char* f : {"mics.wav", "ear.wav", "secondary.ancp", "feedback.ancp", "scene.json"}) {
    files[f] = io::sha256_file(out / f);
  }
  write_json(out / "manifest.json", {{"name", t.name}, {"seed", t.spec.seed}, {"inputs", t.inputs}, {"files", files}});
  std::printf("wrote %s: %zu mics, %.2f s at %d Hz\n", out.string().c_str(), r.num_mics(),
              static_cast<double>(r.ear_signal.size()) / r.sample_rate_hz(), r.sample_rate_hz());
  return kOk;
}

// ---- sysid ----------------------------------------------------------------

struct SysidArgs {
  std::string bundle;
  std::string type = "secondary";
  std::string out;
  double snr_db = std::numeric_limits<double>::infinity();
  int sweeps = 2;
  double duration_s = 20.0;
  double f1_hz = 20.0;
  std::uint64_t noise_seed = 0;
};

int cmd_sysid(const SysidArgs& a) {
  const fs::path bundle = a.bundle;
  const auto scene_json = load(bundle / "scene.json");
  const int fs = scene_json.value("fs", kDefaultSampleRate);
  sysid::SysidOptions opts;
  opts.num_sweeps = a.sweeps;
  opts.duration_s = a.duration_s;
  opts.f1_hz = a.f1_hz;
  opts.f2_hz = fs / 2.0;
  const fs::path out = a.out;
  fs::create_directories(out);

  const bool secondary = a.type == "secondary";
  const auto truth = io::read_path_file(bundle / (secondary ? "secondary.ancp" : "feedback.ancp"));
  sysid::SimulatedPlayback channel(truth, a.snr_db, a.noise_seed);
  FirFilterBank est;
  if (secondary) {
    est = {sysid::estimate_secondary_path(channel, opts, fs)};
  } else {
    est = sysid::estimate_feedback_paths(channel, opts, fs);
  }
  for (std::size_t i = 0; i < est.size(); ++i) {
    const auto name = secondary ? std::string("secondary_est.ancp") : "feedback_est_" + std::to_string(i) + ".ancp";
    io::write_path_file(out / name, {est[i]});
    std::printf("%-22s %5zu taps  NMSE vs truth %8.2f dB\n", name.c_str(), est[i].size(),
                nmse_db(est[i].view(), truth[i].view()));
  }
  return kOk;
}

// ---- run ------------------------------------------------------------------

struct RunArgs {
  std::string scene;
  std::string selector = "0";
  std::string config;
  std::string estimator = "wiener-oracle";
  std::string mode;
  std::optional<std::size_t> taps, latency;
  std::string out;
  std::string golden;
  bool bless = false;
};

int cmd_run(const RunArgs& a) {
  auto t = resolve_target(a.scene, a.selector);
  if (!a.config.empty()) {
    const auto j = load(a.config);
    t.settings = eval::eval_settings_from_json(j.contains("eval") ? j.at("eval") : j, "eval");
    t.inputs[fs::path(a.config).filename().string()] = io::sha256_file(a.config);
  }
  t.settings.estimator = a.estimator == "zero" ? "zero" : "oracle_wiener";
  if (!a.mode.empty()) t.settings.mode = eval::eval_mode_from_string(a.mode);
  if (a.taps) t.settings.engine.filter_length = *a.taps;
  if (a.latency) t.settings.engine.injected_latency_samples = *a.latency;
  try {
    t.settings.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }

  const auto render = scene::render_scene(t.spec);
  const auto est = filters::make_estimator(t.settings.estimator, t.settings.estimator_config());
  auto report = eval::run_chunked_eval(render, *est, t.settings, t.name);
  report.provenance["inputs"] = t.inputs;

  if (!a.out.empty()) {
    const fs::path out = a.out;
    fs::create_directories(out);
    engine::ClosedLoopOptions loop_opts;
    loop_opts.protocol = t.settings.protocol;
    const auto loop = engine::simulate_closed_loop(render, *est, t.settings.engine, t.settings.schedule(), loop_opts);
    io::write_wav(out / "residual.wav", loop.residual);
    io::write_wav(out / "primary.wav", loop.primary);
    io::write_wav(out / "drive.wav", loop.drive);
    loop.write_log(out / "log.jsonl");
    write_json(out / "report.json", eval::to_json(report));
  }
  std::printf("%s [%s, %s]: mean %.3f dB, std %.3f dB over %zu chunks, %zu estimator failures\n", t.name.c_str(),
              report.mode.c_str(), a.estimator.c_str(), report.mean_db, report.std_db,
              report.chunk_reductions_db.size(), report.failures.size());

  if (a.golden.empty()) return kOk;
  const json record = {{"scene", t.name},
                       {"estimator", a.estimator},
                       {"mode", report.mode},
                       {"mean_db", report.mean_db},
                       {"tolerance_db", 0.5},
                       {"settings", eval::to_json(t.settings)}};
  if (a.bless) {
    write_json(a.golden, record);
    std::printf("blessed %s\n", a.golden.c_str());
    return kOk;
  }
  const auto g = load(a.golden);
  const double want = io::require_as<double>(g, "mean_db", "golden");
  const double tol = io::value_or<double>(g, "tolerance_db", 0.5, "golden");
  const double diff = report.mean_db - want;
  std::printf("golden %.3f dB, difference %+.3f dB (tolerance %.2f)\n", want, diff, tol);
  if (!(std::abs(diff) <= tol)) {
    std::fprintf(stderr, "error: result drifted from the golden value\n");
    return kNumerical;
  }
  return kOk;
}

// ---- sweep ----------------------------------------------------------------

struct SweepArgs {
  std::string kind;
  std::string suite;
  std::string out;
  bool plot = false;
  std::vector<std::size_t> values;
  std::size_t angles = 36;
  bool one_side = false;
  std::string selector = "0";
};

int cmd_sweep(const SweepArgs& a) {
  const fs::path path = a.suite;
  const auto suite = eval::suite_from_json(load(path), base_dir(path));
  const auto& base = suite.settings;
  eval::SweepResult r;
  if (a.kind == "doa") {
    r = eval::sweep_doa(resolve_target(path, a.selector).spec, base, a.angles, !a.one_side);
  } else if (a.kind == "sources") {
    r = a.values.empty() ? eval::sweep_sources(suite, base) : eval::sweep_sources(suite, base, a.values);
  } else {
    const auto scenes = eval::render_suite(suite);
    if (a.kind == "taps") {
      r = a.values.empty() ? eval::sweep_taps(scenes, base) : eval::sweep_taps(scenes, base, a.values);
    } else if (a.kind == "latency") {
      r = a.values.empty() ? eval::sweep_latency(scenes, base) : eval::sweep_latency(scenes, base, a.values);
    } else {
      r = eval::sweep_mics(scenes, base, a.values);
    }
  }
  r.provenance["suite"] = suite.name;
  r.provenance["suite_sha256"] = io::sha256_file(path);
  print_sweep(r);
  if (!a.out.empty()) {
    const fs::path out = a.out;
    write_json(out / (a.kind + ".json"), eval::to_json(r));
    eval::write_text(out / (a.kind + ".csv"), eval::to_csv(r));
    if (a.plot) eval::write_text(out / (a.kind + ".dat"), eval::to_plot_data(r));
  } else if (a.plot) {
    std::cout << eval::to_plot_data(r);
  }
  return kOk;
}

// ---- bench ----------------------------------------------------------------

struct BenchArgs {
  std::vector<std::size_t> taps{256, 1024, 2048, 4096};
  std::size_t block = 128;
  engine::BenchOptions options;
  std::string out;
};

int cmd_bench(const BenchArgs& a) {
  json rows = json::array();
  std::printf("%6s %5s | %22s | %22s | %22s | %22s\n", "taps", "B", "hybrid ns/sample", "head", "tail (amortized)",
              "direct");
  for (std::size_t taps : a.taps) {
    const auto row = engine::bench_convolution(taps, a.block, a.options);
    auto cell = [](const engine::Timing& t) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%9.1f +- %7.1f", t.mean_ns, t.std_ns);
      return std::string(buf);
    };
    std::printf("%6zu %5zu | %22s | %22s | %22s | %22s\n", taps, a.block, cell(row.hybrid).c_str(),
                cell(row.head).c_str(), cell(row.tail).c_str(), cell(row.direct).c_str());
    auto tj = [](const engine::Timing& t) { return json{{"mean_ns", t.mean_ns}, {"std_ns", t.std_ns}}; };
    rows.push_back({{"taps", taps},
                    {"block", a.block},
                    {"channels", row.channels},
                    {"hybrid", tj(row.hybrid)},
                    {"head", tj(row.head)},
                    {"tail", tj(row.tail)},
                    {"direct", tj(row.direct)}});
  }
  if (!a.out.empty()) write_json(a.out, {{"repeats", a.options.repeats}, {"seconds", a.options.seconds}, {"rows", rows}});
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feedforward ANC simulation: scenes, path measurement, runs, sweeps and benchmarks"};
  app.require_subcommand(1);

  SceneArgs scene_a;
  auto* sc = app.add_subcommand("scene", "Render a scene bundle (WAV signals plus path sidecars)");
  sc->add_option("config", scene_a.config, "Scene or suite config (JSON)")->required();
  sc->add_option("--out", scene_a.out, "Bundle directory")->required();
  sc->add_option("--seed", scene_a.seed, "Override the scene seed");
  sc->add_option("--scene", scene_a.selector, "Suite scene name or index");

  SysidArgs sysid_a;
  auto* si = app.add_subcommand("sysid", "Measure paths of a scene bundle with exponential sine sweeps");
  si->add_option("bundle", sysid_a.bundle, "Scene bundle directory")->required();
  si->add_option("--type", sysid_a.type, "Path to measure")->check(CLI::IsMember({"secondary", "feedback"}));
  si->add_option("--out", sysid_a.out, "Output directory")->required();
  si->add_option("--snr-db", sysid_a.snr_db, "Measurement SNR (default noiseless)");
  si->add_option("--sweeps", sysid_a.sweeps, "Number of averaged sweeps");
  si->add_option("--duration", sysid_a.duration_s, "Sweep duration in seconds");
  si->add_option("--f1", sysid_a.f1_hz, "Sweep start frequency in Hz");
  si->add_option("--noise-seed", sysid_a.noise_seed, "Measurement noise seed");

  RunArgs run_a;
  auto* ru = app.add_subcommand("run", "Chunked evaluation of one scene, with residual audio and a JSONL log");
  ru->add_option("target", run_a.scene, "Scene config, suite config or bundle directory")->required();
  ru->add_option("--scene", run_a.selector, "Suite scene name or index");
  ru->add_option("--config", run_a.config, "Evaluation settings (JSON)");
  ru->add_option("--estimator", run_a.estimator, "Filter estimator")->check(CLI::IsMember({"wiener-oracle", "zero"}));
  ru->add_option("--mode", run_a.mode, "offline or closed_loop")->check(CLI::IsMember({"offline", "closed_loop"}));
  ru->add_option("--taps", run_a.taps, "Override the filter length");
  ru->add_option("--latency", run_a.latency, "Override the injected latency in samples");
  ru->add_option("--out", run_a.out, "Output directory for residual WAVs, log and report");
  ru->add_option("--golden", run_a.golden, "Golden report to compare against");
  ru->add_flag("--bless", run_a.bless, "Rewrite the golden report instead of checking it");

  SweepArgs sweep_a;
  auto* sw = app.add_subcommand("sweep", "Run an experiment sweep over a scene suite");
  sw->add_option("kind", sweep_a.kind, "Sweep kind")
      ->required()
      ->check(CLI::IsMember({"taps", "latency", "doa", "mics", "sources"}));
  sw->add_option("suite", sweep_a.suite, "Suite config (JSON)")->required();
  sw->add_option("--out", sweep_a.out, "Output directory for JSON and CSV reports");
  sw->add_flag("--plot-data", sweep_a.plot, "Also emit gnuplot-ready columns");
  sw->add_option("--values", sweep_a.values, "Axis values (taps, latencies, mic counts or source counts)");
  sw->add_option("--angles", sweep_a.angles, "Number of DOA angles");
  sw->add_flag("--one-side", sweep_a.one_side, "DOA sweep for the base side only");
  sw->add_option("--scene", sweep_a.selector, "Base scene of the DOA sweep");

  BenchArgs bench_a;
  auto* be = app.add_subcommand("bench", "Per-sample cost of hybrid versus direct convolution");
  be->add_option("--taps", bench_a.taps, "Filter lengths")->delimiter(',');
  be->add_option("--block", bench_a.block, "Block size B");
  be->add_option("--channels", bench_a.options.channels, "Reference channels");
  be->add_option("--seconds", bench_a.options.seconds, "Signal length per repeat");
  be->add_option("--repeats", bench_a.options.repeats, "Repeats for the spread estimate");
  be->add_option("--out", bench_a.out, "JSON output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*sc) return cmd_scene(scene_a);
    if (*si) return cmd_sysid(sysid_a);
    if (*ru) return cmd_run(run_a);
    if (*sw) return cmd_sweep(sweep_a);
    if (*be) return cmd_bench(bench_a);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "invalid argument: %s\n", e.what());
    return kConfig;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kNumerical;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kIo;
  }
  return kOk;
}
