#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ancsim/engine/closed_loop.hpp"
#include "ancsim/eval/metric.hpp"
#include "ancsim/eval/report.hpp"
#include "ancsim/filters/estimator.hpp"
#include "ancsim/scene/scene.hpp"

namespace ancsim::eval {

enum class EvalMode { kOffline, kClosedLoop };

std::string to_string(EvalMode mode);
EvalMode eval_mode_from_string(const std::string& name);

struct EvalSettings {
  EvalProtocol protocol;
  engine::EngineConfig engine;
  EvalMode mode = EvalMode::kOffline;
  std::string estimator = "oracle_wiener";
  std::optional<double> beta;
  double solver_tolerance = 1e-8;
  double update_period_s = 0.2;  // closed loop only

  engine::UpdateSchedule schedule() const;
  filters::OracleWienerConfig estimator_config() const;
  void validate() const;
};

nlohmann::json to_json(const EvalSettings& s);
// Missing fields keep their defaults.
EvalSettings eval_settings_from_json(const nlohmann::json& j, const std::string& where = "eval");

// Offline: for chunk k the filters are estimated from the L_N context ending
// application_delay before the chunk and applied to the feedback-free
// recording; the chunk is scored in steady state. Closed loop: the chunk
// reductions logged by simulate_closed_loop.
EvalReport run_chunked_eval(const scene::SceneRender& scene, const filters::FilterEstimator& estimator,
                            const EvalSettings& settings, const std::string& label = "scene",
                            const engine::ClosedLoopOptions& loop_options = {});

struct SuiteScene {
  std::string name;
  scene::SceneSpec spec;
};

struct Suite {
  std::string name;
  std::vector<SuiteScene> scenes;
  EvalSettings settings;
};

// {"name", "eval": {...}, "scenes": [{"name", "scene": {...}}]}; relative
// geometry paths resolve against the suite file's directory.
Suite load_suite(const std::filesystem::path& path);
Suite suite_from_json(const nlohmann::json& j, const std::string& base_dir);

struct RenderedScene {
  std::string name;
  scene::SceneRender render;
};
std::vector<RenderedScene> render_suite(const Suite& suite);

// Keeps the listed mics, with their signals and feedback paths.
scene::SceneRender select_mics(const scene::SceneRender& scene, const std::vector<std::size_t>& mics);

// One scene evaluation per (axis value, scene); scenes run in parallel.
SweepResult sweep_taps(const std::vector<RenderedScene>& scenes, const EvalSettings& base,
                       const std::vector<std::size_t>& lengths = {512, 1024, 2048, 4096});
SweepResult sweep_latency(const std::vector<RenderedScene>& scenes, const EvalSettings& base,
                          const std::vector<std::size_t>& latencies = {1, 2, 4, 8, 16});
// Rotates the first source of `base` over the azimuths, for the base side
// and, when `both_sides`, for the mirrored geometry at mirrored azimuths.
SweepResult sweep_doa(const scene::SceneSpec& base, const EvalSettings& settings, std::size_t num_angles = 36,
                      bool both_sides = true);
// For each count, every subset of that size is scored by its suite mean and
// the best subset is reported.
SweepResult sweep_mics(const std::vector<RenderedScene>& scenes, const EvalSettings& base,
                       const std::vector<std::size_t>& counts = {});
// Adds sources at fixed bearing offsets to each suite scene.
SweepResult sweep_sources(const Suite& suite, const EvalSettings& base, const std::vector<std::size_t>& counts = {1, 2, 3});

// Bearing offsets (degrees) of the extra sources used by sweep_sources.
inline constexpr double kExtraSourceOffsetsDeg[] = {0.0, 125.0, 235.0};

}  // namespace ancsim::eval
