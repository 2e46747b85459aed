#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace ancsim::eval {

struct EvalReport {
  std::string label;  // scene name
  std::string mode;   // "offline" or "closed_loop"
  std::vector<double> chunk_start_s;
  std::vector<double> chunk_reductions_db;
  std::vector<std::string> failures;  // estimator errors, one per failed chunk
  double mean_db = 0.0;
  double std_db = 0.0;
  nlohmann::json provenance;

  // Recomputes mean and sample standard deviation from the chunk list.
  void finalize();
};

// One axis value of a sweep, aggregated over scenes by the mean of the
// per-scene means.
struct SweepPoint {
  std::string axis_label;  // e.g. "2048" or "left:270"
  double axis_value = 0.0;
  std::vector<EvalReport> scenes;
  double mean_db = 0.0;
  double std_db = 0.0;

  void finalize();
};

struct SweepResult {
  std::string kind;
  std::string axis;
  std::vector<SweepPoint> points;
  nlohmann::json provenance;

  std::vector<double> means() const;
};

nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const SweepPoint& p);
nlohmann::json to_json(const SweepResult& s);

// kind,axis,axis_value,scene,chunk,chunk_start_s,reduction_db per chunk.
std::string to_csv(const SweepResult& s);
// Whitespace columns: axis_value mean_db std_db, with a '#' header line.
std::string to_plot_data(const SweepResult& s);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ancsim::eval
