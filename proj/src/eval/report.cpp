#include "ancsim/eval/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "ancsim/error.hpp"

namespace ancsim::eval {
namespace {

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  if (v.empty()) {
    mean = sd = std::nan("");
    return;
  }
  mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  sd = v.size() > 1 ? std::sqrt(acc / static_cast<double>(v.size() - 1)) : 0.0;
}

// JSON has no infinities; keep them readable as strings.
nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace

void EvalReport::finalize() { mean_std(chunk_reductions_db, mean_db, std_db); }

void SweepPoint::finalize() {
  std::vector<double> v;
  for (const auto& s : scenes) v.push_back(s.mean_db);
  mean_std(v, mean_db, std_db);
}

std::vector<double> SweepResult::means() const {
  std::vector<double> out;
  for (const auto& p : points) out.push_back(p.mean_db);
  return out;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json chunks = nlohmann::json::array();
  for (std::size_t i = 0; i < r.chunk_reductions_db.size(); ++i) {
    chunks.push_back({{"start_s", r.chunk_start_s.at(i)}, {"reduction_db", number(r.chunk_reductions_db[i])}});
  }
  return {{"label", r.label},       {"mode", r.mode},           {"mean_db", number(r.mean_db)},
          {"std_db", number(r.std_db)}, {"chunks", chunks},     {"failures", r.failures},
          {"provenance", r.provenance}};
}

nlohmann::json to_json(const SweepPoint& p) {
  nlohmann::json scenes = nlohmann::json::array();
  for (const auto& s : p.scenes) scenes.push_back(to_json(s));
  return {{"axis_label", p.axis_label},
          {"axis_value", p.axis_value},
          {"mean_db", number(p.mean_db)},
          {"std_db", number(p.std_db)},
          {"scenes", scenes}};
}

nlohmann::json to_json(const SweepResult& s) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : s.points) points.push_back(to_json(p));
  return {{"kind", s.kind}, {"axis", s.axis}, {"points", points}, {"provenance", s.provenance}};
}

std::string to_csv(const SweepResult& s) {
  std::ostringstream os;
  os << "kind,axis,axis_label,axis_value,scene,chunk,chunk_start_s,reduction_db\n";
  for (const auto& p : s.points) {
    for (const auto& r : p.scenes) {
      for (std::size_t i = 0; i < r.chunk_reductions_db.size(); ++i) {
        os << s.kind << ',' << s.axis << ',' << p.axis_label << ',' << fmt(p.axis_value) << ',' << r.label << ','
           << i << ',' << fmt(r.chunk_start_s[i]) << ',' << fmt(r.chunk_reductions_db[i]) << '\n';
      }
    }
  }
  return os.str();
}

std::string to_plot_data(const SweepResult& s) {
  std::ostringstream os;
  os << "# " << s.kind << ": " << s.axis << " mean_db std_db label\n";
  for (const auto& p : s.points) {
    os << fmt(p.axis_value) << ' ' << fmt(p.mean_db) << ' ' << fmt(p.std_db) << ' ' << p.axis_label << '\n';
  }
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace ancsim::eval
