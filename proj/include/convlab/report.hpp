#pragma once

#include "convlab/convexity.hpp"
#include "convlab/models.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace convlab {

inline constexpr const char* kSchemaVersion = "1.0";
const char* tool_version();

struct OutputSpec {
  std::string path;
  std::string format;  // "json" or "csv"
};

struct AnalysisConfig {
  std::string model;
  nlohmann::json params = nlohmann::json::object();
  std::vector<Vec> points;  // chart-0 coordinates
  double bound = 10.0;
  std::uint64_t seed = 0;
  AnalysisBudget budget;
  std::vector<OutputSpec> outputs;

  std::vector<Condition> conditions = {Condition::A, Condition::B};
  std::vector<double> ball_radii;   // extra radii for ball_convexity_check at every point
  std::vector<double> probe_radii;  // extra radii for the distinguishing-ball search
  int cut_directions = 8;           // cut points classified per point

  nlohmann::json to_json() const;
};

// Accepts {"model": name | {"name", "params"}, "model_file"?, "points" | "grid", "bound",
// "seed", "budgets", "outputs", "analyses"}.  Throws BadConfig, UnknownModel or BadParams.
AnalysisConfig parse_config(const nlohmann::json& j);
AnalysisConfig load_config(const std::string& path);

struct PointReport {
  RadiiEstimate radii;
  std::vector<LatticeCheck> lattice;
  std::vector<ConditionReport> conditions;
  std::vector<BallConvexityVerdict> balls;
  std::vector<CutPointRecord> cuts;
};

struct ReportDocument {
  std::string command = "analyze";
  AnalysisConfig config;
  nlohmann::json model;  // name, params, ground truth
  std::vector<PointReport> points;
  std::optional<BergerResult> berger;
  nlohmann::json suite;  // theorem-suite summary, when present
  double wall_time_s = 0;
  std::string timestamp;
};

ReportDocument run_analyze(const AnalysisConfig& config);

nlohmann::json to_json(const ReportDocument& doc);
// The report without run-dependent fields (timestamp, wall time), serialized with sorted keys.
std::string canonical_json(const ReportDocument& doc);
// One row per point: coordinates and the five radii with half-widths.
std::string radii_csv(const ReportDocument& doc);

// Writes every configured output in its declared format, falling back to the file extension.
void write_outputs(const ReportDocument& doc, const std::vector<OutputSpec>& outputs);

std::string utc_timestamp();

}  // namespace convlab
