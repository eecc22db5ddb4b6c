#include "convlab/convexity.hpp"
#include "convlab/errors.hpp"
#include "convlab/models.hpp"
#include "convlab/report.hpp"
#include "convlab/theorems.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace convlab;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::vector<double> parse_coords(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::BadConfig, "cannot parse coordinate \"" + item + "\"");
    }
  }
  return out;
}

nlohmann::json parse_params(const std::string& s) {
  if (s.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(s);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::BadConfig, std::string("--params is not valid JSON: ") + e.what());
  }
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::BadConfig, "cannot write " + path);
  out << text;
}

int analyze(const std::string& config_path, const std::string& out_path, const std::optional<std::uint64_t>& seed) {
  AnalysisConfig cfg = load_config(config_path);
  if (seed) {
    cfg.seed = *seed;
    cfg.budget.seed = *seed;
  }
  const ReportDocument doc = run_analyze(cfg);
  write_outputs(doc, cfg.outputs);
  if (!out_path.empty() || cfg.outputs.empty()) {
    const bool csv = out_path.ends_with(".csv");
    emit(csv ? radii_csv(doc) : to_json(doc).dump(1) + "\n", out_path);
  }
  return 0;
}

int check_theorems(const std::vector<std::string>& models, std::uint64_t seed, const std::string& out_path) {
  SuiteOptions opts;
  opts.models = models;
  opts.seed = seed;
  opts.on_result = [](const CriterionResult& r) {
    std::cerr << "[" << to_string(r.status) << "] " << r.id << ". " << r.title;
    if (!r.summary.empty()) std::cerr << ": " << r.summary;
    std::cerr << " (" << std::lround(r.seconds) << " s)\n";
  };
  const auto start = std::chrono::steady_clock::now();
  const SuiteResult res = run_theorem_suite(opts);
  ReportDocument doc;
  doc.command = "check-theorems";
  doc.config.model = models.empty() ? "all" : models.front();
  doc.config.seed = seed;
  nlohmann::json names = nlohmann::json::array();
  for (const auto& m : models.empty() ? model_names() : models) names.push_back(m);
  doc.model = {{"name", "suite"}, {"models", names}};
  doc.suite = to_json(res);
  doc.timestamp = utc_timestamp();
  doc.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!out_path.empty()) emit(to_json(doc).dump(1) + "\n", out_path);
  return res.passed ? 0 : 1;
}

int cutlocus(const std::string& model, const std::string& params, const std::string& point, int n_dirs,
             double bound, std::uint64_t seed, const std::string& out_path) {
  const ModelRecord rec = get_model(model, parse_params(params));
  const Manifold& m = rec.manifold;
  const std::vector<double> coords = parse_coords(point);
  if (static_cast<int>(coords.size()) != m.dim())
    throw Error(ErrorKind::BadConfig, "--point needs " + std::to_string(m.dim()) + " coordinates");
  Point p;
  try {
    p = m.make_point(Eigen::Map<const Vec>(coords.data(), m.dim()));
  } catch (const Error&) {
    throw Error(ErrorKind::BadConfig, "--point is outside the chart domain");
  }
  if (!(bound > 0)) throw Error(ErrorKind::BadConfig, "--bound must be positive");
  AnalysisBudget budget;
  budget.seed = seed;
  std::ostringstream os;
  os.precision(12);
  for (int i = 0; i < m.dim(); ++i) os << "v" << i + 1 << ",";
  os << "t_cut,t_cut_halfwidth,classification,n_segments,jacobi_det";
  for (int i = 0; i < m.dim(); ++i) os << ",q" << i + 1;
  os << ",q_chart\n";
  for (const Vec& v : sample_directions(m.metric_at(p), n_dirs, seed)) {
    const CutPointRecord c = classify_cut_point(m, p, v, bound, budget);
    for (int i = 0; i < m.dim(); ++i) os << c.v(i) << ",";
    if (!c.found) {
      os << "inf," << bound << ",none,0,";
      for (int i = 0; i < m.dim(); ++i) os << ",";
      os << "\n";
      continue;
    }
    os << c.t_cut << "," << c.t_cut_half_width << "," << to_string(c.classification) << "," << c.n_segments << ","
       << c.jacobi_det;
    const Vec q = m.coords_in(c.q, 0);
    for (int i = 0; i < m.dim(); ++i) os << "," << q(i);
    os << "," << c.q.chart << "\n";
  }
  emit(os.str(), out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"convlab: geodesics, Jacobi fields and convexity radii on Riemannian models"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);

  std::string config_path, out_path;
  std::optional<std::uint64_t> seed;
  auto* an = app.add_subcommand("analyze", "Run the analyses in a JSON config and write a report");
  an->add_option("--config", config_path, "Config file (JSON)")->required();
  an->add_option("--out", out_path, "Report path (.json or .csv); stdout when no outputs are configured");
  an->add_option("--seed", seed, "Override the config seed");

  std::vector<std::string> models;
  std::uint64_t suite_seed = 2024;
  std::string suite_out;
  auto* ct = app.add_subcommand("check-theorems", "Run the theorem-consistency suite");
  ct->add_option("--model", models, "Restrict to these models (repeatable)");
  ct->add_option("--seed", suite_seed, "Seed for sample points");
  ct->add_option("--out", suite_out, "Write the JSON report here");

  std::string cl_model, cl_params, cl_point, cl_out;
  int cl_dirs = 64;
  double cl_bound = 10.0;
  std::uint64_t cl_seed = 0;
  auto* cl = app.add_subcommand("cutlocus", "Classify the cut points along sampled directions (CSV)");
  cl->add_option("--model", cl_model, "Model name")->required();
  cl->add_option("--params", cl_params, "Model parameters as JSON");
  cl->add_option("--point", cl_point, "Base point as comma-separated chart coordinates")->required();
  cl->add_option("--out", cl_out, "CSV path (stdout when omitted)");
  cl->add_option("--n-dirs", cl_dirs, "Number of directions")->check(CLI::PositiveNumber);
  cl->add_option("--bound", cl_bound, "Search bound");
  cl->add_option("--seed", cl_seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*an) return analyze(config_path, out_path, seed);
    if (*ct) return check_theorems(models, suite_seed, suite_out);
    if (*cl) return cutlocus(cl_model, cl_params, cl_point, cl_dirs, cl_bound, cl_seed, cl_out);
  } catch (const Error& e) {
    std::cerr << "convlab: " << e.what() << "\n";
    return e.is_config_error() ? kExitConfig : kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "convlab: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
