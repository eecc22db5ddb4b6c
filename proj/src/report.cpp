#include "convlab/report.hpp"

#include "convlab/errors.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace convlab {

const char* tool_version() { return CONVLAB_VERSION; }

namespace {

[[noreturn]] void bad_config(const std::string& what) { throw Error(ErrorKind::BadConfig, what); }

template <class T>
T get_as(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    bad_config(std::string("field \"") + key + "\" has the wrong type");
  }
}

Vec to_vec(const nlohmann::json& j, int dim, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    bad_config(what + " must be an array of " + std::to_string(dim) + " numbers");
  Vec v(dim);
  for (int i = 0; i < dim; ++i) {
    if (!j[static_cast<size_t>(i)].is_number()) bad_config(what + " must contain numbers");
    v(i) = j[static_cast<size_t>(i)].get<double>();
  }
  return v;
}

std::vector<Vec> grid_points(const nlohmann::json& grid, const ManifoldChart& chart) {
  const int n = chart.dim;
  if (!grid.is_object() || !grid.contains("n")) bad_config("grid needs \"n\"");
  std::vector<int> counts;
  if (grid["n"].is_number_integer()) counts.assign(static_cast<size_t>(n), grid["n"].get<int>());
  else counts = get_as<std::vector<int>>(grid, "n", {});
  if (static_cast<int>(counts.size()) != n) bad_config("grid.n must give one count per coordinate");
  std::vector<double> lo(static_cast<size_t>(n)), hi(static_cast<size_t>(n));
  std::vector<bool> closed(static_cast<size_t>(n), true);
  for (int i = 0; i < n; ++i) {
    const size_t k = static_cast<size_t>(i);
    if (counts[k] < 1) bad_config("grid counts must be >= 1");
    if (chart.is_periodic(i)) {
      // Periodic axes: n equally spaced samples over one period.
      lo[k] = std::isfinite(chart.domain[k].lo) ? chart.domain[k].lo : 0.0;
      hi[k] = lo[k] + *chart.period[k];
      closed[k] = false;
    } else {
      lo[k] = chart.domain[k].lo;
      hi[k] = chart.domain[k].hi;
    }
  }
  if (grid.contains("lo")) {
    const Vec v = to_vec(grid["lo"], n, "grid.lo");
    for (int i = 0; i < n; ++i) lo[static_cast<size_t>(i)] = v(i);
  }
  if (grid.contains("hi")) {
    const Vec v = to_vec(grid["hi"], n, "grid.hi");
    for (int i = 0; i < n; ++i) {
      hi[static_cast<size_t>(i)] = v(i);
      closed[static_cast<size_t>(i)] = true;
    }
  }
  for (int i = 0; i < n; ++i) {
    const size_t k = static_cast<size_t>(i);
    if (!std::isfinite(lo[k]) || !std::isfinite(hi[k]) || !(hi[k] >= lo[k]))
      bad_config("grid bounds must be finite with lo <= hi (give grid.lo / grid.hi)");
  }
  std::vector<Vec> pts;
  std::vector<int> idx(static_cast<size_t>(n), 0);
  while (true) {
    Vec x(n);
    for (int i = 0; i < n; ++i) {
      const size_t k = static_cast<size_t>(i);
      const int c = counts[k];
      const double f = c == 1 ? 0.5 : (closed[k] ? idx[k] / double(c - 1) : idx[k] / double(c));
      x(i) = lo[k] + f * (hi[k] - lo[k]);
    }
    pts.push_back(x);
    int i = n - 1;
    while (i >= 0 && ++idx[static_cast<size_t>(i)] == counts[static_cast<size_t>(i)]) idx[static_cast<size_t>(i--)] = 0;
    if (i < 0) break;
  }
  return pts;
}

Condition parse_condition(const nlohmann::json& j) {
  if (j == "A") return Condition::A;
  if (j == "B") return Condition::B;
  bad_config("conditions must be \"A\" or \"B\"");
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace

AnalysisConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) bad_config("config must be a JSON object");
  AnalysisConfig cfg;
  ModelRecord rec = [&] {
    if (j.contains("model_file")) return load_model_file(get_as<std::string>(j, "model_file", ""));
    if (!j.contains("model")) bad_config("config needs \"model\"");
    const auto& m = j["model"];
    if (m.is_string()) return get_model(m.get<std::string>(), j.value("params", nlohmann::json::object()));
    if (m.is_object() && m.contains("name") && m["name"].is_string())
      return get_model(m["name"].get<std::string>(), m.value("params", nlohmann::json::object()));
    bad_config("\"model\" must be a name or {\"name\", \"params\"}");
  }();
  cfg.model = rec.name;
  cfg.params = rec.params;
  const Manifold& man = rec.manifold;

  if (j.contains("points") && j.contains("grid")) bad_config("give either \"points\" or \"grid\", not both");
  if (j.contains("points")) {
    if (!j["points"].is_array()) bad_config("\"points\" must be an array");
    for (const auto& p : j["points"]) cfg.points.push_back(to_vec(p, man.dim(), "each point"));
  } else if (j.contains("grid")) {
    cfg.points = grid_points(j["grid"], man.chart(0));
  } else {
    bad_config("config needs \"points\" or \"grid\"");
  }
  if (cfg.points.empty()) bad_config("no points to analyze");
  for (const Vec& x : cfg.points) {
    try {
      man.make_point(x);
    } catch (const Error&) {
      bad_config("point outside the chart domain");
    }
  }

  cfg.bound = get_as<double>(j, "bound", 10.0);
  if (!(cfg.bound > 0) || !std::isfinite(cfg.bound)) bad_config("bound must be a positive number");
  cfg.seed = get_as<std::uint64_t>(j, "seed", 0);
  cfg.budget.seed = cfg.seed;
  if (j.contains("budgets")) {
    const auto& b = j["budgets"];
    if (!b.is_object()) bad_config("\"budgets\" must be an object");
    cfg.budget.n_dirs = get_as<int>(b, "n_dirs", cfg.budget.n_dirs);
    cfg.budget.n_pairs = get_as<int>(b, "n_pairs", cfg.budget.n_pairs);
    cfg.budget.n_starts = get_as<int>(b, "n_starts", cfg.budget.n_starts);
    if (cfg.budget.n_dirs < 0 || (cfg.budget.n_dirs > 0 && cfg.budget.n_dirs < 8))
      bad_config("budgets.n_dirs must be 0 (default) or >= 8");
    if (cfg.budget.n_pairs < 1 || cfg.budget.n_starts < 1) bad_config("budgets must be positive");
  }
  if (j.contains("outputs")) {
    if (!j["outputs"].is_array()) bad_config("\"outputs\" must be an array");
    for (const auto& o : j["outputs"]) {
      OutputSpec spec;
      spec.path = get_as<std::string>(o, "path", "");
      if (spec.path.empty()) bad_config("each output needs a \"path\"");
      spec.format = get_as<std::string>(o, "format", spec.path.ends_with(".csv") ? "csv" : "json");
      if (spec.format != "json" && spec.format != "csv") bad_config("output format must be json or csv");
      cfg.outputs.push_back(spec);
    }
  }
  if (j.contains("analyses")) {
    const auto& a = j["analyses"];
    if (!a.is_object()) bad_config("\"analyses\" must be an object");
    if (a.contains("conditions")) {
      if (!a["conditions"].is_array()) bad_config("analyses.conditions must be an array");
      cfg.conditions.clear();
      for (const auto& c : a["conditions"]) cfg.conditions.push_back(parse_condition(c));
    }
    cfg.ball_radii = get_as<std::vector<double>>(a, "ball_radii", {});
    cfg.probe_radii = get_as<std::vector<double>>(a, "probe_radii", {});
    cfg.cut_directions = get_as<int>(a, "cut_directions", cfg.cut_directions);
    if (cfg.cut_directions < 0) bad_config("analyses.cut_directions must be >= 0");
    for (double r : cfg.ball_radii)
      if (!(r > 0)) bad_config("ball radii must be positive");
  }
  return cfg;
}

AnalysisConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad_config("cannot read config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    bad_config("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

nlohmann::json AnalysisConfig::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const Vec& x : points) pts.push_back(std::vector<double>(x.data(), x.data() + x.size()));
  nlohmann::json outs = nlohmann::json::array();
  for (const auto& o : outputs) outs.push_back({{"path", o.path}, {"format", o.format}});
  nlohmann::json conds = nlohmann::json::array();
  for (Condition c : conditions) conds.push_back(to_string(c));
  return {{"model", {{"name", model}, {"params", params}}},
          {"points", pts},
          {"bound", bound},
          {"seed", seed},
          {"budgets", {{"n_dirs", budget.n_dirs}, {"n_pairs", budget.n_pairs}, {"n_starts", budget.n_starts}}},
          {"outputs", outs},
          {"analyses",
           {{"conditions", conds},
            {"ball_radii", ball_radii},
            {"probe_radii", probe_radii},
            {"cut_directions", cut_directions}}}};
}

ReportDocument run_analyze(const AnalysisConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const ModelRecord rec = get_model(cfg.model, cfg.params);
  const Manifold& m = rec.manifold;
  ReportDocument doc;
  doc.config = cfg;
  doc.timestamp = utc_timestamp();
  doc.model = {{"name", rec.name}, {"params", rec.params}, {"provenance", rec.provenance}};
  if (rec.ground_truth) {
    const GroundTruth& gt = *rec.ground_truth;
    auto val = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("infinite"); };
    doc.model["ground_truth"] = {{"i_g", val(gt.i_g)},   {"lc_g", val(gt.lc_g)}, {"slc_g", val(gt.slc_g)},
                                 {"c_g", val(gt.c_g)},   {"sc_g", val(gt.sc_g)}};
    if (gt.sectional_curvature) doc.model["ground_truth"]["sectional_curvature"] = *gt.sectional_curvature;
  }

  std::vector<RadiiEstimate> all;
  for (const Vec& x : cfg.points) {
    PointReport pr;
    const Point p = m.make_point(x);
    pr.radii = radii_estimate(m, p, cfg.bound, cfg.budget);
    pr.lattice = lattice_checks(pr.radii);
    for (Condition c : cfg.conditions)
      pr.conditions.push_back(condition_check(m, pr.radii, c, cfg.probe_radii, cfg.budget));
    for (double r : cfg.ball_radii) {
      if (pr.radii.i_g.finite && r > pr.radii.i_g.value) continue;
      pr.balls.push_back(ball_convexity_check(m, p, r, cfg.budget));
    }
    if (cfg.cut_directions > 0) {
      const auto dirs = sample_directions(m.metric_at(pr.radii.p), cfg.cut_directions, cfg.seed ^ 0xc07ULL);
      for (const Vec& v : dirs) pr.cuts.push_back(classify_cut_point(m, pr.radii.p, v, cfg.bound, cfg.budget));
    }
    all.push_back(pr.radii);
    doc.points.push_back(std::move(pr));
  }
  doc.berger = berger_check(all);
  doc.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return doc;
}

nlohmann::json to_json(const ReportDocument& doc) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& pr : doc.points) {
    nlohmann::json lat = nlohmann::json::array();
    for (const auto& l : pr.lattice)
      lat.push_back({{"relation", l.relation}, {"holds", l.holds}, {"lhs", l.lhs}, {"rhs", l.rhs}, {"slack", l.slack}});
    nlohmann::json conds = nlohmann::json::array();
    for (const auto& c : pr.conditions) conds.push_back(to_json(c));
    nlohmann::json balls = nlohmann::json::array();
    for (const auto& b : pr.balls) balls.push_back(to_json(b));
    nlohmann::json cuts = nlohmann::json::array();
    for (const auto& c : pr.cuts) cuts.push_back(to_json(c));
    pts.push_back({{"radii", to_json(pr.radii)}, {"lattice", lat}, {"conditions", conds}, {"balls", balls}, {"cuts", cuts}});
  }
  nlohmann::json j = {{"schema_version", kSchemaVersion},
                      {"tool_version", tool_version()},
                      {"command", doc.command},
                      {"config", doc.config.to_json()},
                      {"model", doc.model},
                      {"points", pts},
                      {"wall_time_s", doc.wall_time_s},
                      {"timestamp", doc.timestamp}};
  if (doc.berger) j["berger"] = to_json(*doc.berger);
  if (!doc.suite.is_null()) j["suite"] = doc.suite;
  return j;
}

std::string canonical_json(const ReportDocument& doc) {
  nlohmann::json j = to_json(doc);
  j.erase("wall_time_s");
  j.erase("timestamp");
  return j.dump(1);
}

std::string radii_csv(const ReportDocument& doc) {
  std::ostringstream os;
  const int dim = doc.points.empty() ? 0 : static_cast<int>(doc.config.points.front().size());
  for (int i = 0; i < dim; ++i) os << "x" << i + 1 << ",";
  bool first = true;
  for (const char* name : {"i", "lc", "slc", "c", "sc"}) {
    os << (first ? "" : ",") << name << "," << name << "_halfwidth";
    first = false;
  }
  os << "\n";
  for (size_t k = 0; k < doc.points.size(); ++k) {
    const RadiiEstimate& r = doc.points[k].radii;
    const Vec& x = doc.config.points[k];
    for (int i = 0; i < dim; ++i) os << format_double(x(i)) << ",";
    const char* sep = "";
    for (const RadiusValue* v : {&r.i_g, &r.lc_g, &r.slc_g, &r.c_g, &r.sc_g}) {
      // Radii beyond the bound are written as inf with the bound in the half-width column.
      if (v->finite) os << sep << format_double(v->value) << "," << format_double(v->half_width);
      else os << sep << "inf," << format_double(v->bound);
      sep = ",";
    }
    os << "\n";
  }
  return os.str();
}

void write_outputs(const ReportDocument& doc, const std::vector<OutputSpec>& outputs) {
  for (const auto& o : outputs) {
    std::ofstream out(o.path);
    if (!out) bad_config("cannot write " + o.path);
    if (o.format == "csv") out << radii_csv(doc);
    else out << to_json(doc).dump(1) << "\n";
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace convlab
