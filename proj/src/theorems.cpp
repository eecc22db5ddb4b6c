#include "convlab/theorems.hpp"

#include "convlab/convexity.hpp"
#include "convlab/errors.hpp"
#include "convlab/models.hpp"
#include "convlab/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace convlab {

const char* to_string(CriterionStatus s) {
  switch (s) {
    case CriterionStatus::Pass: return "pass";
    case CriterionStatus::Fail: return "fail";
    case CriterionStatus::Skipped: return "skipped";
  }
  return "?";
}

namespace {

using std::numbers::pi;
using nlohmann::json;

constexpr int kBergerPoints = 10;
constexpr int kLatticePoints = 20;
constexpr int kSphereRadiiPoints = 5;

Vec to_eigen(const std::vector<double>& x) { return Eigen::Map<const Vec>(x.data(), static_cast<int>(x.size())); }

double bound_for(const std::string& model) { return model == "hyperbolic_halfplane" ? 3.0 : 10.0; }

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

std::string fmt(const RadiusValue& r) {
  return r.finite ? fmt(r.value) + "+/-" + fmt(r.half_width, 2) : "exceeds_bound(" + fmt(r.bound) + ")";
}

Vec unit_at(const Manifold& m, const Point& p, double a) {
  const auto f = orthonormal_frame(m.metric_at(p));
  return std::cos(a) * f[0] + std::sin(a) * f[1];
}

class Suite {
 public:
  explicit Suite(const SuiteOptions& opts) : opts_(opts) {
    for (const auto& name : opts.models.empty() ? model_names() : opts.models) selected_.push_back(name);
  }

  bool has(const std::string& model) const {
    return std::find(selected_.begin(), selected_.end(), model) != selected_.end();
  }

  const ModelRecord& model(const std::string& name) {
    auto it = models_.find(name);
    if (it == models_.end()) it = models_.emplace(name, get_model(name, {})).first;
    return it->second;
  }

  Point point(const std::string& name, int k) {
    const auto pts = suite_points(name, k + 1, opts_.seed);
    return model(name).manifold.make_point(to_eigen(pts[static_cast<size_t>(k)]));
  }

  AnalysisBudget budget() const {
    AnalysisBudget b;
    b.seed = opts_.seed;
    return b;
  }

  // Radii at the k-th suite point, computed once and shared between criteria.
  const RadiiEstimate& radii(const std::string& name, int k) {
    auto& vec = radii_[name];
    while (static_cast<int>(vec.size()) <= k) {
      const int idx = static_cast<int>(vec.size());
      vec.push_back(radii_estimate(model(name).manifold, point(name, idx), bound_for(name), budget()));
    }
    return vec[static_cast<size_t>(k)];
  }

  std::vector<RadiiEstimate> radii_list(const std::string& name, int count) {
    std::vector<RadiiEstimate> out;
    for (int k = 0; k < count; ++k) out.push_back(radii(name, k));
    return out;
  }

  std::uint64_t seed() const { return opts_.seed; }

 private:
  SuiteOptions opts_;
  std::vector<std::string> selected_;
  std::map<std::string, ModelRecord> models_;
  std::map<std::string, std::vector<RadiiEstimate>> radii_;
};

struct Rows {
  json rows = json::array();
  bool all_pass = true;

  void add(const std::string& model, const std::string& item, const json& measured, const json& expected,
           double tolerance, bool pass) {
    rows.push_back({{"model", model}, {"item", item}, {"measured", measured}, {"expected", expected},
                    {"tolerance", tolerance}, {"pass", pass}});
    all_pass = all_pass && pass;
  }
  void near(const std::string& model, const std::string& item, const RadiusValue& r, double expected, double tol) {
    add(model, item, to_json(r), expected, tol, r.finite && std::abs(r.value - expected) <= tol);
  }
};

using CriterionFn = std::function<std::string(Suite&, Rows&)>;

// ---------------------------------------------------------------------------

std::string sphere_radii(Suite& s, Rows& rows) {
  if (!s.has("sphere")) return {};
  double worst_i = 0, worst_half = 0;
  for (int k = 0; k < kSphereRadiiPoints; ++k) {
    const RadiiEstimate& r = s.radii("sphere", k);
    const std::string at = "point " + std::to_string(k);
    rows.near("sphere", at + " i_g", r.i_g, pi, 0.02);
    worst_i = std::max(worst_i, r.i_g.finite ? std::abs(r.i_g.value - pi) : INFINITY);
    const std::vector<std::pair<const char*, const RadiusValue*>> halves = {
        {"lc_g", &r.lc_g}, {"slc_g", &r.slc_g}, {"c_g", &r.c_g}, {"sc_g", &r.sc_g}};
    for (const auto& [name, v] : halves) {
      rows.near("sphere", at + " " + name, *v, pi / 2, 0.02);
      worst_half = std::max(worst_half, v->finite ? std::abs(v->value - pi / 2) : INFINITY);
    }
  }
  return "max |i-pi| = " + fmt(worst_i, 3) + ", max |r-pi/2| over lc,slc,c,sc = " + fmt(worst_half, 3);
}

std::string g_closed_forms(Suite& s, Rows& rows) {
  std::mt19937_64 rng(s.seed() + 2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<std::string> models = {"sphere", "hyperbolic_halfplane", "euclidean"};
  std::map<std::string, double> worst;
  std::map<std::string, int> count;
  for (int k = 0; k < 50; ++k) {
    const std::string& name = models[static_cast<size_t>(k % 3)];
    const double t = 0.1 + 2.9 * u(rng);
    const double a = 2 * pi * u(rng), len = 0.5 + 1.5 * u(rng), side = u(rng) < 0.5 ? -1 : 1;
    const double px = u(rng), py = u(rng);
    if (!s.has(name)) continue;
    const Manifold& m = s.model(name).manifold;
    const Point p = name == "sphere" ? m.make_point(to_eigen({std::acos(1 - 2 * px), 2 * pi * py}))
                  : name == "hyperbolic_halfplane" ? Point{0, to_eigen({2 * px - 1, 0.5 + 1.5 * py})}
                                                   : Point{0, to_eigen({4 * px - 2, 4 * py - 2})};
    const Vec v = unit_at(m, p, a);
    const Vec w = side * len * unit_at(m, p, a + pi / 2);
    const double f = name == "sphere" ? std::sin(t) * std::cos(t)
                   : name == "hyperbolic_halfplane" ? std::sinh(t) * std::cosh(t) : t;
    const double err = std::abs(G_eval(m, p, v, w, t) - f * len * len);
    worst[name] = std::max(worst[name], err);
    ++count[name];
  }
  std::string summary;
  for (const auto& [name, err] : worst) {
    rows.add(name, "max |G - f(t)|w|^2| over " + std::to_string(count[name]) + " samples", err, 0.0, 1e-5, err <= 1e-5);
    summary += (summary.empty() ? "" : ", ") + name + " " + fmt(err, 2);
  }
  return summary.empty() ? summary : "max error: " + summary;
}

std::string breakdown_vs_conjugate(Suite& s, Rows& rows) {
  std::string summary;
  if (s.has("sphere")) {
    const Manifold& m = s.model("sphere").manifold;
    const Point p = s.point("sphere", 0);
    double worst_scc = 0, worst_conj = 0;
    for (int k = 0; k < 32; ++k) {
      const Vec v = unit_at(m, p, 2 * pi * k / 32);
      const RadiusValue scc = scc_breakdown_radius(m, p, v, 10.0);
      const RadiusValue conj = conjugate_radius(m, p, v, 10.0);
      worst_scc = std::max(worst_scc, scc.finite ? std::abs(scc.value - pi / 2) : INFINITY);
      worst_conj = std::max(worst_conj, conj.finite ? std::abs(conj.value - pi) : INFINITY);
    }
    rows.add("sphere", "max |scc_breakdown - pi/2| over 32 directions", worst_scc, pi / 2, 1e-4, worst_scc <= 1e-4);
    rows.add("sphere", "max |conjugate - pi| over 32 directions", worst_conj, pi, 1e-4, worst_conj <= 1e-4);
    summary = "sphere deviations " + fmt(worst_scc, 2) + " / " + fmt(worst_conj, 2);
  }
  for (const std::string name : {"euclidean", "hyperbolic_halfplane", "flat_torus"}) {
    if (!s.has(name)) continue;
    const Manifold& m = s.model(name).manifold;
    const Point p = s.point(name, 0);
    int unbounded = 0;
    for (int k = 0; k < 32; ++k) {
      const Vec v = unit_at(m, p, 2 * pi * k / 32 + 0.1);
      const RadiusValue scc = scc_breakdown_radius(m, p, v, 10.0);
      const RadiusValue conj = conjugate_radius(m, p, v, 10.0);
      if (!scc.finite && !conj.finite && scc.bound == 10.0 && conj.bound == 10.0) ++unbounded;
    }
    rows.add(name, "directions with both radii exceeds_bound(10)", unbounded, 32, 0, unbounded == 32);
    summary += (summary.empty() ? "" : "; ") + name + " " + std::to_string(unbounded) + "/32 unbounded";
  }
  return summary;
}

std::string flat_torus(Suite& s, Rows& rows) {
  if (!s.has("flat_torus")) return {};
  const auto all = s.radii_list("flat_torus", kBergerPoints);
  for (size_t k = 0; k < all.size(); ++k) {
    const RadiiEstimate& r = all[k];
    const std::string at = "point " + std::to_string(k);
    rows.near("flat_torus", at + " i_g", r.i_g, 0.5, 0.01);
    rows.near("flat_torus", at + " lc_g", r.lc_g, 0.5, 0.01);
    rows.near("flat_torus", at + " slc_g", r.slc_g, 0.5, 0.01);
    rows.near("flat_torus", at + " c_g", r.c_g, 0.25, 0.01);
    rows.near("flat_torus", at + " sc_g", r.sc_g, 0.25, 0.01);
  }
  const BergerResult b = berger_check(all);
  const double gap = b.c_M.finite && b.i_M.finite ? std::abs(b.c_M.value - 0.5 * b.i_M.value) : INFINITY;
  rows.add("flat_torus", "|c_M - i_M/2|", gap, 0.0, 0.02, gap <= 0.02);

  const ConditionReport rep = condition_check(s.model("flat_torus").manifold, all[0], Condition::B, {}, s.budget());
  rows.add("flat_torus", "condition B", to_string(rep.status), "fails", 0, rep.status == ConditionStatus::Fails);
  json witness;
  for (const auto& ev : rep.evidence)
    if (ev["kind"] == "uniquely_geodesic" && !ev["holds"].get<bool>()) witness = ev;
  const bool two = !witness.is_null() && witness["n_segments"] == 2 && witness["radius"].get<double>() <= 0.25 + 0.01;
  rows.add("flat_torus", "closed-ball pair with two minimizing segments",
           witness.is_null() ? json("none") : witness, "n_segments = 2 within radius 0.25 +/- 0.01", 0.01, two);
  return "i=" + fmt(all[0].i_g) + " c=" + fmt(all[0].c_g) + " sc=" + fmt(all[0].sc_g) + "; |c_M - i_M/2| = " +
         fmt(gap, 3) + "; B " + to_string(rep.status) +
         (two ? " (pair with 2 segments at radius " + fmt(witness["radius"].get<double>(), 4) + ")" : "");
}

std::string sphere_distinguishing_ball(Suite& s, Rows& rows) {
  if (!s.has("sphere")) return {};
  const Manifold& m = s.model("sphere").manifold;
  const Point p = s.point("sphere", 0);
  const BallConvexityVerdict half = ball_convexity_check(m, p, pi / 2, s.budget());
  const int segs = half.witness ? half.witness->n_segments : 0;
  rows.add("sphere", "ball r=pi/2", to_json(half), "properly_convex_only with >= 2 segments", 0,
           half.verdict == ConvexityVerdict::ProperlyConvexOnly && segs >= 2);
  const BallConvexityVerdict one = ball_convexity_check(m, p, 1.0, s.budget());
  rows.add("sphere", "ball r=1", to_string(one.verdict), "strongly_convex", 0,
           one.verdict == ConvexityVerdict::StronglyConvex);
  const ConditionReport rep = condition_check(m, s.radii("sphere", 0), Condition::B, {pi / 2}, s.budget());
  bool distinguishing = false;
  for (const auto& ev : rep.evidence) distinguishing = distinguishing || ev["kind"] == "distinguishing_ball";
  rows.add("sphere", "condition B", to_string(rep.status), "fails with a distinguishing ball", 0,
           rep.status == ConditionStatus::Fails && distinguishing);
  return std::string("r=pi/2 ") + to_string(half.verdict) + " (" + std::to_string(segs) + " segments), r=1 " +
         to_string(one.verdict) + ", B " + to_string(rep.status);
}

std::string berger(Suite& s, Rows& rows) {
  std::string summary;
  for (const std::string name : {"sphere", "flat_torus", "ellipsoid"}) {
    if (!s.has(name)) continue;
    const BergerResult b = berger_check(s.radii_list(name, kBergerPoints));
    const double c = b.c_M.finite ? b.c_M.value : INFINITY;
    const double i = b.i_M.finite ? b.i_M.value : INFINITY;
    rows.add(name, "c_M <= i_M/2 + 0.02", to_json(b), "c_M <= i_M/2", 0.02, c <= 0.5 * i + 0.02);
    if (name != "ellipsoid")
      rows.add(name, "|c_M - i_M/2|", std::abs(c - 0.5 * i), 0.0, 0.02, std::abs(c - 0.5 * i) <= 0.02);
    summary += (summary.empty() ? "" : "; ") + name + " c_M=" + fmt(b.c_M) + " i_M=" + fmt(b.i_M);
  }
  return summary;
}

std::string lattice(Suite& s, Rows& rows) {
  if (!s.has("ellipsoid")) return {};
  int failures = 0, checks = 0;
  for (int k = 0; k < kLatticePoints; ++k) {
    const RadiiEstimate& r = s.radii("ellipsoid", k);
    for (const auto& l : lattice_checks(r)) {
      ++checks;
      if (!l.holds) ++failures;
      rows.add("ellipsoid", "point " + std::to_string(k) + " " + l.relation,
               json{{"lhs", l.lhs}, {"rhs", l.rhs}}, "lhs <= rhs + slack", l.slack, l.holds);
    }
  }
  return std::to_string(checks - failures) + "/" + std::to_string(checks) + " inequalities hold at " +
         std::to_string(kLatticePoints) + " points";
}

std::string wronskian(Suite& s, Rows& rows) {
  std::mt19937_64 rng(s.seed() + 8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z;
  // Three-dimensional models carry two independent p-Jacobi fields; on surfaces J and K are
  // multiples of one field.
  const std::vector<std::pair<std::string, json>> models = {
      {"hyperbolic_halfplane", {{"n", 3}}}, {"euclidean", {{"n", 3}}}, {"sphere", {}},
      {"ellipsoid", {}},                    {"hyperbolic_halfplane", {}}};
  std::map<std::string, double> worst;
  for (int k = 0; k < 100; ++k) {
    const auto& [name, params] = models[static_cast<size_t>(k % models.size())];
    const std::string label = params.contains("n") ? name + " n=3" : name;
    const ModelRecord rec = get_model(name, params);
    const Manifold& m = rec.manifold;
    const int n = m.dim();
    Vec x(n);
    if (name == "hyperbolic_halfplane") {
      for (int i = 0; i < n - 1; ++i) x(i) = 2 * u(rng) - 1;
      x(n - 1) = 0.5 + u(rng);
    } else if (name == "euclidean") {
      for (int i = 0; i < n; ++i) x(i) = 2 * u(rng) - 1;
    } else {
      x << std::acos(1 - 2 * (0.05 + 0.9 * u(rng))), 2 * pi * u(rng);
    }
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = z(rng);
    const double t = 0.2 + 2.5 * u(rng);
    Vec c(n - 1), d(n - 1);
    for (int i = 0; i < n - 1; ++i) {
      c(i) = z(rng);
      d(i) = z(rng);
    }
    if (!s.has(name)) continue;
    const Point p = m.make_point(x);
    const JacobiRay ray(m, p, v, t);
    const GeodesicPath& path = ray.path();
    const Mat g = path.metric(t);
    Vec J = Vec::Zero(n), DJ = Vec::Zero(n), K = Vec::Zero(n), DK = Vec::Zero(n);
    for (int i = 0; i < n - 1; ++i) {
      J += c(i) * path.jacobi(t, i);
      DJ += c(i) * path.jacobi_derivative(t, i);
      K += d(i) * path.jacobi(t, i);
      DK += d(i) * path.jacobi_derivative(t, i);
    }
    const double w = std::abs(inner(g, DJ, K) - inner(g, J, DK));
    worst[label] = std::max(worst[label], w);
  }
  std::string summary;
  for (const auto& [label, w] : worst) {
    rows.add(label, "max |<DJ,K> - <J,DK>|", w, 0.0, 1e-8, w <= 1e-8);
    summary += (summary.empty() ? "" : ", ") + label + " " + fmt(w, 2);
  }
  return summary;
}

std::string cut_classification(Suite& s, Rows& rows) {
  std::string summary;
  const AnalysisBudget b = s.budget();
  if (s.has("sphere")) {
    const Manifold& m = s.model("sphere").manifold;
    const Point p = s.point("sphere", 0);
    const CutPointRecord rec = classify_cut_point(m, p, unit_at(m, p, 0.7), 4.0, b);
    rows.add("sphere", "antipode", to_json(rec), "ordinary, >= 2 segments, |det| <= 1e-7", kEigenZero,
             rec.found && rec.classification == CutClass::Ordinary && rec.n_segments >= 2 &&
                 std::abs(rec.jacobi_det) <= kEigenZero && std::abs(rec.t_cut - pi) <= 1e-6);
    summary = "sphere t=" + fmt(rec.t_cut, 8) + " " + to_string(rec.classification) + " (" +
              std::to_string(rec.n_segments) + " segments)";
  }
  if (s.has("flat_torus")) {
    const Manifold& m = s.model("flat_torus").manifold;
    const Point p = s.point("flat_torus", 0);
    const CutPointRecord axis = classify_cut_point(m, p, to_eigen({1, 0}), 2.0, b);
    rows.add("flat_torus", "axis cut", to_json(axis), "t=0.5, ordinary, 2 segments, |det| >= 0.1", 0,
             axis.found && axis.classification == CutClass::Ordinary && axis.n_segments == 2 &&
                 std::abs(axis.jacobi_det) >= 0.1 && std::abs(axis.t_cut - 0.5) <= 1e-6);
    const CutPointRecord diag = classify_cut_point(m, p, to_eigen({std::sqrt(0.5), std::sqrt(0.5)}), 2.0, b);
    rows.add("flat_torus", "diagonal cut (corner point)", to_json(diag), ">= 2 segments at t = sqrt(2)/2", 1e-6,
             diag.found && diag.n_segments >= 2 && std::abs(diag.t_cut - std::sqrt(0.5)) <= 1e-6);
    summary += (summary.empty() ? "" : "; ") + std::string("torus axis t=") + fmt(axis.t_cut) + " (" +
               std::to_string(axis.n_segments) + " segments, det " + fmt(axis.jacobi_det, 3) + "), diagonal " +
               std::to_string(diag.n_segments) + " segments";
  }
  for (const std::string name : {"euclidean", "hyperbolic_halfplane"}) {
    if (!s.has(name)) continue;
    const Manifold& m = s.model(name).manifold;
    const Point p = s.point(name, 0);
    int none = 0;
    for (double a : {0.3, 2.0, 4.4}) none += classify_cut_point(m, p, unit_at(m, p, a), 10.0, b).found ? 0 : 1;
    rows.add(name, "directions without a cut point within 10", none, 3, 0, none == 3);
    summary += (summary.empty() ? "" : "; ") + name + " " + std::to_string(none) + "/3 without cut point";
  }
  return summary;
}

// Ball radii per model for the implication checks, and the radius for half-radius containment.
struct LemmaCase {
  std::string model;
  std::vector<double> ball_radii;
  double containment_radius;
};

const std::vector<LemmaCase>& lemma_cases() {
  static const std::vector<LemmaCase> cases = {
      {"euclidean", {1.0, 3.0}, 3.0},
      {"sphere", {1.0, 1.4}, 1.5},
      {"hyperbolic_halfplane", {0.5, 1.5}, 2.0},
      {"flat_torus", {0.1, 0.2}, 0.45},
      {"ellipsoid", {0.6, 1.0}, 1.0},
  };
  return cases;
}

std::string strictness_and_implications(Suite& s, Rows& rows) {
  std::string summary;
  const AnalysisBudget b = s.budget();
  if (s.has("sphere")) {
    const RadiiEstimate& r = s.radii("sphere", 0);
    const bool strict = r.c_g.finite && r.i_g.finite && r.c_g.value < r.i_g.value - 0.5;
    rows.add("sphere", "c_g < i_g - 0.5", json{{"c_g", to_json(r.c_g)}, {"i_g", to_json(r.i_g)}}, "strict", 0.5, strict);
    summary = "sphere c=" + fmt(r.c_g) + " vs i=" + fmt(r.i_g);
  }
  std::mt19937_64 rng(s.seed() + 10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int implications = 0, containments = 0;
  for (const auto& lc : lemma_cases()) {
    if (!s.has(lc.model)) continue;
    const Manifold& m = s.model(lc.model).manifold;
    const Point p = s.point(lc.model, 1);
    // Strongly convex balls have the strong convexity condition on every smaller sphere.
    int strong = 0, held = 0;
    for (double r : lc.ball_radii) {
      const BallConvexityVerdict v = ball_convexity_check(m, p, r, b);
      if (v.verdict != ConvexityVerdict::StronglyConvex) continue;
      ++strong;
      bool all = true;
      for (int k = 0; k < 20; ++k) {
        const double radius = r * (0.01 + 0.98 * u(rng));
        all = all && scc_check(m, p, radius, 64, std::nullopt, s.seed()).status == SccStatus::Holds;
      }
      held += all ? 1 : 0;
    }
    rows.add(lc.model, "strongly convex balls with scc on all 20 smaller spheres", held, strong, 0,
             strong > 0 && held == strong);
    implications += held;

    // Half-radius containment.
    const double r = lc.containment_radius;
    bool scc_all = true;
    for (int k = 1; k <= 10; ++k)
      scc_all = scc_all && scc_check(m, p, r * k / 10.5, 64, std::nullopt, s.seed()).status == SccStatus::Holds;
    const double rp = 0.45 * r;
    double worst = -INFINITY;
    SegmentOptions so;
    so.bound = 3 * rp + 0.1;
    so.n_starts = b.n_starts;
    so.seed = s.seed();
    for (int k = 0; k < 6 && scc_all; ++k) {
      auto sample = [&] {
        const Vec v = rp * std::sqrt(u(rng)) * unit_at(m, p, 2 * pi * u(rng));
        return std::make_pair(m.canonical(shoot(m, p, v, 1.0).end_point()), v);
      };
      const auto [x, vx] = sample();
      const auto [y, vy] = sample();
      (void)vy;
      for (const auto& seg : minimizing_segments(m, x, y, so).segments) {
        const SegmentProfile prof = segment_max_distance(m, p, seg.path, vx, 0.0, 1.0);
        worst = std::max(worst, prof.ok ? prof.max_distance - rp : INFINITY);
      }
    }
    const bool contained = scc_all && worst <= 1e-6;
    rows.add(lc.model, "segments between points of the closed ball of radius " + fmt(rp, 3) + " stay inside",
             json{{"scc_below_r", scc_all}, {"max_excess", worst}}, "max_excess <= 1e-6", 1e-6, contained);
    containments += contained ? 1 : 0;
  }
  return summary + (summary.empty() ? "" : "; ") + std::to_string(implications) +
         " strongly convex balls checked, " + std::to_string(containments) + " models pass containment";
}

std::string determinism(Suite& s, Rows& rows) {
  if (!s.has("flat_torus")) return {};
  const json cfg_json = {{"model", "flat_torus"},
                         {"points", {{0.1, 0.2}, {0.6, 0.35}}},
                         {"bound", 2.0},
                         {"seed", s.seed()},
                         {"analyses", {{"conditions", {"B"}}, {"ball_radii", {0.2, 0.3}}, {"cut_directions", 2}}}};
  const AnalysisConfig cfg = parse_config(cfg_json);
  const std::string first = canonical_json(run_analyze(cfg));
  // Same run with a different worker count.
  const char* old = std::getenv("CONVLAB_THREADS");
  const std::string saved = old ? old : "";
  setenv("CONVLAB_THREADS", "3", 1);
  const std::string second = canonical_json(run_analyze(cfg));
  if (old) setenv("CONVLAB_THREADS", saved.c_str(), 1);
  else unsetenv("CONVLAB_THREADS");
  const bool same = first == second;
  rows.add("flat_torus", "canonical reports identical across runs", same, true, 0, same);
  return same ? "identical (" + std::to_string(first.size()) + " bytes)" : "reports differ";
}

struct CriterionDef {
  int id;
  const char* title;
  CriterionFn fn;
};

const std::vector<CriterionDef>& criteria() {
  static const std::vector<CriterionDef> defs = {
      {1, "Sphere radii", sphere_radii},
      {2, "G closed forms", g_closed_forms},
      {3, "Breakdown vs conjugate ordering", breakdown_vs_conjugate},
      {4, "Flat torus radii, Berger equality, condition B witness", flat_torus},
      {5, "Sphere distinguishing ball", sphere_distinguishing_ball},
      {6, "Berger inequality", berger},
      {7, "Radius lattice on the ellipsoid", lattice},
      {8, "Wronskian symmetry", wronskian},
      {9, "Cut point classification", cut_classification},
      {10, "Strictness, local convexity and half-radius containment", strictness_and_implications},
      {11, "Determinism", determinism},
  };
  return defs;
}

}  // namespace

std::vector<std::vector<double>> suite_points(const std::string& model, int count, std::uint64_t seed) {
  const auto& names = model_names();
  const auto pos = static_cast<std::uint64_t>(std::find(names.begin(), names.end(), model) - names.begin());
  std::mt19937_64 rng(seed * 1000003ULL + pos);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> out;
  for (int k = 0; k < count; ++k) {
    const double a = u(rng), b = u(rng);
    if (model == "sphere" || model == "ellipsoid")
      out.push_back({std::acos(1 - 2 * a), 2 * pi * b});
    else if (model == "flat_torus")
      out.push_back({a, b});
    else if (model == "hyperbolic_halfplane")
      out.push_back({2 * a - 1, 0.5 + 1.5 * b});
    else
      out.push_back({4 * a - 2, 4 * b - 2});
  }
  return out;
}

SuiteResult run_theorem_suite(const SuiteOptions& opts) {
  for (const auto& name : opts.models) get_model(name, {});  // validates names
  Suite suite(opts);
  SuiteResult out;
  for (const auto& def : criteria()) {
    CriterionResult res;
    res.id = def.id;
    res.title = def.title;
    Rows rows;
    const auto start = std::chrono::steady_clock::now();
    try {
      res.summary = def.fn(suite, rows);
    } catch (const Error& e) {
      rows.add("", "error", e.what(), "no error", 0, false);
      res.summary = e.what();
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    res.rows = rows.rows;
    if (rows.rows.empty()) res.status = CriterionStatus::Skipped;
    else res.status = rows.all_pass ? CriterionStatus::Pass : CriterionStatus::Fail;
    if (res.status == CriterionStatus::Fail) out.passed = false;
    if (opts.on_result) opts.on_result(res);
    out.criteria.push_back(std::move(res));
  }
  return out;
}

nlohmann::json to_json(const SuiteResult& s) {
  json crit = json::array();
  for (const auto& c : s.criteria)
    crit.push_back({{"id", c.id}, {"title", c.title}, {"status", to_string(c.status)}, {"summary", c.summary},
                    {"rows", c.rows}});
  return {{"passed", s.passed}, {"criteria", crit}};
}

}  // namespace convlab
