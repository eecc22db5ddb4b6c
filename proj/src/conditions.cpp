#include "convlab/convexity.hpp"

#include "convlab/errors.hpp"
#include "convlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace convlab {

const char* to_string(CutClass c) {
  switch (c) {
    case CutClass::Ordinary: return "ordinary";
    case CutClass::Singular: return "singular";
    case CutClass::Undetermined: return "undetermined";
  }
  return "?";
}

const char* to_string(Condition c) { return c == Condition::A ? "A" : "B"; }

const char* to_string(ConditionStatus s) {
  return s == ConditionStatus::HoldsUpToBound ? "holds_up_to_bound" : "fails";
}

namespace {

std::vector<double> as_vector(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Point end_of(const Manifold& m, const Point& p, const Vec& u, double len) {
  if (len == 0) return p;
  const GeodesicPath path = shoot(m, p, u, len);
  if (!path.completed()) throw Error(ErrorKind::LeftDomain, "geodesic left the chart domain");
  return m.canonical(path.end_point());
}

}  // namespace

CutPointRecord classify_cut_point(const Manifold& m, const Point& p_in, const Vec& v, double bound,
                                  const AnalysisBudget& budget) {
  CutPointRecord rec;
  rec.p = m.canonical(p_in);
  rec.v = p_in.chart == rec.p.chart ? v : m.vector_in(p_in, v, rec.p.chart);
  rec.bound = bound;
  const CutSearch cut = find_cut(m, rec.p, rec.v, bound, budget);
  if (!cut.t_cut.finite) return rec;
  rec.found = true;
  rec.t_cut = cut.t_cut.value;
  rec.t_cut_half_width = cut.t_cut.half_width;
  rec.q = cut.q;
  rec.jacobi_det = cut.jacobi_det;

  SegmentOptions so;
  so.bound = 1.2 * rec.t_cut + 0.5;
  so.n_starts = budget.n_starts;
  so.seed = budget.seed;
  so.keep_paths = false;
  const SegmentSet segs = minimizing_segments(m, rec.p, rec.q, so);
  rec.n_segments = static_cast<int>(segs.segments.size());
  if (rec.n_segments >= 2)
    rec.classification = CutClass::Ordinary;
  else if (rec.n_segments == 1 && std::abs(rec.jacobi_det) <= kEigenZero)
    rec.classification = CutClass::Singular;
  else
    rec.classification = CutClass::Undetermined;
  return rec;
}

UniquenessResult uniquely_geodesic_check(const Manifold& m, const Point& p_in, double R,
                                         const AnalysisBudget& budget) {
  if (!(R > 0)) throw Error(ErrorKind::InvalidArgument, "radius must be > 0");
  const Point p = m.canonical(p_in);
  const Mat g = m.metric_at(p);
  const int n = m.dim();

  SegmentOptions so;
  so.bound = 2.2 * R + 0.1;
  so.n_starts = budget.n_starts;
  so.seed = budget.seed;
  so.keep_paths = false;

  UniquenessResult out;
  auto record = [&](const Point& x, const Point& y, const SegmentSet& s) {
    ++out.pairs_checked;
    if (s.unique) return false;
    out.holds = false;
    out.x = x;
    out.y = y;
    out.n_segments = static_cast<int>(s.segments.size());
    return true;
  };

  // Diametral pairs on the boundary sphere.
  const std::vector<Vec> diam = sample_directions(g, n == 2 ? 16 : 8, budget.seed ^ 0xd1a3ULL);
  const size_t n_diam = n == 2 ? 8 : diam.size();
  std::vector<std::pair<Point, Point>> pairs;
  for (size_t k = 0; k < n_diam; ++k)
    pairs.emplace_back(end_of(m, p, diam[k], R), end_of(m, p, -diam[k], R));

  // Boundary points paired with the cut point of the geodesic through p, when it is in the ball.
  for (size_t k = 0; k < n_diam; ++k) {
    const GeodesicPath back = shoot(m, p, -diam[k], R);
    if (!back.completed()) continue;
    const Point x = m.canonical(back.end_point());
    const Vec toward_p = m.vector_in(back.end_point(), -back.velocity(R), x.chart);
    const CutSearch cut = find_cut(m, x, toward_p, 2 * R + 0.1, budget);
    if (cut.t_cut.finite && cut.t_cut.value <= 2 * R + 1e-9) pairs.emplace_back(x, cut.q);
  }

  std::mt19937_64 rng(budget.seed * 0x2545f4914f6cdd1dULL + 29);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> z;
  const auto frame = orthonormal_frame(g);
  auto random_point = [&] {
    Vec c = Vec::Zero(n);
    for (const Vec& e : frame) c += z(rng) * e;
    return end_of(m, p, c / norm(g, c), R * std::pow(unif(rng), 1.0 / n));
  };
  while (static_cast<int>(pairs.size()) < static_cast<int>(2 * n_diam) + budget.n_pairs) {
    const Point a = random_point();
    const Point b = random_point();
    pairs.emplace_back(a, b);
  }

  const size_t chunk = static_cast<size_t>(worker_count());
  for (size_t start = 0; start < pairs.size(); start += chunk) {
    const size_t count = std::min(chunk, pairs.size() - start);
    std::vector<SegmentSet> sets(count);
    parallel_for(count, [&](size_t k) {
      sets[k] = minimizing_segments(m, pairs[start + k].first, pairs[start + k].second, so);
    });
    for (size_t k = 0; k < count; ++k)
      if (record(pairs[start + k].first, pairs[start + k].second, sets[k])) return out;
  }
  return out;
}

BergerResult berger_check(const std::vector<RadiiEstimate>& estimates) {
  if (estimates.empty()) throw Error(ErrorKind::InvalidArgument, "berger_check needs sample points");
  BergerResult out;
  out.c_M = estimates.front().c_g;
  out.i_M = estimates.front().i_g;
  for (const auto& e : estimates) {
    out.c_M = min_radius(out.c_M, e.c_g);
    out.i_M = min_radius(out.i_M, e.i_g);
  }
  if (!out.c_M.finite && !out.i_M.finite) {
    out.unbounded = true;
    out.satisfied = true;
    return out;
  }
  out.tau = (out.c_M.finite ? out.c_M.half_width : 0) + (out.i_M.finite ? 0.5 * out.i_M.half_width : 0);
  const double c = out.c_M.finite ? out.c_M.value : out.c_M.bound;
  if (!out.i_M.finite) {
    // i_M beyond the bound only constrains c_M when c_M is bounded.
    out.margin = 0.5 * out.i_M.bound - c;
    out.satisfied = out.c_M.finite || c <= 0.5 * out.i_M.bound + out.tau;
    return out;
  }
  out.margin = 0.5 * out.i_M.value - c;
  out.satisfied = out.c_M.finite && out.margin >= -out.tau;
  return out;
}

ConditionReport condition_check(const Manifold& m, const RadiiEstimate& radii, Condition which,
                                const std::vector<double>& probe_radii, const AnalysisBudget& budget) {
  ConditionReport rep;
  rep.p = radii.p;
  rep.condition = which;
  const Point& p = radii.p;
  rep.evidence.push_back({{"kind", "radii"}, {"radii", to_json(radii)}});

  if (!radii.c_g.finite && !radii.sc_g.finite &&
      (which == Condition::B || !radii.slc_g.finite)) {
    rep.status = ConditionStatus::HoldsUpToBound;
    return rep;
  }

  bool fails = false;
  bool has_witness = false;
  const double tau = radii.c_g.half_width + radii.slc_g.half_width + radii.sc_g.half_width;

  if (radii.c_g.finite) {
    // The closed ball of radius c_g must be uniquely geodesic and slightly larger ones not.
    const double R = radii.c_g.value + radii.c_g.half_width;
    const UniquenessResult at_c = uniquely_geodesic_check(m, p, R, budget);
    nlohmann::json ug = {{"kind", "uniquely_geodesic"}, {"radius", R}, {"holds", at_c.holds},
                         {"pairs_checked", at_c.pairs_checked}};
    if (!at_c.holds) {
      ug["x"] = to_json(*at_c.x);
      ug["y"] = to_json(*at_c.y);
      ug["n_segments"] = at_c.n_segments;
      fails = true;
      has_witness = true;
    }
    rep.evidence.push_back(ug);
    if (at_c.holds) {
      const double R2 = R + 0.02 * radii.bound;
      const UniquenessResult beyond = uniquely_geodesic_check(m, p, R2, budget);
      nlohmann::json ub = {{"kind", "uniquely_geodesic_beyond"}, {"radius", R2},
                           {"holds", beyond.holds}, {"pairs_checked", beyond.pairs_checked}};
      if (!beyond.holds) {
        ub["x"] = to_json(*beyond.x);
        ub["y"] = to_json(*beyond.y);
        ub["n_segments"] = beyond.n_segments;
      } else {
        fails = true;
      }
      rep.evidence.push_back(ub);
    }

    const bool slc_above = !radii.slc_g.finite || radii.slc_g.value > radii.c_g.value + tau;
    rep.evidence.push_back({{"kind", "slc_vs_c"},
                            {"slc_g", to_json(radii.slc_g)},
                            {"c_g", to_json(radii.c_g)},
                            {"tau", tau},
                            {"holds", slc_above}});
    if (!slc_above) fails = true;
  }

  // A ball in the family that is properly but not strongly convex separates the two types.
  std::vector<double> radii_to_try = probe_radii;
  if (std::isfinite(radii.sc_hi)) radii_to_try.push_back(radii.sc_hi);
  if (radii.slc_g.finite) radii_to_try.push_back(radii.slc_g.value);
  if (radii.c_g.finite) {
    radii_to_try.push_back(radii.c_g.value);
    radii_to_try.push_back(radii.c_lo);
    if (std::isfinite(radii.sc_hi)) radii_to_try.push_back(0.5 * (radii.sc_hi + radii.c_lo));
  }
  const double top = radii.i_g.finite ? radii.i_g.value : radii.bound;
  for (double r : radii_to_try) {
    if (!(r > 0) || r > top || r > radii.bound) continue;
    const BallConvexityVerdict v = ball_convexity_check(m, p, r, budget);
    if (v.verdict == ConvexityVerdict::ProperlyConvexOnly) {
      rep.evidence.push_back({{"kind", "distinguishing_ball"}, {"ball", to_json(v)}});
      fails = true;
      has_witness = true;
      break;
    }
  }

  if (which == Condition::A) {
    const double tau_a = radii.slc_g.half_width + radii.sc_g.half_width;
    const double slc = radii.slc_g.finite ? radii.slc_g.value : radii.slc_g.bound;
    const double sc = radii.sc_g.finite ? radii.sc_g.value : radii.sc_g.bound;
    const bool agree = radii.slc_g.finite == radii.sc_g.finite && std::abs(slc - sc) <= tau_a;
    rep.evidence.push_back({{"kind", "slc_vs_sc"},
                            {"slc_g", to_json(radii.slc_g)},
                            {"sc_g", to_json(radii.sc_g)},
                            {"tau", tau_a},
                            {"holds", agree}});
    if (!agree) fails = true;
  }

  if (fails && !has_witness) {
    for (const char* key : {"c_failure", "sc_failure"}) {
      if (radii.witnesses.contains(key) && radii.witnesses[key].contains("witness")) {
        rep.evidence.push_back({{"kind", "failure_ball"}, {"ball", radii.witnesses[key]}});
        break;
      }
    }
  }
  rep.status = fails ? ConditionStatus::Fails : ConditionStatus::HoldsUpToBound;
  return rep;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const Point& p) { return {{"chart", p.chart}, {"x", as_vector(p.x)}}; }

nlohmann::json to_json(const RadiusValue& r) {
  if (r.finite) return {{"value", r.value}, {"half_width", r.half_width}};
  return {{"exceeds_bound", r.bound}};
}

nlohmann::json to_json(const BallWitness& w) {
  return {{"x", to_json(w.x)},
          {"y", to_json(w.y)},
          {"dist_x", w.dist_x},
          {"dist_y", w.dist_y},
          {"reason", to_string(w.reason)},
          {"t_star", w.t_star},
          {"max_distance", w.max_distance},
          {"n_segments", w.n_segments}};
}

nlohmann::json to_json(const BallConvexityVerdict& v) {
  nlohmann::json j = {{"p", to_json(v.p)},
                      {"r", v.r},
                      {"verdict", to_string(v.verdict)},
                      {"pairs_checked", v.pairs_checked}};
  if (v.witness) j["witness"] = to_json(*v.witness);
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

nlohmann::json to_json(const RadiiEstimate& r) {
  nlohmann::json j = {{"p", to_json(r.p)},
                      {"bound", r.bound},
                      {"i_g", to_json(r.i_g)},
                      {"lc_g", to_json(r.lc_g)},
                      {"slc_g", to_json(r.slc_g)},
                      {"c_g", to_json(r.c_g)},
                      {"sc_g", to_json(r.sc_g)},
                      {"partial", r.partial},
                      {"witnesses", r.witnesses}};
  return j;
}

nlohmann::json to_json(const CutPointRecord& c) {
  nlohmann::json j = {{"p", to_json(c.p)}, {"v", as_vector(c.v)}, {"bound", c.bound}, {"found", c.found}};
  if (!c.found) return j;
  j["t_cut"] = c.t_cut;
  j["t_cut_half_width"] = c.t_cut_half_width;
  j["q"] = to_json(c.q);
  j["classification"] = to_string(c.classification);
  j["n_segments"] = c.n_segments;
  j["jacobi_det"] = c.jacobi_det;
  return j;
}

nlohmann::json to_json(const BergerResult& b) {
  return {{"c_M", to_json(b.c_M)}, {"i_M", to_json(b.i_M)}, {"satisfied", b.satisfied},
          {"unbounded", b.unbounded}, {"margin", b.margin},   {"tau", b.tau}};
}

nlohmann::json to_json(const ConditionReport& c) {
  return {{"p", to_json(c.p)},
          {"condition", to_string(c.condition)},
          {"status", to_string(c.status)},
          {"evidence", c.evidence}};
}

}  // namespace convlab
