#include "convlab/errors.hpp"
#include "convlab/geodesic.hpp"
#include "convlab/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace convlab {

namespace {

// Rays worth refining: local minima of the miss around the ring in 2D, the closest rays
// otherwise.
std::vector<int> pick_candidates(const std::vector<GeodesicFan::Approach>& ap, int dim) {
  const int n = static_cast<int>(ap.size());
  std::vector<int> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return ap[static_cast<size_t>(a)].miss < ap[static_cast<size_t>(b)].miss;
  });
  std::vector<int> out;
  if (dim == 2) {
    for (int i : order) {
      const double m = ap[static_cast<size_t>(i)].miss;
      const double l = ap[static_cast<size_t>((i + n - 1) % n)].miss;
      const double r = ap[static_cast<size_t>((i + 1) % n)].miss;
      if (m <= l && m <= r) out.push_back(i);
      if (out.size() >= 10) break;
    }
    for (int i = 0; i < 3 && i < n; ++i)
      if (std::find(out.begin(), out.end(), order[static_cast<size_t>(i)]) == out.end())
        out.push_back(order[static_cast<size_t>(i)]);
  } else {
    for (int i = 0; i < std::min(n, 12); ++i) out.push_back(order[static_cast<size_t>(i)]);
  }
  return out;
}

}  // namespace

SegmentSet minimizing_segments(const Manifold& m, const Point& p_in, const Point& q_in,
                               const SegmentOptions& opts) {
  SegmentSet set;
  set.p = m.canonical(p_in);
  set.q = m.canonical(q_in);
  const Point& p = set.p;
  const Point& q = set.q;
  const Mat g = m.metric_at(p);
  if (m.proximity(p, q) < 1e-13) return set;

  const OracleEstimate oracle = graph_distance(m, p, q);
  set.oracle_distance = oracle.distance;
  set.oracle_spacing = oracle.spacing;
  if (oracle.distance > opts.bound + 2.0 * oracle.spacing)
    throw Error(ErrorKind::NoConvergence, "points are farther apart than the search bound");

  const double reach = std::min(opts.bound, 1.1 * oracle.distance + 2.0 * oracle.spacing);
  std::vector<Vec> dirs = sample_directions(g, opts.n_starts, opts.seed);
  GeodesicFan fan(m, p, dirs, reach, opts.ode);
  const std::vector<GeodesicFan::Approach> ap = fan.closest(q, reach);

  std::vector<Vec> guesses;
  for (int r : pick_candidates(ap, m.dim()))
    guesses.push_back(dirs[static_cast<size_t>(r)] * std::max(ap[static_cast<size_t>(r)].s, 1e-6));
  guesses.push_back(oracle.first_direction * oracle.distance);

  struct Solve {
    bool ok = false;
    Vec v;
    double length = 0;
  };
  std::vector<Solve> solves(guesses.size());
  LogOptions lo;
  lo.ode = opts.ode;
  lo.tol = std::min(lo.tol, 0.01 * opts.tol);
  parallel_for(guesses.size(), [&](size_t i) {
    const LogResult r = log_map(m, p, q, guesses[i], lo);
    if (!r.converged) return;
    solves[i].ok = true;
    solves[i].v = r.v;
    solves[i].length = norm(g, r.v);
  });

  std::vector<Solve> good;
  for (auto& s : solves)
    if (s.ok && s.length <= opts.bound + opts.tol) good.push_back(std::move(s));
  if (good.empty())
    throw Error(ErrorKind::NoConvergence, "no shooting start reached the target");
  std::stable_sort(good.begin(), good.end(),
                   [](const Solve& a, const Solve& b) { return a.length < b.length; });
  set.distance = good.front().length;

  for (const Solve& s : good) {
    if (s.length > set.distance + opts.tol) break;
    const Vec u = s.v / s.length;
    bool distinct = true;
    for (const Segment& seg : set.segments)
      if (vector_angle(g, seg.v0, u) < opts.cluster_angle) distinct = false;
    if (!distinct) continue;
    Segment seg;
    seg.v0 = u;
    seg.length = s.length;
    if (opts.keep_paths) seg.path = integrate_geodesic(m, p, u, s.length, {}, {}, opts.ode);
    set.segments.push_back(std::move(seg));
  }
  set.unique = set.segments.size() == 1;

  const double d = set.distance, dg = oracle.distance;
  set.oracle_rel_diff = std::abs(d - dg) / std::max(d, dg);
  if (std::abs(d - dg) > 0.1 * std::max(d, dg) + 2.0 * oracle.spacing)
    throw Error(ErrorKind::OracleMismatch,
                "shooting distance " + std::to_string(d) + " disagrees with graph estimate " +
                    std::to_string(dg));
  return set;
}

}  // namespace convlab
