#include "convlab/convexity.hpp"

#include "convlab/errors.hpp"
#include "convlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace convlab {

using std::numbers::pi;

const char* to_string(SccStatus s) {
  switch (s) {
    case SccStatus::Holds: return "holds";
    case SccStatus::Fails: return "fails";
    case SccStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

const char* to_string(ConvexityVerdict v) {
  switch (v) {
    case ConvexityVerdict::StronglyConvex: return "strongly_convex";
    case ConvexityVerdict::ProperlyConvexOnly: return "properly_convex_only";
    case ConvexityVerdict::NotConvex: return "not_convex";
    case ConvexityVerdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

const char* to_string(WitnessReason r) {
  switch (r) {
    case WitnessReason::SegmentEscapes: return "segment_escapes";
    case WitnessReason::NonUniqueSegment: return "non_unique_segment";
    case WitnessReason::BoundaryTangency: return "boundary_tangency";
  }
  return "?";
}

SccResult scc_check(const Manifold& m, const Point& p_in, double r, int n_dirs,
                    std::optional<double> injectivity, std::uint64_t seed) {
  if (!(r > 0)) throw Error(ErrorKind::InvalidArgument, "scc_check needs r > 0");
  if (injectivity && r >= *injectivity)
    throw Error(ErrorKind::RadiusBeyondInjectivity, "radius is not below the injectivity estimate");
  const Point p = m.canonical(p_in);
  const std::vector<Vec> dirs = sample_directions(m.metric_at(p), n_dirs, seed);
  std::vector<double> eig(dirs.size());
  parallel_for(dirs.size(), [&](size_t i) {
    const JacobiRay ray(m, p, dirs[i], r);
    if (ray.reach() < r) throw Error(ErrorKind::LeftDomain, "geodesic left the chart before r");
    eig[i] = ray.normalized_min_eig(r);
  });
  const size_t k = static_cast<size_t>(std::min_element(eig.begin(), eig.end()) - eig.begin());
  SccResult out;
  out.r = r;
  out.min_eig = eig[k];
  out.direction = dirs[k];
  if (out.min_eig > kEigenZero) out.status = SccStatus::Holds;
  else if (out.min_eig <= -kEigenZero) out.status = SccStatus::Fails;
  else out.status = SccStatus::Inconclusive;
  return out;
}

// ---------------------------------------------------------------------------

SegmentProfile segment_max_distance(const Manifold& m, const Point& p_in, const GeodesicPath& seg,
                                    const Vec& start_guess, double lo, double hi,
                                    double stop_above) {
  const Point p = m.canonical(p_in);
  const Mat gp = m.metric_at(p);
  const double L = seg.t_end();
  LogOptions lopts;
  lopts.tol = 1e-10;

  struct Sample {
    double s = 0, f = 0, fp = 0;
    Vec v;
  };
  auto eval = [&](double s, const Vec& guess, Sample& out) {
    const Point raw = seg.position(s);
    const Point q = m.canonical(raw);
    const LogResult r = log_map(m, p, q, guess, lopts);
    if (!r.converged) return false;
    out.s = s;
    out.v = r.v;
    out.f = norm(gp, r.v);
    out.fp = 0;
    if (out.f > 1e-12) {
      const Vec vel = raw.chart == q.chart ? seg.velocity(s) : m.vector_in(raw, seg.velocity(s), q.chart);
      out.fp = inner(m.metric_at(q), r.end_velocity, vel);
    }
    return true;
  };

  SegmentProfile prof;
  const Vec guess0 = p_in.chart == p.chart ? start_guess : m.vector_in(p_in, start_guess, p.chart);
  std::vector<Sample> S(1);
  if (!eval(0.0, guess0, S[0])) return prof;
  if (L <= 0) {
    prof.ok = true;
    prof.max_distance = S[0].f;
    return prof;
  }

  const int K = std::max(24, static_cast<int>(std::ceil(L / 0.1)));
  const double base_step = L / K;
  double step = base_step;
  while (S.back().s < L) {
    const Sample& last = S.back();
    const double s_try = std::min(L, last.s + step);
    Sample next;
    bool ok = false;
    if (S.size() >= 2) {
      const Sample& prev = S[S.size() - 2];
      const Vec extrap = last.v + (last.v - prev.v) * ((s_try - last.s) / (last.s - prev.s));
      ok = eval(s_try, extrap, next);
    }
    if (!ok) ok = eval(s_try, last.v, next);
    // Distance along a unit-speed curve is 1-Lipschitz; anything else is a branch jump.
    if (ok && std::abs(next.f - last.f) > (s_try - last.s) * (1 + 1e-6) + 1e-9) ok = false;
    if (ok) {
      if (next.f > stop_above && next.s >= lo * L && next.s <= hi * L) {
        prof.ok = true;
        prof.max_distance = next.f;
        prof.t_star = next.s / L;
        return prof;
      }
      S.push_back(std::move(next));
      step = std::min(base_step, 1.5 * step);
    } else {
      step *= 0.5;
      if (step < base_step / 64) return prof;
    }
  }

  auto hermite = [&](double s) {
    size_t k = static_cast<size_t>(
        std::upper_bound(S.begin(), S.end(), s, [](double x, const Sample& a) { return x < a.s; }) - S.begin());
    k = std::clamp<size_t>(k, 1, S.size() - 1);
    const Sample& a = S[k - 1];
    const Sample& b = S[k];
    const double h = b.s - a.s;
    const double u = (s - a.s) / h;
    const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
    const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
    return h00 * a.f + h10 * h * a.fp + h01 * b.f + h11 * h * b.fp;
  };
  auto interp_v = [&](double s) {
    size_t k = static_cast<size_t>(
        std::upper_bound(S.begin(), S.end(), s, [](double x, const Sample& a) { return x < a.s; }) - S.begin());
    k = std::clamp<size_t>(k, 1, S.size() - 1);
    const double u = (s - S[k - 1].s) / (S[k].s - S[k - 1].s);
    return Vec((1 - u) * S[k - 1].v + u * S[k].v);
  };

  constexpr int kGrid = 200;
  const double s_lo = lo * L, s_hi = hi * L;
  const double ds = (s_hi - s_lo) / (kGrid - 1);
  int best = 0;
  double best_f = -1;
  for (int j = 0; j < kGrid; ++j) {
    const double f = hermite(s_lo + j * ds);
    if (f > best_f) {
      best_f = f;
      best = j;
    }
  }

  // Golden-section refinement of the interpolated maximum on the true distance.
  double a = s_lo + std::max(0, best - 1) * ds, b = s_lo + std::min(kGrid - 1, best + 1) * ds;
  double s_best = s_lo + best * ds;
  Sample tmp;
  if (eval(s_best, interp_v(s_best), tmp)) best_f = std::max(best_f, tmp.f);
  const double gr = (std::sqrt(5.0) - 1) / 2;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  Sample sc, sd;
  bool okc = eval(c, interp_v(c), sc), okd = eval(d, interp_v(d), sd);
  for (int it = 0; it < 25 && okc && okd && b - a > 1e-9 * std::max(1.0, L); ++it) {
    if (sc.f > sd.f) {
      b = d;
      d = c;
      sd = sc;
      c = b - gr * (b - a);
      okc = eval(c, interp_v(c), sc);
    } else {
      a = c;
      c = d;
      sc = sd;
      d = a + gr * (b - a);
      okd = eval(d, interp_v(d), sd);
    }
  }
  for (const Sample* x : {&sc, &sd}) {
    if (!x->v.size()) continue;
    if (x->f > best_f) {
      best_f = x->f;
      s_best = x->s;
    }
  }
  prof.ok = true;
  prof.max_distance = best_f;
  prof.t_star = s_best / L;
  return prof;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kOpenShrink = 1e-4;    // open-ball pairs along diameters sit at r(1 - this)
constexpr double kTangentShrink = 1e-6; // and near-tangent open-ball pairs at r(1 - this)

struct PairSpec {
  Vec a, b;  // unit directions at p
  double ra = 0, rb = 0;
};

// Direction in which the geodesic sphere of radius rho is least convex, with the
// eigenvector of the index form giving the tangent direction there.
struct WorstDirection {
  Vec v, w;
  double eig = std::numeric_limits<double>::infinity();
};

WorstDirection worst_direction(const Manifold& m, const Point& p, double rho, std::uint64_t seed) {
  const int n = m.dim();
  const std::vector<Vec> dirs = sample_directions(m.metric_at(p), n == 2 ? 64 : 128, seed);
  std::vector<WorstDirection> per(dirs.size());
  parallel_for(dirs.size(), [&](size_t i) {
    const JacobiRay ray(m, p, dirs[i], rho);
    if (ray.reach() < rho) return;
    const Mat M = ray.index_matrix(rho);
    Eigen::SelfAdjointEigenSolver<Mat> es(M);
    const double scale = std::max(1.0, std::abs(M.trace()) / M.rows());
    per[i].v = ray.direction();
    per[i].eig = es.eigenvalues()(0) / scale;
    Vec w = Vec::Zero(n);
    for (int k = 0; k < M.rows(); ++k) w += es.eigenvectors()(k, 0) * ray.basis()[static_cast<size_t>(k)];
    per[i].w = w;
  });
  WorstDirection out;
  for (const auto& d : per)
    if (d.eig < out.eig) out = d;
  if (!out.v.size()) {
    out.v = dirs[0];
    out.w = orthonormal_complement(m.metric_at(p), dirs[0])[0];
  }
  return out;
}

Vec rotate(const Vec& a, const Vec& c, double angle) { return std::cos(angle) * a + std::sin(angle) * c; }

std::vector<PairSpec> make_pairs(const Manifold& m, const Point& p, double r, BallProperty kind,
                                 const AnalysisBudget& budget) {
  const int n = m.dim();
  const Mat g = m.metric_at(p);
  const double rho_d = kind == BallProperty::Proper ? r * (1 - kOpenShrink) : r;
  const double rho_t = kind == BallProperty::Proper ? r * (1 - kTangentShrink) : r;
  const auto frame = orthonormal_frame(g);
  std::vector<PairSpec> pairs;

  // Diameters, coordinate axes first.
  std::vector<Vec> diam;
  if (n == 2) {
    for (int k : {0, 4, 2, 6, 1, 5, 3, 7}) diam.push_back(rotate(frame[0], frame[1], k * pi / 8));
  } else {
    for (const Vec& e : frame) diam.push_back(e);
    for (const Vec& u : sample_directions(g, std::max(0, 8 - n), budget.seed ^ 0x5eedULL)) diam.push_back(u);
  }
  for (const Vec& u : diam) pairs.push_back({u, -u, rho_d, rho_d});

  // Chords around the least convex direction: near-tangent ones first, then wide ones.
  const WorstDirection wd = worst_direction(m, p, rho_t, budget.seed);
  for (double delta : {0.2, 0.1, 0.05})
    pairs.push_back({rotate(wd.v, wd.w, delta), rotate(wd.v, wd.w, -delta), rho_t, rho_t});
  for (double phi : {7 * pi / 16, 5 * pi / 16}) {
    pairs.push_back({rotate(wd.v, wd.w, phi), rotate(wd.v, wd.w, -phi), rho_d, rho_d});
    pairs.push_back({rotate(wd.w, wd.v, phi), rotate(wd.w, wd.v, -phi), rho_d, rho_d});
  }

  std::mt19937_64 rng(budget.seed * 0x9e3779b97f4a7c15ULL + 17);
  std::uniform_real_distribution<double> unif(0.2, 0.95);
  std::normal_distribution<double> z;
  auto random_dir = [&] {
    Vec c = Vec::Zero(n);
    for (const Vec& e : frame) c += z(rng) * e;
    return Vec(c / norm(g, c));
  };
  while (static_cast<int>(pairs.size()) < budget.n_pairs) {
    const Vec a = random_dir();
    const Vec b = random_dir();
    const double ra = unif(rng) * rho_d;
    const double rb = unif(rng) * rho_d;
    pairs.push_back({a, b, ra, rb});
  }
  return pairs;
}

struct PairOutcome {
  CheckOutcome outcome = CheckOutcome::Pass;
  std::optional<BallWitness> witness;
  std::string note;
};

PairOutcome check_pair(const Manifold& m, const Point& p, double r, BallProperty kind,
                       const PairSpec& ps, const AnalysisBudget& budget) {
  PairOutcome out;
  try {
    const GeodesicPath px = shoot(m, p, ps.a, ps.ra);
    const GeodesicPath py = shoot(m, p, ps.b, ps.rb);
    if (!px.completed() || !py.completed()) {
      out.outcome = CheckOutcome::Inconclusive;
      out.note = "pair point outside the chart domain";
      return out;
    }
    BallWitness w;
    w.x = m.canonical(px.end_point());
    w.y = m.canonical(py.end_point());
    w.dist_x = ps.ra;
    w.dist_y = ps.rb;

    SegmentOptions so;
    so.bound = 1.1 * (ps.ra + ps.rb) + 0.1;
    so.n_starts = budget.n_starts;
    so.seed = budget.seed;
    const SegmentSet segs = minimizing_segments(m, w.x, w.y, so);
    if (segs.segments.empty()) return out;
    w.n_segments = static_cast<int>(segs.segments.size());
    if (!segs.unique) {
      w.reason = WitnessReason::NonUniqueSegment;
      w.max_distance = std::max(ps.ra, ps.rb);
      out.outcome = CheckOutcome::Fail;
      out.witness = w;
      return out;
    }
    const double lo = kind == BallProperty::Strong ? 0.02 : 0.0;
    const double hi = kind == BallProperty::Strong ? 0.98 : 1.0;
    const SegmentProfile prof =
        segment_max_distance(m, p, segs.segments[0].path, ps.a * ps.ra, lo, hi, 1.05 * r + 0.01);
    if (!prof.ok) {
      out.outcome = CheckOutcome::Inconclusive;
      out.note = "distance continuation along the segment failed";
      return out;
    }
    w.max_distance = prof.max_distance;
    w.t_star = prof.t_star;
    const double tol_c = 1e-7 * std::max(1.0, r);
    if (kind == BallProperty::Proper) {
      if (prof.max_distance >= r + tol_c) {
        w.reason = WitnessReason::SegmentEscapes;
        out.outcome = CheckOutcome::Fail;
        out.witness = w;
      } else if (prof.max_distance > r - tol_c) {
        out.outcome = CheckOutcome::Inconclusive;
        out.note = "segment touches the boundary within tolerance";
      }
    } else if (prof.max_distance >= r - tol_c) {
      w.reason = prof.max_distance > r + tol_c ? WitnessReason::SegmentEscapes
                                               : WitnessReason::BoundaryTangency;
      out.outcome = CheckOutcome::Fail;
      out.witness = w;
    }
  } catch (const Error& e) {
    out.outcome = CheckOutcome::Inconclusive;
    out.note = std::string(to_string(e.kind())) + ": " + e.what();
  }
  return out;
}

}  // namespace

BallCheck check_ball(const Manifold& m, const Point& p_in, double r, BallProperty kind,
                     const AnalysisBudget& budget) {
  if (!(r > 0)) throw Error(ErrorKind::InvalidArgument, "ball radius must be > 0");
  const Point p = m.canonical(p_in);
  const std::vector<PairSpec> pairs = make_pairs(m, p, r, kind, budget);
  BallCheck out;
  const size_t chunk = static_cast<size_t>(worker_count());
  for (size_t start = 0; start < pairs.size(); start += chunk) {
    const size_t count = std::min(chunk, pairs.size() - start);
    std::vector<PairOutcome> res(count);
    parallel_for(count, [&](size_t i) { res[i] = check_pair(m, p, r, kind, pairs[start + i], budget); });
    for (size_t i = 0; i < count; ++i) {
      if (res[i].outcome == CheckOutcome::Pass) continue;
      out.outcome = res[i].outcome;
      out.witness = res[i].witness;
      out.note = res[i].note;
      out.pairs_checked = static_cast<int>(start + i + 1);
      return out;
    }
  }
  out.outcome = CheckOutcome::Pass;
  out.pairs_checked = static_cast<int>(pairs.size());
  return out;
}

BallConvexityVerdict ball_convexity_check(const Manifold& m, const Point& p, double r,
                                          const AnalysisBudget& budget) {
  BallConvexityVerdict v;
  v.p = m.canonical(p);
  v.r = r;
  const BallCheck strong = check_ball(m, p, r, BallProperty::Strong, budget);
  v.pairs_checked = strong.pairs_checked;
  if (strong.outcome == CheckOutcome::Pass) {
    v.verdict = ConvexityVerdict::StronglyConvex;
    return v;
  }
  const BallCheck proper = check_ball(m, p, r, BallProperty::Proper, budget);
  v.pairs_checked += proper.pairs_checked;
  if (proper.outcome == CheckOutcome::Fail) {
    v.verdict = ConvexityVerdict::NotConvex;
    v.witness = proper.witness;
  } else if (proper.outcome == CheckOutcome::Inconclusive) {
    v.verdict = ConvexityVerdict::Inconclusive;
    v.note = proper.note;
  } else if (strong.outcome == CheckOutcome::Fail) {
    v.verdict = ConvexityVerdict::ProperlyConvexOnly;
    v.witness = strong.witness;
  } else {
    v.verdict = ConvexityVerdict::Inconclusive;
    v.note = strong.note;
  }
  return v;
}

}  // namespace convlab
