#include "convlab/convexity.hpp"

#include "convlab/errors.hpp"
#include "convlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace convlab {

namespace {

constexpr double kShortcutSlack = 1e-6;   // a competitor must be this much shorter
constexpr double kBallWidth = 0.004;      // bisection stop for c_g and sc_g
constexpr double kOpenShrinkBias = 1e-4;  // open-ball pairs sit at r(1 - this)
constexpr int kScanSteps = 8;            // coarse scan before shortcut bisection

// Fan of geodesics from p used to find geodesics shorter than a given ray.
class ShortcutFinder {
 public:
  ShortcutFinder(const Manifold& m, const Point& p, std::vector<Vec> dirs, double length)
      : m_(&m), p_(p), g_(m.metric_at(p)), dirs_(std::move(dirs)), paths_(dirs_.size()) {
    parallel_for(dirs_.size(), [&](size_t i) { paths_[i] = shoot(m, p_, dirs_[i], length); });
    std::vector<const GeodesicPath*> ptrs;
    for (const auto& path : paths_) ptrs.push_back(&path);
    fan_ = std::make_unique<GeodesicFan>(m, p_, dirs_, ptrs);
  }

  size_t size() const { return dirs_.size(); }
  const Vec& dir(size_t i) const { return dirs_[i]; }
  const GeodesicPath& path(size_t i) const { return paths_[i]; }

  // Initial velocity of a geodesic from p to ray(t) shorter than t, if one is found.
  std::optional<Vec> shorter_than(const GeodesicPath& ray, const Vec& dir, double t) const {
    if (t > ray.t_end()) return std::nullopt;
    const Point q = m_->canonical(ray.position(t));
    const double margin = 0.05 + 0.02 * t;
    const auto ap = fan_->closest(q, t + margin);
    std::vector<std::pair<double, size_t>> cand;
    for (size_t j = 0; j < ap.size(); ++j) {
      if (!std::isfinite(ap[j].miss)) continue;
      if (vector_angle(g_, dirs_[j], dir) <= 0.2) continue;
      const double key = ap[j].s + ap[j].miss;
      if (key < t + margin) cand.emplace_back(key, j);
    }
    std::sort(cand.begin(), cand.end());
    LogOptions lo;
    lo.tol = 1e-10;
    lo.max_iter = 15;
    for (size_t k = 0; k < std::min<size_t>(2, cand.size()); ++k) {
      const size_t j = cand[k].second;
      const LogResult r = log_map(*m_, p_, q, dirs_[j] * std::max(ap[j].s, 1e-6), lo);
      if (!r.converged) continue;
      const double L = norm(g_, r.v);
      if (L < t - kShortcutSlack && vector_angle(g_, r.v, dir) > 0.05) return r.v;
    }
    return std::nullopt;
  }

 private:
  const Manifold* m_;
  Point p_;
  Mat g_;
  std::vector<Vec> dirs_;
  std::vector<GeodesicPath> paths_;
  std::unique_ptr<GeodesicFan> fan_;
};

// Angular spacing of a direction sample.
double direction_spacing(int dim, int count) {
  if (dim == 2) return 2 * std::numbers::pi / count;
  return std::sqrt(4 * std::numbers::pi / count);
}

// Infimum over directions with a half-width from the variation between neighbouring
// directions around the minimizer.
RadiusValue direction_infimum(const std::vector<RadiusValue>& vals, const std::vector<Vec>& dirs,
                              const Mat& g, double bound, size_t* argmin) {
  size_t best = vals.size();
  double reach = bound;
  for (size_t i = 0; i < vals.size(); ++i) {
    if (!vals[i].finite) {
      reach = std::min(reach, vals[i].bound);
      continue;
    }
    if (best == vals.size() || vals[i].value < vals[best].value) best = i;
  }
  if (argmin) *argmin = best;
  if (best == vals.size()) return RadiusValue::exceeds(reach);
  // Neighbours: the closest directions by angle.
  std::vector<std::pair<double, size_t>> by_angle;
  for (size_t i = 0; i < dirs.size(); ++i)
    if (i != best) by_angle.emplace_back(vector_angle(g, dirs[i], dirs[best]), i);
  std::sort(by_angle.begin(), by_angle.end());
  const size_t k = dirs[best].size() == 2 ? 2 : 4;
  double spread = 0;
  for (size_t n = 0; n < std::min(k, by_angle.size()); ++n) {
    const RadiusValue& nb = vals[by_angle[n].second];
    spread = std::max(spread, (nb.finite ? nb.value : nb.bound) - vals[best].value);
  }
  const double hw = std::max({0.25 * spread, vals[best].half_width, 1e-8});
  return RadiusValue::at(vals[best].value, hw, bound);
}

RadiusValue cap_at(const RadiusValue& r, const RadiusValue& cap, bool* capped) {
  *capped = false;
  if (!cap.finite) return r;
  if (!r.finite || r.value > cap.value) {
    *capped = true;
    return cap;
  }
  return r;
}

nlohmann::json witness_json(const std::optional<BallWitness>& w, double r, const std::string& note) {
  nlohmann::json j = {{"radius", r}};
  if (w) j["witness"] = to_json(*w);
  if (!note.empty()) j["note"] = note;
  return j;
}

}  // namespace

std::vector<LatticeCheck> lattice_checks(const RadiiEstimate& r) {
  std::vector<LatticeCheck> out;
  auto add = [&](const std::string& rel, const RadiusValue& a, const RadiusValue& b) {
    LatticeCheck c;
    c.relation = rel;
    if (a.finite && b.finite) {
      c.lhs = a.value;
      c.rhs = b.value;
      c.slack = a.half_width + b.half_width;
      c.holds = a.value <= b.value + c.slack;
    } else if (a.finite) {
      c.lhs = a.value;
      c.rhs = b.bound;
      c.holds = a.value <= b.bound + a.half_width;
    } else {
      c.lhs = a.bound;
      c.rhs = b.finite ? b.value : b.bound;
      // Unbounded left side: only consistent if the right side is unbounded too.
      c.holds = !b.finite;
    }
    out.push_back(c);
  };
  add("sc_g <= c_g", r.sc_g, r.c_g);
  add("slc_g <= lc_g", r.slc_g, r.lc_g);
  add("c_g <= lc_g", r.c_g, r.lc_g);
  add("sc_g <= slc_g", r.sc_g, r.slc_g);
  add("lc_g <= i_g", r.lc_g, r.i_g);
  return out;
}

// ---------------------------------------------------------------------------

RadiiEstimate radii_estimate(const Manifold& m, const Point& p_in, double bound,
                             const AnalysisBudget& budget) {
  if (!(bound > 0)) throw Error(ErrorKind::InvalidArgument, "bound must be > 0");
  RadiiEstimate out;
  out.p = m.canonical(p_in);
  out.bound = bound;
  const Point& p = out.p;
  const Mat g = m.metric_at(p);
  const int n_dirs = budget.directions(m.dim());
  const std::vector<Vec> dirs = sample_directions(g, n_dirs, budget.seed);

  try {
    // Per-direction conjugate and breakdown radii.
    std::vector<RadiusValue> conj(dirs.size()), slc(dirs.size()), lc(dirs.size());
    parallel_for(dirs.size(), [&](size_t i) {
      const JacobiRay ray(m, p, dirs[i], bound);
      conj[i] = ray.first_crossing([&](double t) { return ray.jacobi_det(t); }, 0.0, bound);
      slc[i] = ray.first_crossing([&](double t) { return ray.normalized_min_eig(t); }, kEigenZero, bound);
      lc[i] = ray.first_crossing([&](double t) { return ray.normalized_min_eig(t); }, -kEigenZero, bound);
    });
    size_t i_conj = 0, i_slc = 0, i_lc = 0;
    const RadiusValue conj_min = direction_infimum(conj, dirs, g, bound, &i_conj);
    const RadiusValue slc_raw = direction_infimum(slc, dirs, g, bound, &i_slc);
    const RadiusValue lc_raw = direction_infimum(lc, dirs, g, bound, &i_lc);
    if (conj_min.finite)
      out.witnesses["conjugate"] = {{"direction", std::vector<double>(dirs[i_conj].data(), dirs[i_conj].data() + dirs[i_conj].size())},
                                    {"t", conj_min.value}};
    if (slc_raw.finite)
      out.witnesses["scc_breakdown"] = {{"direction", std::vector<double>(dirs[i_slc].data(), dirs[i_slc].data() + dirs[i_slc].size())},
                                        {"t", slc_raw.value}};

    // Shortcuts: the first length at which some ray stops minimizing.
    const double hi0 = std::min(conj_min.upper(), bound);
    const ShortcutFinder finder(m, p, dirs, hi0 + 0.05 + 0.02 * hi0);
    auto shortcut_ray = [&](double t) -> std::optional<std::pair<size_t, Vec>> {
      const size_t chunk = static_cast<size_t>(worker_count());
      for (size_t start = 0; start < finder.size(); start += chunk) {
        const size_t count = std::min(chunk, finder.size() - start);
        std::vector<std::optional<Vec>> hit(count);
        parallel_for(count, [&](size_t k) {
          hit[k] = finder.shorter_than(finder.path(start + k), finder.dir(start + k), t);
        });
        for (size_t k = 0; k < count; ++k)
          if (hit[k]) return std::make_pair(start + k, *hit[k]);
      }
      return std::nullopt;
    };
    RadiusValue shortcut = RadiusValue::exceeds(hi0);
    // The shortcut set of a ray is an interval to infinity, but a competitor can be missed at
    // isolated lengths (e.g. when the ray returns to p), so scan before bisecting.
    double lo = 0, hi = hi0;
    std::optional<std::pair<size_t, Vec>> hit;
    for (int k = 1; k <= kScanSteps && !hit; ++k) {
      const double t = hi0 * k / kScanSteps;
      hit = shortcut_ray(t);
      if (hit) hi = t;
      else lo = t;
    }
    if (hit) {
      auto best = *hit;
      while (hi - lo > 5e-4) {
        const double mid = 0.5 * (lo + hi);
        if (auto h = shortcut_ray(mid)) {
          hi = mid;
          best = *h;
        } else {
          lo = mid;
        }
      }
      const double da = direction_spacing(m.dim(), n_dirs);
      shortcut = RadiusValue::at(0.5 * (lo + hi), 0.5 * (hi - lo) + hi * da * da / 8, bound);
      const Vec& d = finder.dir(best.first);
      out.witnesses["shortcut"] = {{"direction", std::vector<double>(d.data(), d.data() + d.size())},
                                   {"t", hi},
                                   {"shorter_length", norm(g, best.second)}};
    }
    out.i_g = min_radius(conj_min, shortcut);
    if (!out.i_g.finite) out.i_g = RadiusValue::exceeds(std::min(conj_min.bound, bound));

    bool capped_lc = false, capped_slc = false;
    out.lc_g = cap_at(lc_raw, out.i_g, &capped_lc);
    out.slc_g = cap_at(slc_raw, out.i_g, &capped_slc);
    if (capped_lc || capped_slc)
      out.witnesses["capped_at_injectivity"] = {{"lc_g", capped_lc}, {"slc_g", capped_slc}};

    // c_g and sc_g: bisection on ball checks below the injectivity estimate.
    const double delta = out.i_g.finite ? std::max(0.01, 2 * out.i_g.half_width) : 0.0;
    const double top = out.i_g.finite ? std::min(out.i_g.value - delta, bound) : bound;
    // Each check either raises lo or lowers hi; `guesses` are tried before plain bisection.
    auto bisect = [&](BallProperty kind, double hi_start, std::vector<double> guesses,
                      RadiusValue& val, double& lo_out, double& hi_out, const char* key) {
      double lo = 0, hi = hi_start;
      const BallCheck top_check = check_ball(m, p, hi, kind, budget);
      if (top_check.outcome == CheckOutcome::Pass) {
        lo_out = hi;
        hi_out = std::numeric_limits<double>::infinity();
        val = hi >= bound ? RadiusValue::exceeds(bound)
                          : RadiusValue::at(out.i_g.value, delta + out.i_g.half_width, bound);
        return;
      }
      BallCheck last_fail = top_check;
      auto probe = [&](double r) {
        const BallCheck c = check_ball(m, p, r, kind, budget);
        if (c.outcome == CheckOutcome::Pass) {
          lo = r;
        } else {
          hi = r;
          last_fail = c;
        }
      };
      for (double r : guesses)
        if (r > lo && r < hi && hi - lo > kBallWidth) probe(r);
      for (int it = 0; it < 20 && hi - lo > kBallWidth; ++it) probe(0.5 * (lo + hi));
      lo_out = lo;
      hi_out = hi;
      const double bias = kind == BallProperty::Proper ? kOpenShrinkBias * hi : 0.0;
      val = RadiusValue::at(0.5 * (lo + hi), 0.5 * (hi - lo) + bias, bound);
      out.witnesses[key] = witness_json(last_fail.witness, hi, last_fail.note);
    };
    // Likely location of c_g: the breakdown radius or half the injectivity radius.
    const double c_guess = std::min(out.slc_g.upper(), 0.5 * out.i_g.upper());
    std::vector<double> c_guesses;
    if (std::isfinite(c_guess)) c_guesses = {c_guess - 0.45 * kBallWidth, c_guess + 0.45 * kBallWidth};
    bisect(BallProperty::Proper, top, c_guesses, out.c_g, out.c_lo, out.c_hi, "c_failure");
    if (std::isfinite(out.c_hi))
      bisect(BallProperty::Strong, out.c_hi,
             {out.c_lo, out.c_lo - kBallWidth, out.c_lo - 4 * kBallWidth, out.c_lo - 16 * kBallWidth},
             out.sc_g, out.sc_lo, out.sc_hi, "sc_failure");
    else
      bisect(BallProperty::Strong, top, {}, out.sc_g, out.sc_lo, out.sc_hi, "sc_failure");
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::BudgetExceeded) throw;
    out.partial = true;
    out.witnesses["budget_exceeded"] = e.what();
  }
  return out;
}

// ---------------------------------------------------------------------------

CutSearch find_cut(const Manifold& m, const Point& p_in, const Vec& v_in, double bound,
                   const AnalysisBudget& budget) {
  if (!(bound > 0)) throw Error(ErrorKind::InvalidArgument, "bound must be > 0");
  const Point p = m.canonical(p_in);
  const Vec v0 = p_in.chart == p.chart ? v_in : m.vector_in(p_in, v_in, p.chart);
  const Mat g = m.metric_at(p);
  const JacobiRay ray(m, p, v0, bound);
  const Vec& v = ray.direction();
  CutSearch out;
  out.conjugate = ray.first_crossing([&](double t) { return ray.jacobi_det(t); }, 0.0, bound);

  const double hi0 = std::min({out.conjugate.upper(), bound, ray.reach()});
  const ShortcutFinder finder(m, p, sample_directions(g, budget.directions(m.dim()), budget.seed),
                              hi0 + 0.05 + 0.02 * hi0);
  out.shortcut = RadiusValue::exceeds(hi0);
  double lo = 0, hi = hi0;
  std::optional<Vec> comp;
  for (int k = 1; k <= 12 * kScanSteps && !comp; ++k) {
    const double t = hi0 * k / (12 * kScanSteps);
    comp = finder.shorter_than(ray.path(), v, t);
    if (comp) hi = t;
    else lo = t;
  }
  if (comp) {
    Vec w = *comp;
    while (hi - lo > 1e-7) {
      const double mid = 0.5 * (lo + hi);
      if (auto c = finder.shorter_than(ray.path(), v, mid)) {
        hi = mid;
        w = *c;
      } else {
        lo = mid;
      }
    }
    // Secant on t - L_alt(t), where L_alt follows the competing geodesic.
    LogOptions lopt;
    lopt.tol = 1e-12;
    auto h = [&](double t, Vec& guess, bool& ok) {
      const LogResult r = log_map(m, p, m.canonical(ray.path().position(t)), guess, lopt);
      ok = r.converged;
      if (ok) guess = r.v;
      return t - norm(g, r.v);
    };
    double t0 = lo, t1 = hi;
    Vec w0 = w, w1 = w;
    bool ok0 = false, ok1 = false;
    double h0 = h(t0, w0, ok0), h1 = h(t1, w1, ok1);
    double t_star = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
    Vec w_star = w;
    for (int it = 0; it < 30 && ok0 && ok1 && h1 != h0; ++it) {
      const double t2 = t1 - h1 * (t1 - t0) / (h1 - h0);
      if (!(std::abs(t2 - 0.5 * (lo + hi)) < 1e-3)) break;
      Vec w2 = w1;
      bool ok2 = false;
      const double h2 = h(t2, w2, ok2);
      t0 = t1;
      h0 = h1;
      w0 = w1;
      t1 = t2;
      h1 = h2;
      w1 = w2;
      ok1 = ok2;
      if (ok2 && std::abs(h2) < 1e-12) {
        t_star = t2;
        hw = 1e-10;
        w_star = w2;
        break;
      }
    }
    out.shortcut = RadiusValue::at(t_star, hw, bound);
    out.competitor = w_star;
  }

  if (out.conjugate.finite && (!out.shortcut.finite || out.conjugate.value <= out.shortcut.value)) {
    out.t_cut = out.conjugate;
    out.competitor.reset();
  } else if (out.shortcut.finite) {
    out.t_cut = out.shortcut;
  } else {
    out.t_cut = RadiusValue::exceeds(hi0);
  }
  if (out.t_cut.finite) {
    out.q = m.canonical(ray.path().position(out.t_cut.value));
    out.jacobi_det = ray.jacobi_det(out.t_cut.value);
  }
  return out;
}

}  // namespace convlab
