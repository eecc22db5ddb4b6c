#include "convlab/errors.hpp"
#include "convlab/geodesic.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace convlab {

namespace {

struct ShotResult {
  Vec residual;  // q - endpoint, q's chart, wrapped
  Mat jac;       // d(endpoint)/dv, q's chart
  Vec end_velocity;
};

bool shot_to(const Manifold& m, const Point& p, const Point& q, const Vec& v,
             const IntegratorOptions& ode, ShotResult& out) {
  const int n = m.dim();
  const Mat gp = eval_metric(m.chart(p.chart), p.x);
  const double L = norm(gp, v);
  const ManifoldChart& cq = m.chart(q.chart);
  out.jac.resize(n, n);
  if (L < 1e-14) {
    out.residual = chart_difference(cq, q.x, m.coords_in(p, q.chart));
    for (int i = 0; i < n; ++i) out.jac.col(i) = m.vector_in(p, Vec::Unit(n, i), q.chart);
    out.end_velocity = Vec::Zero(n);
    return true;
  }
  std::vector<Vec> dj0;
  dj0.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) dj0.push_back(Vec::Unit(n, i) / L);
  GeodesicPath path = integrate_geodesic(m, p, v / L, L, dj0, {}, ode);
  if (!path.completed()) return false;
  int ch = 0;
  const std::vector<double> y = path.state(L, &ch);
  const Point e{ch, Eigen::Map<const Vec>(y.data(), n)};
  out.residual = chart_difference(cq, q.x, m.coords_in(e, q.chart));
  for (int i = 0; i < n; ++i)
    out.jac.col(i) = m.vector_in(e, Eigen::Map<const Vec>(y.data() + 2 * n + 2 * n * i, n), q.chart);
  out.end_velocity = m.vector_in(e, Eigen::Map<const Vec>(y.data() + n, n), q.chart);
  return out.residual.allFinite() && out.jac.allFinite();
}

}  // namespace

LogResult log_map(const Manifold& m, const Point& p_in, const Point& q_in, const Vec& guess,
                  const LogOptions& opts) {
  const Point p = m.canonical(p_in);
  const Point q = m.canonical(q_in);
  const Mat gp = eval_metric(m.chart(p.chart), p.x);
  const Mat gq = eval_metric(m.chart(q.chart), q.x);
  // The guess is expressed in p_in's chart.
  Vec v = (p_in.chart == p.chart) ? guess : m.vector_in(p_in, guess, p.chart);

  LogResult res;
  ShotResult shot;
  if (!shot_to(m, p, q, v, opts.ode, shot)) {
    res.v = v;
    res.residual = std::numeric_limits<double>::infinity();
    return res;
  }
  double r = norm(gq, shot.residual);

  auto newton_step = [&](const ShotResult& sh, const Vec& at) {
    Eigen::JacobiSVD<Mat> svd(sh.jac, Eigen::ComputeFullU | Eigen::ComputeFullV);
    svd.setThreshold(1e-10);
    Vec delta = svd.solve(sh.residual);
    const double cap = std::max(0.5 * norm(gp, at), 0.25);
    const double dn = norm(gp, delta);
    if (dn > cap) delta *= cap / dn;
    return delta;
  };

  // Updates act on length and direction separately, so that a pure rotation of v does not
  // also lengthen it; near conjugate points that side effect swamps the step.
  auto apply_step = [&](const Vec& at, const Vec& delta) -> Vec {
    const double L = norm(gp, at);
    if (L < 1e-8) return at + delta;
    const Vec u = at / L;
    const double dr = inner(gp, delta, u);
    const Vec dt = delta - dr * u;
    const Vec w = u + dt / L;
    const double len = std::max(L + dr, 0.0);
    return len * w / norm(gp, w);
  };

  // Undamped Newton first: near conjugate points the residual is far from monotone along
  // the Newton path and a line search stalls.  Falls back to the damped iteration below.
  {
    Vec vn = v;
    ShotResult sn = shot;
    double rn = r;
    for (int it = 0; it < 8 && it < opts.max_iter; ++it) {
      if (rn <= opts.tol * std::max(1.0, norm(gp, vn))) {
        res.converged = true;
        res.iterations = it;
        v = vn;
        shot = std::move(sn);
        r = rn;
        break;
      }
      const Vec vt = apply_step(vn, newton_step(sn, vn));
      ShotResult trial;
      if (!shot_to(m, p, q, vt, opts.ode, trial)) break;
      const double rt = norm(gq, trial.residual);
      if (!(rt < 100.0 * r)) break;
      vn = vt;
      sn = std::move(trial);
      rn = rt;
    }
  }

  for (int it = 0; it < opts.max_iter && !res.converged; ++it) {
    res.iterations = it;
    const double L = norm(gp, v);
    if (r <= opts.tol * std::max(1.0, L)) {
      res.converged = true;
      break;
    }
    const Vec delta = newton_step(shot, v);

    bool improved = false;
    double lambda = 1.0;
    for (int ls = 0; ls < 12; ++ls, lambda *= 0.5) {
      ShotResult trial;
      const Vec vt = apply_step(v, lambda * delta);
      if (!shot_to(m, p, q, vt, opts.ode, trial)) continue;
      const double rt = norm(gq, trial.residual);
      if (rt < r) {
        v = vt;
        shot = std::move(trial);
        r = rt;
        improved = true;
        break;
      }
    }
    if (!improved) break;
    res.iterations = it + 1;
  }
  if (!res.converged && r <= opts.tol * std::max(1.0, norm(gp, v))) res.converged = true;
  // One plain Newton step past the tolerance; exact on flat charts.
  if (res.converged && r > 1e-3 * opts.tol) {
    ShotResult trial;
    const Vec vt = v + newton_step(shot, v);
    if (shot_to(m, p, q, vt, opts.ode, trial)) {
      const double rt = norm(gq, trial.residual);
      if (rt < r) {
        v = vt;
        shot = std::move(trial);
        r = rt;
      }
    }
  }
  res.v = v;
  res.residual = r;
  if (res.converged) {
    const double s = norm(gq, shot.end_velocity);
    res.end_velocity = s > 0 ? Vec(shot.end_velocity / s) : shot.end_velocity;
  }
  return res;
}

std::vector<Vec> sample_directions(const Mat& g, int count, std::uint64_t seed, double offset) {
  const int n = static_cast<int>(g.rows());
  const std::vector<Vec> frame = orthonormal_frame(g);
  std::vector<Vec> out;
  out.reserve(static_cast<size_t>(count));
  if (n == 1) {
    for (int k = 0; k < count; ++k) out.push_back(k % 2 == 0 ? frame[0] : Vec(-frame[0]));
    return out;
  }
  if (n == 2) {
    for (int k = 0; k < count; ++k) {
      const double a = offset + 2.0 * std::numbers::pi * k / count;
      out.push_back(std::cos(a) * frame[0] + std::sin(a) * frame[1]);
    }
    return out;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int k = 0; k < count; ++k) {
    Vec z(n);
    do {
      for (int i = 0; i < n; ++i) z(i) = normal(rng);
    } while (z.norm() < 1e-8);
    z.normalize();
    Vec w = Vec::Zero(n);
    for (int i = 0; i < n; ++i) w += z(i) * frame[static_cast<size_t>(i)];
    out.push_back(w);
  }
  return out;
}

double vector_angle(const Mat& g, const Vec& a, const Vec& b) {
  const double na = norm(g, a), nb = norm(g, b);
  if (na == 0 || nb == 0) return 0.0;
  const double c = std::clamp(inner(g, a, b) / (na * nb), -1.0, 1.0);
  return std::acos(c);
}

// ---------------------------------------------------------------------------

GeodesicFan::GeodesicFan(const Manifold& m, const Point& p, std::vector<Vec> directions,
                         double length, const IntegratorOptions& opts)
    : m_(&m), p_(m.canonical(p)), dirs_(std::move(directions)) {
  width_ = m.embed ? m.embed_dim : m.dim();
  s_.resize(dirs_.size());
  coords_.resize(dirs_.size());
  // Directions are given in p's chart; convert once.
  for (auto& d : dirs_)
    if (p.chart != p_.chart) d = m.vector_in(p, d, p_.chart);
  for (size_t i = 0; i < dirs_.size(); ++i) {
    const GeodesicPath path = integrate_geodesic(m, p_, dirs_[i], length, {}, {}, opts);
    add_samples(i, path);
  }
}

GeodesicFan::GeodesicFan(const Manifold& m, const Point& p, std::vector<Vec> directions,
                         const std::vector<const GeodesicPath*>& paths)
    : m_(&m), p_(m.canonical(p)), dirs_(std::move(directions)) {
  width_ = m.embed ? m.embed_dim : m.dim();
  s_.resize(dirs_.size());
  coords_.resize(dirs_.size());
  for (size_t i = 0; i < dirs_.size(); ++i) {
    add_samples(i, *paths[i]);
  }
}

// Samples the path at its nodes and subdivides so consecutive samples are <= 0.05 apart
// in arclength.
void GeodesicFan::add_samples(size_t ray, const GeodesicPath& path) {
  auto& s = s_[ray];
  auto& c = coords_[ray];
  const int n = m_->dim();
  const double speed = path.speed() > 0 ? path.speed() : 1.0;
  const std::vector<double> nodes = path.node_times();
  std::vector<double> e(static_cast<size_t>(width_));
  auto push = [&](double t) {
    int ch = 0;
    const std::vector<double> y = path.state(t, &ch);
    s.push_back(t * speed);
    if (m_->embed) {
      m_->embed(ch, y.data(), e.data());
      c.insert(c.end(), e.begin(), e.end());
    } else {
      c.insert(c.end(), y.begin(), y.begin() + n);
    }
  };
  push(0.0);
  for (size_t k = 1; k < nodes.size(); ++k) {
    const double t0 = nodes[k - 1], t1 = nodes[k];
    const int sub = std::max(1, static_cast<int>(std::ceil((t1 - t0) * speed / 0.05)));
    for (int j = 1; j <= sub; ++j) push(t0 + (t1 - t0) * j / sub);
  }
}

std::vector<GeodesicFan::Approach> GeodesicFan::closest(const Point& q_in, double s_max,
                                                         double s_min) const {
  const Point q = m_->canonical(q_in);
  std::vector<double> qc(static_cast<size_t>(width_));
  Mat g;
  if (m_->embed) {
    m_->embed(q.chart, q.x.data(), qc.data());
  } else {
    for (int i = 0; i < width_; ++i) qc[static_cast<size_t>(i)] = q.x(i);
    g = eval_metric(m_->chart(0), q.x);
  }
  const ManifoldChart& c0 = m_->chart(0);
  std::vector<Approach> out(dirs_.size());
  Vec d(width_);
  for (size_t r = 0; r < dirs_.size(); ++r) {
    const auto& s = s_[r];
    const auto& c = coords_[r];
    auto dist2 = [&](size_t k) {
      const double* ck = c.data() + k * static_cast<size_t>(width_);
      if (m_->embed) {
        double acc = 0;
        for (int i = 0; i < width_; ++i) {
          const double t = ck[i] - qc[static_cast<size_t>(i)];
          acc += t * t;
        }
        return acc;
      }
      for (int i = 0; i < width_; ++i) {
        double t = ck[i] - qc[static_cast<size_t>(i)];
        if (c0.period[static_cast<size_t>(i)]) {
          const double P = *c0.period[static_cast<size_t>(i)];
          t -= P * std::round(t / P);
        }
        d(i) = t;
      }
      return std::max(0.0, d.dot(g * d));
    };
    Approach best;
    best.ray = static_cast<int>(r);
    best.miss = std::numeric_limits<double>::infinity();
    size_t kbest = 0;
    double dbest = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < s.size(); ++k) {
      if (s[k] < s_min || s[k] > s_max) continue;
      const double dk = dist2(k);
      if (dk < dbest) {
        dbest = dk;
        kbest = k;
      }
    }
    if (std::isfinite(dbest)) {
      best.s = s[kbest];
      best.miss = std::sqrt(dbest);
      // Parabola through the squared distances of the neighbouring samples.
      if (kbest > 0 && kbest + 1 < s.size() && s[kbest - 1] >= s_min && s[kbest + 1] <= s_max) {
        const double s0 = s[kbest - 1], s1 = s[kbest], s2 = s[kbest + 1];
        const double d0 = dist2(kbest - 1), d2 = dist2(kbest + 1);
        const double a = ((d2 - dbest) / (s2 - s1) - (dbest - d0) / (s1 - s0)) / (s2 - s0);
        const double b = (dbest - d0) / (s1 - s0) - a * (s0 + s1);
        if (a > 0) {
          const double sv = std::clamp(-b / (2 * a), s0, s2);
          const double dv = dbest + (a * (sv * sv - s1 * s1) + b * (sv - s1));
          if (dv < dbest) {
            best.s = sv;
            best.miss = std::sqrt(std::max(0.0, dv));
          }
        }
      }
    }
    out[r] = best;
  }
  return out;
}

}  // namespace convlab
