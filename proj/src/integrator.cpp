// Dormand-Prince 5(4) integration of the geodesic equation with co-integrated Jacobi fields
// and parallel transport, dense output and chart switching.

#include "convlab/errors.hpp"
#include "convlab/geodesic.hpp"

#include <algorithm>
#include <cmath>

namespace convlab {

namespace {

// Dormand-Prince tableau.
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Dense output (Hairer's contd5).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

class GeodesicRhs {
 public:
  GeodesicRhs(const Manifold& m, int n_jacobi, int n_transport)
      : m_(m),
        n_(m.dim()),
        nj_(n_jacobi),
        nt_(n_transport),
        gam_(static_cast<size_t>(n_ * n_ * n_)),
        r_(static_cast<size_t>(n_)) {}

  int size() const { return 2 * n_ + 2 * n_ * nj_ + n_ * nt_; }

  // Sum_ij Gamma^k_ij a^i b^j
  double contract(int k, const double* a, const double* b) const {
    const double* g = gam_.data() + static_cast<size_t>(k * n_ * n_);
    double s = 0.0;
    for (int i = 0; i < n_; ++i) {
      double row = 0.0;
      for (int j = 0; j < n_; ++j) row += g[i * n_ + j] * b[j];
      s += a[i] * row;
    }
    return s;
  }

  bool operator()(int chart, const double* y, double* dy) {
    const ManifoldChart& c = m_.chart(chart);
    const double* x = y;
    const double* u = y + n_;
    if (!detail::christoffel_raw(c, x, gam_.data(), nullptr)) return false;
    for (int k = 0; k < n_; ++k) {
      dy[k] = u[k];
      dy[n_ + k] = -contract(k, u, u);
    }
    for (int f = 0; f < nj_; ++f) {
      const double* J = y + 2 * n_ + 2 * n_ * f;
      const double* P = J + n_;
      double* dJ = dy + 2 * n_ + 2 * n_ * f;
      double* dP = dJ + n_;
      if (!detail::curvature_raw(c, x, u, J, r_.data())) return false;
      for (int k = 0; k < n_; ++k) {
        dJ[k] = P[k] - contract(k, u, J);
        dP[k] = -r_[static_cast<size_t>(k)] - contract(k, u, P);
      }
    }
    for (int f = 0; f < nt_; ++f) {
      const double* E = y + 2 * n_ + 2 * n_ * nj_ + n_ * f;
      double* dE = dy + 2 * n_ + 2 * n_ * nj_ + n_ * f;
      for (int k = 0; k < n_; ++k) dE[k] = -contract(k, u, E);
    }
    for (int i = 0; i < size(); ++i)
      if (!std::isfinite(dy[i])) return false;
    return true;
  }

 private:
  const Manifold& m_;
  int n_, nj_, nt_;
  std::vector<double> gam_;
  std::vector<double> r_;
};

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

// Moves the full state into another chart: x by the point transition, every other block
// (velocity, J, P, E) as a tangent vector.
void switch_chart(const Manifold& m, int from, int to, std::vector<double>& y) {
  const int n = m.dim();
  std::vector<double> x_new(static_cast<size_t>(n));
  m.transition_point(from, to, y.data(), x_new.data());
  wrap_inplace(m.chart(to), x_new.data());
  std::vector<double> out(static_cast<size_t>(n));
  const int blocks = static_cast<int>(y.size()) / n;
  for (int b = 1; b < blocks; ++b) {
    m.transition_vector(from, to, y.data(), x_new.data(), y.data() + b * n, out.data());
    std::copy(out.begin(), out.end(), y.begin() + b * n);
  }
  std::copy(x_new.begin(), x_new.end(), y.begin());
}

}  // namespace

const char* to_string(Termination t) {
  switch (t) {
    case Termination::Completed: return "completed";
    case Termination::LeftDomain: return "left_domain";
    case Termination::NonFinite: return "non_finite";
  }
  return "unknown";
}

GeodesicPath::GeodesicPath(const Manifold* m, int n_jacobi, int n_transport)
    : manifold_(m), n_(m->dim()), n_jacobi_(n_jacobi), n_transport_(n_transport) {}

std::vector<double> GeodesicPath::state(double t, int* chart) const {
  if (steps_.empty() || t <= 0.0) {
    if (chart) *chart = steps_.empty() && t > 0.0 ? chart_end_ : chart0_;
    return t > 0.0 && steps_.empty() ? y_end_ : y0_;
  }
  if (t >= t_end_) {
    if (chart) *chart = chart_end_;
    return y_end_;
  }
  auto it = std::upper_bound(steps_.begin(), steps_.end(), t,
                             [](double v, const Step& s) { return v < s.t0; });
  const Step& s = *(it - 1);
  const double th = (t - s.t0) / s.h;
  const double th1 = 1.0 - th;
  const int S = state_size();
  std::vector<double> y(static_cast<size_t>(S));
  const double* r = s.coeffs.data();
  for (int i = 0; i < S; ++i)
    y[static_cast<size_t>(i)] =
        r[i] + th * (r[S + i] + th1 * (r[2 * S + i] + th * (r[3 * S + i] + th1 * r[4 * S + i])));
  wrap_inplace(manifold_->chart(s.chart), y.data());
  if (chart) *chart = s.chart;
  return y;
}

Vec GeodesicPath::slice(const std::vector<double>& y, int offset) const {
  return Eigen::Map<const Vec>(y.data() + offset, n_);
}

Point GeodesicPath::position(double t) const {
  int c = 0;
  const auto y = state(t, &c);
  return Point{c, slice(y, 0)};
}

Vec GeodesicPath::velocity(double t) const { return slice(state(t, nullptr), n_); }

Vec GeodesicPath::jacobi(double t, int k) const {
  return slice(state(t, nullptr), 2 * n_ + 2 * n_ * k);
}

Vec GeodesicPath::jacobi_derivative(double t, int k) const {
  return slice(state(t, nullptr), 2 * n_ + 2 * n_ * k + n_);
}

Vec GeodesicPath::transported(double t, int k) const {
  return slice(state(t, nullptr), 2 * n_ + 2 * n_ * n_jacobi_ + n_ * k);
}

Mat GeodesicPath::metric(double t) const {
  const Point p = position(t);
  return eval_metric(manifold_->chart(p.chart), p.x);
}

std::vector<double> GeodesicPath::node_times() const {
  std::vector<double> t{0.0};
  for (const Step& s : steps_) t.push_back(s.t0 + s.h);
  if (!steps_.empty()) t.back() = t_end_;
  return t;
}

GeodesicPath integrate_geodesic(const Manifold& m, const Point& p_in, const Vec& v, double T,
                                const std::vector<Vec>& jacobi_dj0,
                                const std::vector<Vec>& transported,
                                const IntegratorOptions& opts) {
  const int n = m.dim();
  const int nj = static_cast<int>(jacobi_dj0.size());
  const int nt = static_cast<int>(transported.size());
  if (v.size() != n) throw Error(ErrorKind::InvalidArgument, "velocity dimension mismatch");
  if (!(T >= 0.0)) throw Error(ErrorKind::InvalidArgument, "integration length must be >= 0");

  GeodesicPath path(&m, nj, nt);
  const int S = path.state_size();

  // Initial state in the input chart, then moved to the preferred chart.
  Point p{p_in.chart, wrap_point(m.chart(p_in.chart), p_in.x)};
  if (!in_domain(m.chart(p.chart), p.x.data()))
    throw Error(ErrorKind::OutOfDomain, "geodesic start point outside chart domain");
  std::vector<double> y(static_cast<size_t>(S), 0.0);
  std::copy(p.x.data(), p.x.data() + n, y.begin());
  std::copy(v.data(), v.data() + n, y.begin() + n);
  for (int f = 0; f < nj; ++f)
    std::copy(jacobi_dj0[static_cast<size_t>(f)].data(), jacobi_dj0[static_cast<size_t>(f)].data() + n,
              y.begin() + 2 * n + 2 * n * f + n);
  for (int f = 0; f < nt; ++f)
    std::copy(transported[static_cast<size_t>(f)].data(), transported[static_cast<size_t>(f)].data() + n,
              y.begin() + 2 * n + 2 * n * nj + n * f);
  int chart = p.chart;
  if (m.select_chart) {
    const int c = m.select_chart(chart, y.data());
    if (c != chart) {
      switch_chart(m, chart, c, y);
      chart = c;
    }
  }
  path.y0_ = y;
  path.chart0_ = chart;
  path.t_requested_ = T;
  {
    const Mat g = eval_metric(m.chart(chart), Eigen::Map<const Vec>(y.data(), n));
    const Vec u = Eigen::Map<const Vec>(y.data() + n, n);
    path.speed_ = norm(g, u);
    path.unit_speed_ = std::abs(path.speed_ - 1.0) < 1e-9;
  }

  GeodesicRhs rhs(m, nj, nt);
  std::vector<double> k1(S), k2(S), k3(S), k4(S), k5(S), k6(S), k7(S), yt(S), y1(S);
  auto finish = [&](double t, Termination term) {
    path.t_end_ = t;
    path.termination_ = term;
    path.y_end_ = y;
    path.chart_end_ = chart;
  };

  if (T == 0.0) {
    finish(0.0, Termination::Completed);
    return path;
  }
  if (!rhs(chart, y.data(), k1.data())) {
    finish(0.0, Termination::LeftDomain);
    return path;
  }

  double t = 0.0;
  // h_max bounds the arclength covered per step.
  const double h_cap = opts.h_max / std::max(path.speed_, 1e-300);
  double h = std::min({opts.h_init, h_cap, T});
  const double h_min = 1e-10 * std::max(1.0, T);
  int steps = 0;
  while (t < T) {
    if (++steps > opts.max_steps)
      throw Error(ErrorKind::BudgetExceeded, "geodesic integration exceeded step budget");
    h = std::min(h, T - t);
    if (T - t - h < 1e-12 * std::max(1.0, T)) h = T - t;

    auto stage = [&](std::vector<double>& out, std::initializer_list<std::pair<double, const std::vector<double>*>> terms) {
      for (int i = 0; i < S; ++i) {
        double s = y[static_cast<size_t>(i)];
        for (const auto& [c, k] : terms) s += h * c * (*k)[static_cast<size_t>(i)];
        yt[static_cast<size_t>(i)] = s;
      }
      return rhs(chart, yt.data(), out.data());
    };
    bool ok = stage(k2, {{a21, &k1}}) && stage(k3, {{a31, &k1}, {a32, &k2}}) &&
              stage(k4, {{a41, &k1}, {a42, &k2}, {a43, &k3}}) &&
              stage(k5, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}) &&
              stage(k6, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
    double err = 0.0;
    if (ok) {
      for (int i = 0; i < S; ++i) {
        const size_t s = static_cast<size_t>(i);
        y1[s] = y[s] + h * (a71 * k1[s] + a73 * k3[s] + a74 * k4[s] + a75 * k5[s] + a76 * k6[s]);
      }
      ok = rhs(chart, y1.data(), k7.data());
    }
    if (ok) {
      for (int i = 0; i < S; ++i) {
        const size_t s = static_cast<size_t>(i);
        const double e = h * (e1 * k1[s] + e3 * k3[s] + e4 * k4[s] + e5 * k5[s] + e6 * k6[s] +
                              e7 * k7[s]);
        // A periodic coordinate's magnitude depends only on where the period window starts,
        // so it gets a unit scale.
        const double mag = (i < n && m.chart(chart).is_periodic(i))
                               ? 1.0
                               : std::max(std::abs(y[s]), std::abs(y1[s]));
        const double sc = opts.atol + opts.rtol * mag;
        err += (e / sc) * (e / sc);
      }
      err = std::sqrt(err / S);
      ok = std::isfinite(err);
    }
    if (!ok) {
      h *= 0.25;
      if (h < h_min) {
        finish(t, all_finite(y) ? Termination::LeftDomain : Termination::NonFinite);
        return path;
      }
      continue;
    }
    if (err > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      if (h < h_min) {
        finish(t, Termination::NonFinite);
        return path;
      }
      continue;
    }

    GeodesicPath::Step st;
    st.t0 = t;
    st.h = h;
    st.chart = chart;
    st.coeffs.resize(static_cast<size_t>(5 * S));
    for (int i = 0; i < S; ++i) {
      const size_t s = static_cast<size_t>(i);
      const double ydiff = y1[s] - y[s];
      const double bspl = h * k1[s] - ydiff;
      st.coeffs[s] = y[s];
      st.coeffs[static_cast<size_t>(S) + s] = ydiff;
      st.coeffs[static_cast<size_t>(2 * S) + s] = bspl;
      st.coeffs[static_cast<size_t>(3 * S) + s] = ydiff - h * k7[s] - bspl;
      st.coeffs[static_cast<size_t>(4 * S) + s] =
          h * (d1 * k1[s] + d3 * k3[s] + d4 * k4[s] + d5 * k5[s] + d6 * k6[s] + d7 * k7[s]);
    }
    path.steps_.push_back(std::move(st));

    t = (h == T - t) ? T : t + h;
    y = y1;
    k1 = k7;
    wrap_inplace(m.chart(chart), y.data());
    if (m.select_chart) {
      const int c = m.select_chart(chart, y.data());
      if (c != chart) {
        switch_chart(m, chart, c, y);
        chart = c;
        if (!rhs(chart, y.data(), k1.data())) {
          finish(t, Termination::LeftDomain);
          return path;
        }
      }
    }
    h = std::min(h_cap, h * std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-12), -0.2))));
  }
  finish(T, Termination::Completed);
  return path;
}

GeodesicPath shoot(const Manifold& m, const Point& p, const Vec& v, double T,
                   const IntegratorOptions& opts) {
  const Mat g = eval_metric(m.chart(p.chart), p.x);
  if (!(norm(g, v) > 0.0)) throw Error(ErrorKind::InvalidArgument, "shoot: initial velocity must be nonzero");
  GeodesicPath path = integrate_geodesic(m, p, v, T, {}, {}, opts);
  if (path.termination() == Termination::NonFinite)
    throw Error(ErrorKind::NonFiniteState,
                "geodesic blew up at t = " + std::to_string(path.t_end()));
  return path;
}

Point exp_map(const Manifold& m, const Point& p, const Vec& v, const IntegratorOptions& opts) {
  const Mat g = eval_metric(m.chart(p.chart), p.x);
  const double L = norm(g, v);
  if (L == 0.0) return m.canonical(p);
  const GeodesicPath path = shoot(m, p, v / L, L, opts);
  if (!path.completed())
    throw Error(ErrorKind::LeftDomain,
                "geodesic left the chart domain at t = " + std::to_string(path.t_end()));
  return path.end_point();
}

}  // namespace convlab
