#include "convlab/chart.hpp"

#include "convlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace convlab {

namespace {

std::string describe(const double* x, int n) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < n; ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

void require_domain(const ManifoldChart& chart, const double* x) {
  if (!in_domain(chart, x))
    throw Error(ErrorKind::OutOfDomain,
                "point " + describe(x, chart.dim) + " outside chart '" + chart.label + "'");
}

// Stencil x +- h e_i must stay inside the domain for the non-periodic axes.
void require_stencil(const ManifoldChart& chart, const double* x, double h) {
  for (int i = 0; i < chart.dim; ++i) {
    if (chart.is_periodic(i)) continue;
    if (x[i] - h <= chart.domain[i].lo || x[i] + h >= chart.domain[i].hi)
      throw Error(ErrorKind::StencilOutsideDomain,
                  "finite-difference stencil at " + describe(x, chart.dim) +
                      " leaves chart '" + chart.label + "'");
  }
}

Christoffel christoffel_from(const ManifoldChart& chart, const double* x) {
  Christoffel gam(chart.dim);
  if (chart.christoffel_fn) {
    chart.christoffel_fn(x, gam.data());
  } else {
    gam = christoffel_fd(chart, Eigen::Map<const Vec>(x, chart.dim));
  }
  return gam;
}

}  // namespace

double fd_step(const double* x, int n) {
  double m = 1.0;
  for (int i = 0; i < n; ++i) m = std::max(m, std::abs(x[i]));
  return 1e-4 * m;
}

void wrap_inplace(const ManifoldChart& chart, double* x) {
  for (int i = 0; i < chart.dim; ++i) {
    if (!chart.is_periodic(i)) continue;
    const double p = *chart.period[i];
    const double lo = chart.domain[i].lo;
    double r = std::fmod(x[i] - lo, p);
    if (r < 0) r += p;
    if (r >= p) r = 0.0;
    x[i] = lo + r;
  }
}

Vec wrap_point(const ManifoldChart& chart, const Vec& x) {
  Vec y = x;
  wrap_inplace(chart, y.data());
  return y;
}

bool in_domain(const ManifoldChart& chart, const double* x) {
  for (int i = 0; i < chart.dim; ++i) {
    if (!std::isfinite(x[i])) return false;
    if (chart.is_periodic(i)) continue;
    if (x[i] <= chart.domain[i].lo || x[i] >= chart.domain[i].hi) return false;
  }
  return true;
}

Vec chart_difference(const ManifoldChart& chart, const Vec& a, const Vec& b) {
  Vec d = a - b;
  for (int i = 0; i < chart.dim; ++i) {
    if (!chart.is_periodic(i)) continue;
    const double p = *chart.period[i];
    d[i] -= p * std::round(d[i] / p);
  }
  return d;
}

Mat eval_metric(const ManifoldChart& chart, const Vec& x_in) {
  if (x_in.size() != chart.dim)
    throw Error(ErrorKind::InvalidArgument, "point dimension mismatch");
  Vec x = wrap_point(chart, x_in);
  require_domain(chart, x.data());
  Mat g(chart.dim, chart.dim);
  std::vector<double> buf(static_cast<size_t>(chart.dim * chart.dim));
  chart.metric_fn(x.data(), buf.data());
  for (int i = 0; i < chart.dim; ++i)
    for (int j = 0; j < chart.dim; ++j) g(i, j) = buf[static_cast<size_t>(i * chart.dim + j)];
  g = 0.5 * (g + g.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues()(0) > 0.0))
    throw Error(ErrorKind::NotPositiveDefinite,
                "metric at " + describe(x.data(), chart.dim) + " has min eigenvalue " +
                    std::to_string(es.eigenvalues()(0)));
  return g;
}

Christoffel christoffel_fd(const ManifoldChart& chart, const Vec& x_in) {
  const int n = chart.dim;
  Vec x = wrap_point(chart, x_in);
  require_domain(chart, x.data());
  const double h = fd_step(x.data(), n);
  require_stencil(chart, x.data(), h);

  const Mat g = eval_metric(chart, x);
  const Mat ginv = g.inverse();
  // dg[l](i,j) = d_l g_ij
  std::vector<Mat> dg(static_cast<size_t>(n));
  std::vector<double> gp(static_cast<size_t>(n * n)), gm(static_cast<size_t>(n * n));
  // Central differences at h and h/2, Richardson-extrapolated to fourth order.
  auto central = [&](int l, double step) {
    Vec xp = x, xm = x;
    xp[l] += step;
    xm[l] -= step;
    chart.metric_fn(xp.data(), gp.data());
    chart.metric_fn(xm.data(), gm.data());
    Mat d(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        d(i, j) = (gp[static_cast<size_t>(i * n + j)] - gm[static_cast<size_t>(i * n + j)]) / (2 * step);
    return d;
  };
  for (int l = 0; l < n; ++l)
    dg[static_cast<size_t>(l)] = (4.0 * central(l, 0.5 * h) - central(l, h)) / 3.0;
  Christoffel gam(n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l)
          s += ginv(k, l) * (dg[static_cast<size_t>(i)](j, l) + dg[static_cast<size_t>(j)](i, l) -
                             dg[static_cast<size_t>(l)](i, j));
        gam(k, i, j) = 0.5 * s;
        gam(k, j, i) = 0.5 * s;
      }
  return gam;
}

Christoffel christoffel(const ManifoldChart& chart, const Vec& x_in) {
  Vec x = wrap_point(chart, x_in);
  require_domain(chart, x.data());
  Christoffel gam = christoffel_from(chart, x.data());
  const int n = chart.dim;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double s = 0.5 * (gam(k, i, j) + gam(k, j, i));
        gam(k, i, j) = s;
        gam(k, j, i) = s;
      }
  return gam;
}

Vec curvature_fd(const ManifoldChart& chart, const Vec& x_in, const Vec& u, const Vec& w) {
  const int n = chart.dim;
  Vec x = wrap_point(chart, x_in);
  require_domain(chart, x.data());
  const double h = fd_step(x.data(), n);
  // The Christoffel route itself may difference the metric, so keep room for both stencils.
  require_stencil(chart, x.data(), chart.christoffel_fn ? h : 2 * h);

  const Christoffel g0 = christoffel_from(chart, x.data());
  std::vector<Christoffel> dgam;  // dgam[i](l,j,k) = d_i Gamma^l_jk
  dgam.reserve(static_cast<size_t>(n));
  // Same extrapolated central differences as for the Christoffels.
  auto central = [&](int i, double step) {
    Vec xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    const Christoffel gp = christoffel_from(chart, xp.data());
    const Christoffel gm = christoffel_from(chart, xm.data());
    Christoffel d(n);
    for (int a = 0; a < n * n * n; ++a) d.data()[a] = (gp.data()[a] - gm.data()[a]) / (2 * step);
    return d;
  };
  for (int i = 0; i < n; ++i) {
    const Christoffel coarse = central(i, h);
    Christoffel d = central(i, 0.5 * h);
    for (int a = 0; a < n * n * n; ++a) d.data()[a] = (4.0 * d.data()[a] - coarse.data()[a]) / 3.0;
    dgam.push_back(std::move(d));
  }
  // R^l_ijk = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik;  out^l = R^l_ijk w^i u^j u^k
  Vec out = Vec::Zero(n);
  for (int l = 0; l < n; ++l) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double r = dgam[static_cast<size_t>(i)](l, j, k) - dgam[static_cast<size_t>(j)](l, i, k);
          for (int m = 0; m < n; ++m) r += g0(l, i, m) * g0(m, j, k) - g0(l, j, m) * g0(m, i, k);
          s += r * w[i] * u[j] * u[k];
        }
    out[l] = s;
  }
  return out;
}

Vec curvature_apply(const ManifoldChart& chart, const Vec& x_in, const Vec& u, const Vec& w) {
  Vec x = wrap_point(chart, x_in);
  require_domain(chart, x.data());
  if (!chart.curvature_fn) return curvature_fd(chart, x, u, w);
  Vec out(chart.dim);
  chart.curvature_fn(x.data(), u.data(), w.data(), out.data());
  return out;
}

double inner(const Mat& g, const Vec& a, const Vec& b) { return a.dot(g * b); }

double norm(const Mat& g, const Vec& a) { return std::sqrt(std::max(0.0, inner(g, a, a))); }

std::vector<Vec> orthonormal_complement(const Mat& g, const Vec& v) {
  const int n = static_cast<int>(g.rows());
  std::vector<Vec> basis;
  Vec vn = v / norm(g, v);
  std::vector<Vec> done{vn};
  for (int i = 0; i < n && static_cast<int>(basis.size()) < n - 1; ++i) {
    Vec e = Vec::Unit(n, i);
    for (const Vec& b : done) e -= inner(g, e, b) * b;
    for (const Vec& b : done) e -= inner(g, e, b) * b;  // second pass for stability
    const double len = norm(g, e);
    if (len < 1e-8) continue;
    e /= len;
    done.push_back(e);
    basis.push_back(e);
  }
  return basis;
}

std::vector<Vec> orthonormal_frame(const Mat& g) {
  const int n = static_cast<int>(g.rows());
  std::vector<Vec> frame;
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Unit(n, i);
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& b : frame) e -= inner(g, e, b) * b;
    e /= norm(g, e);
    frame.push_back(e);
  }
  return frame;
}

namespace detail {

bool christoffel_raw(const ManifoldChart& chart, const double* x, double* gamma,
                     double* /*scratch*/) {
  if (!in_domain(chart, x)) return false;
  if (chart.christoffel_fn) {
    chart.christoffel_fn(x, gamma);
    return true;
  }
  try {
    const Christoffel c = christoffel_fd(chart, Eigen::Map<const Vec>(x, chart.dim));
    std::copy(c.data(), c.data() + chart.dim * chart.dim * chart.dim, gamma);
  } catch (const Error&) {
    return false;
  }
  return true;
}

bool curvature_raw(const ManifoldChart& chart, const double* x, const double* u,
                   const double* w, double* out) {
  if (!in_domain(chart, x)) return false;
  if (chart.curvature_fn) {
    chart.curvature_fn(x, u, w, out);
    return true;
  }
  try {
    const int n = chart.dim;
    const Vec r = curvature_fd(chart, Eigen::Map<const Vec>(x, n), Eigen::Map<const Vec>(u, n),
                               Eigen::Map<const Vec>(w, n));
    std::copy(r.data(), r.data() + n, out);
  } catch (const Error&) {
    return false;
  }
  return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------

Point Manifold::canonical(const Point& p) const {
  if (p.chart < 0 || p.chart >= static_cast<int>(charts.size()))
    throw Error(ErrorKind::InvalidArgument, "chart index out of range");
  if (p.x.size() != dim()) throw Error(ErrorKind::InvalidArgument, "point dimension mismatch");
  Point q{p.chart, wrap_point(chart(p.chart), p.x)};
  require_domain(chart(q.chart), q.x.data());
  if (select_chart) {
    const int c = select_chart(q.chart, q.x.data());
    if (c != q.chart) {
      Vec y(dim());
      transition_point(q.chart, c, q.x.data(), y.data());
      wrap_inplace(chart(c), y.data());
      q = Point{c, y};
    }
  }
  return q;
}

Vec Manifold::coords_in(const Point& p, int c) const {
  if (c == p.chart) return p.x;
  Vec y(dim());
  transition_point(p.chart, c, p.x.data(), y.data());
  wrap_inplace(chart(c), y.data());
  return y;
}

Vec Manifold::vector_in(const Point& p, const Vec& v, int c) const {
  if (c == p.chart) return v;
  const Vec y = coords_in(p, c);
  Vec out(dim());
  transition_vector(p.chart, c, p.x.data(), y.data(), v.data(), out.data());
  return out;
}

double Manifold::proximity(const Point& a, const Point& b) const {
  if (embed) {
    Vec ea(embed_dim), eb(embed_dim);
    embed(a.chart, a.x.data(), ea.data());
    embed(b.chart, b.x.data(), eb.data());
    return (ea - eb).norm();
  }
  const ManifoldChart& c = chart(b.chart);
  const Vec d = chart_difference(c, coords_in(a, b.chart), b.x);
  return norm(eval_metric(c, b.x), d);
}

}  // namespace convlab
