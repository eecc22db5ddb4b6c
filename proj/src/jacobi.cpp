#include "convlab/jacobi.hpp"

#include "convlab/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace convlab {

namespace {

void require_orthogonal(const Mat& g, const Vec& v, const Vec& w) {
  const double scale = norm(g, v) * norm(g, w);
  if (std::abs(inner(g, v, w)) > 1e-8 * std::max(scale, 1e-300))
    throw Error(ErrorKind::InvalidArgument, "w must be g-orthogonal to the geodesic direction");
}

}  // namespace

JacobiField propagate_jacobi(const GeodesicPath& path, const Vec& w0) {
  const Manifold& m = path.manifold();
  const Point p = path.position(0.0);
  const Vec u = path.velocity(0.0);
  require_orthogonal(m.metric_at(p), u, w0);
  auto with_field = std::make_shared<GeodesicPath>(
      integrate_geodesic(m, p, u, path.t_requested(), {w0}, {}, IntegratorOptions{}));
  if (with_field->termination() == Termination::NonFinite)
    throw Error(ErrorKind::NonFiniteState, "Jacobi field blew up");
  return JacobiField(with_field, w0);
}

double index_form_value(const JacobiField& field, double r) {
  const GeodesicPath& path = field.path();
  if (!(r > 0.0) || r > path.t_end() + 1e-12)
    throw Error(ErrorKind::OutOfRange, "index form radius outside (0, path length]");
  const Mat g = path.metric(r);
  return inner(g, field.DJ(r), field.J(r));
}

double G_eval(const Manifold& m, const Point& p, const Vec& v, const Vec& w, double t) {
  const Mat g = m.metric_at(p);
  const double len = norm(g, v);
  if (!(len > 0)) throw Error(ErrorKind::InvalidArgument, "direction must be nonzero");
  if (!(norm(g, w) > 0)) throw Error(ErrorKind::InvalidArgument, "w must be nonzero");
  const Vec u = v / len;
  require_orthogonal(g, u, w);
  const GeodesicPath path = shoot(m, p, u, t);
  if (!path.completed())
    throw Error(ErrorKind::LeftDomain, "geodesic left the chart before t");
  return index_form_value(propagate_jacobi(path, w), t);
}

IndexFormMatrix index_matrix(const Manifold& m, const Point& p_in, const Vec& v, double t) {
  if (!(t > 0)) throw Error(ErrorKind::OutOfRange, "index matrix needs t > 0");
  const Point p = m.canonical(p_in);
  const Vec vp = p_in.chart == p.chart ? v : m.vector_in(p_in, v, p.chart);
  JacobiRay ray(m, p, vp, t);
  if (ray.reach() < t) throw Error(ErrorKind::LeftDomain, "geodesic left the chart before t");
  IndexFormMatrix out;
  out.p = p;
  out.v = ray.direction();
  out.t = t;
  out.basis = ray.basis();
  out.M = ray.index_matrix(t, &out.asymmetry);
  Eigen::SelfAdjointEigenSolver<Mat> es(out.M, Eigen::EigenvaluesOnly);
  out.eigenvalues = es.eigenvalues();
  return out;
}

double RadiusValue::upper() const {
  return finite ? value : std::numeric_limits<double>::infinity();
}

std::string RadiusValue::to_string() const {
  std::ostringstream os;
  os.precision(6);
  if (finite) os << value << " +/- " << half_width;
  else os << "exceeds_bound(" << bound << ")";
  return os.str();
}

RadiusValue min_radius(const RadiusValue& a, const RadiusValue& b) {
  if (!a.finite && !b.finite) return RadiusValue::exceeds(std::min(a.bound, b.bound));
  if (!a.finite) return b;
  if (!b.finite) return a;
  return a.value <= b.value ? a : b;
}

JacobiRay::JacobiRay(const Manifold& m, const Point& p, const Vec& v, double length,
                     const IntegratorOptions& opts)
    : m_(&m), p_(m.canonical(p)) {
  const Vec vp = p.chart == p_.chart ? v : m.vector_in(p, v, p_.chart);
  const Mat g = m.metric_at(p_);
  const double len = norm(g, vp);
  if (!(len > 0)) throw Error(ErrorKind::InvalidArgument, "direction must be nonzero");
  v_ = vp / len;
  basis_ = orthonormal_complement(g, v_);
  path_ = std::make_shared<GeodesicPath>(integrate_geodesic(m, p_, v_, length, basis_, basis_, opts));
  if (path_->termination() == Termination::NonFinite)
    throw Error(ErrorKind::NonFiniteState, "Jacobi fields blew up");
}

Mat JacobiRay::index_matrix(double t, double* asymmetry) const {
  const int k = static_cast<int>(basis_.size());
  int chart = 0;
  const std::vector<double> y = path_->state(t, &chart);
  const int n = path_->dim();
  const Mat g = eval_metric(m_->chart(chart), Eigen::Map<const Vec>(y.data(), n));
  Mat M(k, k);
  for (int a = 0; a < k; ++a) {
    const Vec P = Eigen::Map<const Vec>(y.data() + 2 * n + 2 * n * a + n, n);
    for (int b = 0; b < k; ++b) {
      const Vec J = Eigen::Map<const Vec>(y.data() + 2 * n + 2 * n * b, n);
      M(a, b) = inner(g, P, J);
    }
  }
  if (asymmetry) *asymmetry = (M - M.transpose()).cwiseAbs().maxCoeff();
  return 0.5 * (M + M.transpose());
}

double JacobiRay::normalized_min_eig(double t) const {
  const Mat M = index_matrix(t);
  const int k = static_cast<int>(M.rows());
  double lmin;
  if (k == 1) {
    lmin = M(0, 0);
  } else {
    Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
    lmin = es.eigenvalues()(0);
  }
  const double scale = std::max(1.0, std::abs(M.trace()) / k);
  return lmin / scale;
}

double JacobiRay::jacobi_det(double t) const {
  const int k = static_cast<int>(basis_.size());
  int chart = 0;
  const std::vector<double> y = path_->state(t, &chart);
  const int n = path_->dim();
  const Mat g = eval_metric(m_->chart(chart), Eigen::Map<const Vec>(y.data(), n));
  Mat D(k, k);
  for (int a = 0; a < k; ++a) {
    const Vec J = Eigen::Map<const Vec>(y.data() + 2 * n + 2 * n * a, n);
    for (int b = 0; b < k; ++b) {
      const Vec E = Eigen::Map<const Vec>(y.data() + 2 * n + 2 * n * k + n * b, n);
      D(a, b) = inner(g, J, E);
    }
  }
  return k == 1 ? D(0, 0) : D.determinant();
}

RadiusValue conjugate_radius(const Manifold& m, const Point& p, const Vec& v, double bound) {
  if (!(bound > 0)) throw Error(ErrorKind::InvalidArgument, "bound must be > 0");
  const JacobiRay ray(m, p, v, bound);
  return ray.first_crossing([&](double t) { return ray.jacobi_det(t); }, 0.0, bound);
}

RadiusValue scc_breakdown_radius(const Manifold& m, const Point& p, const Vec& v, double bound) {
  if (!(bound > 0)) throw Error(ErrorKind::InvalidArgument, "bound must be > 0");
  const JacobiRay ray(m, p, v, bound);
  return ray.first_crossing([&](double t) { return ray.normalized_min_eig(t); }, kEigenZero, bound);
}

}  // namespace convlab
