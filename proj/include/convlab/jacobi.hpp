#pragma once

#include "convlab/geodesic.hpp"

#include <memory>
#include <string>
#include <vector>

namespace convlab {

// Zero threshold for normalized index-form eigenvalues and Jacobi determinants.
inline constexpr double kEigenZero = 1e-7;

// A p-Jacobi field J(0) = 0, D_tJ(0) = w0 along a unit-speed geodesic from p.
class JacobiField {
 public:
  JacobiField(std::shared_ptr<const GeodesicPath> path, Vec w0) : path_(std::move(path)), w0_(std::move(w0)) {}

  Vec J(double t) const { return path_->jacobi(t, 0); }
  Vec DJ(double t) const { return path_->jacobi_derivative(t, 0); }
  const Vec& w0() const { return w0_; }
  const GeodesicPath& path() const { return *path_; }

 private:
  std::shared_ptr<const GeodesicPath> path_;
  Vec w0_;
};

// Re-integrates `path` together with the Jacobi field.  w0 is given in the chart of the
// path's start point and must be g-orthogonal to the initial velocity.
JacobiField propagate_jacobi(const GeodesicPath& path, const Vec& w0);

// <D_tJ(r), J(r)>_g.  Throws OutOfRange unless 0 < r <= path length.
double index_form_value(const JacobiField& field, double r);

// G(t, v, w) with v normalized to unit length and w in the g-orthogonal complement of v.
double G_eval(const Manifold& m, const Point& p, const Vec& v, const Vec& w, double t);

struct IndexFormMatrix {
  Point p;
  Vec v;
  double t = 0;
  std::vector<Vec> basis;  // g-orthonormal basis of the complement of v at p
  Mat M;                   // symmetrized <D_tJ_k(t), J_l(t)>_g
  Vec eigenvalues;         // ascending
  double asymmetry = 0;    // max |M_kl - M_lk| before symmetrization
};

IndexFormMatrix index_matrix(const Manifold& m, const Point& p, const Vec& v, double t);

// A radius that is either a bracketed finite value or beyond the searched range.
struct RadiusValue {
  bool finite = false;
  double value = 0;       // meaningful when finite
  double half_width = 0;  // meaningful when finite
  double bound = 0;       // search range; value reported as exceeds_bound(bound) otherwise

  static RadiusValue exceeds(double b) { return RadiusValue{false, 0, 0, b}; }
  static RadiusValue at(double v, double hw, double b) { return RadiusValue{true, v, hw, b}; }
  // Value for comparisons: +inf when unbounded.
  double upper() const;
  std::string to_string() const;
};

RadiusValue min_radius(const RadiusValue& a, const RadiusValue& b);

// Unit-speed geodesic from p carrying n-1 Jacobi fields and a parallel frame of the
// complement of v, evaluated on demand.  Shared by the per-direction searches and the
// direction sweeps in the radii estimator.
class JacobiRay {
 public:
  JacobiRay(const Manifold& m, const Point& p, const Vec& v, double length,
            const IntegratorOptions& opts = {});

  const GeodesicPath& path() const { return *path_; }
  std::shared_ptr<const GeodesicPath> shared_path() const { return path_; }
  const std::vector<Vec>& basis() const { return basis_; }
  const Vec& direction() const { return v_; }
  // Usable length: the requested length unless the path left the domain.
  double reach() const { return path_->t_end(); }

  Mat index_matrix(double t, double* asymmetry = nullptr) const;
  // Smallest eigenvalue of the index matrix divided by max(1, |trace| / (n-1)).
  double normalized_min_eig(double t) const;
  // det[<J_k(t), E_l(t)>_g]; vanishes at conjugate points.
  double jacobi_det(double t) const;

  // First t in (0, bound] with f(t) <= threshold: scanned on a uniform 200-sample grid,
  // then bisected to 1e-8.
  template <class F>
  RadiusValue first_crossing(F&& f, double threshold, double bound) const;

 private:
  const Manifold* m_;
  Point p_;
  Vec v_;
  std::vector<Vec> basis_;
  std::shared_ptr<const GeodesicPath> path_;
};

RadiusValue conjugate_radius(const Manifold& m, const Point& p, const Vec& v, double bound);
RadiusValue scc_breakdown_radius(const Manifold& m, const Point& p, const Vec& v, double bound);

// ---------------------------------------------------------------------------

template <class F>
RadiusValue JacobiRay::first_crossing(F&& f, double threshold, double bound) const {
  constexpr int kGrid = 200;
  const double reach_len = std::min(bound, reach());
  const double dt = bound / kGrid;
  double prev = 0.0;
  for (int j = 1; j <= kGrid; ++j) {
    const double t = std::min(j * dt, reach_len);
    if (f(t) <= threshold) {
      double lo = prev, hi = t;
      while (hi - lo > 1e-8) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) <= threshold) hi = mid;
        else lo = mid;
      }
      return RadiusValue::at(0.5 * (lo + hi), 0.5 * (hi - lo), bound);
    }
    prev = t;
    if (t >= reach_len) break;
  }
  return RadiusValue::exceeds(reach_len);
}

}  // namespace convlab
