#pragma once

#include "convlab/chart.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace convlab {

struct IntegratorOptions {
  double atol = 1e-9;
  double rtol = 1e-9;
  double h_max = 0.025; // arclength per step; also limits how far a step moves towards a chart pole
  double h_init = 0.02;
  int max_steps = 500000;
};

enum class Termination { Completed, LeftDomain, NonFinite };

const char* to_string(Termination t);

// Dense solution of the geodesic equation, optionally carrying Jacobi fields (J, D_tJ) with
// J(0) = 0 and parallel-transported vectors.  State layout per chart:
//   [x (n) | xdot (n) | (J_k, P_k) for each Jacobi field (2n each) | E_k (n each)]
class GeodesicPath {
 public:
  struct Step {
    double t0 = 0, h = 0;
    int chart = 0;
    std::vector<double> coeffs;  // 5 * state_size dense-output coefficients
  };

  GeodesicPath() = default;
  GeodesicPath(const Manifold* m, int n_jacobi, int n_transport);

  int dim() const { return n_; }
  int n_jacobi() const { return n_jacobi_; }
  int n_transport() const { return n_transport_; }
  int state_size() const { return 2 * n_ + 2 * n_ * n_jacobi_ + n_ * n_transport_; }

  double t_end() const { return t_end_; }
  double t_requested() const { return t_requested_; }
  Termination termination() const { return termination_; }
  bool completed() const { return termination_ == Termination::Completed; }
  bool unit_speed() const { return unit_speed_; }
  double speed() const { return speed_; }

  // Raw state at parameter t (clamped to [0, t_end]); periodic coordinates wrapped.
  std::vector<double> state(double t, int* chart) const;

  Point position(double t) const;
  Vec velocity(double t) const;  // components in the chart of position(t)
  Vec jacobi(double t, int k) const;
  Vec jacobi_derivative(double t, int k) const;
  Vec transported(double t, int k) const;

  Point end_point() const { return position(t_end_); }
  Mat metric(double t) const;

  // Accepted step boundaries; states there are exact integrator states, not interpolants.
  std::vector<double> node_times() const;
  const std::vector<Step>& steps() const { return steps_; }
  const Manifold& manifold() const { return *manifold_; }

 private:
  friend GeodesicPath integrate_geodesic(const Manifold&, const Point&, const Vec&, double,
                                         const std::vector<Vec>&, const std::vector<Vec>&,
                                         const IntegratorOptions&);
  Vec slice(const std::vector<double>& y, int offset) const;

  const Manifold* manifold_ = nullptr;
  int n_ = 0, n_jacobi_ = 0, n_transport_ = 0;
  std::vector<Step> steps_;
  std::vector<double> y0_;
  int chart0_ = 0;
  std::vector<double> y_end_;
  int chart_end_ = 0;
  double t_end_ = 0, t_requested_ = 0, speed_ = 0;
  bool unit_speed_ = false;
  Termination termination_ = Termination::Completed;
};

// Integrates x(0) = p, xdot(0) = v on [0, T].  jacobi_dj0[k] is D_tJ_k(0) (J_k(0) = 0),
// transported[k] the initial value of a parallel field.  The manifold must outlive the path.
GeodesicPath integrate_geodesic(const Manifold& m, const Point& p, const Vec& v, double T,
                                const std::vector<Vec>& jacobi_dj0 = {},
                                const std::vector<Vec>& transported = {},
                                const IntegratorOptions& opts = {});

// Plain geodesic; domain escape is reported on the path (termination()), not thrown.
// Throws NonFiniteState on numerical blow-up.
GeodesicPath shoot(const Manifold& m, const Point& p, const Vec& v, double T,
                   const IntegratorOptions& opts = {});

// Throws LeftDomain if the geodesic leaves the chart domain before |v|.
Point exp_map(const Manifold& m, const Point& p, const Vec& v, const IntegratorOptions& opts = {});

// ---------------------------------------------------------------------------

struct LogOptions {
  IntegratorOptions ode;
  double tol = 1e-8;  // endpoint miss in metric units, scaled by max(1, length)
  int max_iter = 40;
};

struct LogResult {
  bool converged = false;
  Vec v;                // initial velocity at p (p's chart); |v|_g is the geodesic length
  double residual = 0;  // endpoint miss in metric units
  int iterations = 0;
  Vec end_velocity;     // unit velocity at q, in q's chart (only when converged)
};

// Damped Gauss-Newton on the exponential map starting from `guess`.  Finds *a* geodesic,
// not necessarily a minimizing one.
LogResult log_map(const Manifold& m, const Point& p, const Point& q, const Vec& guess,
                  const LogOptions& opts = {});

// ---------------------------------------------------------------------------

// g-unit directions at p: uniform angles for n = 2 (rotated by `offset`), seeded uniform
// on the sphere for n >= 3.
std::vector<Vec> sample_directions(const Mat& g, int count, std::uint64_t seed, double offset = 0.0);

// Geodesics from a common base point, sampled densely enough for closest-approach queries.
class GeodesicFan {
 public:
  struct Approach {
    int ray = -1;
    double s = 0;     // arclength of closest sample
    double miss = 0;  // proximity to the query point
  };

  GeodesicFan(const Manifold& m, const Point& p, std::vector<Vec> directions, double length,
              const IntegratorOptions& opts = {});
  // Builds the fan from already integrated unit-speed paths.
  GeodesicFan(const Manifold& m, const Point& p, std::vector<Vec> directions,
              const std::vector<const GeodesicPath*>& paths);

  const Point& base() const { return p_; }
  const std::vector<Vec>& directions() const { return dirs_; }
  int size() const { return static_cast<int>(dirs_.size()); }

  // Closest sample of every ray to q among arclengths in [s_min, s_max].
  std::vector<Approach> closest(const Point& q, double s_max, double s_min = 0.0) const;

 private:
  void add_samples(size_t ray, const GeodesicPath& path);

  const Manifold* m_;
  Point p_;
  std::vector<Vec> dirs_;
  int width_ = 0;  // doubles stored per sample
  std::vector<std::vector<double>> s_;
  std::vector<std::vector<double>> coords_;
};

// ---------------------------------------------------------------------------

// Dijkstra on a sampled chart grid with metric edge weights.  Independent of the shooting
// machinery; used to seed and cross-check two-point solves.
struct OracleEstimate {
  double distance = 0;
  Vec first_direction;   // unit, p's chart
  double spacing = 0;    // longest grid edge in metric units (resolution of the estimate)
};

OracleEstimate graph_distance(const Manifold& m, const Point& p, const Point& q, int resolution = 0);

// ---------------------------------------------------------------------------

struct SegmentOptions {
  double bound = 10.0;
  int n_starts = 64;
  double cluster_angle = 0.05;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  IntegratorOptions ode;
  bool keep_paths = true;
};

struct Segment {
  Vec v0;          // unit initial velocity at p
  double length = 0;
  GeodesicPath path;
};

struct SegmentSet {
  Point p, q;
  double distance = 0;
  std::vector<Segment> segments;
  bool unique = true;
  double oracle_distance = 0;
  double oracle_rel_diff = 0;
  double oracle_spacing = 0;
};

// All minimizing geodesics from p to q.  Throws NoConvergence or OracleMismatch.
SegmentSet minimizing_segments(const Manifold& m, const Point& p, const Point& q,
                               const SegmentOptions& opts = {});

// g-angle between two tangent vectors at the same point.
double vector_angle(const Mat& g, const Vec& a, const Vec& b);

struct OracleGridCache;
std::shared_ptr<OracleGridCache> make_oracle_cache();

}  // namespace convlab
