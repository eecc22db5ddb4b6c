#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace convlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Raw callback signatures. Arrays are dense, row-major:
//   metric:      g[i*n + j]
//   christoffel: gamma[k*n*n + i*n + j] = Gamma^k_ij
//   curvature:   out = R(w,u)u
using MetricFn = std::function<void(const double* x, double* g)>;
using ChristoffelFn = std::function<void(const double* x, double* gamma)>;
using CurvatureFn =
    std::function<void(const double* x, const double* u, const double* w, double* out)>;

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

// A single coordinate chart carrying metric data.
struct ManifoldChart {
  int dim = 0;
  std::vector<Interval> domain;
  std::vector<std::optional<double>> period;
  MetricFn metric_fn;
  ChristoffelFn christoffel_fn;  // optional
  CurvatureFn curvature_fn;      // optional
  // Axes the graph oracle samples logarithmically (e.g. y in the half-plane).
  std::vector<bool> log_grid_axes;
  std::string label;

  bool is_periodic(int i) const { return period[i].has_value(); }
};

// Christoffel symbols Gamma^k_ij at one point.
class Christoffel {
 public:
  explicit Christoffel(int n) : n_(n), data_(static_cast<size_t>(n * n * n), 0.0) {}

  double operator()(int k, int i, int j) const { return data_[(k * n_ + i) * n_ + j]; }
  double& operator()(int k, int i, int j) { return data_[(k * n_ + i) * n_ + j]; }
  int dim() const { return n_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

 private:
  int n_;
  std::vector<double> data_;
};

// Finite-difference step used wherever derivatives of chart data are estimated.
double fd_step(const double* x, int n);

// Periodic coordinates wrapped into [lo, lo + period).
Vec wrap_point(const ManifoldChart& chart, const Vec& x);
void wrap_inplace(const ManifoldChart& chart, double* x);

// True if the (wrapped) point lies strictly inside the chart domain.
bool in_domain(const ManifoldChart& chart, const double* x);

// Symmetric difference a - b with periodic components reduced to (-P/2, P/2].
Vec chart_difference(const ManifoldChart& chart, const Vec& a, const Vec& b);

Mat eval_metric(const ManifoldChart& chart, const Vec& x);
Christoffel christoffel(const ManifoldChart& chart, const Vec& x);
Vec curvature_apply(const ManifoldChart& chart, const Vec& x, const Vec& u, const Vec& w);

// Finite-difference routes, always available; the analytic callbacks are checked
// against these.
Christoffel christoffel_fd(const ManifoldChart& chart, const Vec& x);
Vec curvature_fd(const ManifoldChart& chart, const Vec& x, const Vec& u, const Vec& w);

double inner(const Mat& g, const Vec& a, const Vec& b);
double norm(const Mat& g, const Vec& a);

// g-orthonormal basis of the g-orthogonal complement of v (v need not be unit).
std::vector<Vec> orthonormal_complement(const Mat& g, const Vec& v);

// g-orthonormal frame of the whole tangent space.
std::vector<Vec> orthonormal_frame(const Mat& g);

namespace detail {
// Unchecked fast paths for the integrator. Return false outside the domain.
bool christoffel_raw(const ManifoldChart& chart, const double* x, double* gamma,
                     double* scratch);
bool curvature_raw(const ManifoldChart& chart, const double* x, const double* u,
                   const double* w, double* out);
}  // namespace detail

// ---------------------------------------------------------------------------
// Atlas: one or more charts plus the rule deciding which chart a point lives in.
// Single-chart manifolds leave the transition callbacks empty.

struct OracleGridCache;

struct Point {
  int chart = 0;
  Vec x;
};

struct Manifold {
  std::vector<ManifoldChart> charts;

  // Returns the chart a point should be represented in (may be `chart` itself).
  std::function<int(int chart, const double* x)> select_chart;
  // Point and tangent-vector transitions between charts.
  std::function<void(int from, int to, const double* x, double* x_out)> transition_point;
  std::function<void(int from, int to, const double* x, const double* x_to,
                     const double* v, double* v_out)>
      transition_vector;
  // Optional embedding into R^m used for proximity tests between charts.
  std::function<void(int chart, const double* x, double* e)> embed;
  int embed_dim = 0;
  // Lazily built graph-oracle grid for charts with a fixed sampling box.
  std::shared_ptr<OracleGridCache> oracle_cache;

  int dim() const { return charts.front().dim; }
  const ManifoldChart& chart(int c) const { return charts[static_cast<size_t>(c)]; }
  bool multi_chart() const { return charts.size() > 1; }

  // Validates, wraps and moves the point into its preferred chart.
  Point canonical(const Point& p) const;
  Point make_point(const Vec& x) const { return canonical(Point{0, x}); }

  Vec coords_in(const Point& p, int chart) const;
  Vec vector_in(const Point& p, const Vec& v, int chart) const;

  // Approximate distance for nearby points; exact to first order.
  double proximity(const Point& a, const Point& b) const;

  Mat metric_at(const Point& p) const { return eval_metric(chart(p.chart), p.x); }
};

}  // namespace convlab
