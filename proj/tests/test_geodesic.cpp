#include "doctest.h"

#include "convlab/errors.hpp"
#include "convlab/geodesic.hpp"
#include "convlab/models.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace convlab;
using std::numbers::pi;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// Great-circle distance between two polar-coordinate points on the unit sphere.
double great_circle(const Vec& a, const Vec& b) {
  const double c = std::cos(a(0)) * std::cos(b(0)) +
                   std::sin(a(0)) * std::sin(b(0)) * std::cos(a(1) - b(1));
  return std::acos(std::clamp(c, -1.0, 1.0));
}

// Flat torus distance: minimum over the 9 nearest lattice translates.
double torus_distance(const Vec& a, const Vec& b, double P0, double P1) {
  double best = 1e300;
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j) {
      const double dx = b(0) - a(0) + i * P0 - P0 * std::round((b(0) - a(0)) / P0);
      const double dy = b(1) - a(1) + j * P1 - P1 * std::round((b(1) - a(1)) / P1);
      best = std::min(best, std::hypot(dx, dy));
    }
  return best;
}

double hyperbolic_distance(const Vec& a, const Vec& b) {
  const double d2 = (a - b).squaredNorm();
  return std::acosh(1.0 + d2 / (2.0 * a(a.size() - 1) * b(b.size() - 1)));
}

Vec chart0(const Manifold& m, const Point& p) { return wrap_point(m.chart(0), m.coords_in(p, 0)); }

}  // namespace

TEST_CASE("shoot: closed-form endpoints") {
  const auto e = get_model("euclidean", {});
  const auto pe = shoot(e.manifold, Point{0, v2(0, 0)}, v2(1, 0), 2.0);
  CHECK(pe.completed());
  CHECK((pe.end_point().x - v2(2, 0)).norm() < 1e-12);

  const auto s = get_model("sphere", {});
  const auto ps = shoot(s.manifold, s.manifold.make_point(v2(pi / 2, 0)), v2(0, 1), pi / 2);
  const Vec end = chart0(s.manifold, ps.end_point());
  CHECK(end(0) == doctest::Approx(pi / 2).epsilon(1e-9));
  CHECK(end(1) == doctest::Approx(pi / 2).epsilon(1e-9));

  const auto t = get_model("flat_torus", {});
  const auto pt = shoot(t.manifold, Point{0, v2(0.9, 0)}, v2(1, 0), 0.3);
  CHECK(pt.end_point().x(0) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(std::abs(pt.end_point().x(1)) < 1e-14);
}

TEST_CASE("exp_map: closed forms") {
  const auto e = get_model("euclidean", {});
  const Point p{0, v2(1, 1)};
  CHECK((exp_map(e.manifold, p, v2(0, 0)).x - p.x).norm() == 0.0);
  CHECK((exp_map(e.manifold, p, v2(-1, 2)).x - v2(0, 3)).norm() < 1e-12);

  const auto s = get_model("sphere", {});
  const Point a = s.manifold.make_point(v2(pi / 2, 0));
  const Vec anti = chart0(s.manifold, exp_map(s.manifold, a, v2(0, pi)));
  CHECK(anti(0) == doctest::Approx(pi / 2).epsilon(1e-8));
  CHECK(anti(1) == doctest::Approx(pi).epsilon(1e-8));
}

TEST_CASE("shoot reports domain escape with a partial path") {
  const auto h = get_model("hyperbolic_halfplane", {});
  // Straight down the y axis is a geodesic; it never reaches y = 0 but underflows the
  // metric at finite length only far away.  A chart with a bounded domain shows escape.
  ManifoldChart c = get_model("euclidean", {}).manifold.chart(0);
  c.domain = {Interval{-1, 1}, Interval{-1, 1}};
  Manifold box;
  box.charts = {c};
  const auto path = shoot(box, Point{0, v2(0, 0)}, v2(1, 0), 3.0);
  CHECK(path.termination() == Termination::LeftDomain);
  CHECK(path.t_end() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(exp_map(box, Point{0, v2(0, 0)}, v2(3, 0)), Error);
  CHECK(shoot(h.manifold, Point{0, v2(0, 1)}, v2(0, -1), 5.0).completed());
}

TEST_CASE("speed is conserved and the dense output solves the geodesic equation") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (const std::string name : {"sphere", "hyperbolic_halfplane", "ellipsoid", "flat_torus"}) {
    const auto rec = get_model(name, {});
    const Manifold& m = rec.manifold;
    for (int trial = 0; trial < 6; ++trial) {
      Vec x = name == "hyperbolic_halfplane" ? v2(u(rng), 0.5 + u(rng)) : v2(0.5 + 2 * u(rng), 6 * u(rng));
      if (name == "flat_torus") x = v2(u(rng), u(rng));
      const Point p = m.make_point(x);
      const double a = 2 * pi * u(rng);
      const Mat g = m.metric_at(p);
      const auto frame = orthonormal_frame(g);
      const Vec v = std::cos(a) * frame[0] + std::sin(a) * frame[1];
      const double T = 4.0;
      const auto path = shoot(m, p, v, T);
      REQUIRE(path.completed());
      const double s0 = path.speed();
      double worst_speed = 0, worst_residual = 0;
      const auto nodes = path.node_times();
      for (size_t k = 0; k + 1 < nodes.size(); ++k) {
        for (double t : {nodes[k], 0.5 * (nodes[k] + nodes[k + 1])}) {
          const Point pt = path.position(t);
          const Vec vel = path.velocity(t);
          worst_speed = std::max(worst_speed, std::abs(norm(m.metric_at(pt), vel) - s0) / s0);
        }
        // ODE residual at the midpoint from a central difference of the interpolant.
        const double tm = 0.5 * (nodes[k] + nodes[k + 1]);
        const double dt = 1e-5;
        int c0 = 0, c1 = 0, c2 = 0;
        path.state(tm - dt, &c0);
        path.state(tm, &c1);
        path.state(tm + dt, &c2);
        if (c0 != c1 || c1 != c2) continue;
        const Vec vm = path.velocity(tm - dt), vp = path.velocity(tm + dt), vc = path.velocity(tm);
        const Christoffel G = christoffel(m.chart(c1), path.position(tm).x);
        Vec acc = (vp - vm) / (2 * dt);
        for (int k2 = 0; k2 < 2; ++k2)
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) acc(k2) += G(k2, i, j) * vc(i) * vc(j);
        worst_residual = std::max(worst_residual, acc.norm());
      }
      CHECK_MESSAGE(worst_speed <= 1e-7, name);
      CHECK_MESSAGE(worst_residual <= 1e-6, name);
    }
  }
}

TEST_CASE("log_map inverts exp_map") {
  const auto rec = get_model("ellipsoid", {{"a", 1.0}, {"b", 1.2}});
  const Manifold& m = rec.manifold;
  const Point p = m.make_point(v2(1.1, 0.4));
  const Mat g = m.metric_at(p);
  const Vec v = 0.8 * orthonormal_frame(g)[0] + 0.5 * orthonormal_frame(g)[1];
  const Point q = exp_map(m, p, v);
  const LogResult r = log_map(m, p, q, 0.8 * v);
  REQUIRE(r.converged);
  CHECK(norm(g, r.v - v) < 1e-7);
}

TEST_CASE("minimizing_segments: coincident points and closed forms") {
  const auto s = get_model("sphere", {});
  const Point a = s.manifold.make_point(v2(pi / 2, 0));
  const auto same = minimizing_segments(s.manifold, a, a);
  CHECK(same.distance == 0.0);
  CHECK(same.unique);

  const auto eq = minimizing_segments(s.manifold, a, s.manifold.make_point(v2(pi / 2, 1.2)));
  CHECK(eq.distance == doctest::Approx(1.2).epsilon(1e-8));
  CHECK(eq.unique);
  REQUIRE(eq.segments.size() == 1);
  // Along the equator: no polar component.
  CHECK(std::abs(eq.segments[0].v0(0)) < 1e-7);

  const auto t = get_model("flat_torus", {});
  const auto tt = minimizing_segments(t.manifold, Point{0, v2(0, 0)}, Point{0, v2(0.5, 0)});
  CHECK(tt.distance == doctest::Approx(0.5).epsilon(1e-10));
  CHECK_FALSE(tt.unique);
  REQUIRE(tt.segments.size() == 2);
  for (const auto& seg : tt.segments) {
    CHECK(std::abs(std::abs(seg.v0(0)) - 1.0) < 1e-8);
    CHECK(std::abs(seg.v0(1)) < 1e-8);
  }
  CHECK(tt.segments[0].v0(0) * tt.segments[1].v0(0) < 0);
}

TEST_CASE("segments end at q and are pairwise separated") {
  const auto s = get_model("sphere", {});
  const Point a = s.manifold.make_point(v2(pi / 2, 0));
  const Point b = s.manifold.make_point(v2(pi / 2, pi));
  const auto set = minimizing_segments(s.manifold, a, b);
  CHECK(set.distance == doctest::Approx(pi).epsilon(1e-8));
  CHECK(set.segments.size() >= 2);
  const Mat g = s.manifold.metric_at(set.p);
  for (size_t i = 0; i < set.segments.size(); ++i) {
    CHECK(s.manifold.proximity(set.segments[i].path.end_point(), set.q) < 1e-6);
    for (size_t j = 0; j < i; ++j)
      CHECK(vector_angle(g, set.segments[i].v0, set.segments[j].v0) >= 0.05);
  }
}

TEST_CASE("sphere distances match the great-circle formula") {
  const auto s = get_model("sphere", {});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  int checked = 0;
  for (int k = 0; k < 100; ++k) {
    const Vec a = v2(std::acos(1 - 2 * u(rng)), 2 * pi * u(rng));
    const Vec b = v2(std::acos(1 - 2 * u(rng)), 2 * pi * u(rng));
    const auto set = minimizing_segments(s.manifold, s.manifold.make_point(a), s.manifold.make_point(b));
    CHECK(std::abs(set.distance - great_circle(a, b)) <= 1e-6);
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("flat torus distances match the lattice formula") {
  const auto t = get_model("flat_torus", {{"periods", {1.0, 1.5}}});
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 40; ++k) {
    const Vec a = v2(u(rng), 1.5 * u(rng));
    const Vec b = v2(u(rng), 1.5 * u(rng));
    const auto set = minimizing_segments(t.manifold, Point{0, a}, Point{0, b});
    CHECK(std::abs(set.distance - torus_distance(a, b, 1.0, 1.5)) <= 1e-9);
  }
}

TEST_CASE("distance is symmetric and satisfies the triangle inequality") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0, 1);
  for (const std::string name : {"sphere", "hyperbolic_halfplane", "ellipsoid", "flat_torus", "euclidean"}) {
    const auto rec = get_model(name, {});
    const Manifold& m = rec.manifold;
    auto rand_point = [&] {
      if (name == "hyperbolic_halfplane") return m.make_point(v2(2 * u(rng) - 1, 0.5 + u(rng)));
      if (name == "flat_torus") return m.make_point(v2(u(rng), u(rng)));
      if (name == "euclidean") return m.make_point(v2(4 * u(rng) - 2, 4 * u(rng) - 2));
      return m.make_point(v2(std::acos(1 - 2 * u(rng)), 2 * pi * u(rng)));
    };
    SegmentOptions opts;
    opts.keep_paths = false;
    for (int k = 0; k < 50; ++k) {
      const Point p = rand_point(), q = rand_point();
      const double dpq = minimizing_segments(m, p, q, opts).distance;
      const double dqp = minimizing_segments(m, q, p, opts).distance;
      CHECK_MESSAGE(std::abs(dpq - dqp) <= 1e-6, name);
      if (k % 5 == 0) {
        const Point r = rand_point();
        const double dpr = minimizing_segments(m, p, r, opts).distance;
        const double dqr = minimizing_segments(m, q, r, opts).distance;
        CHECK_MESSAGE(dpr <= dpq + dqr + 1e-6, name);
      }
    }
  }
}

TEST_CASE("hyperbolic distances match the closed form") {
  const auto h = get_model("hyperbolic_halfplane", {});
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 20; ++k) {
    const Vec a = v2(4 * u(rng) - 2, 0.3 + 2 * u(rng));
    const Vec b = v2(4 * u(rng) - 2, 0.3 + 2 * u(rng));
    const auto set = minimizing_segments(h.manifold, Point{0, a}, Point{0, b});
    CHECK(std::abs(set.distance - hyperbolic_distance(a, b)) <= 1e-6);
    CHECK(set.unique);
  }
}

TEST_CASE("graph oracle is close to the true distance") {
  const auto s = get_model("sphere", {});
  const Vec a = v2(1.0, 0.3), b = v2(2.0, 2.5);
  const auto est = graph_distance(s.manifold, s.manifold.make_point(a), s.manifold.make_point(b));
  CHECK(std::abs(est.distance - great_circle(a, b)) / great_circle(a, b) < 0.05);

  const auto h = get_model("hyperbolic_halfplane", {});
  const Vec c = v2(-2, 0.5), d = v2(3, 1.0);
  const auto eh = graph_distance(h.manifold, Point{0, c}, Point{0, d});
  CHECK(std::abs(eh.distance - hyperbolic_distance(c, d)) / hyperbolic_distance(c, d) < 0.05);
}

TEST_CASE("minimizing_segments errors") {
  const auto e = get_model("euclidean", {});
  SegmentOptions opts;
  opts.bound = 1.0;
  try {
    minimizing_segments(e.manifold, Point{0, v2(0, 0)}, Point{0, v2(5, 0)}, opts);
    FAIL("expected NoConvergence");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::NoConvergence);
  }
}
