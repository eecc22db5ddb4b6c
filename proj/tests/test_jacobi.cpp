#include "doctest.h"

#include "convlab/errors.hpp"
#include "convlab/jacobi.hpp"
#include "convlab/models.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace convlab;
using std::numbers::pi;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// Unit direction at angle a in a g-orthonormal frame, and its rotation by +90 degrees.
std::pair<Vec, Vec> unit_pair(const Mat& g, double a) {
  const auto f = orthonormal_frame(g);
  return {std::cos(a) * f[0] + std::sin(a) * f[1], -std::sin(a) * f[0] + std::cos(a) * f[1]};
}

}  // namespace

TEST_CASE("Jacobi fields: closed forms") {
  SUBCASE("flat") {
    const auto e = get_model("euclidean", {});
    const auto path = shoot(e.manifold, Point{0, vec({0, 0})}, vec({0.6, 0.8}), 3.0);
    const auto field = propagate_jacobi(path, vec({-0.8, 0.6}));
    for (double t : {0.5, 1.0, 2.5}) {
      CHECK((field.J(t) - t * vec({-0.8, 0.6})).norm() < 1e-12);
      CHECK((field.DJ(t) - vec({-0.8, 0.6})).norm() < 1e-12);
    }
    CHECK(index_form_value(field, 2.0) == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("sphere equator") {
    const auto s = get_model("sphere", {});
    const Point p = s.manifold.make_point(vec({pi / 2, 0}));
    const auto path = shoot(s.manifold, p, vec({0, 1}), 3.0);
    const auto field = propagate_jacobi(path, vec({1, 0}));
    CHECK(field.J(0.0).norm() == 0.0);
    CHECK((field.DJ(0.0) - vec({1, 0})).norm() == 0.0);
    for (double t : {0.3, 1.0, 1.7, 2.9}) {
      const Mat g = path.metric(t);
      CHECK(norm(g, field.J(t)) == doctest::Approx(std::abs(std::sin(t))).epsilon(1e-7));
    }
    CHECK(index_form_value(field, pi / 4) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(std::abs(index_form_value(field, pi / 2)) < 1e-6);
    CHECK_THROWS_AS(index_form_value(field, 3.5), Error);
  }
  SUBCASE("hyperbolic") {
    const auto h = get_model("hyperbolic_halfplane", {});
    const Point p{0, vec({0.3, 1.2})};
    const auto [v, w] = unit_pair(h.manifold.metric_at(p), 0.7);
    const auto path = shoot(h.manifold, p, v, 3.0);
    const auto field = propagate_jacobi(path, w);
    for (double t : {0.5, 1.5, 3.0}) {
      const Mat g = path.metric(t);
      CHECK(std::abs(norm(g, field.J(t)) - std::sinh(t)) <= 1e-6);
    }
  }
}

TEST_CASE("Jacobi fields stay orthogonal and solve the Jacobi equation") {
  const auto rec = get_model("ellipsoid", {{"a", 1.0}, {"b", 1.2}, {"c", 1.5}});
  const Manifold& m = rec.manifold;
  const Point p = m.make_point(vec({1.2, 0.4}));
  const auto [v, w] = unit_pair(m.metric_at(p), 1.1);
  const auto path = shoot(m, p, v, 4.0);
  const auto field = propagate_jacobi(path, w);
  double worst_orth = 0, worst_res = 0;
  for (int k = 1; k < 80; ++k) {
    const double t = 0.05 * k;
    int c0 = 0, c1 = 0, c2 = 0;
    const double dt = 1e-5;
    field.path().state(t - dt, &c0);
    field.path().state(t, &c1);
    field.path().state(t + dt, &c2);
    const Point x = field.path().position(t);
    const Mat g = m.metric_at(x);
    const Vec u = field.path().velocity(t);
    worst_orth = std::max(worst_orth, std::abs(inner(g, field.J(t), u)));
    if (c0 != c1 || c1 != c2) continue;
    // Covariant derivative of DJ: d/dt P + Gamma(u, P), plus R(J, u)u.
    const Vec Pm = field.DJ(t - dt), Pp = field.DJ(t + dt), P = field.DJ(t);
    const Christoffel G = christoffel(m.chart(c1), x.x);
    Vec res = (Pp - Pm) / (2 * dt) + curvature_apply(m.chart(c1), x.x, u, field.J(t));
    for (int a = 0; a < 2; ++a)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) res(a) += G(a, i, j) * u(i) * P(j);
    worst_res = std::max(worst_res, norm(g, res));
  }
  CHECK(worst_orth <= 1e-7);
  CHECK(worst_res <= 1e-6);
}

TEST_CASE("G: closed forms") {
  const auto e = get_model("euclidean", {});
  CHECK(G_eval(e.manifold, Point{0, vec({1, 2})}, vec({1, 0}), vec({0, 1}), 1.5) ==
        doctest::Approx(1.5).epsilon(1e-12));

  const auto s = get_model("sphere", {});
  const Point ps = s.manifold.make_point(vec({1.0, 2.0}));
  const auto [vs, ws] = unit_pair(s.manifold.metric_at(ps), 0.4);
  CHECK(std::abs(G_eval(s.manifold, ps, vs, ws, 1.0) - std::sin(1.0) * std::cos(1.0)) <= 1e-6);
  CHECK(std::sin(1.0) * std::cos(1.0) == doctest::Approx(0.45465).epsilon(1e-5));

  const auto h = get_model("hyperbolic_halfplane", {});
  const Point ph{0, vec({0, 1})};
  const auto [vh, wh] = unit_pair(h.manifold.metric_at(ph), 2.0);
  CHECK(std::abs(G_eval(h.manifold, ph, vh, wh, 1.0) - std::sinh(1.0) * std::cosh(1.0)) <= 1e-5);

  CHECK_THROWS_AS(G_eval(e.manifold, Point{0, vec({0, 0})}, vec({1, 0}), vec({1, 1}), 1.0), Error);
}

TEST_CASE("G is quadratic in w and continuous in t") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 1);
  for (const std::string name : {"sphere", "hyperbolic_halfplane", "ellipsoid"}) {
    const auto rec = get_model(name, {});
    const Manifold& m = rec.manifold;
    for (int k = 0; k < 5; ++k) {
      const Point p = name == "hyperbolic_halfplane" ? Point{0, vec({u(rng), 0.5 + u(rng)})}
                                                     : m.make_point(vec({0.8 + 1.5 * u(rng), 6 * u(rng)}));
      const auto [v, w] = unit_pair(m.metric_at(p), 2 * pi * u(rng));
      const double t = 0.2 + 2.5 * u(rng);
      const double g1 = G_eval(m, p, v, w, t);
      for (double lam : {0.5, 2.0, 10.0}) {
        const double gl = G_eval(m, p, v, lam * w, t);
        CHECK(std::abs(gl - lam * lam * g1) <= 1e-9 * std::max(std::abs(gl), 1e-300) + 1e-14);
      }
      const double gd = G_eval(m, p, v, w, t + 1e-4);
      // |dG/dt| <= |DJ|^2 + |<R(J,u)u, J>| which is below 50 on these models for t < 3.
      CHECK(std::abs(gd - g1) <= 50.0 * 1e-4);
    }
  }
}

TEST_CASE("index matrix: closed forms") {
  const auto e3 = get_model("euclidean", {{"n", 3}});
  const auto M = index_matrix(e3.manifold, Point{0, vec({0, 0, 0})}, vec({0, 0, 1}), 2.0);
  CHECK(M.M.rows() == 2);
  CHECK((M.M - 2.0 * Mat::Identity(2, 2)).norm() < 1e-12);
  CHECK(M.eigenvalues(0) == doctest::Approx(2.0));
  CHECK(M.eigenvalues(1) == doctest::Approx(2.0));

  const auto s = get_model("sphere", {});
  const Point p = s.manifold.make_point(vec({1.0, 0.5}));
  const Vec v = unit_pair(s.manifold.metric_at(p), 0.3).first;
  const auto a = index_matrix(s.manifold, p, v, 0.7);
  REQUIRE(a.M.rows() == 1);
  CHECK(a.M(0, 0) == doctest::Approx(std::sin(0.7) * std::cos(0.7)).epsilon(1e-7));
  CHECK(a.M(0, 0) == doctest::Approx(0.49273).epsilon(1e-5));
  const auto b = index_matrix(s.manifold, p, v, 2.0);
  CHECK(b.eigenvalues(0) == doctest::Approx(std::sin(2.0) * std::cos(2.0)).epsilon(1e-7));
  CHECK(b.eigenvalues(0) < 0);
}

TEST_CASE("Wronskian symmetry of the index matrix in three dimensions") {
  const auto h = get_model("hyperbolic_halfplane", {{"n", 3}});
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 10; ++k) {
    const Point p{0, vec({u(rng), u(rng), 0.5 + u(rng)})};
    const Vec v = vec({u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5});
    const auto M = index_matrix(h.manifold, p, v, 0.5 + 2 * u(rng));
    CHECK(M.asymmetry <= 1e-8);
    CHECK(M.eigenvalues(0) <= M.eigenvalues(1));
  }
}

TEST_CASE("conjugate and breakdown radii") {
  const auto s = get_model("sphere", {});
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 50; ++k) {
    const Point p = s.manifold.make_point(vec({std::acos(1 - 2 * u(rng)), 2 * pi * u(rng)}));
    const Vec v = unit_pair(s.manifold.metric_at(p), 2 * pi * u(rng)).first;
    const RadiusValue conj = conjugate_radius(s.manifold, p, v, 4.0);
    const RadiusValue scc = scc_breakdown_radius(s.manifold, p, v, 4.0);
    REQUIRE(conj.finite);
    REQUIRE(scc.finite);
    CHECK(std::abs(conj.value - pi) <= 1e-6);
    CHECK(std::abs(scc.value - pi / 2) <= 1e-6);
    CHECK(scc.value <= conj.value);
  }
  const auto e = get_model("euclidean", {});
  CHECK_FALSE(conjugate_radius(e.manifold, Point{0, vec({0, 0})}, vec({1, 0}), 10).finite);
  CHECK_FALSE(scc_breakdown_radius(e.manifold, Point{0, vec({0, 0})}, vec({1, 0}), 10).finite);
  const auto h = get_model("hyperbolic_halfplane", {});
  CHECK_FALSE(scc_breakdown_radius(h.manifold, Point{0, vec({0, 1})}, vec({0.6, 0.8}), 10).finite);
  CHECK_FALSE(conjugate_radius(h.manifold, Point{0, vec({0, 1})}, vec({0.6, 0.8}), 10).finite);
  const auto t = get_model("flat_torus", {});
  const RadiusValue tc = conjugate_radius(t.manifold, Point{0, vec({0.1, 0.2})}, vec({1, 0}), 10);
  CHECK_FALSE(tc.finite);
  CHECK(tc.bound == 10.0);
}
