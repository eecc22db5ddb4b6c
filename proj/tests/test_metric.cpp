#include "doctest.h"

#include "convlab/chart.hpp"
#include "convlab/errors.hpp"
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

// Random in-domain chart-0 points kept away from chart edges.
Vec random_point(const std::string& model, std::mt19937_64& rng, int n = 2) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec x(n);
  if (model == "sphere" || model == "ellipsoid") {
    x << 0.4 + (pi - 0.8) * u(rng), 2 * pi * u(rng);
  } else if (model == "hyperbolic_halfplane") {
    for (int i = 0; i < n - 1; ++i) x(i) = -3 + 6 * u(rng);
    x(n - 1) = 0.2 + 4.8 * u(rng);
  } else if (model == "flat_torus") {
    for (int i = 0; i < n; ++i) x(i) = u(rng);
  } else {
    for (int i = 0; i < n; ++i) x(i) = -5 + 10 * u(rng);
  }
  return x;
}

Vec random_vec(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> z;
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = z(rng);
  return v;
}

}  // namespace

TEST_CASE("metric values on the built-in charts") {
  const auto e = get_model("euclidean", {});
  CHECK((eval_metric(e.manifold.chart(0), v2(3, -1)) - Mat::Identity(2, 2)).norm() == 0.0);

  const auto s = get_model("sphere", {});
  const Mat gs = eval_metric(s.manifold.chart(0), v2(pi / 2, 0));
  CHECK(gs(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(gs(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(gs(0, 1)) < 1e-14);

  const auto h = get_model("hyperbolic_halfplane", {});
  const Mat gh = eval_metric(h.manifold.chart(0), v2(0, 2));
  CHECK((gh - 0.25 * Mat::Identity(2, 2)).norm() < 1e-15);
}

TEST_CASE("metric errors") {
  const auto h = get_model("hyperbolic_halfplane", {});
  CHECK_THROWS_AS(eval_metric(h.manifold.chart(0), v2(0, -1)), Error);
  try {
    eval_metric(h.manifold.chart(0), v2(0, -1));
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::OutOfDomain);
  }

  ManifoldChart bad;
  bad.dim = 2;
  bad.domain.assign(2, Interval{});
  bad.period.assign(2, std::nullopt);
  bad.metric_fn = [](const double*, double* g) {
    g[0] = 1;
    g[1] = g[2] = 2;
    g[3] = 1;
  };
  try {
    eval_metric(bad, v2(0, 0));
    FAIL("expected NotPositiveDefinite");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::NotPositiveDefinite);
  }
}

TEST_CASE("Christoffel symbols match closed forms") {
  const auto e = get_model("euclidean", {});
  const Christoffel ge = christoffel(e.manifold.chart(0), v2(0.3, 7.0));
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) CHECK(ge(k, i, j) == 0.0);

  // diag(1, sin^2 th): Gamma^th_phph = -sin cos, Gamma^ph_thph = cot.
  const auto s = get_model("sphere", {});
  const Christoffel gs = christoffel(s.manifold.chart(0), v2(pi / 3, 0));
  CHECK(gs(0, 1, 1) == doctest::Approx(-std::sin(pi / 3) * std::cos(pi / 3)).epsilon(1e-12));
  CHECK(gs(1, 0, 1) == doctest::Approx(1.0 / std::tan(pi / 3)).epsilon(1e-12));
  CHECK(gs(1, 1, 0) == doctest::Approx(1.0 / std::tan(pi / 3)).epsilon(1e-12));
  CHECK(gs(0, 1, 1) == doctest::Approx(-0.4330).epsilon(1e-4));
  CHECK(gs(1, 0, 1) == doctest::Approx(0.5774).epsilon(1e-4));

  // y^-2 I at (0, 1).
  const auto h = get_model("hyperbolic_halfplane", {});
  const Christoffel gh = christoffel(h.manifold.chart(0), v2(0, 1));
  CHECK(gh(0, 0, 1) == doctest::Approx(-1.0));
  CHECK(gh(1, 0, 0) == doctest::Approx(1.0));
  CHECK(gh(1, 1, 1) == doctest::Approx(-1.0));
  CHECK(gh(0, 0, 0) == doctest::Approx(0.0));
  CHECK(gh(1, 0, 1) == doctest::Approx(0.0));
}

TEST_CASE("curvature operator on constant-curvature models") {
  const auto e = get_model("euclidean", {});
  CHECK(curvature_apply(e.manifold.chart(0), v2(1, 2), v2(0.3, 0.1), v2(-2, 5)).norm() == 0.0);

  for (const auto& [name, K] : {std::pair<std::string, double>{"sphere", 1.0}, {"hyperbolic_halfplane", -1.0}}) {
    const auto rec = get_model(name, {});
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
      const Vec x = random_point(name, rng);
      const Mat g = eval_metric(rec.manifold.chart(0), x);
      const auto frame = orthonormal_frame(g);
      const Vec Rw = curvature_apply(rec.manifold.chart(0), x, frame[0], frame[1]);
      CHECK((Rw - K * frame[1]).norm() < 1e-10 * std::max(1.0, frame[1].norm()));
    }
  }
}

TEST_CASE("analytic Christoffels and curvature agree with finite differences") {
  std::mt19937_64 rng(20240611);
  for (const std::string name : {"sphere", "hyperbolic_halfplane", "flat_torus", "ellipsoid", "euclidean"}) {
    const auto rec = get_model(name, name == "ellipsoid" ? nlohmann::json{{"a", 1.0}, {"b", 1.5}, {"c", 2.0}} : nlohmann::json{});
    const ManifoldChart& c = rec.manifold.chart(0);
    for (int trial = 0; trial < 100; ++trial) {
      const Vec x = random_point(name, rng);
      const Christoffel ga = christoffel(c, x);
      const Christoffel gf = christoffel_fd(c, x);
      double worst = 0;
      for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            worst = std::max(worst, std::abs(ga(k, i, j) - gf(k, i, j)));
            CHECK(ga(k, i, j) == ga(k, j, i));
          }
      CHECK_MESSAGE(worst <= 1e-6, name, " Christoffel mismatch at trial ", trial);
      const Mat g = eval_metric(c, x);
      auto frame = orthonormal_frame(g);
      const Vec Ra = curvature_apply(c, x, frame[0], frame[1]);
      const Vec Rf = curvature_fd(c, x, frame[0], frame[1]);
      CHECK_MESSAGE((Ra - Rf).cwiseAbs().maxCoeff() <= 1e-6, name, " curvature mismatch");
    }
  }
}

TEST_CASE("curvature term is g-orthogonal to the velocity") {
  std::mt19937_64 rng(99);
  for (const std::string name : {"sphere", "hyperbolic_halfplane", "ellipsoid"}) {
    const auto rec = get_model(name, {});
    const ManifoldChart& c = rec.manifold.chart(0);
    for (int trial = 0; trial < 50; ++trial) {
      const Vec x = random_point(name, rng);
      const Vec u = random_vec(rng, 2), w = random_vec(rng, 2);
      const Mat g = eval_metric(c, x);
      const Vec R = curvature_apply(c, x, u, w);
      CHECK(std::abs(inner(g, R, u)) <= 1e-8);
    }
  }
}

TEST_CASE("Christoffel output is symmetric in the lower indices") {
  std::mt19937_64 rng(3);
  const auto rec = get_model("hyperbolic_halfplane", {{"n", 3}});
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = random_point("hyperbolic_halfplane", rng, 3);
    for (const Christoffel& G : {christoffel(rec.manifold.chart(0), x), christoffel_fd(rec.manifold.chart(0), x)})
      for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) CHECK(G(k, i, j) == G(k, j, i));
  }
}

TEST_CASE("torus chart data is invariant under a period shift") {
  const auto rec = get_model("flat_torus", {{"periods", {1.0, 2.0}}});
  const ManifoldChart& c = rec.manifold.chart(0);
  const Vec x = v2(0.3, 1.7);
  const Vec y = v2(1.3, -0.3);
  CHECK((eval_metric(c, x) - eval_metric(c, y)).norm() == 0.0);
  const Christoffel a = christoffel_fd(c, x), b = christoffel_fd(c, y);
  for (int k = 0; k < 8; ++k) CHECK(a.data()[k] == b.data()[k]);
  CHECK((curvature_apply(c, x, v2(1, 0), v2(0, 1)) - curvature_apply(c, y, v2(1, 0), v2(0, 1))).norm() == 0.0);
}

TEST_CASE("finite-difference stencil must stay inside the chart") {
  const auto rec = get_model("hyperbolic_halfplane", {});
  try {
    christoffel_fd(rec.manifold.chart(0), v2(0.0, 5e-5));
    FAIL("expected StencilOutsideDomain");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::StencilOutsideDomain);
  }
}

TEST_CASE("model registry") {
  CHECK_THROWS_AS(get_model("klein_bottle", {}), Error);
  try {
    get_model("sphere", {{"radius", 2.0}});
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::BadParams);
    CHECK(err.is_config_error());
  }
  const auto t = model_from_json(nlohmann::json::parse(
      R"({"dimension": 2, "domain": [[0,1],[0,3]], "period": [1, 3], "metric": "builtin:flat_torus"})"));
  CHECK(t.ground_truth->i_g == doctest::Approx(0.5));
  CHECK(t.ground_truth->c_g == doctest::Approx(0.25));
  try {
    model_from_json(nlohmann::json::parse(R"({"dimension": 2, "metric": {"expr": "x"}})"));
    FAIL("expected BadConfig");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::BadConfig);
  }
}

TEST_CASE("sphere atlas keeps points away from the poles") {
  const auto rec = get_model("sphere", {});
  const Point p = rec.manifold.make_point(v2(0.05, 1.0));
  CHECK(p.chart == 1);
  const Vec back = rec.manifold.coords_in(p, 0);
  CHECK(back(0) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(back(1) == doctest::Approx(1.0).epsilon(1e-12));
  const Vec v = v2(0.3, -0.7);
  const Vec w = rec.manifold.vector_in(Point{0, v2(0.05, 1.0)}, v, 1);
  const Vec v_back = rec.manifold.vector_in(p, w, 0);
  CHECK((v_back - v).norm() < 1e-10);
  CHECK(norm(rec.manifold.metric_at(p), w) ==
        doctest::Approx(norm(eval_metric(rec.manifold.chart(0), v2(0.05, 1.0)), v)).epsilon(1e-12));
}
