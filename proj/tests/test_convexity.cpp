#include "doctest.h"

#include "convlab/convexity.hpp"
#include "convlab/errors.hpp"
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

Vec unit_at(const Manifold& m, const Point& p, double a) {
  const auto f = orthonormal_frame(m.metric_at(p));
  return std::cos(a) * f[0] + std::sin(a) * f[1];
}

double distance(const Manifold& m, const Point& a, const Point& b) {
  SegmentOptions so;
  so.keep_paths = false;
  return minimizing_segments(m, a, b, so).distance;
}

const Point kSphereP{0, vec({1.0, 0.5})};

}  // namespace

TEST_CASE("scc_check examples") {
  const auto s = get_model("sphere", {});
  const Point p = s.manifold.make_point(kSphereP.x);
  const SccResult near = scc_check(s.manifold, p, 1.0);
  CHECK(near.status == SccStatus::Holds);
  const SccResult far = scc_check(s.manifold, p, 2.0);
  CHECK(far.status == SccStatus::Fails);
  CHECK(far.min_eig == doctest::Approx(std::sin(2.0) * std::cos(2.0)).epsilon(1e-6));
  CHECK(far.min_eig == doctest::Approx(-0.378).epsilon(1e-3));
  CHECK_THROWS_AS(scc_check(s.manifold, p, 3.2, 128, pi), Error);

  const auto e = get_model("euclidean", {});
  for (double r : {0.1, 1.0, 7.0})
    CHECK(scc_check(e.manifold, Point{0, vec({0.3, -2})}, r).status == SccStatus::Holds);
}

TEST_CASE("ball convexity examples") {
  const auto s = get_model("sphere", {});
  const Manifold& m = s.manifold;
  const Point p = m.make_point(kSphereP.x);

  const auto inner_ball = ball_convexity_check(m, p, 1.0);
  CHECK(inner_ball.verdict == ConvexityVerdict::StronglyConvex);
  CHECK_FALSE(inner_ball.witness.has_value());

  const auto hemisphere = ball_convexity_check(m, p, pi / 2);
  CHECK(hemisphere.verdict == ConvexityVerdict::ProperlyConvexOnly);
  REQUIRE(hemisphere.witness.has_value());
  CHECK(hemisphere.witness->reason == WitnessReason::NonUniqueSegment);
  CHECK(hemisphere.witness->n_segments >= 2);
  CHECK(std::abs(distance(m, p, hemisphere.witness->x) - hemisphere.witness->dist_x) <= 1e-6);
  CHECK(std::abs(distance(m, p, hemisphere.witness->y) - hemisphere.witness->dist_y) <= 1e-6);

  CHECK(ball_convexity_check(m, p, 1.6).verdict == ConvexityVerdict::NotConvex);

  const auto t = get_model("flat_torus", {});
  const Point pt{0, vec({0.1, 0.2})};
  const auto wide = ball_convexity_check(t.manifold, pt, 0.3);
  CHECK(wide.verdict == ConvexityVerdict::NotConvex);
  REQUIRE(wide.witness.has_value());
  CHECK(wide.witness->reason == WitnessReason::SegmentEscapes);
  CHECK(wide.witness->max_distance > 0.3);
  CHECK(std::abs(distance(t.manifold, pt, wide.witness->x) - wide.witness->dist_x) <= 1e-6);
  CHECK(ball_convexity_check(t.manifold, pt, 0.2).verdict == ConvexityVerdict::StronglyConvex);
}

TEST_CASE("uniquely geodesic balls") {
  const auto e = get_model("euclidean", {});
  CHECK(uniquely_geodesic_check(e.manifold, Point{0, vec({1, 1})}, 3.0).holds);

  const auto t = get_model("flat_torus", {});
  const auto torus = uniquely_geodesic_check(t.manifold, Point{0, vec({0.1, 0.2})}, 0.25);
  CHECK_FALSE(torus.holds);
  CHECK(torus.n_segments == 2);
  CHECK(torus.x.has_value());

  const auto s = get_model("sphere", {});
  CHECK(uniquely_geodesic_check(s.manifold, s.manifold.make_point(kSphereP.x), 1.5).holds);
}

TEST_CASE("cut point classification") {
  const auto s = get_model("sphere", {});
  const Point ps = s.manifold.make_point(kSphereP.x);
  for (double a : {0.0, 1.3, 4.0}) {
    const auto rec = classify_cut_point(s.manifold, ps, unit_at(s.manifold, ps, a), 4.0);
    REQUIRE(rec.found);
    CHECK(rec.t_cut == doctest::Approx(pi).epsilon(1e-6));
    CHECK(rec.classification == CutClass::Ordinary);
    CHECK(rec.n_segments >= 2);
    CHECK(std::abs(rec.jacobi_det) <= kEigenZero);
  }

  const auto t = get_model("flat_torus", {});
  const Point pt{0, vec({0.1, 0.2})};
  const auto axis = classify_cut_point(t.manifold, pt, vec({1, 0}), 2.0);
  REQUIRE(axis.found);
  CHECK(axis.t_cut == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(axis.classification == CutClass::Ordinary);
  CHECK(axis.n_segments == 2);
  CHECK(std::abs(axis.jacobi_det) >= 0.1);
  const auto diag = classify_cut_point(t.manifold, pt, vec({std::sqrt(0.5), std::sqrt(0.5)}), 2.0);
  REQUIRE(diag.found);
  CHECK(diag.t_cut == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
  CHECK(diag.n_segments >= 2);

  const auto e = get_model("euclidean", {});
  CHECK_FALSE(classify_cut_point(e.manifold, Point{0, vec({0, 0})}, vec({0.6, 0.8}), 10).found);
  const auto h = get_model("hyperbolic_halfplane", {});
  const Point ph{0, vec({0, 1})};
  CHECK_FALSE(classify_cut_point(h.manifold, ph, unit_at(h.manifold, ph, 0.4), 10).found);
}

TEST_CASE("radii on models with closed forms") {
  SUBCASE("flat torus") {
    const auto t = get_model("flat_torus", {});
    const auto r = radii_estimate(t.manifold, Point{0, vec({0.3, 0.7})}, 2.0);
    REQUIRE(r.i_g.finite);
    CHECK(std::abs(r.i_g.value - 0.5) <= 0.01);
    CHECK(std::abs(r.lc_g.value - 0.5) <= 0.01);
    CHECK(std::abs(r.slc_g.value - 0.5) <= 0.01);
    CHECK(std::abs(r.c_g.value - 0.25) <= 0.01);
    CHECK(std::abs(r.sc_g.value - 0.25) <= 0.01);
    for (const auto& l : lattice_checks(r)) CHECK_MESSAGE(l.holds, l.relation);
  }
  SUBCASE("sphere") {
    const auto s = get_model("sphere", {});
    const auto r = radii_estimate(s.manifold, s.manifold.make_point(kSphereP.x), 4.0);
    REQUIRE(r.i_g.finite);
    CHECK(std::abs(r.i_g.value - pi) <= 0.02);
    for (const RadiusValue* v : {&r.lc_g, &r.slc_g, &r.c_g, &r.sc_g}) {
      REQUIRE(v->finite);
      CHECK(std::abs(v->value - pi / 2) <= 0.02);
    }
    // Strictness: the convexity radius stays well below the injectivity radius.
    CHECK(r.c_g.value < r.i_g.value - 0.5);
  }
  SUBCASE("euclidean") {
    const auto e = get_model("euclidean", {});
    const auto r = radii_estimate(e.manifold, Point{0, vec({0, 0})}, 10.0);
    for (const RadiusValue* v : {&r.i_g, &r.lc_g, &r.slc_g, &r.c_g, &r.sc_g}) {
      CHECK_FALSE(v->finite);
      CHECK(v->bound == 10.0);
    }
  }
  CHECK_THROWS_AS(radii_estimate(get_model("euclidean", {}).manifold, Point{0, vec({0, 0})}, 0.0), Error);
}

TEST_CASE("Berger check and conditions") {
  const auto t = get_model("flat_torus", {});
  const Point pt{0, vec({0.3, 0.7})};
  const auto rt = radii_estimate(t.manifold, pt, 2.0);
  const BergerResult bt = berger_check({rt});
  CHECK(bt.satisfied);
  CHECK(std::abs(bt.c_M.value - 0.5 * bt.i_M.value) <= 0.02);

  const ConditionReport b = condition_check(t.manifold, rt, Condition::B);
  CHECK(b.status == ConditionStatus::Fails);
  bool pair_witness = false;
  for (const auto& ev : b.evidence)
    if (ev["kind"] == "uniquely_geodesic" && !ev["holds"].get<bool>())
      pair_witness = ev["n_segments"].get<int>() == 2;
  CHECK(pair_witness);

  const auto e = get_model("euclidean", {});
  const auto re = radii_estimate(e.manifold, Point{0, vec({0, 0})}, 10.0);
  const BergerResult be = berger_check({re});
  CHECK(be.satisfied);
  CHECK(be.unbounded);
  CHECK(condition_check(e.manifold, re, Condition::A).status == ConditionStatus::HoldsUpToBound);
  CHECK(condition_check(e.manifold, re, Condition::B).status == ConditionStatus::HoldsUpToBound);

  CHECK_THROWS_AS(berger_check({}), Error);
  const auto j = to_json(b);
  CHECK(j["status"] == "fails");
  CHECK(j["condition"] == "B");
}

TEST_CASE("strongly convex balls are strongly locally convex") {
  struct Case {
    std::string model;
    nlohmann::json params;
    Point p;
    double r;
  };
  const auto ell = get_model("ellipsoid", {});
  const std::vector<Case> cases = {
      {"sphere", {}, kSphereP, 1.2},
      {"flat_torus", {}, Point{0, vec({0.5, 0.5})}, 0.2},
      {"euclidean", {}, Point{0, vec({1, 2})}, 2.0},
      {"hyperbolic_halfplane", {}, Point{0, vec({0, 1})}, 1.0},
      {"ellipsoid", {}, ell.manifold.make_point(vec({1.1, 0.4})), 0.8},
  };
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& c : cases) {
    const auto rec = get_model(c.model, c.params);
    const Point p = rec.manifold.canonical(c.p);
    const auto verdict = ball_convexity_check(rec.manifold, p, c.r);
    REQUIRE_MESSAGE(verdict.verdict == ConvexityVerdict::StronglyConvex, c.model);
    for (int k = 0; k < 20; ++k) {
      const double s = c.r * (0.02 + 0.97 * u(rng));
      CHECK_MESSAGE(scc_check(rec.manifold, p, s, 64).status == SccStatus::Holds, c.model, " s=", s);
    }
  }
}

TEST_CASE("half-radius containment") {
  struct Case {
    std::string model;
    Point p;
    double r;
  };
  const auto ell = get_model("ellipsoid", {});
  const std::vector<Case> cases = {
      {"sphere", kSphereP, 1.5},
      {"flat_torus", Point{0, vec({0.2, 0.9})}, 0.45},
      {"hyperbolic_halfplane", Point{0, vec({0.5, 1.5})}, 2.0},
      {"ellipsoid", ell.manifold.make_point(vec({2.0, 1.0})), 1.0},
  };
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& c : cases) {
    const auto rec = get_model(c.model, {});
    const Manifold& m = rec.manifold;
    const Point p = m.canonical(c.p);
    bool scc_everywhere = true;
    for (int k = 1; k <= 10; ++k)
      scc_everywhere = scc_everywhere && scc_check(m, p, c.r * k / 10.5, 64).status == SccStatus::Holds;
    REQUIRE_MESSAGE(scc_everywhere, c.model);
    const double rp = 0.45 * c.r;
    SegmentOptions so;
    so.bound = 3 * rp + 0.1;
    for (int k = 0; k < 6; ++k) {
      // A point in the closed ball together with log_p of it.
      auto sample = [&] {
        const Vec v = rp * std::sqrt(u(rng)) * unit_at(m, p, 2 * pi * u(rng));
        return std::make_pair(m.canonical(shoot(m, p, v, 1.0).end_point()), v);
      };
      const auto [x, vx] = sample();
      const auto [y, vy] = sample();
      const SegmentSet segs = minimizing_segments(m, x, y, so);
      for (const auto& seg : segs.segments) {
        const SegmentProfile prof = segment_max_distance(m, p, seg.path, vx, 0.0, 1.0);
        REQUIRE(prof.ok);
        CHECK_MESSAGE(prof.max_distance <= rp + 1e-6, c.model);
      }
    }
  }
}
