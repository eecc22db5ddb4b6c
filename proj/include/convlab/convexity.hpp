#pragma once

#include "convlab/jacobi.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace convlab {

struct AnalysisBudget {
  int n_dirs = 0;     // 0: 128 angles on surfaces, 256 seeded directions otherwise
  int n_pairs = 24;   // pairs per ball check
  int n_starts = 64;  // shooting starts per two-point solve
  std::uint64_t seed = 0;

  int directions(int dim) const { return n_dirs > 0 ? n_dirs : (dim == 2 ? 128 : 256); }
};

// ---------------------------------------------------------------------------

enum class SccStatus { Holds, Fails, Inconclusive };
const char* to_string(SccStatus s);

struct SccResult {
  SccStatus status = SccStatus::Inconclusive;
  double r = 0;
  double min_eig = 0;  // normalized smallest index-form eigenvalue over the sampled directions
  Vec direction;       // where min_eig was attained
};

// Strong convexity condition on the geodesic sphere of radius r.  Throws
// RadiusBeyondInjectivity when r is not below `injectivity`.
SccResult scc_check(const Manifold& m, const Point& p, double r, int n_dirs = 128,
                    std::optional<double> injectivity = std::nullopt, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------

enum class ConvexityVerdict { StronglyConvex, ProperlyConvexOnly, NotConvex, Inconclusive };
enum class WitnessReason { SegmentEscapes, NonUniqueSegment, BoundaryTangency };
const char* to_string(ConvexityVerdict v);
const char* to_string(WitnessReason r);

struct BallWitness {
  Point x, y;
  double dist_x = 0, dist_y = 0;  // distances from the center
  WitnessReason reason = WitnessReason::SegmentEscapes;
  double t_star = 0;              // segment parameter in [0, 1] of the offending point
  double max_distance = 0;        // largest distance from the center along the segment
  int n_segments = 1;
};

struct BallConvexityVerdict {
  Point p;
  double r = 0;
  ConvexityVerdict verdict = ConvexityVerdict::Inconclusive;
  std::optional<BallWitness> witness;
  int pairs_checked = 0;
  std::string note;  // solver failure behind an inconclusive verdict
};

// Which convexity property a pair sweep tests: pairs in the open ball with [xy] inside,
// or pairs in the closed ball with (xy) inside.
enum class BallProperty { Proper, Strong };
enum class CheckOutcome { Pass, Fail, Inconclusive };

struct BallCheck {
  CheckOutcome outcome = CheckOutcome::Inconclusive;
  std::optional<BallWitness> witness;
  int pairs_checked = 0;
  std::string note;
};

BallCheck check_ball(const Manifold& m, const Point& p, double r, BallProperty kind,
                     const AnalysisBudget& budget = {});

BallConvexityVerdict ball_convexity_check(const Manifold& m, const Point& p, double r,
                                          const AnalysisBudget& budget = {});

// Largest distance from p along a geodesic segment, restricted to the parameter window
// [lo, hi] (fractions of its length).  `start_guess` is log_p of the segment start.
// Distances are continued from the start point, so they are exact only while the segment
// stays inside the injectivity ball; the scan stops at the first sample above `stop_above`.
struct SegmentProfile {
  bool ok = false;
  double max_distance = 0;
  double t_star = 0;  // fraction of the segment length
};

SegmentProfile segment_max_distance(const Manifold& m, const Point& p, const GeodesicPath& seg,
                                    const Vec& start_guess, double lo = 0.0, double hi = 1.0,
                                    double stop_above = std::numeric_limits<double>::infinity());

// ---------------------------------------------------------------------------

struct RadiiEstimate {
  Point p;
  double bound = 0;
  RadiusValue i_g, lc_g, slc_g, c_g, sc_g;
  // Bisection brackets behind c_g and sc_g: largest passing and smallest failing radius
  // (hi = +inf when no failure was found).
  double c_lo = 0, c_hi = std::numeric_limits<double>::infinity();
  double sc_lo = 0, sc_hi = std::numeric_limits<double>::infinity();
  bool partial = false;  // a step budget ran out; unfinished radii are upper bounds
  nlohmann::json witnesses = nlohmann::json::object();
};

// Radius-lattice checks between the five radii, each with combined half-widths as slack.
struct LatticeCheck {
  std::string relation;
  bool holds = true;
  double lhs = 0, rhs = 0, slack = 0;
};
std::vector<LatticeCheck> lattice_checks(const RadiiEstimate& r);

RadiiEstimate radii_estimate(const Manifold& m, const Point& p, double bound,
                             const AnalysisBudget& budget = {});

// ---------------------------------------------------------------------------

// First parameter along the unit-speed geodesic from p in direction v at which it stops
// minimizing, from conjugate points and shorter competitors.
struct CutSearch {
  RadiusValue conjugate;
  RadiusValue shortcut;
  RadiusValue t_cut;
  std::optional<Vec> competitor;  // initial velocity of an equally long geodesic at t_cut
  Point q;                        // the cut point, when t_cut is finite
  double jacobi_det = 0;          // at t_cut
};

CutSearch find_cut(const Manifold& m, const Point& p, const Vec& v, double bound,
                   const AnalysisBudget& budget = {});

enum class CutClass { Ordinary, Singular, Undetermined };
const char* to_string(CutClass c);

struct CutPointRecord {
  Point p;
  Vec v;
  bool found = false;  // false: no cut point within bound
  double bound = 0;
  double t_cut = 0, t_cut_half_width = 0;
  Point q;
  CutClass classification = CutClass::Undetermined;
  int n_segments = 0;
  double jacobi_det = 0;
};

CutPointRecord classify_cut_point(const Manifold& m, const Point& p, const Vec& v, double bound,
                                  const AnalysisBudget& budget = {});

// ---------------------------------------------------------------------------

struct UniquenessResult {
  bool holds = true;
  std::optional<Point> x, y;
  int n_segments = 1;
  int pairs_checked = 0;
  std::string note;
};

// Samples pairs in the closed ball of radius R (diametral, cut-point and random pairs).
UniquenessResult uniquely_geodesic_check(const Manifold& m, const Point& p, double R,
                                         const AnalysisBudget& budget = {});

struct BergerResult {
  RadiusValue c_M, i_M;
  bool satisfied = true;
  bool unbounded = false;  // both radii beyond the bound; satisfied vacuously
  double margin = 0;       // i_M/2 - c_M
  double tau = 0;
};

BergerResult berger_check(const std::vector<RadiiEstimate>& estimates);

enum class Condition { A, B };
enum class ConditionStatus { HoldsUpToBound, Fails };
const char* to_string(Condition c);
const char* to_string(ConditionStatus s);

struct ConditionReport {
  Point p;
  Condition condition = Condition::B;
  ConditionStatus status = ConditionStatus::HoldsUpToBound;
  nlohmann::json evidence = nlohmann::json::array();
};

// `probe_radii` are extra radii tried when searching for a ball that is properly but not
// strongly convex.
ConditionReport condition_check(const Manifold& m, const RadiiEstimate& radii, Condition which,
                                const std::vector<double>& probe_radii = {},
                                const AnalysisBudget& budget = {});

// ---------------------------------------------------------------------------

nlohmann::json to_json(const Point& p);
nlohmann::json to_json(const RadiusValue& r);
nlohmann::json to_json(const BallWitness& w);
nlohmann::json to_json(const BallConvexityVerdict& v);
nlohmann::json to_json(const RadiiEstimate& r);
nlohmann::json to_json(const CutPointRecord& c);
nlohmann::json to_json(const BergerResult& b);
nlohmann::json to_json(const ConditionReport& c);

}  // namespace convlab
