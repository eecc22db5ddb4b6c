#pragma once

#include "convlab/chart.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace convlab {

// Closed-form radii for models where they are known. Infinite radii are stored as +inf.
struct GroundTruth {
  double i_g = 0, lc_g = 0, slc_g = 0, c_g = 0, sc_g = 0;
  std::optional<double> sectional_curvature;  // nullopt: variable curvature
};

struct ModelRecord {
  std::string name;
  nlohmann::json params;
  Manifold manifold;
  std::optional<GroundTruth> ground_truth;
  std::string provenance;
};

const std::vector<std::string>& model_names();

// Built-in registry. Params (all optional, defaults in brackets):
//   euclidean             {n [2]}
//   sphere                {R [1], n [2]}         (n must be 2)
//   hyperbolic_halfplane  {n [2]}                upper half-space, g = y^-2 I
//   flat_torus            {periods [[1,1]]}
//   ellipsoid             {a [1], b [1], c [1.3]}
ModelRecord get_model(const std::string& name, const nlohmann::json& params = nlohmann::json::object());

// JSON model file: {"dimension", "domain", "period", "metric": "builtin:<name>", "params"?}.
ModelRecord load_model_file(const std::string& path);
ModelRecord model_from_json(const nlohmann::json& spec);

// Gaussian curvature of the ellipsoid (x/a)^2 + (y/b)^2 + (z/c)^2 = 1 at an embedded point.
double ellipsoid_gauss_curvature(double a, double b, double c, double X, double Y, double Z);

}  // namespace convlab
