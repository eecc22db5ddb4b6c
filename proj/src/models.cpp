#include "convlab/models.hpp"
#include "convlab/geodesic.hpp"

#include "convlab/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>

namespace convlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;
// Charts switch once a point comes this close (in the polar angle) to a pole.
constexpr double kPoleSwitch = 0.7;

double param(const nlohmann::json& p, const char* key, double dflt) {
  if (!p.contains(key)) return dflt;
  if (!p[key].is_number()) throw Error(ErrorKind::BadParams, std::string("param '") + key + "' must be a number");
  return p[key].get<double>();
}

int int_param(const nlohmann::json& p, const char* key, int dflt) {
  if (!p.contains(key)) return dflt;
  if (!p[key].is_number_integer()) throw Error(ErrorKind::BadParams, std::string("param '") + key + "' must be an integer");
  return p[key].get<int>();
}

void check_keys(const nlohmann::json& p, std::initializer_list<const char*> allowed) {
  if (!p.is_object()) throw Error(ErrorKind::BadParams, "model params must be an object");
  for (auto it = p.begin(); it != p.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw Error(ErrorKind::BadParams, "unknown model param '" + it.key() + "'");
  }
}

ManifoldChart flat_chart(int n, const std::string& label) {
  ManifoldChart c;
  c.dim = n;
  c.domain.assign(static_cast<size_t>(n), Interval{});
  c.period.assign(static_cast<size_t>(n), std::nullopt);
  c.log_grid_axes.assign(static_cast<size_t>(n), false);
  c.metric_fn = [n](const double*, double* g) {
    for (int i = 0; i < n * n; ++i) g[i] = 0.0;
    for (int i = 0; i < n; ++i) g[i * n + i] = 1.0;
  };
  c.christoffel_fn = [n](const double*, double* gam) { std::fill(gam, gam + n * n * n, 0.0); };
  c.curvature_fn = [n](const double*, const double*, const double*, double* out) {
    std::fill(out, out + n, 0.0);
  };
  c.label = label;
  return c;
}

// ---------------------------------------------------------------------------
// Polar parameterisation of an ellipsoid, F(th, ph) = (A sin th cos ph, B sin th sin ph, C cos th),
// followed by an axis permutation into the embedding frame.  Chart 0 puts the poles on the
// z axis, chart 1 on the x axis.

struct PolarSurface {
  std::array<double, 3> abc;   // semi-axes along embedding x, y, z
  std::array<double, 3> ABC;   // semi-axes seen by F
  std::array<int, 3> perm;     // E[perm[k]] = F[k]

  static PolarSurface make(double a, double b, double c, int chart) {
    PolarSurface s;
    s.abc = {a, b, c};
    if (chart == 0) {
      s.ABC = {a, b, c};
      s.perm = {0, 1, 2};
    } else {
      s.ABC = {b, c, a};
      s.perm = {1, 2, 0};
    }
    return s;
  }

  // F, dF/dth, dF/dph and second derivatives, in the embedding frame.
  void frames(const double* x, double* E, double* Et, double* Ep, double* Ett, double* Etp,
              double* Epp) const {
    const double st = std::sin(x[0]), ct = std::cos(x[0]);
    const double sp = std::sin(x[1]), cp = std::cos(x[1]);
    const double A = ABC[0], B = ABC[1], C = ABC[2];
    const double F[3] = {A * st * cp, B * st * sp, C * ct};
    const double Ft[3] = {A * ct * cp, B * ct * sp, -C * st};
    const double Fp[3] = {-A * st * sp, B * st * cp, 0.0};
    const double Ftt[3] = {-A * st * cp, -B * st * sp, -C * ct};
    const double Ftp[3] = {-A * ct * sp, B * ct * cp, 0.0};
    const double Fpp[3] = {-A * st * cp, -B * st * sp, 0.0};
    for (int k = 0; k < 3; ++k) {
      const int e = perm[static_cast<size_t>(k)];
      if (E) E[e] = F[k];
      if (Et) Et[e] = Ft[k];
      if (Ep) Ep[e] = Fp[k];
      if (Ett) Ett[e] = Ftt[k];
      if (Etp) Etp[e] = Ftp[k];
      if (Epp) Epp[e] = Fpp[k];
    }
  }

  void inverse(const double* E, double* x) const {
    double F[3];
    for (int k = 0; k < 3; ++k) F[k] = E[perm[static_cast<size_t>(k)]];
    const double z = std::clamp(F[2] / ABC[2], -1.0, 1.0);
    x[0] = std::acos(z);
    x[1] = std::atan2(F[1] / ABC[1], F[0] / ABC[0]);
    if (x[1] < 0) x[1] += 2 * kPi;
  }
};

double dot3(const double* a, const double* b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

ManifoldChart polar_chart(const PolarSurface& s, bool sphere, int index) {
  ManifoldChart c;
  c.dim = 2;
  c.domain = {Interval{0.0, kPi}, Interval{0.0, 2 * kPi}};
  c.period = {std::nullopt, 2 * kPi};
  c.log_grid_axes = {false, false};
  c.label = std::string(sphere ? "sphere" : "ellipsoid") + " polar chart " + std::to_string(index);
  c.metric_fn = [s](const double* x, double* g) {
    double Et[3], Ep[3];
    s.frames(x, nullptr, Et, Ep, nullptr, nullptr, nullptr);
    g[0] = dot3(Et, Et);
    g[1] = g[2] = dot3(Et, Ep);
    g[3] = dot3(Ep, Ep);
  };
  if (sphere) {
    // Round sphere in polar form: g = R^2 diag(1, sin^2 th).
    c.christoffel_fn = [](const double* x, double* gam) {
      const double st = std::sin(x[0]), ct = std::cos(x[0]);
      std::fill(gam, gam + 8, 0.0);
      gam[0 * 4 + 1 * 2 + 1] = -st * ct;      // G^th_ph,ph
      gam[1 * 4 + 0 * 2 + 1] = ct / st;       // G^ph_th,ph
      gam[1 * 4 + 1 * 2 + 0] = ct / st;
    };
    const double R = s.abc[0];
    c.curvature_fn = [R](const double* x, const double* u, const double* w, double* out) {
      const double s2 = std::sin(x[0]) * std::sin(x[0]);
      const double uu = R * R * (u[0] * u[0] + s2 * u[1] * u[1]);
      const double wu = R * R * (w[0] * u[0] + s2 * w[1] * u[1]);
      const double K = 1.0 / (R * R);
      out[0] = K * (uu * w[0] - wu * u[0]);
      out[1] = K * (uu * w[1] - wu * u[1]);
    };
  } else {
    // Gamma^k_ij = g^kl <d_i d_j X, d_l X> for an embedded surface.
    c.christoffel_fn = [s](const double* x, double* gam) {
      double Et[3], Ep[3], Ett[3], Etp[3], Epp[3];
      s.frames(x, nullptr, Et, Ep, Ett, Etp, Epp);
      const double g00 = dot3(Et, Et), g01 = dot3(Et, Ep), g11 = dot3(Ep, Ep);
      const double det = g00 * g11 - g01 * g01;
      const double i00 = g11 / det, i01 = -g01 / det, i11 = g00 / det;
      const double* second[2][2] = {{Ett, Etp}, {Etp, Epp}};
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          const double l0 = dot3(second[i][j], Et), l1 = dot3(second[i][j], Ep);
          gam[0 * 4 + i * 2 + j] = i00 * l0 + i01 * l1;
          gam[1 * 4 + i * 2 + j] = i01 * l0 + i11 * l1;
        }
    };
    // In two dimensions R(w,u)u = K (<u,u> w - <w,u> u) with K the Gaussian curvature.
    c.curvature_fn = [s](const double* x, const double* u, const double* w, double* out) {
      double E[3], Et[3], Ep[3];
      s.frames(x, E, Et, Ep, nullptr, nullptr, nullptr);
      const double g00 = dot3(Et, Et), g01 = dot3(Et, Ep), g11 = dot3(Ep, Ep);
      const double uu = g00 * u[0] * u[0] + 2 * g01 * u[0] * u[1] + g11 * u[1] * u[1];
      const double wu = g00 * w[0] * u[0] + g01 * (w[0] * u[1] + w[1] * u[0]) + g11 * w[1] * u[1];
      const double K =
          ellipsoid_gauss_curvature(s.abc[0], s.abc[1], s.abc[2], E[0], E[1], E[2]);
      out[0] = K * (uu * w[0] - wu * u[0]);
      out[1] = K * (uu * w[1] - wu * u[1]);
    };
  }
  return c;
}

Manifold polar_manifold(double a, double b, double c, bool sphere) {
  auto surf = std::make_shared<std::array<PolarSurface, 2>>(
      std::array<PolarSurface, 2>{PolarSurface::make(a, b, c, 0), PolarSurface::make(a, b, c, 1)});
  Manifold m;
  m.charts = {polar_chart((*surf)[0], sphere, 0), polar_chart((*surf)[1], sphere, 1)};
  m.select_chart = [](int chart, const double* x) {
    return std::min(x[0], kPi - x[0]) < kPoleSwitch ? 1 - chart : chart;
  };
  m.transition_point = [surf](int from, int to, const double* x, double* y) {
    double E[3];
    (*surf)[static_cast<size_t>(from)].frames(x, E, nullptr, nullptr, nullptr, nullptr, nullptr);
    (*surf)[static_cast<size_t>(to)].inverse(E, y);
  };
  m.transition_vector = [surf](int from, int to, const double* x, const double* y,
                               const double* v, double* out) {
    double Et[3], Ep[3], Ft[3], Fp[3];
    (*surf)[static_cast<size_t>(from)].frames(x, nullptr, Et, Ep, nullptr, nullptr, nullptr);
    (*surf)[static_cast<size_t>(to)].frames(y, nullptr, Ft, Fp, nullptr, nullptr, nullptr);
    double dE[3];
    for (int k = 0; k < 3; ++k) dE[k] = Et[k] * v[0] + Ep[k] * v[1];
    const double g00 = dot3(Ft, Ft), g01 = dot3(Ft, Fp), g11 = dot3(Fp, Fp);
    const double r0 = dot3(Ft, dE), r1 = dot3(Fp, dE);
    const double det = g00 * g11 - g01 * g01;
    out[0] = (g11 * r0 - g01 * r1) / det;
    out[1] = (-g01 * r0 + g00 * r1) / det;
  };
  m.embed = [surf](int chart, const double* x, double* e) {
    (*surf)[static_cast<size_t>(chart)].frames(x, e, nullptr, nullptr, nullptr, nullptr, nullptr);
  };
  m.embed_dim = 3;
  return m;
}

ModelRecord make_euclidean(const nlohmann::json& p) {
  check_keys(p, {"n"});
  const int n = int_param(p, "n", 2);
  if (n < 2) throw Error(ErrorKind::BadParams, "euclidean: n must be >= 2");
  ModelRecord r;
  r.name = "euclidean";
  r.params = {{"n", n}};
  r.manifold.charts = {flat_chart(n, "euclidean R^" + std::to_string(n))};
  r.ground_truth = GroundTruth{kInf, kInf, kInf, kInf, kInf, 0.0};
  r.provenance = "flat space: no cut points, geodesic balls convex at every radius";
  return r;
}

ModelRecord make_sphere(const nlohmann::json& p) {
  check_keys(p, {"R", "n"});
  const double R = param(p, "R", 1.0);
  const int n = int_param(p, "n", 2);
  if (!(R > 0)) throw Error(ErrorKind::BadParams, "sphere: R must be > 0");
  if (n != 2) throw Error(ErrorKind::BadParams, "sphere: only n = 2 is supported");
  ModelRecord r;
  r.name = "sphere";
  r.params = {{"R", R}, {"n", n}};
  r.manifold = polar_manifold(R, R, R, true);
  const double h = kPi * R / 2;
  r.ground_truth = GroundTruth{kPi * R, h, h, h, h, 1.0 / (R * R)};
  r.provenance =
      "constant curvature 1/R^2: conjugate and cut locus at the antipode (pi R); "
      "geodesic spheres stop being convex at the equator (pi R / 2)";
  return r;
}

ModelRecord make_hyperbolic(const nlohmann::json& p) {
  check_keys(p, {"n"});
  const int n = int_param(p, "n", 2);
  if (n < 2) throw Error(ErrorKind::BadParams, "hyperbolic_halfplane: n must be >= 2");
  ModelRecord r;
  r.name = "hyperbolic_halfplane";
  r.params = {{"n", n}};
  ManifoldChart c;
  c.dim = n;
  c.domain.assign(static_cast<size_t>(n), Interval{});
  c.domain.back().lo = 0.0;
  c.period.assign(static_cast<size_t>(n), std::nullopt);
  c.log_grid_axes.assign(static_cast<size_t>(n), false);
  c.log_grid_axes.back() = true;
  c.label = "upper half-space H^" + std::to_string(n);
  c.metric_fn = [n](const double* x, double* g) {
    const double y = x[n - 1];
    const double s = 1.0 / (y * y);
    for (int i = 0; i < n * n; ++i) g[i] = 0.0;
    for (int i = 0; i < n; ++i) g[i * n + i] = s;
  };
  // Conformal metric e^{2 sigma} I with sigma = -log y:
  // Gamma^k_ij = d_ik s_j + d_jk s_i - d_ij s_k, s = grad sigma = -e_n / y.
  c.christoffel_fn = [n](const double* x, double* gam) {
    const double sy = -1.0 / x[n - 1];
    std::fill(gam, gam + n * n * n, 0.0);
    const int y = n - 1;
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double v = 0.0;
          if (i == k && j == y) v += sy;
          if (j == k && i == y) v += sy;
          if (i == j && k == y) v -= sy;
          gam[(k * n + i) * n + j] = v;
        }
  };
  c.curvature_fn = [n](const double* x, const double* u, const double* w, double* out) {
    const double s = 1.0 / (x[n - 1] * x[n - 1]);
    double uu = 0, wu = 0;
    for (int i = 0; i < n; ++i) {
      uu += s * u[i] * u[i];
      wu += s * w[i] * u[i];
    }
    for (int i = 0; i < n; ++i) out[i] = -(uu * w[i] - wu * u[i]);
  };
  r.manifold.charts = {c};
  r.ground_truth = GroundTruth{kInf, kInf, kInf, kInf, kInf, -1.0};
  r.provenance = "constant curvature -1, simply connected: exp_p is a diffeomorphism";
  return r;
}

ModelRecord make_torus(const nlohmann::json& p) {
  check_keys(p, {"periods"});
  std::vector<double> periods{1.0, 1.0};
  if (p.contains("periods")) {
    if (!p["periods"].is_array()) throw Error(ErrorKind::BadParams, "flat_torus: periods must be an array");
    periods.clear();
    for (const auto& v : p["periods"]) {
      if (!v.is_number()) throw Error(ErrorKind::BadParams, "flat_torus: periods must be numbers");
      periods.push_back(v.get<double>());
    }
  }
  const int n = static_cast<int>(periods.size());
  if (n < 2) throw Error(ErrorKind::BadParams, "flat_torus: need at least 2 periods");
  for (double q : periods)
    if (!(q > 0)) throw Error(ErrorKind::BadParams, "flat_torus: periods must be > 0");
  ModelRecord r;
  r.name = "flat_torus";
  r.params = {{"periods", periods}};
  ManifoldChart c = flat_chart(n, "flat torus");
  for (int i = 0; i < n; ++i) {
    c.domain[static_cast<size_t>(i)] = Interval{0.0, periods[static_cast<size_t>(i)]};
    c.period[static_cast<size_t>(i)] = periods[static_cast<size_t>(i)];
  }
  r.manifold.charts = {c};
  const double pmin = *std::min_element(periods.begin(), periods.end());
  r.ground_truth = GroundTruth{pmin / 2, pmin / 2, pmin / 2, pmin / 4, pmin / 4, 0.0};
  r.provenance =
      "flat lattice quotient: shortest closed geodesic has length min(periods), so the cut "
      "locus sits at half of it and convexity fails past a quarter";
  return r;
}

ModelRecord make_ellipsoid(const nlohmann::json& p) {
  check_keys(p, {"a", "b", "c"});
  const double a = param(p, "a", 1.0), b = param(p, "b", 1.0), c = param(p, "c", 1.3);
  if (!(a > 0 && b > 0 && c > 0)) throw Error(ErrorKind::BadParams, "ellipsoid: semi-axes must be > 0");
  ModelRecord r;
  r.name = "ellipsoid";
  r.params = {{"a", a}, {"b", b}, {"c", c}};
  r.manifold = polar_manifold(a, b, c, false);
  r.provenance = "variable curvature; no closed-form radii";
  return r;
}

}  // namespace

double ellipsoid_gauss_curvature(double a, double b, double c, double X, double Y, double Z) {
  const double s = X * X / (a * a * a * a) + Y * Y / (b * b * b * b) + Z * Z / (c * c * c * c);
  return 1.0 / (a * a * b * b * c * c * s * s);
}

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"euclidean", "sphere", "hyperbolic_halfplane",
                                              "flat_torus", "ellipsoid"};
  return names;
}

ModelRecord get_model(const std::string& name, const nlohmann::json& params) {
  const nlohmann::json p = params.is_null() ? nlohmann::json::object() : params;
  ModelRecord r;
  if (name == "euclidean") r = make_euclidean(p);
  else if (name == "sphere") r = make_sphere(p);
  else if (name == "hyperbolic_halfplane") r = make_hyperbolic(p);
  else if (name == "flat_torus") r = make_torus(p);
  else if (name == "ellipsoid") r = make_ellipsoid(p);
  else throw Error(ErrorKind::UnknownModel, "unknown model '" + name + "'");
  r.manifold.oracle_cache = make_oracle_cache();
  return r;
}

ModelRecord model_from_json(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("metric") || !spec["metric"].is_string()) {
    if (spec.is_object() && spec.contains("metric") && spec["metric"].is_object())
      throw Error(ErrorKind::BadConfig, "expression-based metrics are not supported; use \"builtin:<name>\"");
    throw Error(ErrorKind::BadConfig, "model file needs a \"metric\" string");
  }
  const std::string metric = spec["metric"].get<std::string>();
  const std::string prefix = "builtin:";
  if (metric.rfind(prefix, 0) != 0)
    throw Error(ErrorKind::BadConfig, "metric must be of the form builtin:<name>");
  const std::string name = metric.substr(prefix.size());
  nlohmann::json params = spec.value("params", nlohmann::json::object());
  if (name == "flat_torus" && spec.contains("period") && !params.contains("periods")) {
    std::vector<double> periods;
    for (const auto& v : spec["period"]) {
      if (v.is_null()) throw Error(ErrorKind::BadParams, "flat_torus: every coordinate must be periodic");
      periods.push_back(v.get<double>());
    }
    params["periods"] = periods;
  }
  if ((name == "euclidean" || name == "hyperbolic_halfplane") && spec.contains("dimension") &&
      !params.contains("n"))
    params["n"] = spec["dimension"];
  ModelRecord rec = get_model(name, params);
  if (spec.contains("dimension") && spec["dimension"].get<int>() != rec.manifold.dim())
    throw Error(ErrorKind::BadParams, "dimension does not match builtin:" + name);
  if (spec.contains("domain")) {
    const auto& dom = spec["domain"];
    if (!dom.is_array() || static_cast<int>(dom.size()) != rec.manifold.dim())
      throw Error(ErrorKind::BadParams, "domain must list one [lo, hi] per coordinate");
  }
  return rec;
}

ModelRecord load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::BadConfig, "cannot read model file '" + path + "'");
  nlohmann::json spec;
  try {
    in >> spec;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadConfig, std::string("malformed model file: ") + e.what());
  }
  return model_from_json(spec);
}

}  // namespace convlab
