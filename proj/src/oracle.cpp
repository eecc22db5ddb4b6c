// Graph shortest-path estimate of the Riemannian distance.

#include "convlab/errors.hpp"
#include "convlab/geodesic.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <queue>

namespace convlab {

namespace {

struct Axis {
  double lo = 0, step = 0;  // node i sits at lo + i * step (in sampled coordinates)
  int count = 0;
  bool periodic = false;
  bool log = false;

  double coord(double s) const { return log ? std::exp(s) : s; }
  double sampled(double x) const { return log ? std::log(x) : x; }
};

struct Grid {
  std::vector<Axis> axes;
  std::vector<std::vector<int>> offsets;
  std::vector<double> weights;  // node * offsets + o; negative means no edge
  std::vector<int> strides;
  int nodes = 0;
  double spacing = 0;
};

int gcd_all(const std::vector<int>& v) {
  int g = 0;
  for (int a : v) g = std::gcd(g, std::abs(a));
  return g;
}

std::vector<std::vector<int>> primitive_offsets(int n, int r) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<size_t>(n), -r);
  while (true) {
    if (gcd_all(cur) == 1) out.push_back(cur);
    int i = 0;
    while (i < n && cur[static_cast<size_t>(i)] == r) cur[static_cast<size_t>(i++)] = -r;
    if (i == n) break;
    ++cur[static_cast<size_t>(i)];
  }
  return out;
}

// Chart coordinates of node `idx` displaced by `off` (periodic axes left unwrapped).
void node_coords(const Grid& gr, const std::vector<int>& idx, const int* off, double* x) {
  for (size_t a = 0; a < gr.axes.size(); ++a) {
    const Axis& ax = gr.axes[a];
    const int i = idx[a] + (off ? off[a] : 0);
    x[a] = ax.coord(ax.lo + i * ax.step);
  }
}

// Neighbour index, or -1 if it falls off a non-periodic axis.
int neighbour(const Grid& gr, const std::vector<int>& idx, const std::vector<int>& off) {
  int lin = 0;
  for (size_t a = 0; a < gr.axes.size(); ++a) {
    const Axis& ax = gr.axes[a];
    int i = idx[a] + off[a];
    if (ax.periodic) {
      i = ((i % ax.count) + ax.count) % ax.count;
    } else if (i < 0 || i >= ax.count) {
      return -1;
    }
    lin += i * gr.strides[a];
  }
  return lin;
}

std::vector<int> unravel(const Grid& gr, int lin) {
  std::vector<int> idx(gr.axes.size());
  for (size_t a = 0; a < gr.axes.size(); ++a) {
    idx[a] = (lin / gr.strides[a]) % gr.axes[a].count;
  }
  return idx;
}

// Length of the straight chart segment a -> b with the metric frozen at the midpoint.
bool edge_length(const ManifoldChart& c, const double* a, const double* b, double& out) {
  const int n = c.dim;
  std::vector<double> mid(static_cast<size_t>(n)), g(static_cast<size_t>(n * n));
  for (int i = 0; i < n; ++i) mid[static_cast<size_t>(i)] = 0.5 * (a[i] + b[i]);
  for (int i = 0; i < n; ++i) {
    if (c.period[static_cast<size_t>(i)]) continue;
    const Interval& d = c.domain[static_cast<size_t>(i)];
    if (!(mid[static_cast<size_t>(i)] > d.lo && mid[static_cast<size_t>(i)] < d.hi)) return false;
  }
  c.metric_fn(mid.data(), g.data());
  double s = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s += (b[i] - a[i]) * g[static_cast<size_t>(i * n + j)] * (b[j] - a[j]);
  if (!(s > 0) || !std::isfinite(s)) return false;
  out = std::sqrt(s);
  return true;
}

int default_resolution(int n) {
  if (n <= 2) return 72;
  if (n == 3) return 20;
  return 8;
}

// Sampling box per axis.  Periodic and bounded axes use the chart domain; other axes a box
// around both points.
std::vector<Axis> make_axes(const ManifoldChart& c, const Vec& p, const Vec& q, int res,
                            bool& fixed_box) {
  const int n = c.dim;
  std::vector<Axis> axes(static_cast<size_t>(n));
  fixed_box = true;
  for (int a = 0; a < n; ++a) {
    Axis& ax = axes[static_cast<size_t>(a)];
    ax.count = res;
    ax.log = a < static_cast<int>(c.log_grid_axes.size()) && c.log_grid_axes[static_cast<size_t>(a)];
    const Interval& d = c.domain[static_cast<size_t>(a)];
    if (c.period[static_cast<size_t>(a)]) {
      ax.periodic = true;
      ax.step = *c.period[static_cast<size_t>(a)] / res;
      ax.lo = d.lo;
      continue;
    }
    if (std::isfinite(d.lo) && std::isfinite(d.hi)) {
      const double lo = ax.sampled(d.lo), hi = ax.sampled(d.hi);
      ax.step = (hi - lo) / res;
      ax.lo = lo + 0.5 * ax.step;
      continue;
    }
    fixed_box = false;
    const double sp = ax.sampled(p(a)), sq = ax.sampled(q(a));
    double lo = std::min(sp, sq), hi = std::max(sp, sq);
    // Room for curved shortest paths.
    double span = 0;
    for (int b = 0; b < n; ++b) span = std::max(span, std::abs(p(b) - q(b)));
    if (ax.log) {
      lo -= std::max(1.0, hi - lo);
      hi = std::max(hi + 0.7, std::log(std::exp(hi) + span));
    } else {
      lo -= 0.6 * span + 0.5;
      hi += 0.6 * span + 0.5;
    }
    if (std::isfinite(d.lo)) lo = std::max(lo, ax.sampled(d.lo) + 1e-9);
    if (std::isfinite(d.hi)) hi = std::min(hi, ax.sampled(d.hi) - 1e-9);
    ax.lo = lo;
    ax.step = (hi - lo) / (res - 1);
  }
  return axes;
}

std::shared_ptr<Grid> build_grid(const ManifoldChart& c, std::vector<Axis> axes) {
  auto gr = std::make_shared<Grid>();
  const int n = c.dim;
  gr->axes = std::move(axes);
  gr->offsets = primitive_offsets(n, n == 2 ? 3 : (n == 3 ? 2 : 1));
  gr->strides.resize(static_cast<size_t>(n));
  int stride = 1;
  for (int a = n - 1; a >= 0; --a) {
    gr->strides[static_cast<size_t>(a)] = stride;
    stride *= gr->axes[static_cast<size_t>(a)].count;
  }
  gr->nodes = stride;
  const size_t no = gr->offsets.size();
  gr->weights.assign(static_cast<size_t>(gr->nodes) * no, -1.0);
  std::vector<double> xa(static_cast<size_t>(n)), xb(static_cast<size_t>(n));
  for (int v = 0; v < gr->nodes; ++v) {
    const std::vector<int> idx = unravel(*gr, v);
    node_coords(*gr, idx, nullptr, xa.data());
    for (size_t o = 0; o < no; ++o) {
      if (neighbour(*gr, idx, gr->offsets[o]) < 0) continue;
      node_coords(*gr, idx, gr->offsets[o].data(), xb.data());
      double w;
      if (edge_length(c, xa.data(), xb.data(), w)) gr->weights[static_cast<size_t>(v) * no + o] = w;
    }
  }
  // Resolution: longest unit-offset edge.
  for (size_t o = 0; o < no; ++o) {
    int l1 = 0;
    for (int a : gr->offsets[o]) l1 += std::abs(a);
    if (l1 != 1) continue;
    for (int v = 0; v < gr->nodes; ++v) {
      const double w = gr->weights[static_cast<size_t>(v) * no + o];
      if (w > gr->spacing) gr->spacing = w;
    }
  }
  return gr;
}

// Nodes around x (chart coordinates) with their straight-edge weights.
std::vector<std::pair<int, double>> attach(const Grid& gr, const ManifoldChart& c, const Vec& x) {
  const int n = c.dim;
  std::vector<int> base(static_cast<size_t>(n));
  for (int a = 0; a < n; ++a) {
    const Axis& ax = gr.axes[static_cast<size_t>(a)];
    base[static_cast<size_t>(a)] = static_cast<int>(std::floor((ax.sampled(x(a)) - ax.lo) / ax.step));
  }
  const int r = n == 2 ? 2 : 1;
  std::vector<std::pair<int, double>> out;
  std::vector<int> off(static_cast<size_t>(n), -r + 1);
  std::vector<double> xb(static_cast<size_t>(n));
  // Offsets in [-r+1, r] around the lower-left cell corner.
  while (true) {
    const int lin = neighbour(gr, base, off);
    if (lin >= 0) {
      node_coords(gr, base, off.data(), xb.data());
      // Unwrapped node coordinates may sit a period away from x; bring them next to x.
      for (int a = 0; a < n; ++a)
        if (c.period[static_cast<size_t>(a)]) {
          const double P = *c.period[static_cast<size_t>(a)];
          xb[static_cast<size_t>(a)] = x(a) + (xb[static_cast<size_t>(a)] - x(a)) - P * std::round((xb[static_cast<size_t>(a)] - x(a)) / P);
        }
      double w;
      if (edge_length(c, x.data(), xb.data(), w)) out.emplace_back(lin, w);
    }
    int i = 0;
    while (i < n && off[static_cast<size_t>(i)] == r) off[static_cast<size_t>(i++)] = -r + 1;
    if (i == n) break;
    ++off[static_cast<size_t>(i)];
  }
  return out;
}

}  // namespace

struct OracleGridCache {
  std::mutex mu;
  std::map<int, std::shared_ptr<Grid>> grids;
};

std::shared_ptr<OracleGridCache> make_oracle_cache() { return std::make_shared<OracleGridCache>(); }

OracleEstimate graph_distance(const Manifold& m, const Point& p_in, const Point& q_in, int resolution) {
  const int n = m.dim();
  const ManifoldChart& c = m.chart(0);
  const Vec p = wrap_point(c, m.coords_in(m.canonical(p_in), 0));
  const Vec q = wrap_point(c, m.coords_in(m.canonical(q_in), 0));
  const int res = resolution > 0 ? resolution : default_resolution(n);

  bool fixed = false;
  std::vector<Axis> axes = make_axes(c, p, q, res, fixed);
  std::shared_ptr<Grid> gr;
  if (fixed && m.oracle_cache) {
    std::lock_guard<std::mutex> lock(m.oracle_cache->mu);
    auto& slot = m.oracle_cache->grids[res];
    if (!slot) slot = build_grid(c, std::move(axes));
    gr = slot;
  } else {
    gr = build_grid(c, std::move(axes));
  }

  const auto src = attach(*gr, c, p);
  const auto dst = attach(*gr, c, q);
  if (src.empty() || dst.empty())
    throw Error(ErrorKind::OutOfDomain, "graph oracle: point outside sampling grid");

  OracleEstimate est;
  est.spacing = gr->spacing;

  const size_t no = gr->offsets.size();
  std::vector<double> dist(static_cast<size_t>(gr->nodes), std::numeric_limits<double>::infinity());
  std::vector<int> pred(static_cast<size_t>(gr->nodes), -2);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (const auto& [v, w] : src) {
    if (w < dist[static_cast<size_t>(v)]) {
      dist[static_cast<size_t>(v)] = w;
      pred[static_cast<size_t>(v)] = -1;
      pq.emplace(w, v);
    }
  }
  std::vector<double> to_q(static_cast<size_t>(gr->nodes), -1.0);
  for (const auto& [v, w] : dst) to_q[static_cast<size_t>(v)] = w;
  double best = std::numeric_limits<double>::infinity();
  int best_node = -1;
  // Direct edge when the points are very close.
  double direct = std::numeric_limits<double>::infinity();
  {
    Vec qq = p + chart_difference(c, q, p);
    double w;
    if (edge_length(c, p.data(), qq.data(), w) && w < 2.0 * gr->spacing) direct = w;
  }

  while (!pq.empty()) {
    const auto [d, v] = pq.top();
    pq.pop();
    if (d > dist[static_cast<size_t>(v)]) continue;
    if (d >= best) break;
    const double tq = to_q[static_cast<size_t>(v)];
    if (tq >= 0 && d + tq < best) {
      best = d + tq;
      best_node = v;
    }
    const std::vector<int> idx = unravel(*gr, v);
    for (size_t o = 0; o < no; ++o) {
      const double w = gr->weights[static_cast<size_t>(v) * no + o];
      if (w < 0) continue;
      const int u = neighbour(*gr, idx, gr->offsets[o]);
      const double nd = d + w;
      if (nd < dist[static_cast<size_t>(u)]) {
        dist[static_cast<size_t>(u)] = nd;
        pred[static_cast<size_t>(u)] = v;
        pq.emplace(nd, u);
      }
    }
  }

  const Point pc = m.canonical(p_in);
  if (direct <= best || best_node < 0) {
    if (!std::isfinite(direct)) throw Error(ErrorKind::NoConvergence, "graph oracle: target unreachable");
    est.distance = direct;
    const Vec d0 = chart_difference(c, q, p);
    const Vec d = m.vector_in(Point{0, p}, d0, pc.chart);
    est.first_direction = d / norm(m.metric_at(pc), d);
    return est;
  }
  est.distance = best;
  // Aim at a node a few hops along the path for a less quantized direction.
  std::vector<int> chain;
  for (int v = best_node; v >= 0; v = pred[static_cast<size_t>(v)]) chain.push_back(v);
  const int target = chain[chain.size() > 3 ? chain.size() - 3 : 0];
  std::vector<double> xt(static_cast<size_t>(n));
  node_coords(*gr, unravel(*gr, target), nullptr, xt.data());
  const Vec d0 = chart_difference(c, Eigen::Map<const Vec>(xt.data(), n), p);
  const Vec d = m.vector_in(Point{0, p}, d0, pc.chart);
  est.first_direction = d / norm(m.metric_at(pc), d);
  return est;
}

}  // namespace convlab
