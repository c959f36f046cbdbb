#pragma once

// Model domains and the operations tied to a mesh: geodesic integration,
// forward distances, diameter, metric balls, and the model comparison volume.
//
// Distances are graph distances on a k-ring stencil: every vertex connects to
// its lattice (torus) or breadth-first (sphere) neighborhood, each directed
// edge weighted by a 2-point Gauss quadrature of F along the straight chart
// segment. Widening the stencil controls the direction-quantization stretch;
// the residual bias is an overestimate of order the worst angular gap squared.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <vector>

#include "flab/curvature.hpp"
#include "flab/errors.hpp"
#include "flab/linalg.hpp"
#include "flab/mesh.hpp"
#include "flab/metric.hpp"
#include "flab/quadrature.hpp"
#include "flab/volume.hpp"

namespace flab {

struct DomainSpec {
  MeshKind kind;
  double radius = 1.0;
  double period[2] = {2.0 * M_PI, 2.0 * M_PI};
  MetricDescriptor metric;

  static DomainSpec circle(double radius) {
    if (!(radius > 0.0)) throw Error(ErrorKind::InvalidParameter, "circle radius must be positive");
    DomainSpec d{MeshKind::Circle, radius, {2.0 * M_PI, 2.0 * M_PI}, circle_metric(radius)};
    return d;
  }
  static DomainSpec circle_with_metric(double radius, MetricDescriptor m) {
    if (!(radius > 0.0)) throw Error(ErrorKind::InvalidParameter, "circle radius must be positive");
    if (m.dim() != 1) throw Error(ErrorKind::InvalidParameter, "circle metric must be 1-dimensional");
    return DomainSpec{MeshKind::Circle, radius, {2.0 * M_PI, 2.0 * M_PI}, std::move(m)};
  }
  static DomainSpec flat_torus(double l1, double l2, MetricDescriptor m) {
    if (!(l1 > 0.0) || !(l2 > 0.0))
      throw Error(ErrorKind::InvalidParameter, "torus periods must be positive");
    if (m.dim() != 2) throw Error(ErrorKind::InvalidParameter, "torus metric must be 2-dimensional");
    return DomainSpec{MeshKind::FlatTorus, 1.0, {l1, l2}, std::move(m)};
  }
  static DomainSpec sphere(double radius) {
    if (!(radius > 0.0)) throw Error(ErrorKind::InvalidParameter, "sphere radius must be positive");
    MetricDescriptor m = MetricDescriptor::riemannian(2, gnomonic_sphere_map(radius));
    return DomainSpec{MeshKind::Sphere, radius, {2.0 * M_PI, 2.0 * M_PI}, std::move(m)};
  }
};

inline Mesh build_mesh(const DomainSpec& spec, int resolution) {
  switch (spec.kind) {
    case MeshKind::Circle: return build_circle_mesh(spec.radius, resolution);
    case MeshKind::FlatTorus: return build_torus_mesh(spec.period[0], spec.period[1], resolution);
    case MeshKind::Sphere: return build_sphere_mesh(spec.radius, resolution);
  }
  throw Error(ErrorKind::Unsupported, "unknown mesh kind");
}

// Gnomonic chart on the radius-R sphere centered at unit vector c. Central
// projection sends great circles to straight chart lines, so chart segments
// are geodesic arcs.
struct SphereChart {
  double radius = 1.0;
  double c[3] = {0, 0, 1};
  double e1[3] = {1, 0, 0};
  double e2[3] = {0, 1, 0};

  static SphereChart at_point(double radius, const Vecd& p) {
    SphereChart ch;
    ch.radius = radius;
    double nrm = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    if (!(nrm > 0.0)) throw Error(ErrorKind::InvalidInput, "sphere point at origin");
    for (int i = 0; i < 3; ++i) ch.c[i] = p[i] / nrm;
    int ax = 0;
    for (int i = 1; i < 3; ++i)
      if (std::abs(ch.c[i]) < std::abs(ch.c[ax])) ax = i;
    double a[3] = {0, 0, 0};
    a[ax] = 1.0;
    double proj = a[0] * ch.c[0] + a[1] * ch.c[1] + a[2] * ch.c[2];
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
      ch.e1[i] = a[i] - proj * ch.c[i];
      s += ch.e1[i] * ch.e1[i];
    }
    s = std::sqrt(s);
    for (int i = 0; i < 3; ++i) ch.e1[i] /= s;
    ch.e2[0] = ch.c[1] * ch.e1[2] - ch.c[2] * ch.e1[1];
    ch.e2[1] = ch.c[2] * ch.e1[0] - ch.c[0] * ch.e1[2];
    ch.e2[2] = ch.c[0] * ch.e1[1] - ch.c[1] * ch.e1[0];
    return ch;
  }

  // continuation chart: same center logic but basis aligned with a previous frame
  static SphereChart continuation(double radius, const Vecd& p, const SphereChart& prev) {
    SphereChart ch = at_point(radius, p);
    double s = 0.0, f1[3];
    double proj = prev.e1[0] * ch.c[0] + prev.e1[1] * ch.c[1] + prev.e1[2] * ch.c[2];
    for (int i = 0; i < 3; ++i) {
      f1[i] = prev.e1[i] - proj * ch.c[i];
      s += f1[i] * f1[i];
    }
    if (s > 1e-12) {
      s = std::sqrt(s);
      for (int i = 0; i < 3; ++i) ch.e1[i] = f1[i] / s;
      ch.e2[0] = ch.c[1] * ch.e1[2] - ch.c[2] * ch.e1[1];
      ch.e2[1] = ch.c[2] * ch.e1[0] - ch.c[0] * ch.e1[2];
      ch.e2[2] = ch.c[0] * ch.e1[1] - ch.c[1] * ch.e1[0];
    }
    return ch;
  }

  // chart coords of embedded p; requires p on the near hemisphere
  Vecd to_chart(const Vecd& p) const {
    double pc = p[0] * c[0] + p[1] * c[1] + p[2] * c[2];
    if (!(pc > 1e-9 * radius)) throw Error(ErrorKind::OutOfDomain, "point outside gnomonic hemisphere");
    Vecd w(2);
    w[0] = radius * (p[0] * e1[0] + p[1] * e1[1] + p[2] * e1[2]) / pc;
    w[1] = radius * (p[0] * e2[0] + p[1] * e2[1] + p[2] * e2[2]) / pc;
    return w;
  }

  Vecd from_chart(const Vecd& w) const {
    double u[3], s = 0.0;
    for (int i = 0; i < 3; ++i) {
      u[i] = c[i] + (w[0] * e1[i] + w[1] * e2[i]) / radius;
      s += u[i] * u[i];
    }
    s = std::sqrt(s);
    Vecd p(3);
    for (int i = 0; i < 3; ++i) p[i] = radius * u[i] / s;
    return p;
  }

  // pushforward of a chart velocity at w
  Vecd push_velocity(const Vecd& w, const Vecd& wdot) const {
    double u[3], du[3], s2 = 0.0, udu = 0.0;
    for (int i = 0; i < 3; ++i) {
      u[i] = c[i] + (w[0] * e1[i] + w[1] * e2[i]) / radius;
      du[i] = (wdot[0] * e1[i] + wdot[1] * e2[i]) / radius;
      s2 += u[i] * u[i];
      udu += u[i] * du[i];
    }
    double s = std::sqrt(s2);
    Vecd v(3);
    for (int i = 0; i < 3; ++i) v[i] = radius * (du[i] / s - u[i] * udu / (s2 * s));
    return v;
  }

  // pullback of a tangent velocity at the chart center (w = 0)
  Vecd pull_velocity_at_center(const Vecd& v) const {
    Vecd w(2);
    w[0] = v[0] * e1[0] + v[1] * e1[1] + v[2] * e1[2];
    w[1] = v[0] * e2[0] + v[1] * e2[1] + v[2] * e2[2];
    return w;
  }

  // pullback at general w; v must be tangent to the sphere at from_chart(w)
  Vecd pull_velocity(const Vecd& w, const Vecd& v) const {
    double s2 = 1.0 + (w[0] * w[0] + w[1] * w[1]) / (radius * radius);
    double s = std::sqrt(s2);
    double vc = v[0] * c[0] + v[1] * c[1] + v[2] * c[2];
    Vecd wdot(2);
    wdot[0] = s * (v[0] * e1[0] + v[1] * e1[1] + v[2] * e1[2] - vc * w[0] / radius);
    wdot[1] = s * (v[0] * e2[0] + v[1] * e2[1] + v[2] * e2[2] - vc * w[1] / radius);
    return wdot;
  }
};

struct GeodesicPath {
  std::vector<double> t;
  std::vector<Vecd> x;   // chart coords; embedded coords on the sphere
  std::vector<Vecd> v;
  std::vector<double> speed;
  double dt_used = 0.0;
  double speed_drift = 0.0;  // max relative deviation from the initial speed
};

namespace detail {

inline Vecd geodesic_accel(const MetricDescriptor& m, const Vecd& x, const Vecd& v) {
  VecN<double> g = spray_t<double>(m, x, v);
  Vecd a(x.n);
  for (int i = 0; i < x.n; ++i) a[i] = -2.0 * g[i];
  return a;
}

struct ChartState {
  Vecd x, v;
};

inline ChartState rk4_step(const MetricDescriptor& m, const ChartState& s, double h) {
  auto add = [](const Vecd& a, const Vecd& b, double c) {
    Vecd r(a.n);
    for (int i = 0; i < a.n; ++i) r[i] = a[i] + c * b[i];
    return r;
  };
  Vecd k1x = s.v, k1v = geodesic_accel(m, s.x, s.v);
  Vecd x2 = add(s.x, k1x, h / 2), v2 = add(s.v, k1v, h / 2);
  Vecd k2x = v2, k2v = geodesic_accel(m, x2, v2);
  Vecd x3 = add(s.x, k2x, h / 2), v3 = add(s.v, k2v, h / 2);
  Vecd k3x = v3, k3v = geodesic_accel(m, x3, v3);
  Vecd x4 = add(s.x, k3x, h), v4 = add(s.v, k3v, h);
  Vecd k4x = v4, k4v = geodesic_accel(m, x4, v4);
  ChartState out;
  out.x = Vecd(s.x.n);
  out.v = Vecd(s.x.n);
  for (int i = 0; i < s.x.n; ++i) {
    out.x[i] = s.x[i] + h / 6.0 * (k1x[i] + 2 * k2x[i] + 2 * k3x[i] + k4x[i]);
    out.v[i] = s.v[i] + h / 6.0 * (k1v[i] + 2 * k2v[i] + 2 * k3v[i] + k4v[i]);
  }
  return out;
}

}  // namespace detail

// Single-chart geodesic integration of x'' = -2 G(x, x').
inline GeodesicPath integrate_geodesic(const MetricDescriptor& m, const Vecd& x0, const Vecd& y0,
                                       double total_time, double dt) {
  require_direction(m, x0, y0);
  if (!(total_time > 0.0)) throw Error(ErrorKind::InvalidParameter, "integration time must be positive");
  if (!(dt > 0.0) || dt > total_time / 10.0)
    throw Error(ErrorKind::InvalidParameter, "time step must be positive and at most T/10");

  double f0 = norm(m, x0, y0);
  for (int attempt = 0; attempt < 7; ++attempt) {
    double dt_eff = dt / double(1 << attempt);
    long steps = long(std::ceil(total_time / dt_eff - 1e-12));
    double h = total_time / double(steps);
    GeodesicPath path;
    path.dt_used = h;
    detail::ChartState s{x0, y0};
    path.t.push_back(0.0);
    path.x.push_back(s.x);
    path.v.push_back(s.v);
    path.speed.push_back(f0);
    double drift = 0.0;
    bool ok = true;
    for (long k = 1; k <= steps; ++k) {
      s = detail::rk4_step(m, s, h);
      double f = norm(m, s.x, s.v);
      if (!std::isfinite(f)) {
        ok = false;
        break;
      }
      drift = std::max(drift, std::abs(f - f0) / f0);
      path.t.push_back(k * h);
      path.x.push_back(s.x);
      path.v.push_back(s.v);
      path.speed.push_back(f);
    }
    path.speed_drift = drift;
    if (ok && drift <= 1e-6) return path;
  }
  throw Error(ErrorKind::NumericFailure, "geodesic integration failed to conserve speed");
}

// Sphere geodesics hop between gnomonic charts; positions and velocities are
// reported in embedding coordinates.
inline GeodesicPath integrate_geodesic(const DomainSpec& spec, const Vecd& x0, const Vecd& y0,
                                       double total_time, double dt) {
  if (spec.kind != MeshKind::Sphere) return integrate_geodesic(spec.metric, x0, y0, total_time, dt);
  if (x0.n != 3 || y0.n != 3)
    throw Error(ErrorKind::InvalidInput, "sphere states use embedding coordinates");
  if (!(norm2(y0) > 0.0)) throw Error(ErrorKind::DegenerateDirection, "zero initial velocity");
  if (!(total_time > 0.0)) throw Error(ErrorKind::InvalidParameter, "integration time must be positive");
  if (!(dt > 0.0) || dt > total_time / 10.0)
    throw Error(ErrorKind::InvalidParameter, "time step must be positive and at most T/10");

  double r = spec.radius;
  const double hop2 = (0.4 * r) * (0.4 * r);

  SphereChart ch0 = SphereChart::at_point(r, x0);
  Vecd p0 = ch0.from_chart(Vecd(2));
  // project the initial velocity onto the tangent plane at the snapped point
  Vecd y = y0;
  double yc = 0.0;
  for (int i = 0; i < 3; ++i) yc += y[i] * ch0.c[i];
  for (int i = 0; i < 3; ++i) y[i] -= yc * ch0.c[i];
  double f0 = 0.0;
  {
    Vecd w0 = ch0.pull_velocity_at_center(y);
    if (!(norm2(w0) > 0.0))
      throw Error(ErrorKind::DegenerateDirection, "initial velocity is normal to the sphere");
    f0 = norm(spec.metric, Vecd(2), w0);
  }

  for (int attempt = 0; attempt < 7; ++attempt) {
    double dt_eff = dt / double(1 << attempt);
    long steps = long(std::ceil(total_time / dt_eff - 1e-12));
    double h = total_time / double(steps);
    GeodesicPath path;
    path.dt_used = h;
    SphereChart ch = ch0;
    detail::ChartState s;
    s.x = Vecd(2);
    s.v = ch.pull_velocity_at_center(y);
    path.t.push_back(0.0);
    path.x.push_back(p0);
    path.v.push_back(y);
    path.speed.push_back(f0);
    double drift = 0.0;
    bool ok = true;
    for (long k = 1; k <= steps; ++k) {
      s = detail::rk4_step(spec.metric, s, h);
      double w2 = s.x[0] * s.x[0] + s.x[1] * s.x[1];
      if (!std::isfinite(w2)) {
        ok = false;
        break;
      }
      Vecd p = ch.from_chart(s.x);
      Vecd pv = ch.push_velocity(s.x, s.v);
      if (w2 > hop2) {
        ch = SphereChart::continuation(r, p, ch);
        s.x = Vecd(2);
        s.v = ch.pull_velocity_at_center(pv);
      }
      double f = norm(spec.metric, s.x, s.v);
      if (!std::isfinite(f)) {
        ok = false;
        break;
      }
      drift = std::max(drift, std::abs(f - f0) / f0);
      path.t.push_back(k * h);
      path.x.push_back(p);
      path.v.push_back(pv);
      path.speed.push_back(f);
    }
    path.speed_drift = drift;
    if (ok && drift <= 1e-6) return path;
  }
  throw Error(ErrorKind::NumericFailure, "geodesic integration failed to conserve speed");
}

// ---------------------------------------------------------------------------
// Distances

struct DistanceGraph {
  const Mesh* mesh = nullptr;
  int ring = 1;
  std::vector<int> offsets;
  std::vector<int> targets;
  std::vector<double> weights;

  static int default_ring(MeshKind k) {
    switch (k) {
      case MeshKind::Circle: return 1;
      case MeshKind::FlatTorus: return 4;
      case MeshKind::Sphere: return 4;
    }
    return 1;
  }

  // directed edge weight along the straight chart segment from `base` by `delta`
  static double edge_weight(const MetricDescriptor& m, const Vecd& base, const Vecd& delta) {
    Vecd p1(base.n), p2(base.n);
    for (int i = 0; i < base.n; ++i) {
      p1[i] = base[i] + kGauss2Node0 * delta[i];
      p2[i] = base[i] + kGauss2Node1 * delta[i];
    }
    return 0.5 * (norm(m, p1, delta) + norm(m, p2, delta));
  }

  static DistanceGraph build(const Mesh& mesh, const MetricDescriptor& metric, int ring = 0) {
    if (ring <= 0) ring = default_ring(mesh.kind);
    DistanceGraph g;
    g.mesh = &mesh;
    g.ring = ring;
    int nv = mesh.num_verts();
    g.offsets.assign(nv + 1, 0);

    std::vector<std::vector<std::pair<int, double>>> adj(nv);
    if (mesh.kind == MeshKind::Circle) {
      int res = mesh.resolution;
      double h = 2.0 * M_PI / res;
      for (int i = 0; i < nv; ++i) {
        for (int dirn : {-1, +1}) {
          int j = ((i + dirn) % res + res) % res;
          Vecd delta(1);
          delta[0] = dirn * h;
          adj[i].push_back({j, edge_weight(metric, mesh.verts[i], delta)});
        }
      }
    } else if (mesh.kind == MeshKind::FlatTorus) {
      int res = mesh.resolution;
      int k = std::max(1, std::min(ring, (res - 1) / 2));
      double h1 = mesh.period[0] / res, h2 = mesh.period[1] / res;
      std::vector<std::pair<int, int>> stencil;
      for (int a = -k; a <= k; ++a)
        for (int b = -k; b <= k; ++b) {
          if (a == 0 && b == 0) continue;
          if (std::gcd(std::abs(a), std::abs(b)) != 1) continue;
          stencil.push_back({a, b});
        }
      for (int j = 0; j < res; ++j)
        for (int i = 0; i < res; ++i) {
          int u = i + res * j;
          for (auto [a, b] : stencil) {
            int v = ((i + a) % res + res) % res + res * (((j + b) % res + res) % res);
            Vecd delta(2);
            delta[0] = a * h1;
            delta[1] = b * h2;
            adj[u].push_back({v, edge_weight(metric, mesh.verts[u], delta)});
          }
        }
    } else {
      // breadth-first ring on the icosphere; each arc evaluated in the
      // gnomonic chart at its midpoint, where it is a straight segment
      for (int u = 0; u < nv; ++u) {
        std::vector<int> hops(nv, -1);
        std::queue<int> q;
        hops[u] = 0;
        q.push(u);
        std::vector<int> reached;
        while (!q.empty()) {
          int a = q.front();
          q.pop();
          if (hops[a] >= ring) continue;
          for (int b : mesh.neighbors[a])
            if (hops[b] < 0) {
              hops[b] = hops[a] + 1;
              reached.push_back(b);
              q.push(b);
            }
        }
        const Vecd& pu = mesh.verts[u];
        for (int v : reached) {
          const Vecd& pv = mesh.verts[v];
          Vecd midp(3);
          for (int i = 0; i < 3; ++i) midp[i] = pu[i] + pv[i];
          SphereChart ch = SphereChart::at_point(mesh.radius, midp);
          Vecd wu = ch.to_chart(pu), wv = ch.to_chart(pv);
          Vecd delta(2);
          delta[0] = wv[0] - wu[0];
          delta[1] = wv[1] - wu[1];
          adj[u].push_back({v, edge_weight(metric, wu, delta)});
        }
      }
    }

    for (int v = 0; v < nv; ++v) g.offsets[v + 1] = g.offsets[v] + int(adj[v].size());
    g.targets.resize(g.offsets[nv]);
    g.weights.resize(g.offsets[nv]);
    for (int v = 0; v < nv; ++v) {
      int o = g.offsets[v];
      for (size_t e = 0; e < adj[v].size(); ++e) {
        g.targets[o + int(e)] = adj[v][e].first;
        g.weights[o + int(e)] = adj[v][e].second;
      }
    }
    return g;
  }

  std::vector<double> distances_from(int source) const {
    int nv = mesh->num_verts();
    std::vector<double> dist(nv, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    dist[source] = 0.0;
    pq.push({0.0, source});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u]) continue;
      for (int e = offsets[u]; e < offsets[u + 1]; ++e) {
        int v = targets[e];
        double nd = d + weights[e];
        if (nd < dist[v]) {
          dist[v] = nd;
          pq.push({nd, v});
        }
      }
    }
    return dist;
  }
};

inline int nearest_vertex(const Mesh& m, const Vecd& p) {
  auto wrap = [](double d, double period) {
    d = std::fmod(d, period);
    if (d > 0.5 * period) d -= period;
    if (d < -0.5 * period) d += period;
    return d;
  };
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int v = 0; v < m.num_verts(); ++v) {
    double d2 = 0.0;
    if (m.kind == MeshKind::Circle) {
      double d = wrap(p[0] - m.verts[v][0], 2.0 * M_PI);
      d2 = d * d;
    } else if (m.kind == MeshKind::FlatTorus) {
      for (int ax = 0; ax < 2; ++ax) {
        double d = wrap(p[ax] - m.verts[v][ax], m.period[ax]);
        d2 += d * d;
      }
    } else {
      for (int i = 0; i < 3; ++i) {
        double d = p[i] - m.verts[v][i];
        d2 += d * d;
      }
    }
    if (d2 < best_d) {
      best_d = d2;
      best = v;
    }
  }
  return best;
}

inline double forward_distance(const Mesh& mesh, const MetricDescriptor& metric, const Vecd& p,
                               const Vecd& q, int ring = 0) {
  DistanceGraph g = DistanceGraph::build(mesh, metric, ring);
  int a = nearest_vertex(mesh, p), b = nearest_vertex(mesh, q);
  if (a == b) return 0.0;
  double d = g.distances_from(a)[b];
  if (!std::isfinite(d)) throw Error(ErrorKind::NumericFailure, "target unreachable in distance graph");
  return d;
}

struct DiameterResult {
  double value = 0.0;
  int source = -1;
  int target = -1;
};

// max over ordered vertex pairs; graph distances overestimate by the stencil
// stretch, so the value carries a small positive discretization bias
inline DiameterResult diameter(const Mesh& mesh, const MetricDescriptor& metric, int ring = 0) {
  DistanceGraph g = DistanceGraph::build(mesh, metric, ring);
  DiameterResult r;
  for (int s = 0; s < mesh.num_verts(); ++s) {
    std::vector<double> d = g.distances_from(s);
    for (int v = 0; v < mesh.num_verts(); ++v) {
      if (!std::isfinite(d[v]))
        throw Error(ErrorKind::NumericFailure, "mesh distance graph is not strongly connected");
      if (d[v] > r.value) {
        r.value = d[v];
        r.source = s;
        r.target = v;
      }
    }
  }
  return r;
}

namespace detail {

// local 2d frame of a cell: corner coordinates and a map to metric-evaluation
// chart coordinates
struct CellFrame {
  Vecd local[3];
  // sphere only
  bool spherical = false;
  SphereChart chart;
  Vecd embed0;
  double ex[3], ey[3];

  Vecd chart_point(const Mesh& m, const Vecd& loc) const {
    if (!spherical) return loc;
    Vecd p(3);
    for (int i = 0; i < 3; ++i) p[i] = embed0[i] + loc[0] * ex[i] + loc[1] * ey[i];
    (void)m;
    return chart.to_chart(p);
  }
};

inline CellFrame cell_frame(const Mesh& m, int c) {
  CellFrame f;
  if (m.kind != MeshKind::Sphere) {
    for (int k = 0; k <= m.dim; ++k) f.local[k] = m.corners[c][k];
    return f;
  }
  f.spherical = true;
  const auto& co = m.corners[c];
  Vecd centroid(3);
  for (int i = 0; i < 3; ++i) centroid[i] = (co[0][i] + co[1][i] + co[2][i]) / 3.0;
  f.chart = SphereChart::at_point(m.radius, centroid);
  f.embed0 = co[0];
  double u[3], v[3];
  double lu = 0.0;
  for (int i = 0; i < 3; ++i) {
    u[i] = co[1][i] - co[0][i];
    v[i] = co[2][i] - co[0][i];
    lu += u[i] * u[i];
  }
  lu = std::sqrt(lu);
  for (int i = 0; i < 3; ++i) f.ex[i] = u[i] / lu;
  double vproj = v[0] * f.ex[0] + v[1] * f.ex[1] + v[2] * f.ex[2];
  double w[3], lw = 0.0;
  for (int i = 0; i < 3; ++i) {
    w[i] = v[i] - vproj * f.ex[i];
    lw += w[i] * w[i];
  }
  lw = std::sqrt(lw);
  for (int i = 0; i < 3; ++i) f.ey[i] = w[i] / lw;
  Vecd l0(2), l1(2), l2(2);
  l1[0] = lu;
  l2[0] = vproj;
  l2[1] = lw;
  f.local[0] = l0;
  f.local[1] = l1;
  f.local[2] = l2;
  return f;
}

// integral of the density over a convex polygon in a cell frame, 3-point
// midpoint rule per fan triangle
inline double integrate_density_polygon(const Mesh& m, const MetricDescriptor& metric,
                                        const VolumeDescriptor& vol, const CellFrame& f,
                                        const std::vector<Vecd>& poly) {
  double total = 0.0;
  for (size_t i = 1; i + 1 < poly.size(); ++i) {
    const Vecd& a = poly[0];
    const Vecd& b = poly[i];
    const Vecd& c = poly[i + 1];
    double area = 0.5 * std::abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
    if (area <= 0.0) continue;
    double acc = 0.0;
    for (int e = 0; e < 3; ++e) {
      const Vecd& p = (e == 0) ? a : (e == 1 ? b : c);
      const Vecd& q = (e == 0) ? b : (e == 1 ? c : a);
      Vecd mid(2);
      mid[0] = 0.5 * (p[0] + q[0]);
      mid[1] = 0.5 * (p[1] + q[1]);
      acc += vol.density(metric, f.chart_point(m, mid));
    }
    total += area * acc / 3.0;
  }
  return total;
}

}  // namespace detail

// Forward metric ball volume: P1 interpolation of the vertex distance field,
// cells clipped by the half-plane d <= r.
inline double ball_volume(const Mesh& mesh, const MetricDescriptor& metric,
                          const VolumeDescriptor& vol, const Vecd& center, double r, int ring = 0) {
  if (!(r >= 0.0)) throw Error(ErrorKind::InvalidParameter, "ball radius must be nonnegative");
  if (r == 0.0) return 0.0;
  DistanceGraph g = DistanceGraph::build(mesh, metric, ring);
  std::vector<double> d = g.distances_from(nearest_vertex(mesh, center));

  double total = 0.0;
  if (mesh.dim == 1) {
    for (int c = 0; c < mesh.num_cells(); ++c) {
      double x0 = mesh.corners[c][0][0], x1 = mesh.corners[c][1][0];
      double d0 = d[mesh.cells[c][0]], d1 = d[mesh.cells[c][1]];
      // clip [0,1] parameter range to {d <= r}
      double lo = 0.0, hi = 1.0;
      if (d0 > r && d1 > r) continue;
      if (d0 > r) lo = (d0 - r) / (d0 - d1);
      if (d1 > r) hi = (r - d0) / (d1 - d0);
      double a = x0 + lo * (x1 - x0), b = x0 + hi * (x1 - x0);
      if (b <= a) continue;
      Vecd p1(1), p2(1);
      p1[0] = a + kGauss2Node0 * (b - a);
      p2[0] = a + kGauss2Node1 * (b - a);
      total += 0.5 * (b - a) * (vol.density(metric, p1) + vol.density(metric, p2));
    }
    return total;
  }

  for (int c = 0; c < mesh.num_cells(); ++c) {
    double dv[3] = {d[mesh.cells[c][0]], d[mesh.cells[c][1]], d[mesh.cells[c][2]]};
    if (dv[0] > r && dv[1] > r && dv[2] > r) continue;
    detail::CellFrame f = detail::cell_frame(mesh, c);
    std::vector<Vecd> poly;
    if (dv[0] <= r && dv[1] <= r && dv[2] <= r) {
      poly = {f.local[0], f.local[1], f.local[2]};
    } else {
      for (int k = 0; k < 3; ++k) {
        int k2 = (k + 1) % 3;
        bool in1 = dv[k] <= r, in2 = dv[k2] <= r;
        if (in1) poly.push_back(f.local[k]);
        if (in1 != in2) {
          double t = (r - dv[k]) / (dv[k2] - dv[k]);
          Vecd p(2);
          p[0] = f.local[k][0] + t * (f.local[k2][0] - f.local[k][0]);
          p[1] = f.local[k][1] + t * (f.local[k2][1] - f.local[k][1]);
          poly.push_back(p);
        }
      }
    }
    if (poly.size() >= 3) total += detail::integrate_density_polygon(mesh, metric, vol, f, poly);
  }
  return total;
}

inline double total_volume(const Mesh& mesh, const MetricDescriptor& metric,
                           const VolumeDescriptor& vol) {
  double total = 0.0;
  if (mesh.dim == 1) {
    for (int c = 0; c < mesh.num_cells(); ++c) {
      double x0 = mesh.corners[c][0][0], x1 = mesh.corners[c][1][0];
      Vecd p1(1), p2(1);
      p1[0] = x0 + kGauss2Node0 * (x1 - x0);
      p2[0] = x0 + kGauss2Node1 * (x1 - x0);
      total += 0.5 * (x1 - x0) * (vol.density(metric, p1) + vol.density(metric, p2));
    }
    return total;
  }
  for (int c = 0; c < mesh.num_cells(); ++c) {
    detail::CellFrame f = detail::cell_frame(mesh, c);
    std::vector<Vecd> poly = {f.local[0], f.local[1], f.local[2]};
    total += detail::integrate_density_polygon(mesh, metric, vol, f, poly);
  }
  return total;
}

// Volume of the radius-r ball in the (k, Lambda) comparison model:
// vol(S^{n-1}) * \int_0^r e^{Lambda t} s_k(t)^{n-1} dt.
inline double comparison_volume(double k, double lambda, int n, double r) {
  if (n < 1 || n > 4) throw Error(ErrorKind::InvalidParameter, "comparison dimension out of range");
  if (!(lambda >= 0.0)) throw Error(ErrorKind::InvalidParameter, "comparison drift must be nonnegative");
  if (!(r >= 0.0)) throw Error(ErrorKind::InvalidParameter, "comparison radius must be nonnegative");
  if (k > 0.0 && r > M_PI / std::sqrt(k) + 1e-12)
    throw Error(ErrorKind::OutOfDomain, "comparison radius exceeds model diameter");
  if (r == 0.0) return 0.0;
  double sphere_vol;
  switch (n) {
    case 1: sphere_vol = 2.0; break;
    case 2: sphere_vol = 2.0 * M_PI; break;
    case 3: sphere_vol = 4.0 * M_PI; break;
    default: sphere_vol = 2.0 * M_PI * M_PI; break;
  }
  auto s_k = [k](double t) {
    if (k > 0.0) {
      double s = std::sqrt(k);
      return std::sin(s * t) / s;
    }
    if (k < 0.0) {
      double s = std::sqrt(-k);
      return std::sinh(s * t) / s;
    }
    return t;
  };
  auto f = [&](double t) { return std::exp(lambda * t) * std::pow(s_k(t), double(n - 1)); };
  double integral = adaptive_quadrature(f, 0.0, r, 1e-12);
  return sphere_vol * integral;
}

}  // namespace flab
