#pragma once

// Simplicial meshes for the three model domains. Circle and torus meshes
// live in global periodic charts (vertex coordinates in the fundamental
// domain, per-cell corner coordinates lifted so each simplex is contiguous);
// sphere meshes store embedded coordinates of an icosphere.

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "flab/errors.hpp"
#include "flab/linalg.hpp"

namespace flab {

enum class MeshKind { Circle, FlatTorus, Sphere };

inline const char* mesh_kind_name(MeshKind k) {
  switch (k) {
    case MeshKind::Circle: return "circle";
    case MeshKind::FlatTorus: return "flat_torus";
    case MeshKind::Sphere: return "sphere";
  }
  return "?";
}

struct Mesh {
  MeshKind kind;
  int dim = 0;         // manifold dimension
  int resolution = 0;
  double radius = 1.0;               // circle/sphere
  double period[2] = {0.0, 0.0};     // torus

  std::vector<Vecd> verts;                   // chart coords (embedding for sphere)
  std::vector<std::array<int, 3>> cells;     // segments use slot 2 = -1
  std::vector<std::array<Vecd, 3>> corners;  // lifted per-cell coords

  std::vector<std::vector<int>> vert_cells;
  std::vector<std::vector<int>> neighbors;

  int verts_per_cell() const { return dim + 1; }
  int num_verts() const { return int(verts.size()); }
  int num_cells() const { return int(cells.size()); }

  // chart measure of a cell from its lifted corners (embedding area on the sphere)
  double cell_measure(int c) const {
    const auto& co = corners[c];
    if (dim == 1) return std::abs(co[1][0] - co[0][0]);
    if (kind == MeshKind::Sphere) {
      double u[3], v[3], w[3];
      for (int i = 0; i < 3; ++i) {
        u[i] = co[1][i] - co[0][i];
        v[i] = co[2][i] - co[0][i];
      }
      w[0] = u[1] * v[2] - u[2] * v[1];
      w[1] = u[2] * v[0] - u[0] * v[2];
      w[2] = u[0] * v[1] - u[1] * v[0];
      return 0.5 * std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
    }
    double ux = co[1][0] - co[0][0], uy = co[1][1] - co[0][1];
    double vx = co[2][0] - co[0][0], vy = co[2][1] - co[0][1];
    return 0.5 * std::abs(ux * vy - uy * vx);
  }

  double characteristic_length() const {
    switch (kind) {
      case MeshKind::Circle: return M_PI * radius;
      case MeshKind::Sphere: return M_PI * radius;
      case MeshKind::FlatTorus: return 0.5 * std::max(period[0], period[1]);
    }
    return 1.0;
  }
};

namespace detail {

inline void build_adjacency(Mesh& m) {
  int nv = m.num_verts();
  m.vert_cells.assign(nv, {});
  m.neighbors.assign(nv, {});
  int vpc = m.verts_per_cell();
  for (int c = 0; c < m.num_cells(); ++c)
    for (int k = 0; k < vpc; ++k) m.vert_cells[m.cells[c][k]].push_back(c);
  for (int v = 0; v < nv; ++v) {
    std::vector<int>& nb = m.neighbors[v];
    for (int c : m.vert_cells[v])
      for (int k = 0; k < vpc; ++k) {
        int w = m.cells[c][k];
        if (w != v) nb.push_back(w);
      }
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
}

}  // namespace detail

// Structural postconditions: closed manifold, no degenerate cells.
inline void check_mesh(const Mesh& m) {
  int vpc = m.verts_per_cell();
  if (m.dim == 1) {
    std::vector<int> deg(m.num_verts(), 0);
    for (const auto& c : m.cells) {
      ++deg[c[0]];
      ++deg[c[1]];
    }
    for (int v = 0; v < m.num_verts(); ++v)
      if (deg[v] != 2) throw Error(ErrorKind::MeshQuality, "circle mesh vertex not on 2 segments");
  } else {
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& c : m.cells)
      for (int k = 0; k < 3; ++k) {
        int a = c[k], b = c[(k + 1) % 3];
        if (a == b) throw Error(ErrorKind::MeshQuality, "degenerate simplex (repeated vertex)");
        ++edge_count[{std::min(a, b), std::max(a, b)}];
      }
    for (const auto& [e, cnt] : edge_count)
      if (cnt != 2) throw Error(ErrorKind::MeshQuality, "mesh not closed (edge not shared by 2 cells)");
  }
  double mean = 0.0;
  for (int c = 0; c < m.num_cells(); ++c) mean += m.cell_measure(c);
  mean /= std::max(1, m.num_cells());
  for (int c = 0; c < m.num_cells(); ++c)
    if (m.cell_measure(c) <= 1e-12 * mean)
      throw Error(ErrorKind::MeshQuality, "degenerate simplex (vanishing measure)");
  (void)vpc;
}

inline Mesh build_circle_mesh(double radius, int res) {
  if (res < 3) throw Error(ErrorKind::InvalidParameter, "circle resolution must be >= 3");
  Mesh m;
  m.kind = MeshKind::Circle;
  m.dim = 1;
  m.resolution = res;
  m.radius = radius;
  double h = 2.0 * M_PI / res;
  for (int i = 0; i < res; ++i) {
    Vecd p(1);
    p[0] = i * h;
    m.verts.push_back(p);
  }
  for (int i = 0; i < res; ++i) {
    int j = (i + 1) % res;
    m.cells.push_back({i, j, -1});
    Vecd a(1), b(1);
    a[0] = i * h;
    b[0] = (i + 1) * h;  // lifted beyond 2*pi on the wrap cell
    m.corners.push_back({a, b, Vecd(1)});
  }
  detail::build_adjacency(m);
  check_mesh(m);
  return m;
}

inline Mesh build_torus_mesh(double l1, double l2, int res) {
  if (res < 2) throw Error(ErrorKind::InvalidParameter, "torus resolution must be >= 2");
  Mesh m;
  m.kind = MeshKind::FlatTorus;
  m.dim = 2;
  m.resolution = res;
  m.period[0] = l1;
  m.period[1] = l2;
  double h1 = l1 / res, h2 = l2 / res;
  auto vid = [&](int i, int j) { return (i % res) + res * (j % res); };
  m.verts.resize(size_t(res) * res, Vecd(2));
  for (int j = 0; j < res; ++j)
    for (int i = 0; i < res; ++i) {
      Vecd p(2);
      p[0] = i * h1;
      p[1] = j * h2;
      m.verts[vid(i, j)] = p;
    }
  auto lifted = [&](int i, int j) {
    Vecd p(2);
    p[0] = i * h1;
    p[1] = j * h2;
    return p;
  };
  for (int j = 0; j < res; ++j)
    for (int i = 0; i < res; ++i) {
      int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      m.cells.push_back({v00, v10, v11});
      m.corners.push_back({lifted(i, j), lifted(i + 1, j), lifted(i + 1, j + 1)});
      m.cells.push_back({v00, v11, v01});
      m.corners.push_back({lifted(i, j), lifted(i + 1, j + 1), lifted(i, j + 1)});
    }
  detail::build_adjacency(m);
  check_mesh(m);
  return m;
}

inline Mesh build_sphere_mesh(double radius, int res) {
  if (res < 0) throw Error(ErrorKind::InvalidParameter, "sphere resolution must be >= 0");
  if (res > 7) throw Error(ErrorKind::InvalidParameter, "sphere resolution capped at 7");
  Mesh m;
  m.kind = MeshKind::Sphere;
  m.dim = 2;
  m.resolution = res;
  m.radius = radius;

  double t = (1.0 + std::sqrt(5.0)) / 2.0;
  const double base[12][3] = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                              {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                              {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  const int faces[20][3] = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                            {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                            {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                            {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  auto push_unit = [&](double x, double y, double z) {
    double s = radius / std::sqrt(x * x + y * y + z * z);
    Vecd p(3);
    p[0] = x * s;
    p[1] = y * s;
    p[2] = z * s;
    m.verts.push_back(p);
    return int(m.verts.size()) - 1;
  };
  for (const auto& v : base) push_unit(v[0], v[1], v[2]);
  for (const auto& f : faces) m.cells.push_back({f[0], f[1], f[2]});

  for (int level = 0; level < res; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::make_pair(std::min(a, b), std::max(a, b));
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const Vecd& pa = m.verts[a];
      const Vecd& pb = m.verts[b];
      int idx = push_unit(pa[0] + pb[0], pa[1] + pb[1], pa[2] + pb[2]);
      midpoint[key] = idx;
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(m.cells.size() * 4);
    for (const auto& c : m.cells) {
      int a = c[0], b = c[1], d = c[2];
      int ab = mid(a, b), bd = mid(b, d), da = mid(d, a);
      next.push_back({a, ab, da});
      next.push_back({b, bd, ab});
      next.push_back({d, da, bd});
      next.push_back({ab, bd, da});
    }
    m.cells = std::move(next);
  }
  m.corners.reserve(m.cells.size());
  for (const auto& c : m.cells)
    m.corners.push_back({m.verts[c[0]], m.verts[c[1]], m.verts[c[2]]});
  detail::build_adjacency(m);
  check_mesh(m);
  return m;
}

// Plain-text export: header, then `vertices`, `simplices`, `identifications`
// sections, one record per line. Identifications list per-cell corner lifts
// in period units for the flat charts.
inline std::string export_mesh(const Mesh& m) {
  std::ostringstream os;
  char buf[256];
  os << "flab-mesh 1\n";
  os << "kind " << mesh_kind_name(m.kind) << "\n";
  os << "dim " << m.dim << "\n";
  os << "resolution " << m.resolution << "\n";
  if (m.kind == MeshKind::FlatTorus) {
    std::snprintf(buf, sizeof buf, "periods %.17g %.17g\n", m.period[0], m.period[1]);
    os << buf;
  } else {
    std::snprintf(buf, sizeof buf, "radius %.17g\n", m.radius);
    os << buf;
  }
  int cdim = (m.kind == MeshKind::Sphere) ? 3 : m.dim;
  os << "vertices " << m.num_verts() << "\n";
  for (const auto& v : m.verts) {
    for (int i = 0; i < cdim; ++i) {
      std::snprintf(buf, sizeof buf, "%s%.17g", i ? " " : "", v[i]);
      os << buf;
    }
    os << "\n";
  }
  int vpc = m.verts_per_cell();
  os << "simplices " << m.num_cells() << "\n";
  for (const auto& c : m.cells) {
    for (int i = 0; i < vpc; ++i) os << (i ? " " : "") << c[i];
    os << "\n";
  }
  // lift records: cell corner axis units
  std::vector<std::array<int, 4>> lifts;
  if (m.kind != MeshKind::Sphere) {
    for (int c = 0; c < m.num_cells(); ++c)
      for (int k = 0; k < vpc; ++k)
        for (int ax = 0; ax < m.dim; ++ax) {
          double period = (m.kind == MeshKind::Circle) ? 2.0 * M_PI : m.period[ax];
          double delta = m.corners[c][k][ax] - m.verts[m.cells[c][k]][ax];
          int units = int(std::lround(delta / period));
          if (units != 0) lifts.push_back({c, k, ax, units});
        }
  }
  os << "identifications " << lifts.size() << "\n";
  for (const auto& l : lifts) os << l[0] << " " << l[1] << " " << l[2] << " " << l[3] << "\n";
  return os.str();
}

inline Mesh import_mesh(const std::string& text) {
  std::istringstream is(text);
  std::string word;
  int version = 0;
  is >> word >> version;
  if (word != "flab-mesh" || version != 1)
    throw Error(ErrorKind::InvalidInput, "unrecognized mesh file header");
  Mesh m;
  std::string kind;
  is >> word >> kind;
  if (kind == "circle") {
    m.kind = MeshKind::Circle;
    m.dim = 1;
  } else if (kind == "flat_torus") {
    m.kind = MeshKind::FlatTorus;
    m.dim = 2;
  } else if (kind == "sphere") {
    m.kind = MeshKind::Sphere;
    m.dim = 2;
  } else {
    throw Error(ErrorKind::InvalidInput, "unknown mesh kind " + kind);
  }
  is >> word >> m.dim >> word >> m.resolution;
  is >> word;
  if (word == "periods")
    is >> m.period[0] >> m.period[1];
  else
    is >> m.radius;
  int nv = 0;
  is >> word >> nv;
  int cdim = (m.kind == MeshKind::Sphere) ? 3 : m.dim;
  m.verts.resize(nv, Vecd(cdim));
  for (int v = 0; v < nv; ++v)
    for (int i = 0; i < cdim; ++i) is >> m.verts[v][i];
  int nc = 0;
  is >> word >> nc;
  int vpc = m.dim + 1;
  m.cells.resize(nc, {-1, -1, -1});
  for (int c = 0; c < nc; ++c)
    for (int i = 0; i < vpc; ++i) is >> m.cells[c][i];
  m.corners.resize(nc);
  for (int c = 0; c < nc; ++c)
    for (int i = 0; i < vpc; ++i) m.corners[c][i] = m.verts[m.cells[c][i]];
  int nl = 0;
  is >> word >> nl;
  for (int l = 0; l < nl; ++l) {
    int c, k, ax, units;
    is >> c >> k >> ax >> units;
    double period = (m.kind == MeshKind::Circle) ? 2.0 * M_PI : m.period[ax];
    m.corners[c][k][ax] += units * period;
  }
  if (!is) throw Error(ErrorKind::InvalidInput, "truncated mesh file");
  detail::build_adjacency(m);
  check_mesh(m);
  return m;
}

}  // namespace flab
