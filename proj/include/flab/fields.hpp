#pragma once

// P1 discrete fields: gradients through the Legendre transform, lumped weak
// divergence, the Finsler Laplacian and its reference-metric linearization,
// and reconstruction-based pointwise identities (covariant Hessian, Laplacian
// trace, Bochner residuals). Sphere cells work in per-cell gnomonic charts,
// so chart triangles are exact geodesic triangles.

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "flab/curvature.hpp"
#include "flab/domain.hpp"
#include "flab/errors.hpp"
#include "flab/linalg.hpp"
#include "flab/mesh.hpp"
#include "flab/metric.hpp"
#include "flab/quadrature.hpp"
#include "flab/reconstruct.hpp"
#include "flab/volume.hpp"

namespace flab {

struct ScalarField {
  std::vector<double> values;
};

// vertex samples of a callable; sphere callables receive embedded coordinates
template <typename F>
ScalarField sample_vertex_field(const Mesh& mesh, F&& f) {
  ScalarField out;
  out.values.reserve(mesh.num_verts());
  for (const Vecd& p : mesh.verts) out.values.push_back(f(p));
  return out;
}

inline void export_field(std::ostream& os, const ScalarField& f) {
  char buf[64];
  for (double v : f.values) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    os << buf;
  }
}

inline void export_field(const std::string& path, const ScalarField& f) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::InvalidInput, "cannot open field file for writing: " + path);
  export_field(os, f);
}

inline ScalarField import_field(std::istream& is) {
  ScalarField f;
  double v;
  while (is >> v) f.values.push_back(v);
  if (f.values.empty()) throw Error(ErrorKind::InvalidInput, "field file holds no values");
  return f;
}

inline ScalarField import_field(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::InvalidInput, "cannot open field file: " + path);
  return import_field(is);
}

namespace detail {

// cell geometry in the coordinates the metric descriptor uses: lifted chart
// coordinates on flat domains, the centroid gnomonic chart on the sphere
struct FieldCell {
  Vecd w[3];
  Vecd eval;      // centroid, metric evaluation point
  Vecd dphi[3];   // P1 hat gradients
  double area = 0.0;
  bool spherical = false;
  SphereChart chart;
};

inline FieldCell field_cell(const Mesh& m, int c) {
  FieldCell f;
  int n = m.dim;
  if (m.kind == MeshKind::Sphere) {
    f.spherical = true;
    const auto& co = m.corners[c];
    Vecd centroid(3);
    for (int i = 0; i < 3; ++i) centroid[i] = (co[0][i] + co[1][i] + co[2][i]) / 3.0;
    f.chart = SphereChart::at_point(m.radius, centroid);
    for (int k = 0; k < 3; ++k) f.w[k] = f.chart.to_chart(co[k]);
  } else {
    for (int k = 0; k <= n; ++k) f.w[k] = m.corners[c][k];
  }
  if (n == 1) {
    double h = f.w[1][0] - f.w[0][0];
    f.eval = Vecd(1);
    f.eval[0] = 0.5 * (f.w[0][0] + f.w[1][0]);
    f.area = std::abs(h);
    f.dphi[0] = Vecd(1);
    f.dphi[1] = Vecd(1);
    f.dphi[0][0] = -1.0 / h;
    f.dphi[1][0] = 1.0 / h;
  } else {
    f.eval = Vecd(2);
    for (int i = 0; i < 2; ++i) f.eval[i] = (f.w[0][i] + f.w[1][i] + f.w[2][i]) / 3.0;
    double e1x = f.w[1][0] - f.w[0][0], e1y = f.w[1][1] - f.w[0][1];
    double e2x = f.w[2][0] - f.w[0][0], e2y = f.w[2][1] - f.w[0][1];
    double det = e1x * e2y - e1y * e2x;
    f.area = 0.5 * std::abs(det);
    Vecd d1(2), d2(2);
    d1[0] = e2y / det;
    d1[1] = -e2x / det;
    d2[0] = -e1y / det;
    d2[1] = e1x / det;
    f.dphi[1] = d1;
    f.dphi[2] = d2;
    f.dphi[0] = Vecd(2);
    f.dphi[0][0] = -d1[0] - d2[0];
    f.dphi[0][1] = -d1[1] - d2[1];
  }
  return f;
}

inline double cell_density_integral(const Mesh& mesh, const FieldCell& f,
                                    const MetricDescriptor& metric, const VolumeDescriptor& vol) {
  if (mesh.dim == 1) {
    double h = f.w[1][0] - f.w[0][0];
    double acc = 0.0;
    for (double t : {kGauss2Node0, kGauss2Node1}) {
      Vecd p(1);
      p[0] = f.w[0][0] + t * h;
      acc += vol.density(metric, p);
    }
    return f.area * acc / 2.0;
  }
  double acc = 0.0;
  for (int e = 0; e < 3; ++e) {
    Vecd mid(2);
    for (int i = 0; i < 2; ++i) mid[i] = 0.5 * (f.w[e][i] + f.w[(e + 1) % 3][i]);
    acc += vol.density(metric, mid);
  }
  return f.area * acc / 3.0;
}

}  // namespace detail

struct GradientField {
  std::vector<Vecd> du;      // P1 differential per cell, chart components
  std::vector<Vecd> grad;    // Legendre dual vector, zero below the threshold
  std::vector<double> dual;  // F*(x, du)
  std::vector<char> mask;    // cell carries usable gradient data
  double threshold = 0.0;
};

inline GradientField gradient(const MetricDescriptor& metric, const Mesh& mesh,
                              const ScalarField& u) {
  if (int(u.values.size()) != mesh.num_verts())
    throw Error(ErrorKind::InvalidInput, "field length does not match the vertex count");
  if (metric.dim() != mesh.dim)
    throw Error(ErrorKind::InvalidInput, "metric dimension does not match the mesh");
  int nc = mesh.num_cells();
  int n = mesh.dim;
  GradientField out;
  out.du.assign(nc, Vecd(n));
  out.grad.assign(nc, Vecd(n));
  out.dual.assign(nc, 0.0);
  out.mask.assign(nc, 0);
  for (int c = 0; c < nc; ++c) {
    detail::FieldCell f = detail::field_cell(mesh, c);
    Vecd du(n);
    for (int k = 0; k <= n; ++k)
      for (int i = 0; i < n; ++i) du[i] += u.values[mesh.cells[c][k]] * f.dphi[k][i];
    out.du[c] = du;
    if (norm2(du) == 0.0) continue;
    try {
      Vecd y = legendre_inverse(metric, f.eval, du);
      out.grad[c] = y;
      out.dual[c] = std::sqrt(metric.squared_norm(f.eval, y));
    } catch (const Error& e) {
      throw Error(e.kind(), e.message() + " (cell " + std::to_string(c) + ")");
    }
  }
  double peak = 0.0;
  for (double d : out.dual) peak = std::max(peak, d);
  out.threshold = 1e-12 * peak;
  for (int c = 0; c < nc; ++c) {
    out.mask[c] = out.dual[c] > out.threshold ? 1 : 0;
    if (!out.mask[c]) out.grad[c] = Vecd(n);
  }
  return out;
}

// lumped weak divergence of a per-cell vector field: with hat function phi_i,
// int div V phi_i dmu = -int dphi_i . V dmu, so the discrete field sums to
// zero against the lumped mass exactly
inline ScalarField divergence(const MetricDescriptor& metric, const Mesh& mesh,
                              const VolumeDescriptor& vol, const std::vector<Vecd>& cell_field) {
  if (int(cell_field.size()) != mesh.num_cells())
    throw Error(ErrorKind::InvalidInput, "cell field length does not match the cell count");
  int nv = mesh.num_verts();
  int n = mesh.dim;
  std::vector<double> rhs(nv, 0.0), lump(nv, 0.0);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    detail::FieldCell f = detail::field_cell(mesh, c);
    double dv = detail::cell_density_integral(mesh, f, metric, vol);
    for (int k = 0; k <= n; ++k) {
      int v = mesh.cells[c][k];
      lump[v] += dv / (n + 1);
      rhs[v] -= dv * dot(f.dphi[k], cell_field[c]);
    }
  }
  ScalarField out;
  out.values.resize(nv);
  for (int v = 0; v < nv; ++v) {
    if (!(lump[v] > 0.0))
      throw Error(ErrorKind::MeshQuality, "vertex " + std::to_string(v) + " has no mass");
    out.values[v] = rhs[v] / lump[v];
  }
  return out;
}

inline ScalarField finsler_laplacian(const MetricDescriptor& metric, const Mesh& mesh,
                                     const VolumeDescriptor& vol, const ScalarField& u) {
  GradientField g = gradient(metric, mesh, u);
  return divergence(metric, mesh, vol, g.grad);
}

// divergence of g^{ij}(reference) u_j: linear in u for a fixed reference
inline ScalarField weighted_laplacian(const MetricDescriptor& metric, const Mesh& mesh,
                                      const VolumeDescriptor& vol, const ScalarField& u,
                                      const std::vector<Vecd>& reference) {
  if (int(reference.size()) != mesh.num_cells())
    throw Error(ErrorKind::InvalidInput, "reference field length does not match the cell count");
  GradientField gf = gradient(metric, mesh, u);
  int nc = mesh.num_cells();
  int n = mesh.dim;
  std::vector<Vecd> flow(nc, Vecd(n));
  for (int c = 0; c < nc; ++c) {
    if (norm2(reference[c]) == 0.0) {
      if (gf.mask[c])
        throw Error(ErrorKind::DegenerateReference,
                    "reference vanishes where the field varies (cell " + std::to_string(c) + ")");
      continue;
    }
    detail::FieldCell f = detail::field_cell(mesh, c);
    Matd g = fundamental_tensor_t<double>(metric, f.eval, reference[c]);
    flow[c] = solve(g, gf.du[c]);
  }
  return divergence(metric, mesh, vol, flow);
}

namespace detail {

// reconstruction data at a cell centroid, fitted around corner 0
struct PointFit {
  Vecd x;      // metric evaluation coordinates
  Vecd du;     // fit first derivatives
  Matd uhess;  // fit second derivatives
};

inline PointFit cell_point_fit(const Mesh& mesh, const ScalarField& u, int cell,
                               const PolynomialReconstructor& recon) {
  int n = mesh.dim;
  int v0 = mesh.cells[cell][0];
  std::vector<double> coef;
  recon.fit(v0, u.values, coef);
  Vecd off(n);
  if (mesh.kind == MeshKind::Sphere) {
    const auto& co = mesh.corners[cell];
    Vecd centroid(3);
    for (int i = 0; i < 3; ++i) centroid[i] = (co[0][i] + co[1][i] + co[2][i]) / 3.0;
    off = recon.chart(v0).to_chart(centroid);
  } else {
    for (int i = 0; i < n; ++i) {
      double ci = 0.0;
      for (int k = 0; k <= n; ++k) ci += mesh.corners[cell][k][i];
      off[i] = ci / (n + 1) - mesh.verts[v0][i];
    }
  }
  PointFit p;
  p.du = Vecd(n);
  p.uhess = Matd(n);
  p.du[0] = recon.deriv_at(coef, 1, 0, off);
  p.uhess(0, 0) = recon.deriv_at(coef, 2, 0, off);
  if (n == 2) {
    p.du[1] = recon.deriv_at(coef, 0, 1, off);
    p.uhess(1, 1) = recon.deriv_at(coef, 0, 2, off);
    p.uhess(0, 1) = p.uhess(1, 0) = recon.deriv_at(coef, 1, 1, off);
  }
  if (mesh.kind == MeshKind::Sphere) {
    p.x = off;
  } else {
    p.x = Vecd(n);
    for (int i = 0; i < n; ++i) p.x[i] = mesh.verts[v0][i] + off[i];
  }
  return p;
}

// Pointwise identities at (x, du, uhess) with y the Legendre dual of du.
// The gradient-field Jacobian is explicit: differentiating
// g_ik(x, grad u) grad^k = u_i and cancelling the Cartan term against the
// Euler identity gives d(grad^j)/dx^m = g^{ji}(u_im - dg_ik/dx^m grad^k).
struct PointIdentity {
  double lap = 0.0;    // pointwise Finsler Laplacian
  double trace = 0.0;  // g^{ij}(grad) u_{i|j}
  double s1 = 0.0;     // S(x, grad), 1-homogeneous
  double hs2 = 0.0;    // squared HS norm of the covariant Hessian in g_grad
  double f2 = 0.0;     // F^2(x, grad)
  double ric0 = 0.0;   // Ricci / F^2
  double sdot0 = 0.0;  // Sdot / F^2
  Vecd xfield;         // g^{-1}(grad) d(F^2(grad)/2), the Bochner flow vector
  Vecd dphi;           // volume log-density gradient at x
};

inline PointIdentity point_identity(const MetricDescriptor& metric, const VolumeDescriptor& vol,
                                    const Vecd& x, const Vecd& du, const Matd& uhess,
                                    const Vecd& y, bool want_curvature) {
  int n = metric.dim();
  PointIdentity out;
  out.f2 = metric.squared_norm(x, y);
  double fn = std::sqrt(out.f2);
  Vecd yhat(n);
  for (int i = 0; i < n; ++i) yhat[i] = y[i] / fn;
  Matd g = fundamental_tensor_t<double>(metric, x, yhat);
  LuN<double> glu(g);

  std::array<Matd, kMaxDim> dxg;
  for (int mi = 0; mi < n; ++mi) {
    auto xl = up(x);
    auto yl = up(yhat);
    xl[mi].d = 1.0;
    MatN<D1> g1 = fundamental_tensor_t<D1>(metric, xl, yl);
    Matd d(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d(i, j) = g1(i, j).d;
    dxg[mi] = d;
  }

  VolumeDerivs vd = volume_derivs(metric, vol, x);
  out.dphi = vd.grad;

  double div_grad = 0.0;
  for (int mi = 0; mi < n; ++mi) {
    Vecd rhs(n);
    for (int i = 0; i < n; ++i) {
      double s = uhess(i, mi);
      for (int k = 0; k < n; ++k) s -= dxg[mi](i, k) * y[k];
      rhs[i] = s;
    }
    Vecd col = glu.solve(rhs);
    div_grad += col[mi];
  }
  out.lap = div_grad + dot(y, vd.grad);

  // envelope differential of w = F^2(x, grad u)/2
  Vecd dw(n);
  for (int i = 0; i < n; ++i) {
    auto xl = up(x);
    auto yl = up(y);
    xl[i].d = 1.0;
    double df2 = metric.squared_norm(xl, yl).d;
    double s = -0.5 * df2;
    for (int k = 0; k < n; ++k) s += y[k] * uhess(k, i);
    dw[i] = s;
  }
  out.xfield = glu.solve(dw);

  if (want_curvature) {
    SprayData sp = spray_coefficients(metric, x, yhat);
    Matd cov(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = uhess(i, j);
        for (int k = 0; k < n; ++k) s -= sp.chern(k, i, j) * du[k];
        cov(i, j) = s;
      }
    Matd ginv = inverse(g);
    double tr = 0.0, hs = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        tr += ginv(i, j) * cov(i, j);
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) hs += ginv(i, a) * ginv(j, b) * cov(i, j) * cov(a, b);
      }
    out.trace = tr;
    out.hs2 = hs;
    out.s1 = s_curvature(metric, x, y, vd);
    out.ric0 = ricci_scalar(metric, x, yhat);
    out.sdot0 = s_curvature_rate(metric, x, yhat, vd);
  }
  return out;
}

}  // namespace detail

struct HessianSample {
  int cell = -1;
  Vecd eval;        // evaluation coordinates (chart of corner 0 on the sphere)
  Vecd grad;        // Legendre gradient of the fit differential
  Matd coord_hess;  // covariant Hessian u_{i|j} in chart coordinates
  Matd frame;       // columns: g_grad-orthonormal frame vectors
  Matd frame_hess;  // Hessian contracted into that frame
};

inline HessianSample hessian(const MetricDescriptor& metric, const Mesh& mesh,
                             const ScalarField& u, int cell, const PolynomialReconstructor& recon,
                             const GradientField& gf) {
  if (cell < 0 || cell >= mesh.num_cells())
    throw Error(ErrorKind::InvalidInput, "cell index out of range");
  if (!gf.mask[cell])
    throw Error(ErrorKind::DegenerateReference,
                "gradient below threshold (cell " + std::to_string(cell) + ")");
  int n = mesh.dim;
  detail::PointFit pf = detail::cell_point_fit(mesh, u, cell, recon);
  HessianSample s;
  s.cell = cell;
  s.eval = pf.x;
  if (norm2(pf.du) == 0.0)
    throw Error(ErrorKind::DegenerateReference,
                "fit differential vanishes (cell " + std::to_string(cell) + ")");
  try {
    s.grad = legendre_inverse(metric, pf.x, pf.du);
  } catch (const Error& e) {
    throw Error(e.kind(), e.message() + " (cell " + std::to_string(cell) + ")");
  }
  double fn = std::sqrt(metric.squared_norm(pf.x, s.grad));
  Vecd yhat(n);
  for (int i = 0; i < n; ++i) yhat[i] = s.grad[i] / fn;
  SprayData sp = spray_coefficients(metric, pf.x, yhat);
  s.coord_hess = Matd(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = pf.uhess(i, j);
      for (int k = 0; k < n; ++k) acc -= sp.chern(k, i, j) * pf.du[k];
      s.coord_hess(i, j) = acc;
    }
  Matd g = fundamental_tensor_t<double>(metric, pf.x, yhat);
  s.frame = Matd(n);
  for (int a = 0; a < n; ++a) {
    Vecd e(n);
    e[a] = 1.0;
    for (int b = 0; b < a; ++b) {
      double proj = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) proj += g(i, j) * e[i] * s.frame(j, b);
      for (int i = 0; i < n; ++i) e[i] -= proj * s.frame(i, b);
    }
    double nn = std::sqrt(quadratic_form(g, e, e));
    for (int i = 0; i < n; ++i) s.frame(i, a) = e[i] / nn;
  }
  s.frame_hess = Matd(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) acc += s.frame(i, a) * s.frame(j, b) * s.coord_hess(i, j);
      s.frame_hess(a, b) = acc;
    }
  return s;
}

inline HessianSample hessian(const MetricDescriptor& metric, const Mesh& mesh,
                             const ScalarField& u, int cell) {
  PolynomialReconstructor recon(mesh);
  GradientField gf = gradient(metric, mesh, u);
  return hessian(metric, mesh, u, cell, recon, gf);
}

// |lap u - g^{ij} u_{i|j} + S(grad u)| at the cell: the assembled weak
// Laplacian (corner average) against the reconstructed covariant trace
inline double trace_identity_residual(const MetricDescriptor& metric, const Mesh& mesh,
                                      const VolumeDescriptor& vol, const ScalarField& u, int cell,
                                      const PolynomialReconstructor& recon, const GradientField& gf,
                                      const ScalarField& lap) {
  if (cell < 0 || cell >= mesh.num_cells())
    throw Error(ErrorKind::InvalidInput, "cell index out of range");
  if (!gf.mask[cell])
    throw Error(ErrorKind::DegenerateReference,
                "gradient below threshold (cell " + std::to_string(cell) + ")");
  detail::PointFit pf = detail::cell_point_fit(mesh, u, cell, recon);
  if (norm2(pf.du) == 0.0)
    throw Error(ErrorKind::DegenerateReference,
                "fit differential vanishes (cell " + std::to_string(cell) + ")");
  Vecd y;
  try {
    y = legendre_inverse(metric, pf.x, pf.du);
  } catch (const Error& e) {
    throw Error(e.kind(), e.message() + " (cell " + std::to_string(cell) + ")");
  }
  detail::PointIdentity pid = detail::point_identity(metric, vol, pf.x, pf.du, pf.uhess, y, true);
  double lap_cell = 0.0;
  for (int k = 0; k <= mesh.dim; ++k) lap_cell += lap.values[mesh.cells[cell][k]];
  lap_cell /= (mesh.dim + 1);
  return std::abs(lap_cell - pid.trace + pid.s1);
}

inline double trace_identity_residual(const MetricDescriptor& metric, const Mesh& mesh,
                                      const VolumeDescriptor& vol, const ScalarField& u,
                                      int cell) {
  PolynomialReconstructor recon(mesh);
  GradientField gf = gradient(metric, mesh, u);
  ScalarField lap = divergence(metric, mesh, vol, gf.grad);
  return trace_identity_residual(metric, mesh, vol, u, cell, recon, gf, lap);
}

struct BochnerReport {
  std::vector<double> equality_residual;  // per vertex, zero where skipped
  std::vector<double> inequality_slack;
  std::vector<char> masked;     // vertex differential below the threshold
  std::vector<char> near_mask;  // fit stencil touches a masked vertex
  double max_equality_residual = 0.0;  // over clean vertices
  double min_inequality_slack = std::numeric_limits<double>::infinity();
  double max_equality_near_mask = 0.0;  // over near-mask vertices, informational
  int clean_count = 0;
  int masked_count = 0;
  int near_mask_count = 0;
};

// Vertex Bochner residuals against the weighted identity: the equality side
// uses Ric_infinity plus the HS norm of the covariant Hessian, the inequality
// side Ric_N plus (lap u)^2/N. At N = n the S^2/(N-n) term follows the
// vanishing-S convention: certified-zero S drops it, anything else sends
// Ric_n to -infinity.
inline BochnerReport bochner_residual(const MetricDescriptor& metric, const Mesh& mesh,
                                      const VolumeDescriptor& vol, const ScalarField& u, double N,
                                      const PolynomialReconstructor& recon) {
  int n = mesh.dim;
  if (std::isnan(N) || !(N >= double(n)))
    throw Error(ErrorKind::InvalidParameter, "Bochner inequality needs N >= dimension");
  if (int(u.values.size()) != mesh.num_verts())
    throw Error(ErrorKind::InvalidInput, "field length does not match the vertex count");
  int nv = mesh.num_verts();
  bool flat = mesh.kind != MeshKind::Sphere;

  std::vector<Vecd> du(nv, Vecd(n)), yv(nv, Vecd(n)), xev(nv, Vecd(n));
  std::vector<Matd> uhess(nv, Matd(n));
  std::vector<double> dualn(nv, 0.0);
  std::vector<double> coef;
  for (int v = 0; v < nv; ++v) {
    recon.fit(v, u.values, coef);
    Vecd d(n);
    Matd h(n);
    d[0] = recon.deriv(coef, 1, 0);
    h(0, 0) = recon.deriv(coef, 2, 0);
    if (n == 2) {
      d[1] = recon.deriv(coef, 0, 1);
      h(1, 1) = recon.deriv(coef, 0, 2);
      h(0, 1) = h(1, 0) = recon.deriv(coef, 1, 1);
    }
    du[v] = d;
    uhess[v] = h;
    if (flat) xev[v] = mesh.verts[v];
    if (norm2(d) > 0.0) {
      try {
        yv[v] = legendre_inverse(metric, xev[v], d);
        dualn[v] = std::sqrt(metric.squared_norm(xev[v], yv[v]));
      } catch (const Error& e) {
        throw Error(e.kind(), e.message() + " (vertex " + std::to_string(v) + ")");
      }
    }
  }
  double peak = 0.0;
  for (double d : dualn) peak = std::max(peak, d);
  double threshold = 1e-12 * peak;

  BochnerReport rep;
  rep.equality_residual.assign(nv, 0.0);
  rep.inequality_slack.assign(nv, 0.0);
  rep.masked.assign(nv, 0);
  rep.near_mask.assign(nv, 0);
  for (int v = 0; v < nv; ++v) rep.masked[v] = dualn[v] > threshold ? 0 : 1;

  std::vector<int> ids;
  for (int v = 0; v < nv; ++v) {
    if (rep.masked[v]) continue;
    recon.gather_ids(v, ids);
    for (int w : ids)
      if (rep.masked[w]) {
        rep.near_mask[v] = 1;
        break;
      }
  }

  std::vector<double> lap(nv, 0.0);
  std::vector<Vecd> xf(nv, Vecd(n));
  std::vector<detail::PointIdentity> pid(nv);
  for (int v = 0; v < nv; ++v) {
    if (rep.masked[v]) continue;
    pid[v] = detail::point_identity(metric, vol, xev[v], du[v], uhess[v], yv[v], true);
    lap[v] = pid[v].lap;
    xf[v] = pid[v].xfield;
  }

  double cert = 1e-9 / mesh.characteristic_length();
  std::vector<double> vals0, vals1;
  for (int v = 0; v < nv; ++v) {
    if (rep.masked[v]) {
      ++rep.masked_count;
      continue;
    }
    recon.gather_ids(v, ids);
    vals0.resize(ids.size());
    for (size_t i = 0; i < ids.size(); ++i) vals0[i] = lap[ids[i]];
    std::vector<double> coefl;
    recon.fit_from_values(v, vals0, coefl);
    double dlap_grad = recon.deriv(coefl, 1, 0) * yv[v][0];
    if (n == 2) dlap_grad += recon.deriv(coefl, 0, 1) * yv[v][1];

    double div_x = 0.0;
    if (flat) {
      for (int j = 0; j < n; ++j) {
        vals0.resize(ids.size());
        for (size_t i = 0; i < ids.size(); ++i) vals0[i] = xf[ids[i]][j];
        std::vector<double> cc;
        recon.fit_from_values(v, vals0, cc);
        div_x += recon.deriv(cc, j == 0 ? 1 : 0, j == 0 ? 0 : 1);
      }
    } else {
      const SphereChart& chv = recon.chart(v);
      const std::vector<Vecd>& loc = recon.local_coords(v);
      vals0.resize(ids.size());
      vals1.resize(ids.size());
      for (size_t i = 0; i < ids.size(); ++i) {
        int w = ids[i];
        if (rep.masked[w]) {
          vals0[i] = vals1[i] = 0.0;
          continue;
        }
        const SphereChart& chw = recon.chart(w);
        Vecd emb(3);
        for (int k = 0; k < 3; ++k) emb[k] = xf[w][0] * chw.e1[k] + xf[w][1] * chw.e2[k];
        Vecd local = chv.pull_velocity(loc[i], emb);
        vals0[i] = local[0];
        vals1[i] = local[1];
      }
      std::vector<double> c0, c1;
      recon.fit_from_values(v, vals0, c0);
      recon.fit_from_values(v, vals1, c1);
      div_x = recon.deriv(c0, 1, 0) + recon.deriv(c1, 0, 1);
    }

    double lhs = div_x + dot(xf[v], pid[v].dphi) - dlap_grad;
    double rhs_eq = pid[v].f2 * (pid[v].ric0 + pid[v].sdot0) + pid[v].hs2;
    double eq = std::abs(lhs - rhs_eq);
    rep.equality_residual[v] = eq;

    double ric_n_f2;
    if (std::isinf(N)) {
      ric_n_f2 = pid[v].f2 * (pid[v].ric0 + pid[v].sdot0);
    } else {
      double sterm;
      if (N == double(n))
        sterm = std::abs(pid[v].s1) <= cert * std::sqrt(pid[v].f2)
                    ? 0.0
                    : std::numeric_limits<double>::infinity();
      else
        sterm = pid[v].s1 * pid[v].s1 / (N - n);
      ric_n_f2 = pid[v].f2 * (pid[v].ric0 + pid[v].sdot0) - sterm;
    }
    double rhs_in = ric_n_f2 + (std::isinf(N) ? 0.0 : lap[v] * lap[v] / N);
    rep.inequality_slack[v] = lhs - rhs_in;

    if (rep.near_mask[v]) {
      ++rep.near_mask_count;
      rep.max_equality_near_mask = std::max(rep.max_equality_near_mask, eq);
    } else {
      ++rep.clean_count;
      rep.max_equality_residual = std::max(rep.max_equality_residual, eq);
      rep.min_inequality_slack = std::min(rep.min_inequality_slack, rep.inequality_slack[v]);
    }
  }
  return rep;
}

inline BochnerReport bochner_residual(const MetricDescriptor& metric, const Mesh& mesh,
                                      const VolumeDescriptor& vol, const ScalarField& u,
                                      double N) {
  PolynomialReconstructor recon(mesh);
  return bochner_residual(metric, mesh, vol, u, N, recon);
}

}  // namespace flab
