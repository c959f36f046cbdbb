#pragma once

// Spray, curvature, and measure-coupled invariants. Everything reduces to
// nested-dual derivatives of the squared norm; directional seeding keeps the
// evaluation count linear in the dimension where contractions allow it.

#include <cmath>

#include "flab/errors.hpp"
#include "flab/linalg.hpp"
#include "flab/metric.hpp"
#include "flab/volume.hpp"

namespace flab {

// Geodesic spray coefficients G^i(x,y) at any dual depth with headroom:
// G^i = 1/4 g^{il} ( y^k d^2F^2/dx^k dy^l - dF^2/dx^l ).
template <typename T>
VecN<T> spray_t(const MetricDescriptor& m, const VecN<T>& x, const VecN<T>& y) {
  int n = x.n;
  MatN<T> g = fundamental_tensor_t<T>(m, x, y);
  LuN<T> lu(g);
  VecN<T> rhs(n);
  for (int l = 0; l < n; ++l) {
    auto xl = up(up(x));
    auto yl = up(up(y));
    for (int k = 0; k < n; ++k) xl[k].d.v = y[k];  // x-derivative along y
    yl[l].v.d = T(1.0);
    T mixed = m.squared_norm(xl, yl).d.d;
    auto x1 = up(x);
    auto y1 = up(y);
    x1[l].d = T(1.0);
    T dxl = m.squared_norm(x1, y1).d;
    rhs[l] = 0.25 * (mixed - dxl);
  }
  return lu.solve(rhs);
}

inline void require_direction(const MetricDescriptor& m, const Vecd& x, const Vecd& y) {
  m.check_dim(x);
  m.check_dim(y);
  if (norm2(y) == 0.0)
    throw Error(ErrorKind::DegenerateDirection, "operation needs a nonzero direction");
}

struct SprayData {
  Vecd spray;                // G^i
  Matd nonlinear_connection; // N^i_j = dG^i/dy^j
  Ten3d chern;               // Gamma^i_jk in the Chern connection
};

inline SprayData spray_coefficients(const MetricDescriptor& m, const Vecd& x, const Vecd& y) {
  require_direction(m, x, y);
  m.validate_at(x);
  int n = m.dim();
  SprayData out;
  out.spray = spray_t<double>(m, x, y);
  out.nonlinear_connection = Matd(n);
  for (int j = 0; j < n; ++j) {
    auto xl = up(x);
    auto yl = up(y);
    yl[j].d = 1.0;
    VecN<D1> g1 = spray_t<D1>(m, xl, yl);
    for (int i = 0; i < n; ++i) out.nonlinear_connection(i, j) = g1[i].d;
  }

  // dg/dx^m and dg/dy^m, then delta g / delta x^k = dg/dx^k - N^m_k dg/dy^m.
  std::array<Matd, kMaxDim> gx, gy;
  for (int mm = 0; mm < n; ++mm) {
    {
      auto xl = up(x);
      auto yl = up(y);
      xl[mm].d = 1.0;
      MatN<D1> g1 = fundamental_tensor_t<D1>(m, xl, yl);
      Matd d(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) d(i, j) = g1(i, j).d;
      gx[mm] = d;
    }
    {
      auto xl = up(x);
      auto yl = up(y);
      yl[mm].d = 1.0;
      MatN<D1> g1 = fundamental_tensor_t<D1>(m, xl, yl);
      Matd d(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) d(i, j) = g1(i, j).d;
      gy[mm] = d;
    }
  }
  auto delta = [&](int a, int b, int k) {
    double s = gx[k](a, b);
    for (int mm = 0; mm < n; ++mm) s -= out.nonlinear_connection(mm, k) * gy[mm](a, b);
    return s;
  };
  Matd ginv = inverse(fundamental_tensor_t<double>(m, x, y));
  out.chern = Ten3d(n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int l = 0; l < n; ++l)
          s += 0.5 * ginv(i, l) * (delta(l, j, k) + delta(l, k, j) - delta(j, k, l));
        out.chern(i, j, k) = s;
      }
    }
  return out;
}

// Riemann curvature in spray form:
// R^i_k = 2 dG^i/dx^k - y^j d2G^i/dx^j dy^k + 2 G^j d2G^i/dy^j dy^k
//         - dG^i/dy^j dG^j/dy^k.
inline Matd riemann_curvature(const MetricDescriptor& m, const Vecd& x, const Vecd& y) {
  require_direction(m, x, y);
  int n = m.dim();
  Vecd G = spray_t<double>(m, x, y);

  Matd dGdx(n), N(n), mixed(n), second(n);
  for (int k = 0; k < n; ++k) {
    {
      auto xl = up(x);
      auto yl = up(y);
      xl[k].d = 1.0;
      VecN<D1> g1 = spray_t<D1>(m, xl, yl);
      for (int i = 0; i < n; ++i) dGdx(i, k) = g1[i].d;
    }
    {
      auto xl = up(x);
      auto yl = up(y);
      yl[k].d = 1.0;
      VecN<D1> g1 = spray_t<D1>(m, xl, yl);
      for (int i = 0; i < n; ++i) N(i, k) = g1[i].d;
    }
    {
      // y^j d2G^i/dx^j dy^k via an x-seed along y
      auto xl = up(up(x));
      auto yl = up(up(y));
      for (int j = 0; j < n; ++j) xl[j].d.v = y[j];
      yl[k].v.d = 1.0;
      VecN<D2> g2 = spray_t<D2>(m, xl, yl);
      for (int i = 0; i < n; ++i) mixed(i, k) = g2[i].d.d;
    }
    {
      // G^j d2G^i/dy^j dy^k via a y-seed along G
      auto xl = up(up(x));
      auto yl = up(up(y));
      for (int j = 0; j < n; ++j) yl[j].d.v = G[j];
      yl[k].v.d = 1.0;
      VecN<D2> g2 = spray_t<D2>(m, xl, yl);
      for (int i = 0; i < n; ++i) second(i, k) = g2[i].d.d;
    }
  }
  Matd r(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      double s = 2.0 * dGdx(i, k) - mixed(i, k) + 2.0 * second(i, k);
      for (int j = 0; j < n; ++j) s -= N(i, j) * N(j, k);
      r(i, k) = s;
    }
  return r;
}

// Flag curvature K(y; V) with pole y and transverse edge V.
inline double flag_curvature(const MetricDescriptor& m, const Vecd& x, const Vecd& y, const Vecd& v) {
  require_direction(m, x, y);
  m.check_dim(v);
  Matd r = riemann_curvature(m, x, y);
  Matd g = fundamental_tensor_t<double>(m, x, y);
  double f2 = m.squared_norm(x, y);
  Vecd rv = matvec(r, v);
  double num = 0.0;  // g_ij V^i (R V)^j
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) num += g(i, j) * v[i] * rv[j];
  double gvv = quadratic_form(g, v, v);
  double gyv = quadratic_form(g, y, v);
  double den = f2 * gvv - gyv * gyv;
  double scale = f2 * std::max(gvv, 1e-300);
  if (!(den > 1e-10 * scale))
    throw Error(ErrorKind::DegenerateFlag, "flag edge is parallel to the pole");
  return num / den;
}

// Ricci curvature Ric(x,y) = R^k_k / F^2 (degree-0 convention).
inline double ricci_scalar(const MetricDescriptor& m, const Vecd& x, const Vecd& y) {
  require_direction(m, x, y);
  Matd r = riemann_curvature(m, x, y);
  double tr = 0.0;
  for (int k = 0; k < m.dim(); ++k) tr += r(k, k);
  return tr / m.squared_norm(x, y);
}

// tau_g = ln sqrt det g(x,y); the distortion subtracts the log-density.
template <typename T>
T tau_g_t(const MetricDescriptor& m, const VecN<T>& x, const VecN<T>& y) {
  return 0.5 * log(det(fundamental_tensor_t<T>(m, x, y)));
}

inline double distortion(const MetricDescriptor& m, const VolumeDescriptor& vol, const Vecd& x,
                         const Vecd& y) {
  require_direction(m, x, y);
  return tau_g_t<double>(m, x, y) - vol.phi(m, x);
}

// Metric part of the S-curvature (the volume part enters through VolumeDerivs):
// s_g = y^i d(tau_g)/dx^i - 2 G^i d(tau_g)/dy^i.
template <typename T>
T s_g_t(const MetricDescriptor& m, const VecN<T>& x, const VecN<T>& y) {
  VecN<T> G = spray_t<T>(m, x, y);
  auto xa = up(x);
  auto ya = up(y);
  for (int k = 0; k < x.n; ++k) xa[k].d = y[k];
  T along_x = tau_g_t<Dual<T>>(m, xa, ya).d;
  auto xb = up(x);
  auto yb = up(y);
  for (int k = 0; k < x.n; ++k) yb[k].d = G[k];
  T along_y = tau_g_t<Dual<T>>(m, xb, yb).d;
  return along_x - 2.0 * along_y;
}

inline double s_curvature(const MetricDescriptor& m, const Vecd& x, const Vecd& y,
                          const VolumeDerivs& vd) {
  require_direction(m, x, y);
  return s_g_t<double>(m, x, y) - dot(y, vd.grad);
}

inline double s_curvature(const MetricDescriptor& m, const VolumeDescriptor& vol, const Vecd& x,
                          const Vecd& y) {
  VolumeDerivs vd;
  vd.phi = 0.0;
  vd.grad = vol.grad_phi(m, x);
  vd.hess = Matd(m.dim());
  return s_curvature(m, x, y, vd);
}

// Sdot = (1/F^2) (dS/dx^i y^i - 2 dS/dy^i G^i), assembled so the volume form
// only enters through grad/hess of Phi at x.
inline double s_curvature_rate(const MetricDescriptor& m, const Vecd& x, const Vecd& y,
                               const VolumeDerivs& vd) {
  require_direction(m, x, y);
  double f2 = m.squared_norm(x, y);
  Vecd G = spray_t<double>(m, x, y);
  auto xa = up(x);
  auto ya = up(y);
  for (int k = 0; k < x.n; ++k) xa[k].d = y[k];
  double sg_along_x = s_g_t<D1>(m, xa, ya).d;
  auto xb = up(x);
  auto yb = up(y);
  for (int k = 0; k < x.n; ++k) yb[k].d = G[k];
  double sg_along_y = s_g_t<D1>(m, xb, yb).d;
  double num = sg_along_x - quadratic_form(vd.hess, y, y) - 2.0 * (sg_along_y - dot(G, vd.grad));
  return num / f2;
}

inline double s_curvature_rate(const MetricDescriptor& m, const VolumeDescriptor& vol,
                               const Vecd& x, const Vecd& y) {
  return s_curvature_rate(m, x, y, volume_derivs(m, vol, x));
}

// Weighted Ricci Ric_N for N in (n, infinity]; degree-0 homogeneous.
inline double weighted_ricci(const MetricDescriptor& m, const Vecd& x, const Vecd& y, double N,
                             const VolumeDerivs& vd) {
  require_direction(m, x, y);
  int n = m.dim();
  double ric = ricci_scalar(m, x, y);
  double sdot = s_curvature_rate(m, x, y, vd);
  if (std::isinf(N)) return ric + sdot;
  if (!(N > n))
    throw Error(ErrorKind::InvalidParameter, "weighted Ricci needs N > dimension (or infinity)");
  double s = s_curvature(m, x, y, vd);
  double f2 = m.squared_norm(x, y);
  return ric + sdot - s * s / ((N - n) * f2);
}

inline double weighted_ricci(const MetricDescriptor& m, const VolumeDescriptor& vol, const Vecd& x,
                             const Vecd& y, double N) {
  return weighted_ricci(m, x, y, N, volume_derivs(m, vol, x));
}

}  // namespace flab
