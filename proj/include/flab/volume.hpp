#pragma once

// Volume descriptors: the measure is d(mu) = e^Phi dx in chart coordinates.
// Three kinds: an explicit log-density Phi, the Riemannian form of a
// quadratic metric (Phi = ln sqrt det a), and the Busemann-Hausdorff form
// (density = Lebesgue volume of the Euclidean unit ball over the volume of
// the norm's unit ball).

#include <cmath>
#include <memory>

#include "flab/errors.hpp"
#include "flab/linalg.hpp"
#include "flab/metric.hpp"
#include "flab/quadrature.hpp"

namespace flab {

enum class VolumeKind { Explicit, RiemannianForm, BusemannHausdorff };

inline const char* volume_kind_name(VolumeKind k) {
  switch (k) {
    case VolumeKind::Explicit: return "explicit";
    case VolumeKind::RiemannianForm: return "riemannian";
    case VolumeKind::BusemannHausdorff: return "busemann_hausdorff";
  }
  return "?";
}

namespace detail {

// Unit-ball volume of F(x,.) by direction quadrature.
inline double norm_ball_volume(const MetricDescriptor& m, const Vecd& x, int samples) {
  int n = m.dim();
  auto fpow = [&](const Vecd& dir) {
    double f2 = m.squared_norm(x, dir);
    if (!(f2 > 0.0) || !std::isfinite(f2))
      throw Error(ErrorKind::MetricViolation, "norm not positive while integrating unit ball");
    return std::pow(f2, -0.5 * n);
  };
  if (n == 1) {
    Vecd e{1.0};
    Vecd me{-1.0};
    return fpow(e) + fpow(me);
  }
  if (n == 2) {
    double s = periodic_trapezoid(
        [&](double th) {
          Vecd d{std::cos(th), std::sin(th)};
          return fpow(d);
        },
        2.0 * M_PI, samples);
    return 0.5 * s;
  }
  if (n == 3) {
    // Product rule: Gauss-Legendre in z, trapezoid in azimuth.
    int nz = std::max(16, samples / 16);
    int nt = std::max(32, samples / 8);
    GaussRule gl = gauss_legendre(nz);
    double acc = 0.0;
    for (int i = 0; i < nz; ++i) {
      double z = gl.nodes[i];
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      double ring = 0.0;
      for (int j = 0; j < nt; ++j) {
        double th = 2.0 * M_PI * j / nt;
        Vecd d{r * std::cos(th), r * std::sin(th), z};
        ring += fpow(d);
      }
      acc += gl.weights[i] * ring * (2.0 * M_PI / nt);
    }
    return acc / 3.0;
  }
  throw Error(ErrorKind::Unsupported, "busemann-hausdorff density implemented for n <= 3");
}

inline double euclid_ball_volume(int n) {
  switch (n) {
    case 1: return 2.0;
    case 2: return M_PI;
    case 3: return 4.0 * M_PI / 3.0;
    default: throw Error(ErrorKind::Unsupported, "dimension out of range");
  }
}

}  // namespace detail

class VolumeDescriptor {
 public:
  static VolumeDescriptor explicit_phi(std::shared_ptr<const ScalarMap> phi) {
    VolumeDescriptor v(VolumeKind::Explicit);
    v.phi_ = std::move(phi);
    return v;
  }

  static VolumeDescriptor riemannian() { return VolumeDescriptor(VolumeKind::RiemannianForm); }

  static VolumeDescriptor busemann_hausdorff(int direction_samples = 512) {
    VolumeDescriptor v(VolumeKind::BusemannHausdorff);
    v.samples_ = direction_samples;
    return v;
  }

  VolumeKind kind() const { return kind_; }

  // log-density at any dual depth; Busemann-Hausdorff is double-only (its
  // derivatives go through Richardson differences below).
  template <typename T>
  T phi_t(const MetricDescriptor& m, const VecN<T>& x) const {
    switch (kind_) {
      case VolumeKind::Explicit:
        return phi_->ev(x);
      case VolumeKind::RiemannianForm: {
        if (m.kind() != MetricKind::Euclidean && m.kind() != MetricKind::Riemannian)
          throw Error(ErrorKind::InvalidParameter,
                      "riemannian volume form requires a quadratic metric");
        if (m.kind() == MetricKind::Euclidean) return T(std::log(m.scale()) * m.dim());
        VecN<T> y(x.n);
        y[0] = T(1.0);
        MatN<T> g = fundamental_tensor_t<T>(m, x, y);
        return 0.5 * log(det(g));
      }
      case VolumeKind::BusemannHausdorff:
        throw Error(ErrorKind::Unsupported, "busemann-hausdorff log-density is not dual-evaluable");
    }
    return T(0.0);
  }

  double phi(const MetricDescriptor& m, const Vecd& x) const {
    if (kind_ == VolumeKind::BusemannHausdorff) {
      double ball = detail::norm_ball_volume(m, x, samples_);
      double sigma = detail::euclid_ball_volume(m.dim()) / ball;
      if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw Error(ErrorKind::InvalidVolume, "busemann-hausdorff density not positive");
      return std::log(sigma);
    }
    return phi_t<double>(m, x);
  }

  double density(const MetricDescriptor& m, const Vecd& x) const {
    double p = phi(m, x);
    double s = std::exp(p);
    if (!(s > 0.0) || !std::isfinite(s))
      throw Error(ErrorKind::InvalidVolume, "volume density not positive");
    return s;
  }

  Vecd grad_phi(const MetricDescriptor& m, const Vecd& x) const {
    int n = m.dim();
    Vecd g(n);
    if (kind_ == VolumeKind::BusemannHausdorff) {
      double h = fd_step_;
      for (int i = 0; i < n; ++i) {
        g[i] = richardson_central_(m, x, i, h);
      }
      return g;
    }
    for (int i = 0; i < n; ++i) {
      auto xl = up(x);
      xl[i].d = 1.0;
      g[i] = phi_t<D1>(m, xl).d;
    }
    return g;
  }

  Matd hess_phi(const MetricDescriptor& m, const Vecd& x) const {
    int n = m.dim();
    Matd h(n);
    if (kind_ == VolumeKind::BusemannHausdorff) {
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          h(i, j) = richardson_second_(m, x, i, j, fd_step_);
          h(j, i) = h(i, j);
        }
      return h;
    }
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        auto xl = up(up(x));
        xl[i].d.v = 1.0;
        xl[j].v.d = 1.0;
        h(i, j) = phi_t<D2>(m, xl).d.d;
        h(j, i) = h(i, j);
      }
    return h;
  }

 private:
  explicit VolumeDescriptor(VolumeKind k) : kind_(k) {}

  double phi_shift_(const MetricDescriptor& m, Vecd x, int i, double di, int j, double dj) const {
    x[i] += di;
    if (j >= 0) x[j] += dj;
    return phi(m, x);
  }

  double richardson_central_(const MetricDescriptor& m, const Vecd& x, int i, double h) const {
    auto d = [&](double step) {
      return (phi_shift_(m, x, i, step, -1, 0) - phi_shift_(m, x, i, -step, -1, 0)) / (2.0 * step);
    };
    return (4.0 * d(0.5 * h) - d(h)) / 3.0;
  }

  double richardson_second_(const MetricDescriptor& m, const Vecd& x, int i, int j, double h) const {
    if (i == j) {
      double p0 = phi(m, x);
      auto d = [&](double step) {
        return (phi_shift_(m, x, i, step, -1, 0) - 2.0 * p0 + phi_shift_(m, x, i, -step, -1, 0)) /
               (step * step);
      };
      return (4.0 * d(0.5 * h) - d(h)) / 3.0;
    }
    auto d = [&](double step) {
      return (phi_shift_(m, x, i, step, j, step) - phi_shift_(m, x, i, step, j, -step) -
              phi_shift_(m, x, i, -step, j, step) + phi_shift_(m, x, i, -step, j, -step)) /
             (4.0 * step * step);
    };
    return (4.0 * d(0.5 * h) - d(h)) / 3.0;
  }

  VolumeKind kind_;
  std::shared_ptr<const ScalarMap> phi_;
  int samples_ = 512;
  double fd_step_ = 1e-3;
};

// Phi and its first two derivative tensors at one point; computed once per
// base point by scan/assembly loops.
struct VolumeDerivs {
  double phi = 0.0;
  Vecd grad;
  Matd hess;
};

inline VolumeDerivs volume_derivs(const MetricDescriptor& m, const VolumeDescriptor& v, const Vecd& x) {
  VolumeDerivs d;
  d.phi = v.phi(m, x);
  d.grad = v.grad_phi(m, x);
  d.hess = v.hess_phi(m, x);
  return d;
}

// Busemann-Hausdorff density as a standalone quantity.
inline double busemann_hausdorff_density(const MetricDescriptor& m, const Vecd& x,
                                         int direction_samples = 512) {
  return detail::euclid_ball_volume(m.dim()) /
         detail::norm_ball_volume(m, x, direction_samples);
}

}  // namespace flab
