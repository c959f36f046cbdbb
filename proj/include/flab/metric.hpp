#pragma once

// Minkowski-norm descriptors and the pointwise tensor operations built on
// nested-dual differentiation of the squared norm.
//
// Smooth data (metric coefficients, one-forms, custom norms) enters through
// type-erased maps evaluable at every dual depth used by the curvature stack
// (plain double up to four nested derivative layers).

#include <cmath>
#include <memory>
#include <string>
#include <utility>

#include "flab/dual.hpp"
#include "flab/errors.hpp"
#include "flab/linalg.hpp"

namespace flab {

#define FLAB_SMOOTH_OVERRIDE(RET_T, ARG_T)                        \
  RET_T ev(const ARG_T& x) const override { return f(x); }

struct ScalarMap {
  virtual ~ScalarMap() = default;
  virtual double ev(const VecN<double>& x) const = 0;
  virtual D1 ev(const VecN<D1>& x) const = 0;
  virtual D2 ev(const VecN<D2>& x) const = 0;
  virtual D3 ev(const VecN<D3>& x) const = 0;
  virtual D4 ev(const VecN<D4>& x) const = 0;
};

template <typename F>
struct ScalarMapImpl final : ScalarMap {
  F f;
  explicit ScalarMapImpl(F fn) : f(std::move(fn)) {}
  FLAB_SMOOTH_OVERRIDE(double, VecN<double>)
  FLAB_SMOOTH_OVERRIDE(D1, VecN<D1>)
  FLAB_SMOOTH_OVERRIDE(D2, VecN<D2>)
  FLAB_SMOOTH_OVERRIDE(D3, VecN<D3>)
  FLAB_SMOOTH_OVERRIDE(D4, VecN<D4>)
};

template <typename F>
std::shared_ptr<const ScalarMap> make_scalar_map(F f) {
  return std::make_shared<ScalarMapImpl<F>>(std::move(f));
}

struct CovectorMap {
  virtual ~CovectorMap() = default;
  virtual VecN<double> ev(const VecN<double>& x) const = 0;
  virtual VecN<D1> ev(const VecN<D1>& x) const = 0;
  virtual VecN<D2> ev(const VecN<D2>& x) const = 0;
  virtual VecN<D3> ev(const VecN<D3>& x) const = 0;
  virtual VecN<D4> ev(const VecN<D4>& x) const = 0;
};

template <typename F>
struct CovectorMapImpl final : CovectorMap {
  F f;
  explicit CovectorMapImpl(F fn) : f(std::move(fn)) {}
  FLAB_SMOOTH_OVERRIDE(VecN<double>, VecN<double>)
  FLAB_SMOOTH_OVERRIDE(VecN<D1>, VecN<D1>)
  FLAB_SMOOTH_OVERRIDE(VecN<D2>, VecN<D2>)
  FLAB_SMOOTH_OVERRIDE(VecN<D3>, VecN<D3>)
  FLAB_SMOOTH_OVERRIDE(VecN<D4>, VecN<D4>)
};

template <typename F>
std::shared_ptr<const CovectorMap> make_covector_map(F f) {
  return std::make_shared<CovectorMapImpl<F>>(std::move(f));
}

struct MatrixMap {
  virtual ~MatrixMap() = default;
  virtual MatN<double> ev(const VecN<double>& x) const = 0;
  virtual MatN<D1> ev(const VecN<D1>& x) const = 0;
  virtual MatN<D2> ev(const VecN<D2>& x) const = 0;
  virtual MatN<D3> ev(const VecN<D3>& x) const = 0;
  virtual MatN<D4> ev(const VecN<D4>& x) const = 0;
};

template <typename F>
struct MatrixMapImpl final : MatrixMap {
  F f;
  explicit MatrixMapImpl(F fn) : f(std::move(fn)) {}
  FLAB_SMOOTH_OVERRIDE(MatN<double>, VecN<double>)
  FLAB_SMOOTH_OVERRIDE(MatN<D1>, VecN<D1>)
  FLAB_SMOOTH_OVERRIDE(MatN<D2>, VecN<D2>)
  FLAB_SMOOTH_OVERRIDE(MatN<D3>, VecN<D3>)
  FLAB_SMOOTH_OVERRIDE(MatN<D4>, VecN<D4>)
};

template <typename F>
std::shared_ptr<const MatrixMap> make_matrix_map(F f) {
  return std::make_shared<MatrixMapImpl<F>>(std::move(f));
}

struct NormMap {
  virtual ~NormMap() = default;
  virtual double ev(const VecN<double>& x, const VecN<double>& y) const = 0;
  virtual D1 ev(const VecN<D1>& x, const VecN<D1>& y) const = 0;
  virtual D2 ev(const VecN<D2>& x, const VecN<D2>& y) const = 0;
  virtual D3 ev(const VecN<D3>& x, const VecN<D3>& y) const = 0;
  virtual D4 ev(const VecN<D4>& x, const VecN<D4>& y) const = 0;
};

template <typename F>
struct NormMapImpl final : NormMap {
  F f;
  explicit NormMapImpl(F fn) : f(std::move(fn)) {}
  double ev(const VecN<double>& x, const VecN<double>& y) const override { return f(x, y); }
  D1 ev(const VecN<D1>& x, const VecN<D1>& y) const override { return f(x, y); }
  D2 ev(const VecN<D2>& x, const VecN<D2>& y) const override { return f(x, y); }
  D3 ev(const VecN<D3>& x, const VecN<D3>& y) const override { return f(x, y); }
  D4 ev(const VecN<D4>& x, const VecN<D4>& y) const override { return f(x, y); }
};

template <typename F>
std::shared_ptr<const NormMap> make_norm_map(F f) {
  return std::make_shared<NormMapImpl<F>>(std::move(f));
}

#undef FLAB_SMOOTH_OVERRIDE

// Lift one derivative layer onto every component.
template <typename T>
VecN<Dual<T>> up(const VecN<T>& x) {
  VecN<Dual<T>> r(x.n);
  for (int i = 0; i < x.n; ++i) r[i].v = x[i];
  return r;
}

enum class MetricKind { Euclidean, Riemannian, Randers, Custom };

inline const char* metric_kind_name(MetricKind k) {
  switch (k) {
    case MetricKind::Euclidean: return "euclidean";
    case MetricKind::Riemannian: return "riemannian";
    case MetricKind::Randers: return "randers";
    case MetricKind::Custom: return "custom";
  }
  return "?";
}

class MetricDescriptor {
 public:
  static MetricDescriptor euclidean(int n) { return MetricDescriptor(MetricKind::Euclidean, n); }

  static MetricDescriptor riemannian(int n, std::shared_ptr<const MatrixMap> a) {
    MetricDescriptor m(MetricKind::Riemannian, n);
    m.a_ = std::move(a);
    return m;
  }

  // Randers norm sqrt(a_ij y^i y^j) + b_i y^i; a defaults to the identity.
  static MetricDescriptor randers(int n, std::shared_ptr<const CovectorMap> b,
                                  std::shared_ptr<const MatrixMap> a = nullptr) {
    MetricDescriptor m(MetricKind::Randers, n);
    m.b_ = std::move(b);
    m.a_ = std::move(a);
    return m;
  }

  static MetricDescriptor custom(int n, std::shared_ptr<const NormMap> f) {
    MetricDescriptor m(MetricKind::Custom, n);
    m.f_ = std::move(f);
    return m;
  }

  // Uniform rescaling F -> c*F (volume forms are independent descriptors).
  MetricDescriptor scaled(double c) const {
    if (!(c > 0.0)) throw Error(ErrorKind::InvalidParameter, "metric scale must be positive");
    MetricDescriptor m = *this;
    m.scale_ *= c;
    return m;
  }

  int dim() const { return dim_; }
  MetricKind kind() const { return kind_; }
  double scale() const { return scale_; }

  template <typename T>
  T squared_norm(const VecN<T>& x, const VecN<T>& y) const {
    T f2{};
    switch (kind_) {
      case MetricKind::Euclidean:
        f2 = dot(y, y);
        break;
      case MetricKind::Riemannian:
        f2 = quadratic_form(a_->ev(x), y, y);
        break;
      case MetricKind::Randers: {
        T alpha2 = a_ ? quadratic_form(a_->ev(x), y, y) : dot(y, y);
        T beta = dot(b_->ev(x), y);
        T f = sqrt(alpha2) + beta;
        f2 = f * f;
        break;
      }
      case MetricKind::Custom: {
        T f = f_->ev(x, y);
        f2 = f * f;
        break;
      }
    }
    return (scale_ * scale_) * f2;
  }

  // Throws metric-violation where the descriptor is invalid at x (only the
  // Randers smallness condition is checkable without direction sampling).
  void validate_at(const Vecd& x) const {
    check_dim(x);
    if (kind_ == MetricKind::Randers) {
      Matd a = a_ ? a_->ev(x) : Matd::identity(dim_);
      Vecd b = b_->ev(x);
      double bb = dot(b, solve(a, b));
      if (!(bb < 1.0))
        throw Error(ErrorKind::MetricViolation,
                    "randers one-form has alpha-norm >= 1 (|b|^2 = " + std::to_string(bb) + ")");
    }
  }

  void check_dim(const Vecd& x) const {
    if (x.n != dim_) throw Error(ErrorKind::InvalidInput, "point dimension mismatch");
  }

 private:
  MetricDescriptor(MetricKind k, int n) : kind_(k), dim_(n) {
    if (n < 1 || n > kMaxDim) throw Error(ErrorKind::InvalidParameter, "dimension out of range");
  }

  MetricKind kind_;
  int dim_;
  double scale_ = 1.0;
  std::shared_ptr<const MatrixMap> a_;
  std::shared_ptr<const CovectorMap> b_;
  std::shared_ptr<const NormMap> f_;
};

// F(x,y); zero direction gives zero.
inline double norm(const MetricDescriptor& m, const Vecd& x, const Vecd& y) {
  m.validate_at(x);
  if (norm2(y) == 0.0) return 0.0;
  double f2 = m.squared_norm(x, y);
  if (!(f2 > 0.0) || !std::isfinite(f2))
    throw Error(ErrorKind::MetricViolation, "norm not positive on a nonzero direction");
  return std::sqrt(f2);
}

// g_ij(x,y) = 1/2 d^2 F^2 / dy^i dy^j at any dual depth with headroom.
template <typename T>
MatN<T> fundamental_tensor_t(const MetricDescriptor& m, const VecN<T>& x, const VecN<T>& y) {
  int n = x.n;
  MatN<T> g(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      auto xl = up(up(x));
      auto yl = up(up(y));
      yl[i].d.v = T(1.0);
      yl[j].v.d = T(1.0);
      auto f2 = m.squared_norm(xl, yl);
      g(i, j) = 0.5 * f2.d.d;
      g(j, i) = g(i, j);
    }
  }
  return g;
}

// dF^2/dy_i covector (the Legendre map g_ij(y) y^j doubled).
template <typename T>
VecN<T> dF2_dy(const MetricDescriptor& m, const VecN<T>& x, const VecN<T>& y) {
  int n = x.n;
  VecN<T> r(n);
  for (int i = 0; i < n; ++i) {
    auto xl = up(x);
    auto yl = up(y);
    yl[i].d = T(1.0);
    r[i] = m.squared_norm(xl, yl).d;
  }
  return r;
}

struct FundamentalTensor {
  Matd g;
  Matd g_inv;
  double f;  // F(x,y)
};

inline FundamentalTensor fundamental_tensor(const MetricDescriptor& m, const Vecd& x, const Vecd& y) {
  m.validate_at(x);
  if (norm2(y) == 0.0)
    throw Error(ErrorKind::DegenerateDirection, "fundamental tensor needs a nonzero direction");
  FundamentalTensor t;
  t.g = fundamental_tensor_t<double>(m, x, y);
  if (!spd_check(t.g))
    throw Error(ErrorKind::MetricViolation, "fundamental tensor not positive definite");
  t.g_inv = inverse(t.g);
  t.f = std::sqrt(m.squared_norm(x, y));
  return t;
}

struct CartanTensor {
  Ten3d c;      // C_ijk = 1/2 dg_ij/dy^k
  Ten3d a;      // A_ijk = F * C_ijk
  Vecd mean;    // I_k = g^{ij} C_ijk
};

inline CartanTensor cartan_tensor(const MetricDescriptor& m, const Vecd& x, const Vecd& y) {
  FundamentalTensor ft = fundamental_tensor(m, x, y);
  int n = m.dim();
  CartanTensor ct;
  ct.c = Ten3d(n);
  ct.a = Ten3d(n);
  ct.mean = Vecd(n);
  for (int k = 0; k < n; ++k) {
    auto xl = up(lift<double>(x));
    auto yl = up(lift<double>(y));
    yl[k].d = 1.0;
    MatN<D1> g = fundamental_tensor_t<D1>(m, xl, yl);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double c = 0.5 * g(i, j).d;
        ct.c(i, j, k) = c;
        ct.a(i, j, k) = ft.f * c;
      }
  }
  for (int k = 0; k < n; ++k) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += ft.g_inv(i, j) * ct.c(i, j, k);
    ct.mean[k] = s;
  }
  return ct;
}

// Legendre transform inverse: the vector y with g_y(y, .) = xi, F(y) = F*(xi).
// Newton iteration; the Jacobian of y -> g_ij(y) y^j is exactly g(y).
inline Vecd legendre_inverse(const MetricDescriptor& m, const Vecd& x, const Vecd& xi) {
  m.validate_at(x);
  int n = m.dim();
  double s = norm2(xi);
  if (s == 0.0) return Vecd(n);

  Vecd unit = (1.0 / s) * xi;
  Vecd y = unit;
  {
    // warm start from the frozen metric at the raw direction
    Matd g0 = fundamental_tensor_t<double>(m, x, unit);
    y = solve(g0, unit);
  }
  for (int it = 0; it < 60; ++it) {
    Vecd l = 0.5 * dF2_dy(m, lift<double>(x), y);
    Vecd r = unit - l;
    double rn = norm2(r);
    if (rn <= 1e-15 * std::max(1.0, norm2(l))) {
      return s * y;
    }
    Matd g = fundamental_tensor_t<double>(m, x, y);
    Vecd step = solve(g, r);
    // damped update guarding against leaving the admissible cone
    double t = 1.0;
    for (int back = 0; back < 30; ++back) {
      Vecd cand = y + t * step;
      double f2 = m.squared_norm(x, cand);
      if (f2 > 0.0 && std::isfinite(f2)) { y = cand; break; }
      t *= 0.5;
      if (back == 29)
        throw Error(ErrorKind::NumericFailure, "legendre inverse left the admissible cone");
    }
  }
  throw Error(ErrorKind::NumericFailure, "legendre inverse did not converge");
}

// Dual norm F*(xi) = sup_{y != 0} xi(y)/F(y) = F(L*(xi)).
inline double dual_norm(const MetricDescriptor& m, const Vecd& x, const Vecd& xi) {
  if (norm2(xi) == 0.0) return 0.0;
  Vecd y = legendre_inverse(m, x, xi);
  return std::sqrt(m.squared_norm(x, y));
}

// Convenience constant-coefficient builders.
inline std::shared_ptr<const MatrixMap> constant_matrix_map(const Matd& a) {
  return make_matrix_map([a](const auto& x) {
    using T = std::decay_t<decltype(x[0])>;
    MatN<T> r(a.n);
    for (int i = 0; i < a.n; ++i)
      for (int j = 0; j < a.n; ++j) r(i, j) = T(a(i, j));
    return r;
  });
}

inline std::shared_ptr<const CovectorMap> constant_covector_map(const Vecd& b) {
  return make_covector_map([b](const auto& x) {
    using T = std::decay_t<decltype(x[0])>;
    VecN<T> r(b.n);
    for (int i = 0; i < b.n; ++i) r[i] = T(b[i]);
    return r;
  });
}

// Gnomonic-chart round-sphere metric of radius R:
// a_ij(w) = ((1+|w|^2/R^2) delta_ij - w_i w_j / R^2) / (1+|w|^2/R^2)^2.
inline std::shared_ptr<const MatrixMap> gnomonic_sphere_map(double radius) {
  double r2 = radius * radius;
  return make_matrix_map([r2](const auto& w) {
    using T = std::decay_t<decltype(w[0])>;
    int n = w.n;
    T q = 1.0 + dot(w, w) / r2;
    T den = 1.0 / (q * q);
    MatN<T> a(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        T e = (i == j) ? q : T(0.0);
        a(i, j) = (e - w[i] * w[j] / r2) * den;
      }
    return a;
  });
}

// Circle of radius r in the angle chart: a = r^2.
inline MetricDescriptor circle_metric(double radius) {
  Matd a(1);
  a(0, 0) = radius * radius;
  return MetricDescriptor::riemannian(1, constant_matrix_map(a));
}

}  // namespace flab
