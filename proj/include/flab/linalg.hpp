#pragma once

// Fixed-capacity dense vectors/matrices over an arbitrary scalar (double or
// nested Dual). Dimensions up to kMaxDim; all loops run over the live size n.

#include <array>
#include <cmath>
#include <initializer_list>

#include "flab/dual.hpp"
#include "flab/errors.hpp"

namespace flab {

inline constexpr int kMaxDim = 4;

template <typename T>
struct VecN {
  std::array<T, kMaxDim> a{};
  int n = 0;

  VecN() = default;
  explicit VecN(int size) : n(size) {}
  VecN(std::initializer_list<double> xs) : n(int(xs.size())) {
    int i = 0;
    for (double x : xs) a[i++] = T(x);
  }

  T& operator[](int i) { return a[i]; }
  const T& operator[](int i) const { return a[i]; }
  int size() const { return n; }
};

template <typename T>
struct MatN {
  std::array<T, kMaxDim * kMaxDim> a{};
  int n = 0;

  MatN() = default;
  explicit MatN(int size) : n(size) {}

  T& operator()(int i, int j) { return a[i * kMaxDim + j]; }
  const T& operator()(int i, int j) const { return a[i * kMaxDim + j]; }
  int size() const { return n; }

  static MatN identity(int size) {
    MatN m(size);
    for (int i = 0; i < size; ++i) m(i, i) = T(1.0);
    return m;
  }
};

template <typename T>
struct Ten3N {
  std::array<T, kMaxDim * kMaxDim * kMaxDim> a{};
  int n = 0;

  Ten3N() = default;
  explicit Ten3N(int size) : n(size) {}

  T& operator()(int i, int j, int k) { return a[(i * kMaxDim + j) * kMaxDim + k]; }
  const T& operator()(int i, int j, int k) const { return a[(i * kMaxDim + j) * kMaxDim + k]; }
  int size() const { return n; }
};

using Vecd = VecN<double>;
using Matd = MatN<double>;
using Ten3d = Ten3N<double>;

template <typename T>
VecN<T> operator+(const VecN<T>& x, const VecN<T>& y) {
  VecN<T> r(x.n);
  for (int i = 0; i < x.n; ++i) r[i] = x[i] + y[i];
  return r;
}

template <typename T>
VecN<T> operator-(const VecN<T>& x, const VecN<T>& y) {
  VecN<T> r(x.n);
  for (int i = 0; i < x.n; ++i) r[i] = x[i] - y[i];
  return r;
}

template <typename T>
VecN<T> operator-(const VecN<T>& x) {
  VecN<T> r(x.n);
  for (int i = 0; i < x.n; ++i) r[i] = -x[i];
  return r;
}

template <typename T, typename S>
VecN<T> operator*(const S& c, const VecN<T>& x) {
  VecN<T> r(x.n);
  for (int i = 0; i < x.n; ++i) r[i] = c * x[i];
  return r;
}

template <typename T>
T dot(const VecN<T>& x, const VecN<T>& y) {
  T s{};
  for (int i = 0; i < x.n; ++i) s += x[i] * y[i];
  return s;
}

template <typename T>
VecN<T> matvec(const MatN<T>& m, const VecN<T>& x) {
  VecN<T> r(m.n);
  for (int i = 0; i < m.n; ++i) {
    T s{};
    for (int j = 0; j < m.n; ++j) s += m(i, j) * x[j];
    r[i] = s;
  }
  return r;
}

template <typename T>
T quadratic_form(const MatN<T>& m, const VecN<T>& x, const VecN<T>& y) {
  T s{};
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) s += x[i] * m(i, j) * y[j];
  return s;
}

// In-place LU with partial pivoting on scalar_value; returns det. Solves are
// layered on top. Throws numeric-failure on a vanishing pivot.
template <typename T>
struct LuN {
  MatN<T> lu;
  std::array<int, kMaxDim> perm{};
  T det{};

  explicit LuN(const MatN<T>& m) : lu(m) {
    int n = m.n;
    det = T(1.0);
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int k = 0; k < n; ++k) {
      int p = k;
      double best = std::abs(scalar_value(lu(k, k)));
      for (int i = k + 1; i < n; ++i) {
        double c = std::abs(scalar_value(lu(i, k)));
        if (c > best) { best = c; p = i; }
      }
      if (best == 0.0) throw Error(ErrorKind::NumericFailure, "singular matrix in LU factorization");
      if (p != k) {
        for (int j = 0; j < n; ++j) std::swap(lu(k, j), lu(p, j));
        std::swap(perm[k], perm[p]);
        det = -det;
      }
      det = det * lu(k, k);
      T inv = T(1.0) / lu(k, k);
      for (int i = k + 1; i < n; ++i) {
        T f = lu(i, k) * inv;
        lu(i, k) = f;
        for (int j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
      }
    }
  }

  VecN<T> solve(const VecN<T>& b) const {
    int n = lu.n;
    VecN<T> y(n);
    for (int i = 0; i < n; ++i) y[i] = b[perm[i]];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) y[i] -= lu(i, j) * y[j];
    for (int i = n - 1; i >= 0; --i) {
      for (int j = i + 1; j < n; ++j) y[i] -= lu(i, j) * y[j];
      y[i] = y[i] / lu(i, i);
    }
    return y;
  }
};

template <typename T>
T det(const MatN<T>& m) { return LuN<T>(m).det; }

template <typename T>
MatN<T> inverse(const MatN<T>& m) {
  LuN<T> f(m);
  MatN<T> r(m.n);
  for (int j = 0; j < m.n; ++j) {
    VecN<T> e(m.n);
    e[j] = T(1.0);
    VecN<T> col = f.solve(e);
    for (int i = 0; i < m.n; ++i) r(i, j) = col[i];
  }
  return r;
}

template <typename T>
VecN<T> solve(const MatN<T>& m, const VecN<T>& b) { return LuN<T>(m).solve(b); }

// Lift a double vector into scalar type T, optionally seeding the outer
// derivative slot of component `seed_at`.
template <typename T>
VecN<T> lift(const Vecd& x, int seed_at = -1) {
  VecN<T> r(x.n);
  for (int i = 0; i < x.n; ++i) r[i] = T(x[i]);
  if (seed_at >= 0) r[seed_at].d = decltype(r[seed_at].d)(1.0);
  return r;
}

template <>
inline VecN<double> lift<double>(const Vecd& x, int) { return x; }

template <typename T>
Vecd value_of(const VecN<T>& x) {
  Vecd r(x.n);
  for (int i = 0; i < x.n; ++i) r[i] = scalar_value(x[i]);
  return r;
}

template <typename T>
Matd value_of(const MatN<T>& m) {
  Matd r(m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) r(i, j) = scalar_value(m(i, j));
  return r;
}

inline double norm2(const Vecd& x) { return std::sqrt(dot(x, x)); }

inline bool spd_check(const Matd& m) {
  // Cholesky attempt; also rejects asymmetry beyond roundoff.
  int n = m.n;
  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(m(i, j)));
  if (scale == 0.0) return false;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-8 * scale) return false;
  Matd c = m;
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < k; ++j) c(k, k) -= c(k, j) * c(k, j);
    if (c(k, k) <= 0.0) return false;
    c(k, k) = std::sqrt(c(k, k));
    for (int i = k + 1; i < n; ++i) {
      for (int j = 0; j < k; ++j) c(i, k) -= c(i, j) * c(k, j);
      c(i, k) /= c(k, k);
    }
  }
  return true;
}

}  // namespace flab
