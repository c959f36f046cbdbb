#pragma once

// Forward-mode dual numbers, nestable to arbitrary depth.
// Dual<double> carries one derivative; Dual<Dual<double>> two, and so on.
// Arithmetic mixes Dual<T> with plain double so generic code can use literals.

#include <cmath>
#include <type_traits>

namespace flab {

template <typename T>
struct Dual {
  T v{};  // value
  T d{};  // derivative

  constexpr Dual() = default;
  constexpr Dual(const T& value) : v(value), d() {}
  constexpr Dual(const T& value, const T& deriv) : v(value), d(deriv) {}

  template <typename U,
            typename = std::enable_if_t<std::is_arithmetic_v<U> && !std::is_same_v<U, T>>>
  constexpr Dual(U c) : v(T(c)), d() {}

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) { *this = *this * o; return *this; }
  Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }

  friend constexpr Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
  friend constexpr Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
  friend constexpr Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
  friend constexpr Dual operator*(const Dual& a, const Dual& b) {
    return {a.v * b.v, a.v * b.d + a.d * b.v};
  }
  friend constexpr Dual operator/(const Dual& a, const Dual& b) {
    T inv = T(1.0) / b.v;
    T q = a.v * inv;
    return {q, (a.d - q * b.d) * inv};
  }

  friend constexpr Dual operator+(const Dual& a, double c) { return {a.v + c, a.d}; }
  friend constexpr Dual operator+(double c, const Dual& a) { return {a.v + c, a.d}; }
  friend constexpr Dual operator-(const Dual& a, double c) { return {a.v - c, a.d}; }
  friend constexpr Dual operator-(double c, const Dual& a) { return {c - a.v, -a.d}; }
  friend constexpr Dual operator*(const Dual& a, double c) { return {a.v * c, a.d * c}; }
  friend constexpr Dual operator*(double c, const Dual& a) { return {a.v * c, a.d * c}; }
  friend constexpr Dual operator/(const Dual& a, double c) { return {a.v / c, a.d / c}; }
  friend constexpr Dual operator/(double c, const Dual& a) {
    T inv = T(1.0) / a.v;
    T q = c * inv;
    return {q, -q * a.d * inv};
  }
};

// scalar_value strips all derivative layers.
inline constexpr double scalar_value(double x) { return x; }
template <typename T>
constexpr double scalar_value(const Dual<T>& x) { return scalar_value(x.v); }

inline constexpr bool isfinite_scalar(double x) { return std::isfinite(x); }
template <typename T>
constexpr bool isfinite_scalar(const Dual<T>& x) { return isfinite_scalar(x.v) && isfinite_scalar(x.d); }

template <typename T>
constexpr bool operator<(const Dual<T>& a, const Dual<T>& b) { return scalar_value(a) < scalar_value(b); }
template <typename T>
constexpr bool operator<(const Dual<T>& a, double b) { return scalar_value(a) < b; }
template <typename T>
constexpr bool operator<(double a, const Dual<T>& b) { return a < scalar_value(b); }
template <typename T>
constexpr bool operator>(const Dual<T>& a, double b) { return scalar_value(a) > b; }
template <typename T>
constexpr bool operator>(double a, const Dual<T>& b) { return a > scalar_value(b); }
template <typename T>
constexpr bool operator>(const Dual<T>& a, const Dual<T>& b) { return scalar_value(a) > scalar_value(b); }

using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;
using std::tan;

template <typename T>
Dual<T> sqrt(const Dual<T>& a) {
  T r = sqrt(a.v);
  return {r, a.d / (2.0 * r)};
}

template <typename T>
Dual<T> exp(const Dual<T>& a) {
  T e = exp(a.v);
  return {e, e * a.d};
}

template <typename T>
Dual<T> log(const Dual<T>& a) {
  return {log(a.v), a.d / a.v};
}

template <typename T>
Dual<T> sin(const Dual<T>& a) {
  return {sin(a.v), cos(a.v) * a.d};
}

template <typename T>
Dual<T> cos(const Dual<T>& a) {
  return {cos(a.v), -sin(a.v) * a.d};
}

template <typename T>
Dual<T> tan(const Dual<T>& a) {
  T c = cos(a.v);
  return {tan(a.v), a.d / (c * c)};
}

template <typename T>
Dual<T> pow(const Dual<T>& a, double p) {
  T w = pow(a.v, p);
  return {w, p * pow(a.v, p - 1.0) * a.d};
}

using D0 = double;
using D1 = Dual<double>;
using D2 = Dual<D1>;
using D3 = Dual<D2>;
using D4 = Dual<D3>;

// seed(x) starts a derivative in the outermost layer: d/dx of the lifted variable is 1.
template <typename T>
constexpr Dual<T> seed(const T& x) { return {x, T(1.0)}; }

}  // namespace flab
