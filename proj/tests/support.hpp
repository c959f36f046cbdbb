#pragma once

// Shared fixtures for the test suites: the shipped metric families, a couple
// of deliberately inhomogeneous variants, and finite-difference oracles kept
// independent of the dual-number code paths they check.

#include <cmath>
#include <random>

#include "flab/metric.hpp"

namespace flab::testing {

inline MetricDescriptor euclid(int n) { return MetricDescriptor::euclidean(n); }

inline MetricDescriptor randers_const(int n, double b1 = 0.3) {
  Vecd b(n);
  b[0] = b1;
  return MetricDescriptor::randers(n, constant_covector_map(b));
}

// Variable one-form with |b| bounded well below 1.
inline MetricDescriptor randers_variable() {
  auto b = make_covector_map([](const auto& x) {
    using T = std::decay_t<decltype(x[0])>;
    VecN<T> r(2);
    r[0] = 0.25 + 0.1 * sin(x[0]);
    r[1] = 0.1 * cos(x[1]);
    return r;
  });
  return MetricDescriptor::randers(2, b);
}

// Smooth periodic SPD coefficient field on the 2-torus.
inline MetricDescriptor riemann_diag_torus() {
  auto a = make_matrix_map([](const auto& x) {
    using T = std::decay_t<decltype(x[0])>;
    MatN<T> m(2);
    T s = sin(x[0]);
    T c = cos(x[1]);
    m(0, 0) = 1.0 + 0.5 * s * s;
    m(1, 1) = 1.0 + 0.5 * c * c;
    m(0, 1) = m(1, 0) = 0.1 * s * c;
    return m;
  });
  return MetricDescriptor::riemannian(2, a);
}

inline MetricDescriptor round_sphere_chart(double radius) {
  return MetricDescriptor::riemannian(2, gnomonic_sphere_map(radius));
}

// Custom norm exercising the NormMap path with known-good geometry:
// sqrt of an SPD quadratic plus a small linear term.
inline MetricDescriptor custom_quadratic_randers() {
  auto f = make_norm_map([](const auto& x, const auto& y) {
    using T = std::decay_t<decltype(y[0])>;
    (void)x;
    T q = 2.0 * y[0] * y[0] + y[1] * y[1] + y[0] * y[1];
    return sqrt(q) + 0.2 * y[0];
  });
  return MetricDescriptor::custom(2, f);
}

// Genuinely non-Randers custom norm: quartic root of a positive quartic.
inline MetricDescriptor custom_quartic() {
  auto f = make_norm_map([](const auto& x, const auto& y) {
    using T = std::decay_t<decltype(y[0])>;
    (void)x;
    T q = y[0] * y[0] * y[0] * y[0] + y[1] * y[1] * y[1] * y[1] +
          3.0 * y[0] * y[0] * y[1] * y[1];
    return sqrt(sqrt(q));
  });
  return MetricDescriptor::custom(2, f);
}

struct Family {
  const char* name;
  MetricDescriptor metric;
};

inline std::vector<Family> shipped_families() {
  return {
      {"euclidean2", euclid(2)},
      {"euclidean3", euclid(3)},
      {"randers_const2", randers_const(2)},
      {"randers_const3", randers_const(3)},
      {"randers_variable", randers_variable()},
      {"riemann_diag_torus", riemann_diag_torus()},
      {"round_sphere_chart", round_sphere_chart(1.0)},
      {"custom_quadratic_randers", custom_quadratic_randers()},
      {"custom_quartic", custom_quartic()},
  };
}

inline std::mt19937& rng() {
  static std::mt19937 gen(20240817u);
  return gen;
}

inline double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng());
}

inline Vecd random_point(int n, double box = 1.5) {
  Vecd x(n);
  for (int i = 0; i < n; ++i) x[i] = uniform(-box, box);
  return x;
}

inline Vecd random_direction(int n, double lo = 0.2, double hi = 2.0) {
  Vecd y(n);
  double s = 0.0;
  while (s < 1e-3) {
    for (int i = 0; i < n; ++i) y[i] = uniform(-1.0, 1.0);
    s = norm2(y);
  }
  return (uniform(lo, hi) / s) * y;
}

// Fourth-order central second difference of t -> f(y + t*d) at t = 0.
template <typename F>
double second_directional_difference(F&& f, const Vecd& y, const Vecd& d, double h) {
  auto at = [&](double t) {
    Vecd p = y;
    for (int i = 0; i < y.n; ++i) p[i] += t * d[i];
    return f(p);
  };
  return (-at(2.0 * h) + 16.0 * at(h) - 30.0 * at(0.0) + 16.0 * at(-h) - at(-2.0 * h)) /
         (12.0 * h * h);
}

// g_ij oracle: polarized 4th-order differences of 1/2 F^2 in y.
inline Matd fd_fundamental_tensor(const MetricDescriptor& m, const Vecd& x, const Vecd& y, double h) {
  int n = m.dim();
  auto f2 = [&](const Vecd& yy) { return 0.5 * m.squared_norm(x, yy); };
  Matd g(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      Vecd dp(n), dm(n);
      dp[i] += 1.0;
      dp[j] += 1.0;
      dm[i] += 1.0;
      dm[j] -= 1.0;
      double gpp = second_directional_difference(f2, y, dp, h);
      double gmm = second_directional_difference(f2, y, dm, h);
      g(i, j) = 0.25 * (gpp - gmm);
      g(j, i) = g(i, j);
    }
  return g;
}

// 4th-order central first difference.
template <typename F>
double fd_derivative(F&& f, double h) {
  return (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h);
}

}  // namespace flab::testing
