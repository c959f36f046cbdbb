#pragma once

// 1D quadrature helpers: fixed Gauss rules, periodic trapezoid, and an
// adaptive Simpson driver with a relative-error target.

#include <cmath>
#include <functional>
#include <vector>

#include "flab/errors.hpp"

namespace flab {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussRule gauss_legendre(int n) {
  GaussRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  return r;
}

// Two-point Gauss-Legendre on [0,1].
inline constexpr double kGauss2Node0 = 0.21132486540518713;  // 1/2 - 1/(2 sqrt 3)
inline constexpr double kGauss2Node1 = 0.78867513459481287;

// Composite trapezoid over one full period of a smooth periodic function
// (spectrally accurate).
template <typename F>
double periodic_trapezoid(F&& f, double period, int samples) {
  double h = period / samples;
  double s = 0.0;
  for (int i = 0; i < samples; ++i) s += f(i * h);
  return s * h;
}

namespace detail {
template <typename F>
double adaptive_simpson_rec(F& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double err = left + right - whole;
  if (depth <= 0) throw Error(ErrorKind::NumericFailure, "adaptive quadrature recursion limit");
  if (std::abs(err) <= 15.0 * tol) return left + right + err / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

// Adaptive Simpson with a relative tolerance against a running magnitude
// estimate; splits the interval coarsely first so narrow features are seen.
template <typename F>
double adaptive_quadrature(F&& f, double a, double b, double rel_tol, int initial_cells = 8) {
  if (!(b >= a)) throw Error(ErrorKind::InvalidParameter, "quadrature interval reversed");
  if (a == b) return 0.0;
  double scale = 0.0;
  double h = (b - a) / initial_cells;
  for (int i = 0; i <= initial_cells; ++i) scale = std::max(scale, std::abs(f(a + i * h)));
  double abs_tol = rel_tol * std::max(scale * (b - a), 1e-300);
  double total = 0.0;
  for (int i = 0; i < initial_cells; ++i) {
    double x0 = a + i * h, x1 = x0 + h, xm = 0.5 * (x0 + x1);
    double f0 = f(x0), f1 = f(x1), fm = f(xm);
    double whole = h / 6.0 * (f0 + 4.0 * fm + f1);
    total += detail::adaptive_simpson_rec(f, x0, x1, f0, fm, f1, whole,
                                          abs_tol / initial_cells, 48);
  }
  return total;
}

}  // namespace flab
