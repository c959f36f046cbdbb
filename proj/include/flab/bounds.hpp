#pragma once

// Eigenvalue lower bounds from scanned curvature hypotheses, the auxiliary
// comparison function psi with its floor integral, and the ball-volume
// monotonicity check. A bound entry records which hypothesis fired, the
// bound itself, and (where the equality case is rigid) the diameter forced
// at equality; verdicts are attached once an eigenvalue estimate exists.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "flab/domain.hpp"
#include "flab/errors.hpp"
#include "flab/quadrature.hpp"
#include "flab/scan.hpp"

namespace flab {

enum class Verdict { Unevaluated, SatisfiedAtEquality, Satisfied, ViolatedWithinTolerance, Violated };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Unevaluated: return "unevaluated";
    case Verdict::SatisfiedAtEquality: return "satisfied-at-equality";
    case Verdict::Satisfied: return "satisfied";
    case Verdict::ViolatedWithinTolerance: return "violated-within-tolerance";
    case Verdict::Violated: return "violated";
  }
  return "?";
}

struct BoundEntry {
  std::string theorem;  // stable key, also the report row label
  double bound = 0.0;   // lower bound for the first eigenvalue
  // diameter forced when the bound is attained; NaN when the equality case
  // carries no rigid diameter
  double equality_diameter = std::numeric_limits<double>::quiet_NaN();
  Verdict verdict = Verdict::Unevaluated;
};

struct BoundsReport {
  int dim = 0;
  double diameter = 0.0;
  double lambda1 = std::numeric_limits<double>::quiet_NaN();
  std::vector<BoundEntry> entries;

  bool any(const std::string& name) const {
    for (const auto& e : entries)
      if (e.theorem == name) return true;
    return false;
  }
  const BoundEntry& get(const std::string& name) const {
    for (const auto& e : entries)
      if (e.theorem == name) return e;
    throw Error(ErrorKind::InvalidInput, "no bound entry named " + name);
  }
  double best_bound() const {
    double b = -std::numeric_limits<double>::infinity();
    for (const auto& e : entries) b = std::max(b, e.bound);
    return b;
  }
};

// Hypothesis certification slack for scanned infima: a scan cannot certify
// an exact sign, so "nonnegative" admits values down to -kRicSlack. The
// slack is reported implicitly through the scan witnesses.
inline constexpr double kRicSlack = 1e-6;

// Applies every bound whose hypotheses the scan certifies.
//  - weighted_ricci_N=<N>: Ric_N >= (n-1)k with the S'-rate cap
//    sup S' <= (N-n)(n-1)k/(N-1) gives lambda_1 >= (n-1)Nk/(N-1); at
//    equality the diameter is sqrt((N-1)/(n-1)) pi/sqrt(k).
//  - vanishing_s: S == 0 and Ric >= (n-1)k > 0 give lambda_1 >= nk; the
//    equality diameter is pi/sqrt(k).
//  - nonnegative_ric_infty: Ric_infty >= 0 gives lambda_1 >= pi^2/d^2.
//  - constant_s: S = (n+1)cF with Ric >= 0 gives lambda_1 >= pi^2/d^2.
inline BoundsReport theorem_bounds(const CurvatureScan& scan, double diam, int n) {
  if (n != scan.dim)
    throw Error(ErrorKind::InvalidInput, "bounds dimension does not match the scan");
  if (!(diam > 0.0)) throw Error(ErrorKind::InvalidParameter, "diameter must be positive");

  BoundsReport rep;
  rep.dim = n;
  rep.diameter = diam;
  double pi_d2 = M_PI * M_PI / (diam * diam);

  if (n >= 2) {
    for (std::size_t i = 0; i < scan.requested_N.size(); ++i) {
      double N = scan.requested_N[i];
      if (std::isinf(N)) continue;  // handled by the Ric_infty bound
      double k = scan.inf_ric_N[i] / (n - 1);
      if (k < -kRicSlack) continue;
      k = std::max(k, 0.0);
      double sdot_cap = (N - n) * (n - 1) * k / (N - 1);
      if (scan.sup_s_dot > sdot_cap + kRicSlack) continue;
      char name[48];
      std::snprintf(name, sizeof name, "weighted_ricci_N=%g", N);
      BoundEntry e;
      e.theorem = name;
      e.bound = (n - 1) * N * k / (N - 1);
      if (k > 0.0) e.equality_diameter = std::sqrt((N - 1) / double(n - 1)) * M_PI / std::sqrt(k);
      rep.entries.push_back(e);
    }

    double k = scan.inf_ric_over_nminus1;
    if (scan.s_identically_zero && k > kRicSlack) {
      BoundEntry e;
      e.theorem = "vanishing_s";
      e.bound = n * k;
      e.equality_diameter = M_PI / std::sqrt(k);
      rep.entries.push_back(e);
    }
  }

  if (scan.inf_ric_infty >= -kRicSlack) {
    BoundEntry e;
    e.theorem = "nonnegative_ric_infty";
    e.bound = pi_d2;
    rep.entries.push_back(e);
  }

  // raw Ricci infimum; one-dimensional metrics have Ric == 0
  double inf_ric = (n >= 2) ? scan.inf_ric_over_nminus1 * (n - 1) : 0.0;
  if (scan.s_constant_multiple_of_F && inf_ric >= -kRicSlack) {
    BoundEntry e;
    e.theorem = "constant_s";
    e.bound = pi_d2;
    rep.entries.push_back(e);
  }

  return rep;
}

// Attaches a verdict to every entry. Equality is checked first so a
// discrete eigenvalue marginally below a sharp bound still reads as the
// equality case rather than a violation.
inline void apply_verdicts(BoundsReport& rep, double lambda1, double equality_rtol = 0.01,
                           double violation_rtol = 0.02) {
  if (!(lambda1 > 0.0))
    throw Error(ErrorKind::InvalidParameter, "eigenvalue estimate must be positive");
  rep.lambda1 = lambda1;
  for (auto& e : rep.entries) {
    if (std::abs(lambda1 - e.bound) <= equality_rtol * e.bound)
      e.verdict = Verdict::SatisfiedAtEquality;
    else if (lambda1 >= e.bound)
      e.verdict = Verdict::Satisfied;
    else if (lambda1 >= (1.0 - violation_rtol) * e.bound)
      e.verdict = Verdict::ViolatedWithinTolerance;
    else
      e.verdict = Verdict::Violated;
  }
}

// Comparison function on [-pi/2, pi/2]:
//   psi(t) = ((4/pi)(t + cos t sin t) - 2 sin t) / cos^2 t,
// odd, increasing from -1 to 1, with removable singularities at the
// endpoints evaluated by series.
inline double zhong_yang_psi(double theta) {
  if (std::abs(theta) > M_PI_2)
    throw Error(ErrorKind::OutOfDomain, "psi argument outside [-pi/2, pi/2]");
  double c = std::cos(theta);
  if (std::abs(c) < 1e-4) {
    // series in t = pi/2 - |theta|; truncation error O(t^4) < 1e-16 here
    double t = M_PI_2 - std::abs(theta);
    double psi = 1.0 - (8.0 / (3.0 * M_PI)) * t + 0.25 * t * t - (16.0 / (45.0 * M_PI)) * t * t * t;
    return theta >= 0.0 ? psi : -psi;
  }
  double s = std::sin(theta);
  return ((4.0 / M_PI) * (theta + c * s) - 2.0 * s) / (c * c);
}

// Integral of (1 + a psi)^(-1/2) over [-pi/2 + delta, pi/2 - delta].
// Since psi is odd and x -> 1/sqrt(1+x) is convex, the symmetrized
// integrand is >= 1, so the value is >= pi - 2 delta; that floor is
// asserted after quadrature as a numerical self-check.
inline double zhong_yang_integral(double a_eps, double delta) {
  if (!(a_eps >= 0.0 && a_eps < 1.0))
    throw Error(ErrorKind::InvalidParameter, "a_eps must lie in [0, 1)");
  if (!(delta >= 0.0 && delta < M_PI_2))
    throw Error(ErrorKind::InvalidParameter, "delta must lie in [0, pi/2)");
  // |psi| <= 1 keeps 1 + a psi >= 1 - a_eps; require a positive margin
  if (1.0 - a_eps < 1e-12)
    throw Error(ErrorKind::OutOfDomain, "integrand singular: 1 + a_eps*psi reaches zero");

  auto f = [a_eps](double th) { return 1.0 / std::sqrt(1.0 + a_eps * zhong_yang_psi(th)); };
  double val = adaptive_quadrature(f, -M_PI_2 + delta, M_PI_2 - delta, 1e-10);
  double floor_val = M_PI - 2.0 * delta;
  if (val < floor_val - 1e-8)
    throw Error(ErrorKind::NumericFailure, "comparison integral fell below its analytic floor");
  return val;
}

struct VolumeComparisonReport {
  double k = 0.0;
  double lambda = 0.0;
  std::vector<double> radii;
  std::vector<double> ball_volumes;
  std::vector<double> model_volumes;
  std::vector<double> ratios;
  bool non_increasing = false;  // within 2% per step
};

// Checks the ball-volume ratio monotonicity vol(B(x,r))/V_{k,Lambda,n}(r).
// The hypotheses Ric >= (n-1)k and sup|S| <= Lambda are certified by an
// internal scan before any volume is computed; a failed hypothesis reports
// the offending quantity and its witness value.
inline VolumeComparisonReport volume_comparison_check(const Mesh& mesh,
                                                      const MetricDescriptor& metric,
                                                      const VolumeDescriptor& volume, const Vecd& x,
                                                      double k, double lambda,
                                                      const std::vector<double>& r_grid,
                                                      int scan_directions = 16) {
  if (!(lambda >= 0.0))
    throw Error(ErrorKind::InvalidParameter, "S-curvature cap must be nonnegative");
  if (r_grid.empty()) throw Error(ErrorKind::InvalidParameter, "radius grid is empty");
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    if (!(r_grid[i] > 0.0))
      throw Error(ErrorKind::InvalidParameter, "radius grid entries must be positive");
    if (i > 0 && !(r_grid[i] > r_grid[i - 1]))
      throw Error(ErrorKind::InvalidParameter, "radius grid must be strictly increasing");
  }

  int n = metric.dim();
  CurvatureScan scan = curvature_scan(metric, volume, mesh, std::max(8, scan_directions));
  double inf_ric = (n >= 2) ? scan.inf_ric_over_nminus1 * (n - 1) : 0.0;
  char msg[200];
  if (inf_ric < (n - 1) * k - kRicSlack) {
    std::snprintf(msg, sizeof msg,
                  "comparison hypothesis not certified: inf Ric = %.6g < (n-1)k = %.6g", inf_ric,
                  (n - 1) * k);
    throw Error(ErrorKind::InvalidParameter, msg);
  }
  if (scan.sup_abs_s > lambda + kRicSlack) {
    std::snprintf(msg, sizeof msg,
                  "comparison hypothesis not certified: sup|S| = %.6g > Lambda = %.6g",
                  scan.sup_abs_s, lambda);
    throw Error(ErrorKind::InvalidParameter, msg);
  }

  VolumeComparisonReport rep;
  rep.k = k;
  rep.lambda = lambda;
  rep.radii = r_grid;
  for (double r : r_grid) {
    double bv = ball_volume(mesh, metric, volume, x, r);
    double mv = comparison_volume(k, lambda, n, r);
    rep.ball_volumes.push_back(bv);
    rep.model_volumes.push_back(mv);
    rep.ratios.push_back(bv / mv);
  }
  rep.non_increasing = true;
  for (std::size_t i = 1; i < rep.ratios.size(); ++i)
    if (rep.ratios[i] > rep.ratios[i - 1] * 1.02) rep.non_increasing = false;
  return rep;
}

}  // namespace flab
