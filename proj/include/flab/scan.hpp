#pragma once

// Curvature scans: sample Ricci, weighted Ricci, and S-curvature quantities
// over the mesh vertices with a low-discrepancy set of unit-norm directions,
// and reduce to the infima/suprema that the eigenvalue bounds consume. Every
// extremum carries its arg-min/arg-max sample so a reported hypothesis can be
// audited at a concrete (x, y).

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "flab/curvature.hpp"
#include "flab/errors.hpp"
#include "flab/linalg.hpp"
#include "flab/mesh.hpp"
#include "flab/metric.hpp"
#include "flab/volume.hpp"

namespace flab {

struct ScanWitness {
  int vertex = -1;
  Vecd x;  // mesh coordinates of the vertex (embedded on the sphere)
  Vecd y;  // direction in the evaluation chart, normalized to F = 1
  double value = 0.0;
};

struct CurvatureScan {
  int dim = 0;
  int directions_per_vertex = 0;
  long sample_count = 0;

  // Ricci per flag plane. One-dimensional metrics have no flags; both
  // extrema are fixed at zero there.
  double inf_ric_over_nminus1 = 0.0;
  double sup_ric_over_nminus1 = 0.0;
  double mean_ric_over_nminus1 = 0.0;

  // Ric_infty = Ric + S' is always scanned (fourth bound hypothesis).
  double inf_ric_infty = 0.0;
  double sup_ric_infty = 0.0;
  double mean_ric_infty = 0.0;

  // Weighted Ricci for the requested finite effective dimensions.
  std::vector<double> requested_N;
  std::vector<double> inf_ric_N;
  std::vector<double> mean_ric_N;

  double sup_s_dot = 0.0;  // sup of S'(y)/F^2
  double sup_abs_s = 0.0;  // sup of |S(y)|/F, the operator norm of S

  // Certification flags. Scale-aware absolute threshold: S has dimension
  // 1/length, so "zero" means below 1e-9 per characteristic mesh length.
  double s_zero_threshold = 0.0;
  bool s_identically_zero = false;
  bool s_constant_multiple_of_F = false;
  double s_constant_c = 0.0;  // fitted c in S = (n+1) c F

  ScanWitness ric_argmin;
  ScanWitness ric_infty_argmin;
  ScanWitness s_dot_argmax;
  ScanWitness abs_s_argmax;
};

namespace detail {

inline std::string format_sample_point(int vertex, const Vecd& x, const Vecd& y) {
  char buf[160];
  std::string s = "sample at vertex " + std::to_string(vertex) + ", x = (";
  for (int i = 0; i < x.n; ++i) {
    std::snprintf(buf, sizeof buf, "%s%.6g", i ? ", " : "", x[i]);
    s += buf;
  }
  s += "), y = (";
  for (int i = 0; i < y.n; ++i) {
    std::snprintf(buf, sizeof buf, "%s%.6g", i ? ", " : "", y[i]);
    s += buf;
  }
  s += ")";
  return s;
}

// Direction set in an n-dimensional chart: the 2n signed axes first (they
// realize the extrema of axis-aligned model metrics exactly), then a
// low-discrepancy angular fill rotated per vertex so the vertex x direction
// grid does not resonate with the mesh.
inline Vecd scan_direction(int n, int j, int vertex) {
  Vecd d(n);
  if (j < 2 * n) {
    d[j / 2] = (j % 2 == 0) ? 1.0 : -1.0;
    return d;
  }
  constexpr double kAlpha = 0.7548776662466927;   // plastic-number pair,
  constexpr double kBeta = 0.5698402909980532;    // 2d Kronecker sequence
  double t = (j - 2 * n + 1) * kAlpha + vertex * kBeta;
  double theta = 2.0 * M_PI * (t - std::floor(t));
  d[0] = std::cos(theta);
  d[1] = std::sin(theta);
  return d;
}

}  // namespace detail

inline CurvatureScan curvature_scan(const MetricDescriptor& metric, const VolumeDescriptor& volume,
                                    const Mesh& mesh, int direction_samples = 32,
                                    const std::vector<double>& N_list = {}) {
  int n = metric.dim();
  if (mesh.dim != n)
    throw Error(ErrorKind::InvalidInput, "mesh dimension does not match the metric");
  if (direction_samples < 8)
    throw Error(ErrorKind::InvalidParameter, "curvature scan needs at least 8 directions per vertex");
  for (double N : N_list)
    if (!std::isinf(N) && !(N > n))
      throw Error(ErrorKind::InvalidParameter,
                  "weighted Ricci dimension list entries must exceed the dimension (or be infinity)");

  CurvatureScan scan;
  scan.dim = n;
  scan.requested_N = N_list;
  scan.inf_ric_N.assign(N_list.size(), std::numeric_limits<double>::infinity());
  scan.mean_ric_N.assign(N_list.size(), 0.0);
  scan.s_zero_threshold = 1e-9 / mesh.characteristic_length();

  // A segment chart has exactly two rays; more samples would be duplicates.
  scan.directions_per_vertex = (n == 1) ? 2 : direction_samples;

  double inf_ric = std::numeric_limits<double>::infinity();
  double sup_ric = -std::numeric_limits<double>::infinity();
  double sum_ric = 0.0;
  double inf_rinf = std::numeric_limits<double>::infinity();
  double sup_rinf = -std::numeric_limits<double>::infinity();
  double sum_rinf = 0.0;
  double sup_sdot = -std::numeric_limits<double>::infinity();
  double sup_abss = 0.0;
  double sum_s = 0.0, max_s = -std::numeric_limits<double>::infinity();
  double min_s = std::numeric_limits<double>::infinity();

  for (int v = 0; v < mesh.num_verts(); ++v) {
    // Sphere vertices are evaluated at the center of their own gnomonic
    // chart (x = 0), where the shipped round-metric descriptor is exact;
    // flat meshes evaluate at the vertex chart coordinates.
    Vecd x(n);
    if (mesh.kind != MeshKind::Sphere) x = mesh.verts[v];

    VolumeDerivs vd;
    Vecd y(n);
    try {
      vd = volume_derivs(metric, volume, x);
      for (int j = 0; j < scan.directions_per_vertex; ++j) {
        Vecd dir = detail::scan_direction(n, j, v);
        double f = std::sqrt(metric.squared_norm(x, dir));
        for (int i = 0; i < n; ++i) y[i] = dir[i] / f;

        double ric = ricci_scalar(metric, x, y);
        double s = s_curvature(metric, x, y, vd);
        double sdot = s_curvature_rate(metric, x, y, vd);
        double f2 = metric.squared_norm(x, y);
        double rinf = ric + sdot;

        ++scan.sample_count;
        sum_ric += ric;
        sum_rinf += rinf;
        sum_s += s;
        if (s > max_s) max_s = s;
        if (s < min_s) min_s = s;

        const Vecd& wx = mesh.verts[v];
        if (ric < inf_ric) {
          inf_ric = ric;
          scan.ric_argmin = {v, wx, y, (n > 1) ? ric / (n - 1) : 0.0};
        }
        if (ric > sup_ric) sup_ric = ric;
        if (rinf < inf_rinf) {
          inf_rinf = rinf;
          scan.ric_infty_argmin = {v, wx, y, rinf};
        }
        if (rinf > sup_rinf) sup_rinf = rinf;
        if (sdot > sup_sdot) {
          sup_sdot = sdot;
          scan.s_dot_argmax = {v, wx, y, sdot};
        }
        if (std::abs(s) > sup_abss) {
          sup_abss = std::abs(s);
          scan.abs_s_argmax = {v, wx, y, s};
        }
        for (std::size_t k = 0; k < N_list.size(); ++k) {
          double N = N_list[k];
          double rn = std::isinf(N) ? rinf : rinf - s * s / ((N - n) * f2);
          if (rn < scan.inf_ric_N[k]) scan.inf_ric_N[k] = rn;
          scan.mean_ric_N[k] += rn;
        }
      }
    } catch (const Error& e) {
      throw Error(e.kind(), e.message() + "; " + detail::format_sample_point(v, mesh.verts[v], y));
    }
  }

  if (scan.sample_count == 0) throw Error(ErrorKind::InvalidInput, "curvature scan over an empty mesh");

  double cnt = double(scan.sample_count);
  if (n > 1) {
    scan.inf_ric_over_nminus1 = inf_ric / (n - 1);
    scan.sup_ric_over_nminus1 = sup_ric / (n - 1);
    scan.mean_ric_over_nminus1 = sum_ric / cnt / (n - 1);
  }
  scan.inf_ric_infty = inf_rinf;
  scan.sup_ric_infty = sup_rinf;
  scan.mean_ric_infty = sum_rinf / cnt;
  scan.sup_s_dot = sup_sdot;
  scan.sup_abs_s = sup_abss;
  for (std::size_t k = 0; k < N_list.size(); ++k) scan.mean_ric_N[k] /= cnt;

  scan.s_identically_zero = scan.sup_abs_s <= scan.s_zero_threshold;
  // Fit S = (n+1) c F on the unit-norm samples; the flag allows the same
  // absolute slack as the zero test plus a relative part for large c.
  scan.s_constant_c = sum_s / cnt / (n + 1);
  double dev = std::max(max_s - sum_s / cnt, sum_s / cnt - min_s);
  scan.s_constant_multiple_of_F =
      dev <= scan.s_zero_threshold + 1e-9 * std::abs(sum_s / cnt);
  return scan;
}

}  // namespace flab
