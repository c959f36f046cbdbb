// Acceptance gate: eight end-to-end criteria, one PASS/FAIL line each.
// Every tolerance and time budget is pinned here, next to its check; the
// binary exits nonzero when any line fails. Failure details are printed
// inline so a red line is diagnosable from the log alone.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flab/bounds.hpp"
#include "flab/curvature.hpp"
#include "flab/domain.hpp"
#include "flab/fields.hpp"
#include "flab/scan.hpp"
#include "flab/spectral.hpp"

#include "support.hpp"

namespace {

using namespace flab;
using flab::testing::shipped_families;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Gate {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (cond) return;
    ok = false;
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
  void expect_close(double got, double want, double tol, const std::string& what) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s: got %.10g, want %.10g +- %.3g", what.c_str(), got, want,
                  tol);
    expect(std::abs(got - want) <= tol, buf);
  }
};

double seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Rayleigh minimization over ~200 trigonometric modes on the 2pi x 2pi
// torus, independent of the mesh pipeline: the frozen-metric pencil
// proposes descent directions, each accepted only if the true quotient
// (grid quadrature, constant density divided out) decreases.
double trig_subspace_lambda(const MetricDescriptor& metric, int max_mode, int grid) {
  const int npairs = (2 * max_mode + 1) * (2 * max_mode + 1) / 2;
  const int nmodes = 2 * npairs;
  const int nq = grid * grid;
  Eigen::MatrixXd phi(nq, nmodes), gx(nq, nmodes), gy(nq, nmodes);
  std::vector<double> xs(nq), ys(nq);
  for (int p = 0; p < grid; ++p)
    for (int q = 0; q < grid; ++q) {
      int row = p * grid + q;
      xs[row] = 2.0 * M_PI * p / grid;
      ys[row] = 2.0 * M_PI * q / grid;
    }
  int col = 0;
  int first_cos_x = -1;
  for (int i = -max_mode; i <= max_mode; ++i)
    for (int j = -max_mode; j <= max_mode; ++j) {
      if (i < 0 || (i == 0 && j <= 0)) continue;
      if (i == 1 && j == 0) first_cos_x = col;
      for (int row = 0; row < nq; ++row) {
        double th = i * xs[row] + j * ys[row];
        phi(row, col) = std::cos(th);
        gx(row, col) = -i * std::sin(th);
        gy(row, col) = -j * std::sin(th);
        phi(row, col + 1) = std::sin(th);
        gx(row, col + 1) = i * std::cos(th);
        gy(row, col + 1) = j * std::cos(th);
      }
      col += 2;
    }
  Eigen::MatrixXd B = phi.transpose() * phi;

  Vecd e1(2);
  e1[0] = 1.0;
  auto true_rq = [&](const Eigen::VectorXd& c) {
    Eigen::VectorXd u = phi * c, ux = gx * c, uy = gy * c;
    double num = 0.0, den = 0.0;
    for (int row = 0; row < nq; ++row) {
      den += u[row] * u[row];
      Vecd x(2), xi(2);
      x[0] = xs[row];
      x[1] = ys[row];
      xi[0] = ux[row];
      xi[1] = uy[row];
      if (norm2(xi) > 1e-13) {
        Vecd y = legendre_inverse(metric, x, xi);
        num += metric.squared_norm(x, y);
      }
    }
    return num / den;
  };

  auto descend = [&](Eigen::VectorXd c) {
    c /= std::sqrt(c.dot(B * c));
    double rq = true_rq(c);
    for (int it = 0; it < 120; ++it) {
      Eigen::VectorXd ux = gx * c, uy = gy * c;
      Eigen::VectorXd d11(nq), d12(nq), d22(nq);
      for (int row = 0; row < nq; ++row) {
        Vecd x(2), xi(2);
        x[0] = xs[row];
        x[1] = ys[row];
        xi[0] = ux[row];
        xi[1] = uy[row];
        Vecd ref = (norm2(xi) > 1e-13) ? legendre_inverse(metric, x, xi) : e1;
        Matd g = fundamental_tensor_t<double>(metric, x, ref);
        double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
        d11[row] = g(1, 1) / det;
        d12[row] = -g(0, 1) / det;
        d22[row] = g(0, 0) / det;
      }
      Eigen::MatrixXd A = gx.transpose() * d11.asDiagonal() * gx +
                          gx.transpose() * d12.asDiagonal() * gy +
                          gy.transpose() * d12.asDiagonal() * gx +
                          gy.transpose() * d22.asDiagonal() * gy;
      A = 0.5 * (A + A.transpose()).eval();
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(A, B);
      if (ges.info() != Eigen::Success)
        throw Error(ErrorKind::NumericFailure, "subspace eigensolve failed");
      Eigen::VectorXd prop = ges.eigenvectors().col(0);
      if (prop.dot(B * c) < 0.0) prop = -prop;
      double step = 1.0;
      bool accepted = false;
      for (int bs = 0; bs < 12 && !accepted; ++bs) {
        Eigen::VectorXd cand = (1.0 - step) * c + step * prop;
        cand /= std::sqrt(cand.dot(B * cand));
        double rq2 = true_rq(cand);
        if (rq2 < rq - 1e-14 * rq) {
          c = cand;
          rq = rq2;
          accepted = true;
        }
        step *= 0.5;
      }
      if (!accepted) break;
    }
    return rq;
  };

  Eigen::VectorXd c0 = Eigen::VectorXd::Zero(nmodes);
  c0[first_cos_x] = 1.0;
  double best = std::min(descend(c0), descend(-c0));
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd cr(nmodes);
  for (int i = 0; i < nmodes; ++i) cr[i] = dist(gen);
  return std::min(best, descend(cr));
}

// 1. Circle S^1 of radius 1: lambda1 = 1 within 0.5% at 512 vertices, the
//    pi^2/d^2 bound evaluates to 1 and lands satisfied-at-equality within 1%.
//    Budget 5 s.
void circle_equality(Gate& g) {
  DomainSpec spec = DomainSpec::circle(1.0);
  Mesh mesh = build_mesh(spec, 512);
  VolumeDescriptor vol = VolumeDescriptor::riemannian();
  SpectralResult sr = first_eigenpair(spec.metric, mesh, vol);
  g.expect_close(sr.lambda1, 1.0, 0.005, "lambda1");

  CurvatureScan scan = curvature_scan(spec.metric, vol, mesh, 8, {});
  DiameterResult d = diameter(mesh, spec.metric);
  BoundsReport rep = theorem_bounds(scan, d.value, 1);
  apply_verdicts(rep, sr.lambda1, 0.01, 0.02);
  g.expect(rep.any("nonnegative_ric_infty"), "flat-case bound missing");
  if (!rep.any("nonnegative_ric_infty")) return;
  const BoundEntry& e = rep.get("nonnegative_ric_infty");
  g.expect_close(e.bound, 1.0, 0.01, "pi^2/d^2");
  g.expect(e.verdict == Verdict::SatisfiedAtEquality,
           std::string("verdict ") + verdict_name(e.verdict) + ", want satisfied-at-equality");
}

// 2. Unit round S^2, Riemannian volume: scan certifies Ric = 1 and S == 0,
//    the vanishing-S bound is nk = 2, lambda1 = 2 within 2% at icosphere
//    resolution 4. Budget 60 s.
void sphere_equality(Gate& g) {
  DomainSpec spec = DomainSpec::sphere(1.0);
  Mesh mesh = build_mesh(spec, 4);
  VolumeDescriptor vol = VolumeDescriptor::riemannian();

  CurvatureScan scan = curvature_scan(spec.metric, vol, mesh, 32, {});
  g.expect_close(scan.inf_ric_over_nminus1, 1.0, 1e-6, "inf Ric");
  g.expect_close(scan.sup_ric_over_nminus1, 1.0, 1e-6, "sup Ric");
  g.expect(scan.s_identically_zero, "S not certified zero");

  DiameterResult d = diameter(mesh, spec.metric);
  BoundsReport rep = theorem_bounds(scan, d.value, 2);
  g.expect(rep.any("vanishing_s"), "vanishing-S bound missing");
  if (rep.any("vanishing_s")) g.expect_close(rep.get("vanishing_s").bound, 2.0, 1e-6, "nk");

  SpectralResult sr = first_eigenpair(spec.metric, mesh, vol);
  g.expect_close(sr.lambda1, 2.0, 0.04, "lambda1");
}

// 3. Flat 2pi x 2pi torus, F = |y| + 0.3 y^1, Busemann-Hausdorff volume:
//    scan certifies flag curvature 0 (in 2D the Ricci scalar is the flag
//    curvature), |S| < 1e-9, Ric_infty = 0; lambda1 clears pi^2/d^2 within
//    2% and matches a ~200-mode trigonometric Rayleigh minimum within 1%.
//    Budget 120 s.
void randers_flat(Gate& g) {
  MetricDescriptor rc = testing::randers_const(2, 0.3);
  VolumeDescriptor bh = VolumeDescriptor::busemann_hausdorff(256);
  Mesh mesh = build_torus_mesh(2.0 * M_PI, 2.0 * M_PI, 64);

  CurvatureScan scan = curvature_scan(rc, bh, mesh, 16, {kInf});
  g.expect(std::abs(scan.inf_ric_over_nminus1) < 1e-9 &&
               std::abs(scan.sup_ric_over_nminus1) < 1e-9,
           "flag curvature not certified zero");
  g.expect(scan.sup_abs_s < 1e-9, "sup|S| >= 1e-9");
  g.expect(std::abs(scan.inf_ric_infty) < 1e-9 && std::abs(scan.sup_ric_infty) < 1e-9,
           "Ric_infty not certified zero");

  DiameterResult d = diameter(mesh, rc);
  SpectralResult sr = first_eigenpair(rc, mesh, bh);
  BoundsReport rep = theorem_bounds(scan, d.value, 2);
  apply_verdicts(rep, sr.lambda1, 0.01, 0.02);
  g.expect(rep.any("nonnegative_ric_infty"), "pi^2/d^2 bound missing");
  if (rep.any("nonnegative_ric_infty")) {
    const BoundEntry& e = rep.get("nonnegative_ric_infty");
    g.expect(e.verdict != Verdict::Violated && e.verdict != Verdict::Unevaluated,
             std::string("pi^2/d^2 verdict ") + verdict_name(e.verdict));
  }

  double oracle = trig_subspace_lambda(rc, 7, 64);
  char buf[120];
  std::snprintf(buf, sizeof buf, "lambda1 %.8g vs subspace %.8g", sr.lambda1, oracle);
  g.expect(std::abs(sr.lambda1 - oracle) <= 0.01 * oracle, buf);
}

// 4. Euclidean torus, u = sin x1, unweighted: the pointwise identity
//    residual is <= 1e-4 at resolution 128 and shrinks >= 3x per doubling;
//    the inequality slack stays >= -1e-6 for N in {2, 3, inf}.
void bochner_identity(Gate& g) {
  MetricDescriptor eu = testing::euclid(2);
  VolumeDescriptor vol = VolumeDescriptor::riemannian();
  double prev = kInf;
  for (int res : {32, 64, 128}) {
    Mesh mesh = build_torus_mesh(2.0 * M_PI, 2.0 * M_PI, res);
    ScalarField u = sample_vertex_field(mesh, [](const Vecd& p) { return std::sin(p[0]); });
    PolynomialReconstructor recon(mesh);
    BochnerReport rep = bochner_residual(eu, mesh, vol, u, kInf, recon);
    if (std::isfinite(prev)) {
      char buf[120];
      std::snprintf(buf, sizeof buf, "residual at res %d: %.3g, previous %.3g", res,
                    rep.max_equality_residual, prev);
      g.expect(rep.max_equality_residual <= prev / 3.0, buf);
    }
    prev = rep.max_equality_residual;
    if (res == 128) {
      g.expect(rep.max_equality_residual <= 1e-4, "equality residual > 1e-4 at res 128");
      for (double N : {2.0, 3.0, kInf}) {
        BochnerReport rn = bochner_residual(eu, mesh, vol, u, N, recon);
        char buf[96];
        std::snprintf(buf, sizeof buf, "slack %.3g at N=%g", rn.min_inequality_slack, N);
        g.expect(rn.min_inequality_slack >= -1e-6, buf);
      }
    }
  }
}

// 5. Gaussian-weighted Euclidean torus (phi = -x1^2/2, u = sin x1): the
//    trace identity residual converges at order >= 1.8 between resolutions
//    32 and 64, sampled away from the wrap seam where the weight jumps.
void trace_identity(Gate& g) {
  MetricDescriptor eu = testing::euclid(2);
  auto gauss = make_scalar_map([](const auto& x) { return -0.5 * x[0] * x[0]; });
  VolumeDescriptor vol = VolumeDescriptor::explicit_phi(gauss);
  double errs[2];
  int idx = 0;
  for (int res : {32, 64}) {
    Mesh mesh = build_torus_mesh(2.0 * M_PI, 2.0 * M_PI, res);
    ScalarField u = sample_vertex_field(mesh, [](const Vecd& p) { return std::sin(p[0]); });
    PolynomialReconstructor recon(mesh);
    GradientField gf = gradient(eu, mesh, u);
    ScalarField lap = divergence(eu, mesh, vol, gf.grad);
    double worst = 0.0;
    for (int cell = 0; cell < mesh.num_cells(); cell += 3) {
      if (!gf.mask[cell]) continue;
      double xc =
          (mesh.corners[cell][0][0] + mesh.corners[cell][1][0] + mesh.corners[cell][2][0]) / 3.0;
      if (xc < 1.3 || xc > 5.0) continue;
      worst = std::max(worst, trace_identity_residual(eu, mesh, vol, u, cell, recon, gf, lap));
    }
    errs[idx++] = worst;
  }
  double order = std::log2(errs[0] / errs[1]);
  char buf[120];
  std::snprintf(buf, sizeof buf, "order %.3f (residuals %.3g -> %.3g)", order, errs[0], errs[1]);
  g.expect(order >= 1.8, buf);
  g.expect(errs[1] <= 7e-2, "residual at res 64 above sanity cap");
}

// 6. Comparison profile: psi(0) = 0 and psi(+-pi/2) = +-1 exactly, and the
//    floor integral stays >= pi - 2*delta - 1e-8 over the documented grid.
//    Budget 1 s.
void zhong_yang(Gate& g) {
  g.expect(zhong_yang_psi(0.0) == 0.0, "psi(0) != 0");
  g.expect(zhong_yang_psi(M_PI_2) == 1.0, "psi(pi/2) != 1");
  g.expect(zhong_yang_psi(-M_PI_2) == -1.0, "psi(-pi/2) != -1");
  for (double a : {0.0, 0.25, 0.5, 0.75, 0.9}) {
    for (double delta : {0.001, 0.01, 0.1}) {
      double val = zhong_yang_integral(a, delta);
      double floor = M_PI - 2.0 * delta;
      char buf[120];
      std::snprintf(buf, sizeof buf, "integral(%.3g, %.3g) = %.12g < %.12g", a, delta, val, floor);
      g.expect(val >= floor - 1e-8, buf);
    }
  }
}

// 7. Ball-volume comparison: on the unit sphere the measured/model ratios sit
//    at 1 within 2%; on the flat torus, radii past the injectivity radius give
//    a strictly decreasing sequence. Budget 30 s.
void volume_comparison(Gate& g) {
  {
    DomainSpec spec = DomainSpec::sphere(1.0);
    Mesh mesh = build_mesh(spec, 4);
    VolumeComparisonReport r =
        volume_comparison_check(mesh, spec.metric, VolumeDescriptor::riemannian(), mesh.verts[0],
                                1.0, 0.0, {0.5, 1.0, 1.5, 2.0, 2.5}, 8);
    for (std::size_t i = 0; i < r.ratios.size(); ++i) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "sphere ratio at r=%.2g: %.6g", r.radii[i], r.ratios[i]);
      g.expect(std::abs(r.ratios[i] - 1.0) <= 0.02, buf);
    }
    g.expect(r.non_increasing, "sphere ratio sequence increased");
  }
  {
    MetricDescriptor eu = testing::euclid(2);
    Mesh mesh = build_torus_mesh(2.0 * M_PI, 2.0 * M_PI, 48);
    Vecd center{M_PI, M_PI};
    VolumeComparisonReport r =
        volume_comparison_check(mesh, eu, VolumeDescriptor::riemannian(), center, 0.0, 0.0,
                                {3.3, 3.6, 3.9, 4.2}, 8);
    for (std::size_t i = 1; i < r.ratios.size(); ++i) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "torus ratios not strictly decreasing at r=%.2g",
                    r.radii[i]);
      g.expect(r.ratios[i] < r.ratios[i - 1], buf);
    }
  }
}

// 8. Pointwise property sweeps, 1000 random samples per family per property,
//    across every shipped metric family: positive homogeneity of F, the
//    Euler identity g_y(y,y) = F^2, the Legendre round trip, Cartan
//    contraction with y, symmetry of the fundamental tensor, and degree-0
//    homogeneity of Ric and S-dot (with degree-1 S alongside).
void property_sweeps(Gate& g) {
  VolumeDescriptor bh = VolumeDescriptor::busemann_hausdorff(64);
  for (const auto& fam : shipped_families()) {
    int n = fam.metric.dim();
    int bad_homog = 0, bad_euler = 0, bad_legendre = 0, bad_cartan = 0, bad_sym = 0, bad_deg = 0;
    for (int s = 0; s < 1000; ++s) {
      Vecd x = testing::random_point(n);
      Vecd y = testing::random_direction(n);
      double f = norm(fam.metric, x, y);

      double lam = std::exp(testing::uniform(-3.0, 3.0));
      if (std::abs(norm(fam.metric, x, lam * y) - lam * f) > 1e-12 * (1.0 + lam * f)) ++bad_homog;

      Matd gt = fundamental_tensor_t<double>(fam.metric, x, y);
      if (std::abs(quadratic_form(gt, y, y) - f * f) > 1e-10 * (1.0 + f * f)) ++bad_euler;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (std::abs(gt(i, j) - gt(j, i)) > 1e-12 * (1.0 + std::abs(gt(i, j)))) ++bad_sym;

      Vecd xi = legendre_covector(fam.metric, x, y);
      Vecd yr = legendre_inverse(fam.metric, x, xi);
      for (int i = 0; i < n; ++i)
        if (std::abs(yr[i] - y[i]) > 1e-9 * (1.0 + std::abs(y[i]))) ++bad_legendre;

      CartanTensor c = cartan_tensor(fam.metric, x, y);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double contracted = 0.0;
          for (int k = 0; k < n; ++k) contracted += c.c(i, j, k) * y[k];
          if (std::abs(contracted) > 1e-10 * (1.0 + std::abs(c.c(i, j, 0)))) ++bad_cartan;
        }

      double r1 = ricci_scalar(fam.metric, x, y);
      double r2 = ricci_scalar(fam.metric, x, 2.0 * y);
      if (std::abs(r2 - r1) > 1e-10 * (1.0 + std::abs(r1))) ++bad_deg;
      VolumeDerivs vd = volume_derivs(fam.metric, bh, x);
      double s1 = s_curvature(fam.metric, x, y, vd);
      double s3 = s_curvature(fam.metric, x, 3.0 * y, vd);
      if (std::abs(s3 - 3.0 * s1) > 1e-10 * (1.0 + std::abs(s1))) ++bad_deg;
      double q1 = s_curvature_rate(fam.metric, x, y, vd);
      double q3 = s_curvature_rate(fam.metric, x, 3.0 * y, vd);
      if (std::abs(q3 - q1) > 1e-10 * (1.0 + std::abs(q1))) ++bad_deg;
    }
    auto tally = [&](int count, const char* what) {
      if (count == 0) return;
      char buf[96];
      std::snprintf(buf, sizeof buf, "%s: %d/1000 failures on %s", what, count, fam.name);
      g.expect(false, buf);
    };
    tally(bad_homog, "homogeneity");
    tally(bad_euler, "euler identity");
    tally(bad_legendre, "legendre round trip");
    tally(bad_cartan, "cartan contraction");
    tally(bad_sym, "hessian symmetry");
    tally(bad_deg, "curvature homogeneity");
  }
}

struct Criterion {
  const char* name;
  void (*run)(Gate&);
  double budget_s;  // 0 = untimed
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {"circle equality case", circle_equality, 5.0},
      {"sphere equality case", sphere_equality, 60.0},
      {"randers flat torus", randers_flat, 120.0},
      {"bochner identity", bochner_identity, 0.0},
      {"trace identity", trace_identity, 0.0},
      {"zhong-yang auxiliaries", zhong_yang, 1.0},
      {"volume comparison", volume_comparison, 30.0},
      {"property sweeps", property_sweeps, 0.0},
  };

  int failures = 0;
  int idx = 0;
  for (const Criterion& c : criteria) {
    ++idx;
    Gate g;
    auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(g);
    } catch (const std::exception& e) {
      g.expect(false, std::string("exception: ") + e.what());
    }
    double secs = seconds(t0);
    if (c.budget_s > 0.0) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "runtime %.2fs over %.0fs budget", secs, c.budget_s);
      g.expect(secs < c.budget_s, buf);
    }
    std::printf("[%d] %-24s %s  (%.2fs)%s%s\n", idx, c.name, g.ok ? "PASS" : "FAIL", secs,
                g.detail.empty() ? "" : "  ", g.detail.c_str());
    std::fflush(stdout);
    if (!g.ok) ++failures;
  }
  std::printf("%d/8 criteria passed\n", 8 - failures);
  return failures == 0 ? 0 : 1;
}
