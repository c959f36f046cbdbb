// First nonzero eigenvalue of the Finsler-Laplacian on a closed mesh.
//
// The nonlinear problem is linearized iteratively: freeze the reference
// field V = grad u_k, assemble the symmetric weighted stiffness of the
// linear operator div_mu(g_V^{-1} du), solve the smallest nonzero pencil
// eigenpair, relax, repeat.  Constants are deflated with a bordered KKT
// row instead of a shift so the factorization stays exact at lambda = 0.
//
// Nonreversible metrics break the u -> -u symmetry, so the outer loop runs
// from both the initial field and its negation and keeps the smaller
// converged eigenvalue.

#pragma once

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "flab/errors.hpp"
#include "flab/fields.hpp"
#include "flab/mesh.hpp"
#include "flab/metric.hpp"
#include "flab/volume.hpp"

namespace flab {

struct SolverOptions {
  double tol_lambda = 1e-8;  // relative |lambda_{k+1} - lambda_k| threshold
  int max_outer = 200;
  double damping = 1.0;  // update relaxation, in (0, 1]
  std::uint64_t seed = 0;
};

struct SpectralResult {
  double lambda1 = 0.0;
  ScalarField eigenfield;  // zero dmu-mean, scaled to max|u| = 1
  double residual = 0.0;   // max_v |Delta u + lambda1 u| with the nonlinear operator
  int iterations = 0;
  std::vector<double> history;  // pencil eigenvalue per outer iteration
  bool monotone = true;         // history non-increasing after the first 3 steps
};

namespace detail {

// per-cell quadrature nodes with density folded into the weights; the
// density never depends on the iterate, so this is built once per solve
struct CellQuad {
  FieldCell f;
  int nq = 0;
  Vecd node[3];
  double wrho[3] = {0.0, 0.0, 0.0};
};

inline std::vector<CellQuad> build_cell_quads(const MetricDescriptor& metric, const Mesh& mesh,
                                              const VolumeDescriptor& vol) {
  std::vector<CellQuad> out(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    CellQuad& q = out[c];
    q.f = field_cell(mesh, c);
    if (mesh.dim == 1) {
      q.nq = 2;
      double h = q.f.w[1][0] - q.f.w[0][0];
      int k = 0;
      for (double t : {kGauss2Node0, kGauss2Node1}) {
        q.node[k] = Vecd(1);
        q.node[k][0] = q.f.w[0][0] + t * h;
        q.wrho[k] = q.f.area / 2.0 * vol.density(metric, q.node[k]);
        ++k;
      }
    } else {
      q.nq = 3;
      for (int e = 0; e < 3; ++e) {
        q.node[e] = Vecd(2);
        for (int i = 0; i < 2; ++i) q.node[e][i] = 0.5 * (q.f.w[e][i] + q.f.w[(e + 1) % 3][i]);
        q.wrho[e] = q.f.area / 3.0 * vol.density(metric, q.node[e]);
      }
    }
  }
  return out;
}

// P1 value of u at quadrature node k of cell c
inline double node_value(const Mesh& mesh, const std::vector<double>& u, int c, int k) {
  if (mesh.dim == 1) {
    double t = (k == 0) ? kGauss2Node0 : kGauss2Node1;
    return (1.0 - t) * u[mesh.cells[c][0]] + t * u[mesh.cells[c][1]];
  }
  return 0.5 * (u[mesh.cells[c][k]] + u[mesh.cells[c][(k + 1) % 3]]);
}

inline std::vector<double> lumped_mass(const Mesh& mesh, const std::vector<CellQuad>& quads) {
  std::vector<double> m(mesh.num_verts(), 0.0);
  int n = mesh.dim;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    double dv = 0.0;
    for (int k = 0; k < quads[c].nq; ++k) dv += quads[c].wrho[k];
    for (int k = 0; k <= n; ++k) m[mesh.cells[c][k]] += dv / (n + 1);
  }
  for (int v = 0; v < mesh.num_verts(); ++v)
    if (!(m[v] > 0.0))
      throw Error(ErrorKind::MeshQuality, "singular mass matrix at vertex " + std::to_string(v));
  return m;
}

// quotient on a zero-mean field, reusing prebuilt quadrature
inline double quotient_from_quads(const MetricDescriptor& metric, const Mesh& mesh,
                                  const std::vector<CellQuad>& quads, double total_mass,
                                  const std::vector<double>& w) {
  int n = mesh.dim;
  double numer = 0.0, denom = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellQuad& q = quads[c];
    Vecd du(n);
    for (int k = 0; k <= n; ++k)
      for (int i = 0; i < n; ++i) du[i] += q.f.dphi[k][i] * w[mesh.cells[c][k]];
    bool flat_du = norm2(du) == 0.0;
    for (int k = 0; k < q.nq; ++k) {
      double uval = node_value(mesh, w, c, k);
      denom += q.wrho[k] * uval * uval;
      if (!flat_du) {
        Vecd y = legendre_inverse(metric, q.node[k], du);
        numer += q.wrho[k] * metric.squared_norm(q.node[k], y);
      }
    }
  }
  if (denom < 1e-14 * total_mass)
    throw Error(ErrorKind::InvalidInput, "rayleigh quotient of a numerically zero field");
  return numer / denom;
}

}  // namespace detail

// infimum quotient int (F*(du))^2 dmu / int u^2 dmu; u is projected to zero
// dmu-mean first, so constants are excluded
inline double rayleigh_quotient(const MetricDescriptor& metric, const Mesh& mesh,
                                const VolumeDescriptor& vol, const ScalarField& u) {
  if (int(u.values.size()) != mesh.num_verts())
    throw Error(ErrorKind::InvalidInput, "field length does not match the vertex count");
  std::vector<detail::CellQuad> quads = detail::build_cell_quads(metric, mesh, vol);
  std::vector<double> mass = detail::lumped_mass(mesh, quads);
  double total = 0.0, mean = 0.0;
  for (int v = 0; v < mesh.num_verts(); ++v) {
    total += mass[v];
    mean += mass[v] * u.values[v];
  }
  mean /= total;
  std::vector<double> w(u.values);
  for (double& x : w) x -= mean;
  return detail::quotient_from_quads(metric, mesh, quads, total, w);
}

namespace detail {

inline Eigen::SparseMatrix<double> assemble_stiffness(const MetricDescriptor& metric,
                                                      const Mesh& mesh,
                                                      const std::vector<CellQuad>& quads,
                                                      const std::vector<Vecd>& reference) {
  int n = mesh.dim;
  int nv = mesh.num_verts();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(std::size_t(mesh.num_cells()) * (n + 1) * (n + 1));
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellQuad& q = quads[c];
    double loc[3][3] = {};
    for (int k = 0; k < q.nq; ++k) {
      Matd g = fundamental_tensor_t<double>(metric, q.node[k], reference[c]);
      Vecd flow[3];
      for (int b = 0; b <= n; ++b) flow[b] = solve(g, q.f.dphi[b]);
      for (int a = 0; a <= n; ++a)
        for (int b = 0; b <= n; ++b) loc[a][b] += q.wrho[k] * dot(q.f.dphi[a], flow[b]);
    }
    for (int a = 0; a <= n; ++a)
      for (int b = 0; b <= n; ++b)
        trips.emplace_back(mesh.cells[c][a], mesh.cells[c][b], loc[a][b]);
  }
  Eigen::SparseMatrix<double> K(nv, nv);
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

// smallest nonzero eigenpair of K x = lambda M x with M = diag(mass); the
// constant kernel is removed by a bordered mean-zero constraint and the
// deflated pencil is block-inverse-iterated through one factorization with
// Ritz extraction, so clustered or degenerate smallest eigenvalues converge.
// When the leading Ritz values form a near-degenerate cluster, the returned
// vector is the cluster member best aligned with `start`, which keeps the
// outer fixed-point iteration well defined on symmetric problems.
struct InnerEig {
  double lambda = 0.0;
  std::vector<double> vec;
};

inline InnerEig smallest_nonzero(const Eigen::SparseMatrix<double>& K,
                                 const std::vector<double>& mass,
                                 const std::vector<double>& start, std::mt19937_64& gen) {
  int nv = int(mass.size());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(std::size_t(K.nonZeros()) + 2 * nv);
  for (int col = 0; col < K.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it)
      trips.emplace_back(int(it.row()), int(it.col()), it.value());
  for (int v = 0; v < nv; ++v) {
    trips.emplace_back(v, nv, mass[v]);
    trips.emplace_back(nv, v, mass[v]);
  }
  Eigen::SparseMatrix<double> A(nv + 1, nv + 1);
  A.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw Error(ErrorKind::NumericFailure, "deflated stiffness factorization failed");

  const int block = std::min(5, nv - 1);
  Eigen::VectorXd mvec(nv);
  for (int v = 0; v < nv; ++v) mvec[v] = mass[v];
  double total = mvec.sum();

  auto project = [&](Eigen::VectorXd& z) {
    double mz = mvec.dot(z) / total;
    z.array() -= mz;
  };
  auto mdot = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.dot(mvec.cwiseProduct(b));
  };

  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::MatrixXd X(nv, block);
  for (int v = 0; v < nv; ++v) X(v, 0) = start[v];
  for (int b = 1; b < block; ++b)
    for (int v = 0; v < nv; ++v) X(v, b) = dist(gen);

  auto orthonormalize = [&]() {
    for (int b = 0; b < block; ++b) {
      Eigen::VectorXd col = X.col(b);
      project(col);
      for (int pass = 0; pass < 2; ++pass)
        for (int a = 0; a < b; ++a) col -= mdot(X.col(a), col) * X.col(a);
      double nrm = std::sqrt(mdot(col, col));
      if (!(nrm > 1e-300)) {
        for (int v = 0; v < nv; ++v) col[v] = dist(gen);
        project(col);
        for (int a = 0; a < b; ++a) col -= mdot(X.col(a), col) * X.col(a);
        nrm = std::sqrt(mdot(col, col));
        if (!(nrm > 0.0))
          throw Error(ErrorKind::NumericFailure, "inner block collapsed to zero");
      }
      X.col(b) = col / nrm;
    }
  };
  orthonormalize();

  Eigen::VectorXd start_v(nv);
  for (int v = 0; v < nv; ++v) start_v[v] = start[v];

  double lambda = std::numeric_limits<double>::infinity();
  Eigen::VectorXd ritz = Eigen::VectorXd::Zero(block);
  for (int it = 0; it < 200; ++it) {
    Eigen::MatrixXd rhs(nv + 1, block);
    for (int b = 0; b < block; ++b) {
      rhs.col(b).head(nv) = mvec.cwiseProduct(X.col(b));
      rhs(nv, b) = 0.0;
    }
    Eigen::MatrixXd Z = lu.solve(rhs);
    if (lu.info() != Eigen::Success)
      throw Error(ErrorKind::NumericFailure, "deflated stiffness solve failed");
    X = Z.topRows(nv);
    orthonormalize();
    Eigen::MatrixXd KX = K * X;
    Eigen::MatrixXd KR = X.transpose() * KX;
    KR = 0.5 * (KR + KR.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(KR);
    if (es.info() != Eigen::Success)
      throw Error(ErrorKind::NumericFailure, "ritz projection failed");
    X = (X * es.eigenvectors()).eval();
    ritz = es.eigenvalues();
    double next = ritz[0];
    bool done = std::abs(next - lambda) <= 1e-12 * std::max(std::abs(next), 1e-30);
    lambda = next;
    if (done) {
      // pick the best-aligned member of the leading near-degenerate cluster
      int cluster = 1;
      while (cluster < block && ritz[cluster] <= ritz[0] + 1e-8 * std::abs(ritz[0])) ++cluster;
      Eigen::VectorXd x;
      if (cluster > 1) {
        Eigen::VectorXd coef(cluster);
        for (int b = 0; b < cluster; ++b) coef[b] = mdot(X.col(b), start_v);
        if (coef.norm() > 1e-12)
          x = X.leftCols(cluster) * (coef / coef.norm());
        else
          x = X.col(0);
      } else {
        x = X.col(0);
      }
      InnerEig r;
      r.lambda = lambda;
      r.vec.assign(x.data(), x.data() + nv);
      return r;
    }
  }
  throw Error(ErrorKind::NumericFailure, "inner eigensolve did not converge in 200 iterations");
}

}  // namespace detail

inline SpectralResult first_eigenpair(const MetricDescriptor& metric, const Mesh& mesh,
                                      const VolumeDescriptor& vol,
                                      const SolverOptions& opts = SolverOptions()) {
  if (!(opts.tol_lambda > 0.0))
    throw Error(ErrorKind::InvalidParameter, "tol_lambda must be positive");
  if (opts.max_outer < 1) throw Error(ErrorKind::InvalidParameter, "max_outer must be at least 1");
  if (!(opts.damping > 0.0) || !(opts.damping <= 1.0))
    throw Error(ErrorKind::InvalidParameter, "damping must lie in (0, 1]");

  int n = mesh.dim;
  int nv = mesh.num_verts();
  std::vector<detail::CellQuad> quads = detail::build_cell_quads(metric, mesh, vol);
  std::vector<double> mass = detail::lumped_mass(mesh, quads);
  double total = 0.0;
  for (double m : mass) total += m;

  auto project = [&](std::vector<double>& u) {
    double mu = 0.0;
    for (int v = 0; v < nv; ++v) mu += mass[v] * u[v];
    mu /= total;
    for (double& x : u) x -= mu;
  };
  auto normalize = [&](std::vector<double>& u) {
    double nrm2 = 0.0;
    for (int v = 0; v < nv; ++v) nrm2 += mass[v] * u[v] * u[v];
    double nrm = std::sqrt(nrm2);
    if (!(nrm > 0.0)) throw Error(ErrorKind::NumericFailure, "iterate collapsed to zero");
    for (double& x : u) x /= nrm;
  };

  Vecd y0(n);
  y0[0] = 1.0;
  std::vector<Vecd> ref0(mesh.num_cells(), y0);

  // deterministic seeded start for the inner iterations and as a fallback
  // initial field if the linearized-metric warmup fails
  std::mt19937_64 gen(opts.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> noise(nv);
  for (double& x : noise) x = dist(gen);
  project(noise);
  normalize(noise);

  std::vector<double> init;
  try {
    Eigen::SparseMatrix<double> K0 = detail::assemble_stiffness(metric, mesh, quads, ref0);
    init = detail::smallest_nonzero(K0, mass, noise, gen).vec;
  } catch (const Error&) {
    init = noise;
  }

  struct Branch {
    bool converged = false;
    double lambda = std::numeric_limits<double>::infinity();
    std::vector<double> u;
    std::vector<double> history;
  };

  // the linearized quadratic form does not majorize (F*)^2, so the raw
  // fixed-point map can cycle; each pencil proposal is therefore backtracked
  // against the true quotient and accepted only on strict decrease, which
  // makes the history monotone and bounds the iteration from below.
  // convergence additionally requires the undamped proposal to sit on the
  // iterate, rejecting flat stretches that are not fixed points
  const double kFieldTol = 3e-4;

  auto run_branch = [&](double sign, std::uint64_t branch_seed) {
    std::mt19937_64 bgen(branch_seed);
    Branch br;
    br.u = init;
    for (double& x : br.u) x *= sign;
    project(br.u);
    normalize(br.u);
    double rq = detail::quotient_from_quads(metric, mesh, quads, total, br.u);
    for (int k = 0; k < opts.max_outer; ++k) {
      ScalarField uf;
      uf.values = br.u;
      GradientField gf = gradient(metric, mesh, uf);
      std::vector<Vecd> ref(mesh.num_cells());
      for (int c = 0; c < mesh.num_cells(); ++c) ref[c] = gf.mask[c] ? gf.grad[c] : y0;
      Eigen::SparseMatrix<double> K = detail::assemble_stiffness(metric, mesh, quads, ref);
      detail::InnerEig eig = detail::smallest_nonzero(K, mass, br.u, bgen);
      double align = 0.0;
      for (int v = 0; v < nv; ++v) align += mass[v] * eig.vec[v] * br.u[v];
      if (align < 0.0)
        for (double& x : eig.vec) x = -x;
      double dist2 = 0.0;
      for (int v = 0; v < nv; ++v) {
        double d = eig.vec[v] - br.u[v];
        dist2 += mass[v] * d * d;
      }
      double dist = std::sqrt(dist2);

      double prev_rq = rq;
      double step = opts.damping;
      bool accepted = false;
      for (int bs = 0; bs < 12 && !accepted; ++bs) {
        std::vector<double> cand(nv);
        for (int v = 0; v < nv; ++v) cand[v] = (1.0 - step) * br.u[v] + step * eig.vec[v];
        project(cand);
        normalize(cand);
        double rq2 = detail::quotient_from_quads(metric, mesh, quads, total, cand);
        if (rq2 < rq - 1e-14 * std::abs(rq)) {
          br.u = std::move(cand);
          rq = rq2;
          accepted = true;
        }
        step *= 0.5;
      }
      br.history.push_back(rq);
      if (!accepted) {
        // proposal gives no descent: either a converged fixed point or a
        // genuine stall; the same reference reproduces the same proposal,
        // so iterating further cannot move
        br.converged = dist <= kFieldTol;
        br.lambda = rq;
        break;
      }
      if (k >= 1 && std::abs(rq - prev_rq) <= opts.tol_lambda * std::abs(rq) &&
          dist <= kFieldTol) {
        br.converged = true;
        br.lambda = rq;
        break;
      }
    }
    if (!br.converged && !br.history.empty()) br.lambda = br.history.back();
    return br;
  };

  Branch plus = run_branch(1.0, opts.seed + 1);
  Branch minus = run_branch(-1.0, opts.seed + 2);
  const Branch* pick = nullptr;
  if (plus.converged && minus.converged)
    pick = (minus.lambda < plus.lambda) ? &minus : &plus;
  else if (plus.converged)
    pick = &plus;
  else if (minus.converged)
    pick = &minus;
  else {
    std::ostringstream os;
    os << "eigenvalue iteration did not converge in " << opts.max_outer << " steps; last values";
    int tail = std::max<int>(0, int(plus.history.size()) - 4);
    for (std::size_t i = tail; i < plus.history.size(); ++i) os << " " << plus.history[i];
    throw Error(ErrorKind::NumericFailure, os.str());
  }

  SpectralResult res;
  res.history = pick->history;
  res.iterations = int(pick->history.size());
  for (std::size_t i = 3; i < res.history.size(); ++i)
    if (res.history[i] > res.history[i - 1] + 1e-10) res.monotone = false;

  std::vector<double> u = pick->u;
  project(u);
  double peak = 0.0;
  for (double x : u) peak = std::max(peak, std::abs(x));
  if (!(peak > 0.0)) throw Error(ErrorKind::NumericFailure, "converged eigenfield is zero");
  for (double& x : u) x /= peak;
  res.eigenfield.values = u;

  // the reported eigenvalue is the Rayleigh quotient of the converged
  // field rather than the last pencil value; at the fixed point they agree
  // to discretization error and the quotient is the variational quantity
  res.lambda1 = rayleigh_quotient(metric, mesh, vol, res.eigenfield);

  ScalarField lap = finsler_laplacian(metric, mesh, vol, res.eigenfield);
  double rmax = 0.0;
  for (int v = 0; v < nv; ++v)
    rmax = std::max(rmax, std::abs(lap.values[v] + res.lambda1 * u[v]));
  res.residual = rmax;
  return res;
}

}  // namespace flab
