#pragma once

// Local polynomial least-squares reconstruction of vertex fields, used for
// the derivative quantities P1 elements cannot carry (Hessians, outer
// derivatives of derived fields). Flat domains share one lattice stencil and
// its pseudo-inverse; sphere vertices carry individual gnomonic stencils.

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "flab/domain.hpp"
#include "flab/errors.hpp"
#include "flab/linalg.hpp"
#include "flab/mesh.hpp"

namespace flab {

class PolynomialReconstructor {
 public:
  explicit PolynomialReconstructor(const Mesh& mesh) : mesh_(&mesh) {
    switch (mesh.kind) {
      case MeshKind::Circle:
      case MeshKind::FlatTorus: build_lattice_(); break;
      case MeshKind::Sphere: build_sphere_(); break;
    }
  }

  int degree() const { return degree_; }
  int ring() const { return ring_; }
  int ncoef() const { return int(exps_.size()); }
  int stencil_size(int v) const {
    return shared_ ? int(shared_local_.size()) : int(sphere_ids_[v].size());
  }

  void gather_ids(int v, std::vector<int>& ids) const {
    if (!shared_) {
      ids = sphere_ids_[v];
      return;
    }
    ids.clear();
    const Mesh& m = *mesh_;
    if (m.kind == MeshKind::Circle) {
      int res = m.resolution;
      for (int d = -ring_; d <= ring_; ++d) ids.push_back(((v + d) % res + res) % res);
    } else {
      int res = m.resolution;
      int i = v % res, j = v / res;
      for (int b = -ring_; b <= ring_; ++b)
        for (int a = -ring_; a <= ring_; ++a)
          ids.push_back(((i + a) % res + res) % res + res * (((j + b) % res + res) % res));
    }
  }

  const std::vector<Vecd>& local_coords(int v) const {
    return shared_ ? shared_local_ : sphere_local_[v];
  }

  const SphereChart& chart(int v) const { return sphere_charts_[v]; }

  // least-squares coefficients; `vals` aligned with gather_ids order
  void fit_from_values(int v, const std::vector<double>& vals, std::vector<double>& coef) const {
    const Eigen::MatrixXd& p = shared_ ? shared_pinv_ : sphere_pinv_[v];
    Eigen::Map<const Eigen::VectorXd> b(vals.data(), long(vals.size()));
    Eigen::VectorXd c = p * b;
    coef.assign(c.data(), c.data() + c.size());
  }

  void fit(int v, const std::vector<double>& field, std::vector<double>& coef) const {
    std::vector<int> ids;
    gather_ids(v, ids);
    std::vector<double> vals(ids.size());
    for (size_t i = 0; i < ids.size(); ++i) vals[i] = field[ids[i]];
    fit_from_values(v, vals, coef);
  }

  double eval(const std::vector<double>& coef, const Vecd& local) const {
    return deriv_at(coef, 0, 0, local);
  }

  // derivative d^{ax+ay} / dx^ax dy^ay of the fit at the stencil origin
  double deriv(const std::vector<double>& coef, int ax, int ay) const {
    double out = 0.0;
    for (size_t k = 0; k < exps_.size(); ++k) {
      if (exps_[k][0] != ax || exps_[k][1] != ay) continue;
      out += coef[k] * factorial_(ax) * factorial_(ay);
    }
    return out / std::pow(scale_, double(ax + ay));
  }

  double deriv_at(const std::vector<double>& coef, int ax, int ay, const Vecd& local) const {
    double x = local[0] / scale_;
    double y = (mesh_->dim == 2) ? local[1] / scale_ : 0.0;
    double out = 0.0;
    for (size_t k = 0; k < exps_.size(); ++k) {
      int ex = exps_[k][0], ey = exps_[k][1];
      if (ex < ax || ey < ay) continue;
      double term = coef[k] * falling_(ex, ax) * falling_(ey, ay);
      term *= std::pow(x, double(ex - ax)) * std::pow(y, double(ey - ay));
      out += term;
    }
    return out / std::pow(scale_, double(ax + ay));
  }

  double scale() const { return scale_; }

 private:
  static double factorial_(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
  }
  static double falling_(int e, int a) {
    double f = 1.0;
    for (int i = 0; i < a; ++i) f *= double(e - i);
    return f;
  }

  void enumerate_exps_(int dim, int degree) {
    exps_.clear();
    for (int t = 0; t <= degree; ++t) {
      if (dim == 1) {
        exps_.push_back({t, 0});
      } else {
        for (int ax = t; ax >= 0; --ax) exps_.push_back({ax, t - ax});
      }
    }
  }

  static int ncoef_for_(int dim, int degree) {
    return dim == 1 ? degree + 1 : (degree + 1) * (degree + 2) / 2;
  }

  int pick_degree_(int dim, int npts, int max_degree) const {
    int d = max_degree;
    while (d > 1 && ncoef_for_(dim, d) > int(0.8 * npts)) --d;
    return d;
  }

  Eigen::MatrixXd pinv_for_(const std::vector<Vecd>& local) {
    int npts = int(local.size());
    Eigen::MatrixXd a(npts, int(exps_.size()));
    for (int r = 0; r < npts; ++r) {
      double x = local[r][0] / scale_;
      double y = (mesh_->dim == 2) ? local[r][1] / scale_ : 0.0;
      for (size_t k = 0; k < exps_.size(); ++k)
        a(r, int(k)) = std::pow(x, double(exps_[k][0])) * std::pow(y, double(exps_[k][1]));
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < int(exps_.size()))
      throw Error(ErrorKind::MeshQuality, "rank-deficient reconstruction stencil");
    return qr.solve(Eigen::MatrixXd::Identity(npts, npts));
  }

  void build_lattice_() {
    const Mesh& m = *mesh_;
    int res = m.resolution;
    ring_ = std::min(4, (res - 1) / 2);
    if (ring_ < 1)
      throw Error(ErrorKind::MeshQuality, "resolution too coarse for reconstruction");
    shared_ = true;
    shared_local_.clear();
    if (m.kind == MeshKind::Circle) {
      double h = 2.0 * M_PI / res;
      for (int d = -ring_; d <= ring_; ++d) {
        Vecd p(1);
        p[0] = d * h;
        shared_local_.push_back(p);
      }
    } else {
      double h1 = m.period[0] / res, h2 = m.period[1] / res;
      for (int b = -ring_; b <= ring_; ++b)
        for (int a = -ring_; a <= ring_; ++a) {
          Vecd p(2);
          p[0] = a * h1;
          p[1] = b * h2;
          shared_local_.push_back(p);
        }
    }
    degree_ = pick_degree_(m.dim, int(shared_local_.size()), 6);
    enumerate_exps_(m.dim, degree_);
    scale_ = 0.0;
    for (const auto& p : shared_local_) scale_ = std::max(scale_, std::sqrt(norm2(p)));
    shared_pinv_ = pinv_for_(shared_local_);
  }

  void build_sphere_() {
    const Mesh& m = *mesh_;
    ring_ = 2;
    int nv = m.num_verts();
    sphere_ids_.resize(nv);
    sphere_local_.resize(nv);
    sphere_pinv_.resize(nv);
    sphere_charts_.reserve(nv);
    int min_pts = std::numeric_limits<int>::max();
    for (int v = 0; v < nv; ++v) {
      std::vector<int> hops(nv, -1);
      std::vector<int> order{v};
      hops[v] = 0;
      for (size_t head = 0; head < order.size(); ++head) {
        int a = order[head];
        if (hops[a] >= ring_) continue;
        for (int b : m.neighbors[a])
          if (hops[b] < 0) {
            hops[b] = hops[a] + 1;
            order.push_back(b);
          }
      }
      sphere_ids_[v] = order;
      min_pts = std::min(min_pts, int(order.size()));
    }
    degree_ = pick_degree_(2, min_pts, 3);
    enumerate_exps_(2, degree_);
    scale_ = 0.0;
    for (int v = 0; v < nv; ++v) {
      SphereChart ch = SphereChart::at_point(m.radius, m.verts[v]);
      sphere_charts_.push_back(ch);
      auto& loc = sphere_local_[v];
      loc.clear();
      for (int u : sphere_ids_[v]) loc.push_back(ch.to_chart(m.verts[u]));
      for (const auto& p : loc) scale_ = std::max(scale_, std::sqrt(norm2(p)));
    }
    for (int v = 0; v < nv; ++v) sphere_pinv_[v] = pinv_for_(sphere_local_[v]);
  }

  const Mesh* mesh_;
  bool shared_ = false;
  int degree_ = 0;
  int ring_ = 0;
  double scale_ = 1.0;
  std::vector<std::array<int, 2>> exps_;
  std::vector<Vecd> shared_local_;
  Eigen::MatrixXd shared_pinv_;
  std::vector<std::vector<int>> sphere_ids_;
  std::vector<std::vector<Vecd>> sphere_local_;
  std::vector<Eigen::MatrixXd> sphere_pinv_;
  std::vector<SphereChart> sphere_charts_;
};

}  // namespace flab
