#include <catch2/catch_amalgamated.hpp>

#include "flab/curvature.hpp"
#include "support.hpp"

using namespace flab;
using namespace flab::testing;

namespace {

// Independent Christoffel symbols for the riemann_diag_torus coefficients,
// from hand derivatives of a(x).
Ten3d christoffel_diag_torus(const Vecd& x) {
  Matd a(2);
  double s0 = std::sin(x[0]), c0 = std::cos(x[0]);
  double s1 = std::sin(x[1]), c1 = std::cos(x[1]);
  a(0, 0) = 1.0 + 0.5 * s0 * s0;
  a(1, 1) = 1.0 + 0.5 * c1 * c1;
  a(0, 1) = a(1, 0) = 0.1 * s0 * c1;
  // da[k](i,j) = d a_ij / dx^k
  Matd da0(2), da1(2);
  da0(0, 0) = s0 * c0;
  da0(1, 1) = 0.0;
  da0(0, 1) = da0(1, 0) = 0.1 * c0 * c1;
  da1(0, 0) = 0.0;
  da1(1, 1) = -s1 * c1;
  da1(0, 1) = da1(1, 0) = -0.1 * s0 * s1;
  const Matd* da[2] = {&da0, &da1};
  Matd ainv = inverse(a);
  Ten3d gamma(2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        double s = 0.0;
        for (int l = 0; l < 2; ++l)
          s += 0.5 * ainv(i, l) * ((*da[j])(l, k) + (*da[k])(l, j) - (*da[l])(j, k));
        gamma(i, j, k) = s;
      }
  return gamma;
}

// Plain RK4 for the geodesic system, local to the oracle tests. Negative
// t_end integrates backwards (the ODE is not y -> -y symmetric here).
void rk4_geodesic(const MetricDescriptor& m, Vecd& x, Vecd& v, double t_end, double dt) {
  auto acc = [&](const Vecd& xx, const Vecd& vv) { return -2.0 * spray_t<double>(m, xx, vv); };
  int steps = std::max(1, int(std::ceil(std::abs(t_end) / dt)));
  double h = t_end / steps;
  for (int s = 0; s < steps; ++s) {
    Vecd k1x = v, k1v = acc(x, v);
    Vecd k2x = v + 0.5 * h * k1v, k2v = acc(x + 0.5 * h * k1x, v + 0.5 * h * k1v);
    Vecd k3x = v + 0.5 * h * k2v, k3v = acc(x + 0.5 * h * k2x, v + 0.5 * h * k2v);
    Vecd k4x = v + h * k3v, k4v = acc(x + h * k3x, v + h * k3v);
    x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  }
}

}  // namespace

TEST_CASE("spray coefficients") {
  SECTION("euclidean spray vanishes") {
    SprayData sd = spray_coefficients(euclid(2), Vecd{0.3, 0.1}, Vecd{1.0, -2.0});
    for (int i = 0; i < 2; ++i) {
      CHECK(std::abs(sd.spray[i]) < 1e-14);
      for (int j = 0; j < 2; ++j) {
        CHECK(std::abs(sd.nonlinear_connection(i, j)) < 1e-13);
        for (int k = 0; k < 2; ++k) CHECK(std::abs(sd.chern(i, j, k)) < 1e-12);
      }
    }
  }

  SECTION("constant randers is locally minkowski") {
    SprayData sd = spray_coefficients(randers_const(2), Vecd{1.0, 2.0}, Vecd{0.4, 0.7});
    for (int i = 0; i < 2; ++i) CHECK(std::abs(sd.spray[i]) < 1e-13);
  }

  SECTION("riemannian spray against the independent christoffel routine") {
    MetricDescriptor m = riemann_diag_torus();
    for (int s = 0; s < 50; ++s) {
      Vecd x = random_point(2, 3.0);
      Vecd y = random_direction(2);
      Ten3d gamma = christoffel_diag_torus(x);
      SprayData sd = spray_coefficients(m, x, y);
      for (int i = 0; i < 2; ++i) {
        double gi = 0.0;
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k) gi += 0.5 * gamma(i, j, k) * y[j] * y[k];
        REQUIRE(sd.spray[i] == Catch::Approx(gi).margin(1e-8));
        // Chern connection reduces to the Christoffel symbols
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k)
            REQUIRE(sd.chern(i, j, k) == Catch::Approx(gamma(i, j, k)).margin(1e-7));
      }
    }
  }

  SECTION("spray homogeneity of degree two") {
    for (const auto& fam : shipped_families()) {
      int n = fam.metric.dim();
      for (int s = 0; s < 1000; ++s) {
        Vecd x = random_point(n);
        Vecd y = random_direction(n);
        double lam = std::exp(uniform(-1.5, 1.5));
        Vecd g1 = spray_t<double>(fam.metric, x, y);
        Vecd g2 = spray_t<double>(fam.metric, x, lam * y);
        for (int i = 0; i < n; ++i)
          REQUIRE(g2[i] == Catch::Approx(lam * lam * g1[i]).margin(1e-9 * (1.0 + std::abs(g1[i]))));
      }
    }
  }
}

TEST_CASE("flag curvature") {
  SECTION("flat families have zero flags") {
    CHECK(flag_curvature(euclid(2), Vecd{0.1, 0.2}, Vecd{1.0, 0.0}, Vecd{0.0, 1.0}) ==
          Catch::Approx(0.0).margin(1e-12));
    CHECK(flag_curvature(randers_const(2), Vecd{2.0, 0.5}, Vecd{0.3, 0.8}, Vecd{1.0, 0.1}) ==
          Catch::Approx(0.0).margin(1e-11));
  }

  SECTION("round unit sphere has flag one everywhere") {
    MetricDescriptor m = round_sphere_chart(1.0);
    for (int s = 0; s < 100; ++s) {
      Vecd w = random_point(2, 0.8);
      Vecd y = random_direction(2);
      Vecd v = random_direction(2);
      double gyv = quadratic_form(fundamental_tensor_t<double>(m, w, y), y, v);
      double gvv = quadratic_form(fundamental_tensor_t<double>(m, w, y), v, v);
      if (gyv * gyv > 0.98 * gvv * m.squared_norm(w, y)) continue;  // nearly parallel flag
      REQUIRE(flag_curvature(m, w, y, v) == Catch::Approx(1.0).epsilon(1e-8));
    }
  }

  SECTION("radius-2 sphere flag matches the geodesic-deviation oracle") {
    MetricDescriptor m = round_sphere_chart(2.0);
    Vecd x0{0.0, 0.0};
    // two unit-speed geodesics separated by a small rotation of the start direction
    double dth = 1e-4, t = 0.5;
    Vecd xa = x0, va{1.0, 0.0};
    Vecd xb = x0, vb{std::cos(dth), std::sin(dth)};
    rk4_geodesic(m, xa, va, t, 1e-3);
    rk4_geodesic(m, xb, vb, t, 1e-3);
    Vecd sep = xb - xa;
    double jt = std::sqrt(quadratic_form(fundamental_tensor_t<double>(m, xa, va), sep, sep)) / dth;
    // invert J(t) = sin(sqrt(K) t)/sqrt(K) for K by bisection
    double lo = 0.05, hi = 0.9;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      double val = std::sin(std::sqrt(mid) * t) / std::sqrt(mid);
      (val > jt ? lo : hi) = mid;
    }
    double k_oracle = 0.5 * (lo + hi);
    double k_lib = flag_curvature(m, x0, Vecd{1.0, 0.0}, Vecd{0.0, 1.0});
    CHECK(k_lib == Catch::Approx(0.25).epsilon(1e-10));
    CHECK(k_lib == Catch::Approx(k_oracle).margin(1e-6));
  }

  SECTION("flag invariances") {
    MetricDescriptor m = custom_quartic();
    for (int s = 0; s < 1000; ++s) {
      Vecd x = random_point(2);
      Vecd y = random_direction(2);
      Vecd v = random_direction(2);
      Matd g = fundamental_tensor_t<double>(m, x, y);
      double gyv = quadratic_form(g, y, v);
      double gvv = quadratic_form(g, v, v);
      if (gyv * gyv > 0.9 * gvv * m.squared_norm(x, y)) continue;
      double k = flag_curvature(m, x, y, v);
      double c = uniform(-2.0, 2.0);
      double lam = uniform(0.2, 3.0);
      REQUIRE(flag_curvature(m, x, y, v + c * y) == Catch::Approx(k).margin(1e-8 * (1.0 + std::abs(k))));
      REQUIRE(flag_curvature(m, x, y, lam * v) == Catch::Approx(k).margin(1e-8 * (1.0 + std::abs(k))));
    }
  }

  SECTION("degenerate flag is rejected") {
    CHECK_THROWS_AS(flag_curvature(euclid(2), Vecd{0.0, 0.0}, Vecd{1.0, 0.0}, Vecd{2.0, 0.0}), Error);
  }
}

TEST_CASE("ricci scalar") {
  SECTION("flat and round model values") {
    CHECK(ricci_scalar(euclid(3), Vecd{0.0, 0.0, 0.0}, Vecd{1.0, 2.0, -1.0}) ==
          Catch::Approx(0.0).margin(1e-12));
    CHECK(ricci_scalar(round_sphere_chart(1.0), Vecd{0.3, -0.2}, Vecd{0.7, 0.4}) ==
          Catch::Approx(1.0).epsilon(1e-8));
    CHECK(ricci_scalar(round_sphere_chart(2.0), Vecd{0.0, 0.0}, Vecd{1.0, 0.0}) ==
          Catch::Approx(0.25).epsilon(1e-8));
  }

  SECTION("degree-0 homogeneity") {
    for (const auto& fam : shipped_families()) {
      int n = fam.metric.dim();
      for (int s = 0; s < 200; ++s) {
        Vecd x = random_point(n);
        Vecd y = random_direction(n);
        double r1 = ricci_scalar(fam.metric, x, y);
        double r2 = ricci_scalar(fam.metric, x, 2.0 * y);
        REQUIRE(r2 == Catch::Approx(r1).margin(1e-10 * (1.0 + std::abs(r1))));
      }
    }
  }

  SECTION("ricci equals the flag sum over a transverse orthonormal basis") {
    std::vector<Family> fams = {{"sphere", round_sphere_chart(1.0)},
                                {"diag", riemann_diag_torus()},
                                {"quartic", custom_quartic()}};
    for (const auto& fam : fams) {
      for (int s = 0; s < 50; ++s) {
        Vecd x = random_point(2, 0.8);
        Vecd y = random_direction(2);
        Matd g = fundamental_tensor_t<double>(fam.metric, x, y);
        double f = std::sqrt(fam.metric.squared_norm(x, y));
        Vecd e0 = (1.0 / f) * y;
        // complete to a g-orthonormal basis in 2D
        Vecd cand{-y[1], y[0]};
        double c0 = quadratic_form(g, cand, e0);
        Vecd e1 = cand - c0 * e0;
        e1 = (1.0 / std::sqrt(quadratic_form(g, e1, e1))) * e1;
        double sum = flag_curvature(fam.metric, x, y, e1);
        REQUIRE(ricci_scalar(fam.metric, x, y) == Catch::Approx(sum).margin(1e-7 * (1.0 + std::abs(sum))));
      }
    }
  }
}

TEST_CASE("distortion") {
  SECTION("riemannian with its own volume form") {
    MetricDescriptor m = riemann_diag_torus();
    VolumeDescriptor v = VolumeDescriptor::riemannian();
    CHECK(distortion(m, v, Vecd{0.4, 1.2}, Vecd{0.3, -0.5}) == Catch::Approx(0.0).margin(1e-12));
  }

  SECTION("euclidean with explicit log densities") {
    auto zero = make_scalar_map([](const auto& x) {
      using T = std::decay_t<decltype(x[0])>;
      (void)x;
      return T(0.0);
    });
    CHECK(distortion(euclid(2), VolumeDescriptor::explicit_phi(zero), Vecd{1.0, 2.0},
                     Vecd{0.3, 0.4}) == Catch::Approx(0.0).margin(1e-14));
    auto gauss = make_scalar_map([](const auto& x) { return -0.5 * x[0] * x[0]; });
    CHECK(distortion(euclid(2), VolumeDescriptor::explicit_phi(gauss), Vecd{1.0, 0.0},
                     Vecd{0.7, -0.1}) == Catch::Approx(0.5).margin(1e-14));
  }
}

TEST_CASE("s-curvature and its rate") {
  auto gauss = make_scalar_map([](const auto& x) { return -0.5 * x[0] * x[0]; });
  VolumeDescriptor vol = VolumeDescriptor::explicit_phi(gauss);
  MetricDescriptor m = euclid(2);

  SECTION("gaussian weight on flat space") {
    for (int s = 0; s < 20; ++s) {
      Vecd x = random_point(2, 2.0);
      Vecd y = random_direction(2);
      CHECK(s_curvature(m, vol, x, y) == Catch::Approx(x[0] * y[0]).margin(1e-12));
    }
    CHECK(s_curvature_rate(m, vol, Vecd{0.7, -0.3}, Vecd{1.0, 0.0}) == Catch::Approx(1.0).margin(1e-10));
    // linear weight: S is constant along straight geodesics
    auto lin = make_scalar_map([](const auto& x) { return x[0]; });
    VolumeDescriptor lv = VolumeDescriptor::explicit_phi(lin);
    CHECK(s_curvature_rate(m, lv, Vecd{0.2, 0.4}, Vecd{0.8, 0.3}) == Catch::Approx(0.0).margin(1e-12));
  }

  SECTION("riemannian volume kills S") {
    MetricDescriptor rm = riemann_diag_torus();
    VolumeDescriptor rv = VolumeDescriptor::riemannian();
    for (int s = 0; s < 20; ++s) {
      Vecd x = random_point(2, 3.0);
      Vecd y = random_direction(2);
      CHECK(s_curvature(rm, rv, x, y) == Catch::Approx(0.0).margin(1e-10));
    }
  }

  SECTION("constant randers with busemann-hausdorff volume") {
    MetricDescriptor rm = randers_const(2);
    VolumeDescriptor bh = VolumeDescriptor::busemann_hausdorff();
    for (int s = 0; s < 10; ++s) {
      Vecd x = random_point(2, 3.0);
      Vecd y = random_direction(2);
      CHECK(std::abs(s_curvature(rm, bh, x, y)) < 1e-9);
      CHECK(std::abs(s_curvature_rate(rm, bh, x, y)) < 1e-9);
    }
  }

  SECTION("s-curvature degree-1 and rate degree-0 homogeneity") {
    MetricDescriptor rm = randers_variable();
    VolumeDescriptor bh = VolumeDescriptor::busemann_hausdorff();
    for (int s = 0; s < 100; ++s) {
      Vecd x = random_point(2, 2.0);
      Vecd y = random_direction(2);
      VolumeDerivs vd = volume_derivs(rm, bh, x);
      double s1 = s_curvature(rm, x, y, vd);
      double s3 = s_curvature(rm, x, 3.0 * y, vd);
      REQUIRE(s3 == Catch::Approx(3.0 * s1).margin(1e-10 * (1.0 + std::abs(s1))));
      double r1 = s_curvature_rate(rm, x, y, vd);
      double r3 = s_curvature_rate(rm, x, 3.0 * y, vd);
      REQUIRE(r3 == Catch::Approx(r1).margin(1e-10 * (1.0 + std::abs(r1))));
    }
  }

  SECTION("geodesic-derivative oracle for S") {
    // S(x,y) should equal d/dt tau(gamma(t), gamma'(t)) along the geodesic.
    MetricDescriptor rm = randers_variable();
    VolumeDescriptor bh = VolumeDescriptor::busemann_hausdorff();
    Vecd x{0.3, -0.6};
    Vecd y{0.9, 0.4};
    auto tau_at = [&](double t) {
      Vecd xx = x, vv = y;
      if (t != 0.0) rk4_geodesic(rm, xx, vv, t, 1e-4);
      return distortion(rm, bh, xx, vv);
    };
    double h = 2e-3;
    double fd = fd_derivative(tau_at, h);
    CHECK(s_curvature(rm, bh, x, y) == Catch::Approx(fd).margin(1e-6));
  }
}

TEST_CASE("weighted ricci") {
  auto gauss = make_scalar_map([](const auto& x) { return -0.5 * x[0] * x[0]; });
  VolumeDescriptor vol = VolumeDescriptor::explicit_phi(gauss);
  MetricDescriptor m = euclid(2);

  SECTION("paper model values") {
    double inf = std::numeric_limits<double>::infinity();
    CHECK(weighted_ricci(m, vol, Vecd{0.4, 0.8}, Vecd{1.0, 0.0}, inf) == Catch::Approx(1.0).margin(1e-10));
    CHECK(weighted_ricci(m, vol, Vecd{1.0, 0.0}, Vecd{1.0, 0.0}, 3.0) == Catch::Approx(0.0).margin(1e-10));
  }

  SECTION("reduces to ricci when S and Sdot vanish") {
    MetricDescriptor sm = round_sphere_chart(1.0);
    VolumeDescriptor rv = VolumeDescriptor::riemannian();
    Vecd w{0.2, 0.1};
    Vecd y{0.5, -0.3};
    for (double N : {3.0, 5.0, 17.0}) {
      CHECK(weighted_ricci(sm, rv, w, y, N) == Catch::Approx(ricci_scalar(sm, w, y)).margin(1e-9));
    }
  }

  SECTION("invalid N is rejected") {
    CHECK_THROWS_AS(weighted_ricci(m, vol, Vecd{0.0, 0.0}, Vecd{1.0, 0.0}, 2.0), Error);
    CHECK_THROWS_AS(weighted_ricci(m, vol, Vecd{0.0, 0.0}, Vecd{1.0, 0.0}, 1.5), Error);
    try {
      weighted_ricci(m, vol, Vecd{0.0, 0.0}, Vecd{1.0, 0.0}, 2.0);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidParameter);
    }
  }

  SECTION("degree-0 homogeneity") {
    MetricDescriptor rm = randers_variable();
    VolumeDescriptor bh = VolumeDescriptor::busemann_hausdorff();
    for (int s = 0; s < 50; ++s) {
      Vecd x = random_point(2, 2.0);
      Vecd y = random_direction(2);
      VolumeDerivs vd = volume_derivs(rm, bh, x);
      double r1 = weighted_ricci(rm, x, y, 4.0, vd);
      double r2 = weighted_ricci(rm, x, 2.0 * y, 4.0, vd);
      REQUIRE(r2 == Catch::Approx(r1).margin(1e-9 * (1.0 + std::abs(r1))));
    }
  }
}
