#include <catch2/catch_amalgamated.hpp>

#include "flab/dual.hpp"
#include "flab/metric.hpp"
#include "flab/volume.hpp"
#include "support.hpp"

using namespace flab;
using namespace flab::testing;

namespace {

D4 nest4(double x) {
  D1 a{x, 1.0};
  D2 b{a, D1(1.0)};
  D3 c{b, D2(D1(1.0))};
  return D4{c, D3(D2(D1(1.0)))};
}

Vecd legendre_covector(const MetricDescriptor& m, const Vecd& x, const Vecd& y) {
  return 0.5 * dF2_dy(m, lift<double>(x), y);
}

}  // namespace

TEST_CASE("nested duals differentiate to fourth order") {
  // f = exp(sin x): derivatives at x=0.4 against hand-chained values.
  double x = 0.4;
  auto f = [](auto t) { return exp(sin(t)); };
  D4 r = f(nest4(x));
  double s = std::sin(x), c = std::cos(x), e = std::exp(s);
  CHECK(r.v.v.v.v == Catch::Approx(e).epsilon(1e-14));
  CHECK(r.d.v.v.v == Catch::Approx(e * c).epsilon(1e-14));
  CHECK(r.v.d.v.v == Catch::Approx(e * c).epsilon(1e-14));
  double d2 = e * (c * c - s);
  double d3 = e * (c * c * c - 3.0 * s * c - c);
  double d4 = e * (c * c * c * c - 6.0 * s * c * c - 4.0 * c * c + 3.0 * s * s + s);
  CHECK(r.d.d.v.v == Catch::Approx(d2).epsilon(1e-13));
  CHECK(r.d.d.d.v == Catch::Approx(d3).epsilon(1e-13));
  CHECK(r.d.d.d.d == Catch::Approx(d4).epsilon(1e-12));
}

TEST_CASE("norm evaluates the shipped families") {
  Vecd x0{0.0, 0.0};
  CHECK(norm(euclid(2), x0, Vecd{3.0, 4.0}) == Catch::Approx(5.0).epsilon(1e-15));
  CHECK(norm(randers_const(2), x0, Vecd{1.0, 0.0}) == Catch::Approx(1.3).epsilon(1e-15));
  CHECK(norm(euclid(2), x0, Vecd{0.0, 0.0}) == 0.0);

  SECTION("positive homogeneity across families") {
    for (const auto& fam : shipped_families()) {
      int n = fam.metric.dim();
      for (int s = 0; s < 1000; ++s) {
        Vecd x = random_point(n);
        Vecd y = random_direction(n);
        double lam = std::exp(uniform(-3.0, 3.0));
        double f = norm(fam.metric, x, y);
        double fl = norm(fam.metric, x, lam * y);
        REQUIRE(fl == Catch::Approx(lam * f).epsilon(1e-12));
      }
    }
  }

  SECTION("triangle inequality across families") {
    for (const auto& fam : shipped_families()) {
      int n = fam.metric.dim();
      for (int s = 0; s < 1000; ++s) {
        Vecd x = random_point(n);
        Vecd y = random_direction(n);
        Vecd z = random_direction(n);
        double fy = norm(fam.metric, x, y);
        double fz = norm(fam.metric, x, z);
        double fyz = norm(fam.metric, x, y + z);
        REQUIRE(fyz <= fy + fz + 1e-12 * (fy + fz));
      }
    }
  }

  SECTION("scaled descriptor scales the norm") {
    MetricDescriptor m = randers_const(2).scaled(2.5);
    CHECK(norm(m, x0, Vecd{1.0, 0.0}) == Catch::Approx(2.5 * 1.3).epsilon(1e-14));
  }
}

TEST_CASE("norm validation errors") {
  Vecd big{1.1, 0.0};
  MetricDescriptor bad = MetricDescriptor::randers(2, constant_covector_map(big));
  CHECK_THROWS_AS(norm(bad, Vecd{0.0, 0.0}, Vecd{1.0, 0.0}), Error);
  try {
    norm(bad, Vecd{0.0, 0.0}, Vecd{1.0, 0.0});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MetricViolation);
  }

  CHECK_THROWS_AS(norm(euclid(2), Vecd{0.0, 0.0, 0.0}, Vecd{1.0, 0.0}), Error);

  // custom norm vanishing on a nonzero direction
  auto degenerate = make_norm_map([](const auto&, const auto& y) { return y[0]; });
  MetricDescriptor deg = MetricDescriptor::custom(2, degenerate);
  CHECK_THROWS_AS(norm(deg, Vecd{0.0, 0.0}, Vecd{0.0, 1.0}), Error);
}

TEST_CASE("fundamental tensor") {
  Vecd x0{0.0, 0.0};

  SECTION("euclidean gives the identity") {
    FundamentalTensor t = fundamental_tensor(euclid(2), x0, Vecd{0.7, -0.2});
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        CHECK(t.g(i, j) == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-14));
  }

  SECTION("riemannian gives a(x) independent of y") {
    MetricDescriptor m = riemann_diag_torus();
    Vecd x{0.4, -1.1};
    FundamentalTensor t1 = fundamental_tensor(m, x, Vecd{1.0, 0.0});
    FundamentalTensor t2 = fundamental_tensor(m, x, Vecd{-0.3, 2.0});
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) CHECK(t1.g(i, j) == Catch::Approx(t2.g(i, j)).margin(1e-13));
    CHECK(t1.g(0, 0) == Catch::Approx(1.0 + 0.5 * std::sin(0.4) * std::sin(0.4)).epsilon(1e-13));
  }

  SECTION("randers matches the finite-difference hessian of F^2/2") {
    MetricDescriptor m = randers_const(2);
    Vecd y{1.0, 0.0};
    FundamentalTensor t = fundamental_tensor(m, x0, y);
    Matd fd = fd_fundamental_tensor(m, x0, y, 0.01);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) CHECK(t.g(i, j) == Catch::Approx(fd(i, j)).margin(1e-7));
  }

  SECTION("zero direction is rejected") {
    CHECK_THROWS_AS(fundamental_tensor(euclid(2), x0, Vecd{0.0, 0.0}), Error);
  }

  SECTION("properties: SPD, degree-0 homogeneity, FD agreement") {
    for (const auto& fam : shipped_families()) {
      int n = fam.metric.dim();
      for (int s = 0; s < 1000; ++s) {
        Vecd x = random_point(n);
        Vecd y = random_direction(n);
        FundamentalTensor t = fundamental_tensor(fam.metric, x, y);
        REQUIRE(spd_check(t.g));
        double lam = std::exp(uniform(-2.0, 2.0));
        Matd g2 = fundamental_tensor_t<double>(fam.metric, x, lam * y);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            REQUIRE(g2(i, j) == Catch::Approx(t.g(i, j)).margin(1e-10 * (1.0 + std::abs(t.g(i, j)))));
      }
      // FD cross-check on a thinner sample set (oracle is the slow part)
      for (int s = 0; s < 50; ++s) {
        Vecd x = random_point(n);
        Vecd y = random_direction(n, 0.5, 1.5);
        Matd g = fundamental_tensor_t<double>(fam.metric, x, y);
        Matd fd = fd_fundamental_tensor(fam.metric, x, y, 0.005);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) REQUIRE(g(i, j) == Catch::Approx(fd(i, j)).margin(5e-6));
      }
    }
  }
}

TEST_CASE("cartan tensor") {
  Vecd x0{0.0, 0.0};

  SECTION("riemannian cartan vanishes") {
    CartanTensor c = cartan_tensor(riemann_diag_torus(), Vecd{0.3, 0.8}, Vecd{0.5, -1.0});
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) CHECK(std::abs(c.c(i, j, k)) < 1e-12);
  }

  SECTION("randers matches finite differences of g in y") {
    MetricDescriptor m = randers_const(2);
    Vecd y{0.0, 1.0};
    CartanTensor c = cartan_tensor(m, x0, y);
    for (int k = 0; k < 2; ++k) {
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          auto comp = [&](double t) {
            Vecd yy = y;
            yy[k] += t;
            return fundamental_tensor_t<double>(m, x0, yy)(i, j);
          };
          double fd = 0.5 * fd_derivative(comp, 0.01);
          CHECK(c.c(i, j, k) == Catch::Approx(fd).margin(1e-6));
        }
    }
  }

  SECTION("contraction with y vanishes across families") {
    for (const auto& fam : shipped_families()) {
      int n = fam.metric.dim();
      for (int s = 0; s < 1000; ++s) {
        Vecd x = random_point(n);
        Vecd y = random_direction(n);
        CartanTensor c = cartan_tensor(fam.metric, x, y);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double s1 = 0.0;
            for (int k = 0; k < n; ++k) s1 += c.c(i, j, k) * y[k];
            REQUIRE(std::abs(s1) < 1e-10 * (1.0 + std::abs(c.c(i, j, 0))));
          }
      }
    }
  }

  SECTION("A = F C") {
    MetricDescriptor m = custom_quartic();
    Vecd x = x0;
    Vecd y{0.8, 0.5};
    double f = norm(m, x, y);
    CartanTensor c = cartan_tensor(m, x, y);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          CHECK(c.a(i, j, k) == Catch::Approx(f * c.c(i, j, k)).margin(1e-14));
  }
}

TEST_CASE("dual norm") {
  Vecd x0{0.0, 0.0};

  SECTION("euclidean is self dual") {
    CHECK(dual_norm(euclid(2), x0, Vecd{3.0, 4.0}) == Catch::Approx(5.0).epsilon(1e-12));
  }

  SECTION("randers against the brute-force sup over 1e6 directions") {
    MetricDescriptor m = randers_const(2);
    Vecd xi{1.0, 0.0};
    double sup = 0.0;
    int N = 1000000;
    for (int i = 0; i < N; ++i) {
      double th = 2.0 * M_PI * i / N;
      Vecd y{std::cos(th), std::sin(th)};
      double v = dot(xi, y) / norm(m, x0, y);
      sup = std::max(sup, v);
    }
    CHECK(dual_norm(m, x0, xi) == Catch::Approx(sup).margin(1e-4));
  }

  SECTION("randers closed form") {
    MetricDescriptor m = randers_const(2);
    Vecd b{0.3, 0.0};
    for (int s = 0; s < 200; ++s) {
      Vecd xi = random_direction(2);
      double b2 = dot(b, b);
      double bxi = dot(b, xi);
      double expect = (std::sqrt((1.0 - b2) * dot(xi, xi) + bxi * bxi) - bxi) / (1.0 - b2);
      REQUIRE(dual_norm(m, x0, xi) == Catch::Approx(expect).epsilon(1e-10));
    }
  }

  SECTION("legendre covector of a unit vector has dual norm 1") {
    for (const auto& fam : shipped_families()) {
      int n = fam.metric.dim();
      for (int s = 0; s < 1000; ++s) {
        Vecd x = random_point(n);
        Vecd y = random_direction(n);
        double f = norm(fam.metric, x, y);
        Vecd yu = (1.0 / f) * y;
        Vecd xi = legendre_covector(fam.metric, x, yu);
        REQUIRE(dual_norm(fam.metric, x, xi) == Catch::Approx(1.0).epsilon(1e-10));
      }
    }
  }

  SECTION("zero covector") {
    CHECK(dual_norm(randers_const(2), x0, Vecd{0.0, 0.0}) == 0.0);
  }
}

TEST_CASE("legendre inverse") {
  Vecd x0{0.0, 0.0};

  SECTION("euclidean is the identity") {
    Vecd y = legendre_inverse(euclid(2), x0, Vecd{0.3, -0.7});
    CHECK(y[0] == Catch::Approx(0.3).epsilon(1e-12));
    CHECK(y[1] == Catch::Approx(-0.7).epsilon(1e-12));
  }

  SECTION("randers against the unit-sphere argmax search") {
    MetricDescriptor m = randers_const(2);
    Vecd xi{0.0, 1.0};
    double best = -1e300;
    Vecd ybest(2);
    int N = 1000000;
    for (int i = 0; i < N; ++i) {
      double th = 2.0 * M_PI * i / N;
      Vecd dir{std::cos(th), std::sin(th)};
      Vecd yu = (1.0 / norm(m, x0, dir)) * dir;
      double v = dot(xi, yu);
      if (v > best) {
        best = v;
        ybest = yu;
      }
    }
    double fstar = dual_norm(m, x0, xi);
    Vecd y = legendre_inverse(m, x0, xi);
    CHECK(y[0] == Catch::Approx(fstar * ybest[0]).margin(1e-4));
    CHECK(y[1] == Catch::Approx(fstar * ybest[1]).margin(1e-4));
  }

  SECTION("round trip and defining identity across families") {
    for (const auto& fam : shipped_families()) {
      int n = fam.metric.dim();
      for (int s = 0; s < 1000; ++s) {
        Vecd x = random_point(n);
        Vecd y = random_direction(n);
        Vecd xi = legendre_covector(fam.metric, x, y);
        Vecd yr = legendre_inverse(fam.metric, x, xi);
        for (int i = 0; i < n; ++i) REQUIRE(yr[i] == Catch::Approx(y[i]).margin(1e-9 * (1.0 + std::abs(y[i]))));
        // F(L*(xi)) = F*(xi) = sqrt(xi . L*(xi))
        Vecd xi2 = random_direction(n);
        Vecd z = legendre_inverse(fam.metric, x, xi2);
        double fz = norm(fam.metric, x, z);
        double fstar = dual_norm(fam.metric, x, xi2);
        REQUIRE(fz == Catch::Approx(fstar).epsilon(1e-10));
        REQUIRE(std::sqrt(std::max(0.0, dot(xi2, z))) == Catch::Approx(fstar).epsilon(1e-9));
      }
    }
  }

  SECTION("zero covector maps to the zero vector") {
    Vecd y = legendre_inverse(randers_const(2), x0, Vecd{0.0, 0.0});
    CHECK(norm2(y) == 0.0);
  }

  SECTION("duality gap is one sided") {
    for (const auto& fam : shipped_families()) {
      int n = fam.metric.dim();
      for (int s = 0; s < 200; ++s) {
        Vecd x = random_point(n);
        Vecd xi = random_direction(n);
        Vecd y = random_direction(n);
        double fstar = dual_norm(fam.metric, x, xi);
        double ratio = dot(xi, y) / norm(fam.metric, x, y);
        REQUIRE(ratio <= fstar + 1e-10 * (1.0 + fstar));
      }
    }
  }
}

TEST_CASE("scaled metrics transform norms and duals reciprocally") {
  MetricDescriptor m = custom_quadratic_randers();
  MetricDescriptor mc = m.scaled(1.7);
  Vecd x{0.1, -0.4};
  Vecd y{0.6, 0.9};
  Vecd xi{-0.2, 1.1};
  CHECK(norm(mc, x, y) == Catch::Approx(1.7 * norm(m, x, y)).epsilon(1e-12));
  CHECK(dual_norm(mc, x, xi) == Catch::Approx(dual_norm(m, x, xi) / 1.7).epsilon(1e-10));
}

TEST_CASE("busemann-hausdorff density") {
  Vecd x0{0.0, 0.0};

  SECTION("euclidean density is 1") {
    CHECK(busemann_hausdorff_density(euclid(2), x0) == Catch::Approx(1.0).epsilon(1e-12));
  }

  SECTION("riemannian density is sqrt det a") {
    MetricDescriptor m = riemann_diag_torus();
    Vecd x{0.7, 1.9};
    double expect = std::sqrt(det(fundamental_tensor_t<double>(m, x, Vecd{1.0, 0.0})));
    CHECK(busemann_hausdorff_density(m, x) == Catch::Approx(expect).epsilon(1e-8));
  }

  SECTION("constant randers closed form in n=2 and n=3") {
    CHECK(busemann_hausdorff_density(randers_const(2), x0) ==
          Catch::Approx(std::pow(0.91, 1.5)).margin(1e-6));
    Vecd x03{0.0, 0.0, 0.0};
    CHECK(busemann_hausdorff_density(randers_const(3), x03, 2048) ==
          Catch::Approx(std::pow(0.91, 2.0)).margin(1e-6));
  }

  SECTION("volume descriptor kinds agree where they overlap") {
    MetricDescriptor m = riemann_diag_torus();
    Vecd x{0.2, -0.9};
    VolumeDescriptor bh = VolumeDescriptor::busemann_hausdorff();
    VolumeDescriptor rv = VolumeDescriptor::riemannian();
    CHECK(bh.phi(m, x) == Catch::Approx(rv.phi(m, x)).margin(1e-8));
    Vecd gb = bh.grad_phi(m, x);
    Vecd gr = rv.grad_phi(m, x);
    for (int i = 0; i < 2; ++i) CHECK(gb[i] == Catch::Approx(gr[i]).margin(1e-6));
    Matd hb = bh.hess_phi(m, x);
    Matd hr = rv.hess_phi(m, x);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) CHECK(hb(i, j) == Catch::Approx(hr(i, j)).margin(1e-5));
  }
}
