#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "shdoa/error.hpp"
#include "shdoa/sph_math.hpp"

using namespace shdoa;

TEST_CASE("mode index linear mapping is a bijection") {
  for (int l = 0; l < num_modes(4); ++l) {
    const auto idx = ModeIndex::from_linear(l);
    CHECK(idx.valid());
    CHECK(idx.linear() == l);
  }
  CHECK(num_modes(1) == 4);
  CHECK(ModeIndex{1, -1}.linear() == 1);
  CHECK(ModeIndex{1, 1}.linear() == 3);
}

TEST_CASE("direction conversions") {
  const auto d = Direction::from_degrees(45.0, 370.0);
  CHECK(d.phi_deg() == doctest::Approx(10.0));
  for (double t : {0.0, 0.3, 1.2, kPi}) {
    const auto u = Direction{t, 2.0}.unit_vector();
    CHECK(std::hypot(u[0], u[1], u[2]) == doctest::Approx(1.0).epsilon(1e-12));
  }
  const auto back = Direction::from_cartesian({0.0, 2.0, 0.0});
  CHECK(back.theta == doctest::Approx(kPi / 2));
  CHECK(back.phi == doctest::Approx(kPi / 2));
  CHECK_THROWS_AS((void)Direction::from_cartesian({0.0, 0.0, 0.0}), DomainError);
  CHECK_THROWS_AS((Direction{4.0, 0.0}.validate()), DomainError);
}

TEST_CASE("associated Legendre values") {
  CHECK(assoc_legendre(0, 0, 0.3) == doctest::Approx(1.0));
  CHECK(assoc_legendre(1, 0, 0.5) == doctest::Approx(0.5));
  CHECK(assoc_legendre(1, 1, 0.0) == doctest::Approx(1.0));
  for (int n = 0; n <= 8; ++n)
    for (int m = 0; m <= n; ++m)
      for (double x : {-0.95, -0.4, 0.0, 0.2, 0.77, 1.0})
        CHECK(assoc_legendre(n, m, x) == doctest::Approx(oracle::legendre_closed(n, m, x)).epsilon(1e-10));
  CHECK_THROWS_AS(assoc_legendre(1, 0, 1.5), DomainError);
  CHECK_THROWS_AS(assoc_legendre(1, 2, 0.5), DomainError);
}

TEST_CASE("spherical harmonics") {
  CHECK(std::abs(sph_harmonic({0, 0}, {0.7, 1.1})) == doctest::Approx(0.28209479).epsilon(1e-8));
  CHECK(sph_harmonic({1, 0}, {0.0, 0.0}).real() == doctest::Approx(0.48860251).epsilon(1e-8));
  for (int n = 0; n <= 3; ++n)
    for (int m = -n; m <= n; ++m) {
      const Direction d{0.9, 2.3};
      const auto y = sph_harmonic({n, m}, d);
      CHECK(std::abs(y - oracle::ynm(n, m, d.theta, d.phi)) < 1e-12);
      CHECK(std::abs(sph_harmonic({n, m}, {0.9, 5.0})) == doctest::Approx(std::abs(y)));
      CHECK(std::abs(sph_harmonic({n, -m}, d) - std::conj(y)) < 1e-14);
    }
}

TEST_CASE("orthonormality on a dense quadrature") {
  const auto grid = oracle::gauss_product_array(8, 16, 1.0, ArrayKind::open);
  for (int a = 0; a < num_modes(2); ++a)
    for (int b = 0; b < num_modes(2); ++b) {
      Complex s = 0.0;
      for (std::size_t q = 0; q < grid.num_mics(); ++q)
        s += grid.weights[q] * sph_harmonic(ModeIndex::from_linear(a), grid.mic_directions[q]) *
             std::conj(sph_harmonic(ModeIndex::from_linear(b), grid.mic_directions[q]));
      CHECK(std::abs(s - (a == b ? 1.0 : 0.0)) < 1e-8);
    }
}

TEST_CASE("spherical Bessel and radial terms") {
  CHECK(sph_bessel_j(0, 1.0) == doctest::Approx(0.841471).epsilon(1e-6));
  for (int n = 0; n <= 3; ++n)
    for (double x : {0.05, 0.38, 1.0, 1.54, 3.0})
      CHECK(sph_bessel_j(n, x) == doctest::Approx(oracle::bessel_j_series(n, x)).epsilon(1e-9));
  CHECK(std::abs(radial_b(1, 1e-6, ArrayKind::open)) < 1e-6);
  for (double x = 0.3; x <= 2.0 + 1e-9; x += 0.01) {
    CHECK(radial_b(0, x, ArrayKind::open).imag() == 0.0);
    CHECK(std::abs(radial_b(0, x, ArrayKind::rigid)) > 0.1);
    CHECK(std::abs(radial_b(1, x, ArrayKind::rigid)) > 1e-3);
  }
  // derivative against a centered difference
  for (int n = 0; n <= 2; ++n) {
    const double x = 0.9, h = 1e-6;
    CHECK(sph_bessel_j_deriv(n, x) ==
          doctest::Approx((sph_bessel_j(n, x + h) - sph_bessel_j(n, x - h)) / (2 * h)).epsilon(1e-6));
    const Complex fd = (sph_hankel1(n, x + h) - sph_hankel1(n, x - h)) / (2 * h);
    CHECK(std::abs(sph_hankel1_deriv(n, x) - fd) < 1e-5 * std::abs(fd));
  }
  CHECK_THROWS_AS(radial_b(0, 0.0, ArrayKind::open), DomainError);
}

TEST_CASE("Wigner 3j values and symmetries") {
  CHECK(wigner3j(0, 0, 0, 0, 0, 0) == doctest::Approx(1.0));
  CHECK(wigner3j(1, 1, 0, 0, 0, 0) == doctest::Approx(-1.0 / std::sqrt(3.0)));
  CHECK(wigner3j(1, 2, 0, 0, 0, 0) == 0.0);
  CHECK(wigner3j(1, 1, 1, 1, 1, 1) == 0.0);
  CHECK(wigner3j(1, 1, 1, 2, -1, -1) == 0.0);
  for (int j1 = 0; j1 <= 3; ++j1)
    for (int j2 = 0; j2 <= 3; ++j2)
      for (int j3 = 0; j3 <= 3; ++j3)
        for (int m1 = -j1; m1 <= j1; ++m1)
          for (int m2 = -j2; m2 <= j2; ++m2) {
            const int m3 = -m1 - m2;
            const double w = wigner3j(j1, j2, j3, m1, m2, m3);
            const double sign = ((j1 + j2 + j3) % 2) ? -1.0 : 1.0;
            CHECK(wigner3j(j2, j3, j1, m2, m3, m1) == doctest::Approx(w));
            CHECK(wigner3j(j2, j1, j3, m2, m1, m3) == doctest::Approx(sign * w));
            CHECK(wigner3j(j1, j2, j3, -m1, -m2, -m3) == doctest::Approx(sign * w));
          }
}

TEST_CASE("Wigner oracles agree with each other") {
  for (int j1 = 0; j1 <= 3; ++j1)
    for (int j2 = 0; j2 <= 3; ++j2)
      for (int j3 = std::abs(j1 - j2); j3 <= j1 + j2; ++j3)
        for (int m1 = -j1; m1 <= j1; ++m1)
          for (int m2 = -j2; m2 <= j2; ++m2)
            CHECK(oracle::wigner3j_lowering(j1, j2, j3, m1, m2, -m1 - m2) ==
                  doctest::Approx(oracle::wigner3j_racah(j1, j2, j3, m1, m2, -m1 - m2)).epsilon(1e-12));
}

TEST_CASE("coupling constants and kernels") {
  CHECK(ipow(0) == Complex(1, 0));
  CHECK(ipow(5) == Complex(0, 1));
  CHECK(ipow(-1) == Complex(0, -1));
  CHECK(ipow(-2) == Complex(-1, 0));
  CHECK(std::abs(coupling_c(1, 0) - Complex(0, 16 * kPi * kPi)) < 1e-12);
  CHECK(upsilon({0, 0}, {0, 0}, {0.4, 0.2}).real() == doctest::Approx(4 * kPi));
  CHECK(std::abs(upsilon({1, 0}, {1, 0}, {kPi / 2, 0.3})) < 1e-12);
  const Direction d{1.1, 4.0};
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const auto ia = ModeIndex::from_linear(a), ib = ModeIndex::from_linear(b);
      CHECK(std::abs(upsilon(ia, ib, d) - std::conj(upsilon(ib, ia, d))) < 1e-12);
    }
  CHECK(psi({0, 0}, {0, 0}, 0, 0).real() == doctest::Approx(44.546623).epsilon(1e-7));
  CHECK(std::abs(psi({0, 0}, {0, 0}, 1, 0)) == 0.0);
}

TEST_CASE("psi matches a brute-force evaluation") {
  // C_nn' (-1)^m sqrt((2v+1)(2n+1)(2n'+1)/(4 pi)) (v n n'; 0 0 0)(v n n'; u -m m')
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int v = 0; v <= 2; ++v)
        for (int u = -v; u <= v; ++u) {
          const auto ia = ModeIndex::from_linear(a), ib = ModeIndex::from_linear(b);
          const double w = ((ia.m % 2) ? -1.0 : 1.0) *
                           std::sqrt((2 * v + 1) * (2 * ia.n + 1) * (2 * ib.n + 1) / (4 * kPi)) *
                           oracle::wigner3j_racah(v, ia.n, ib.n, 0, 0, 0) *
                           oracle::wigner3j_racah(v, ia.n, ib.n, u, -ia.m, ib.m);
          const Complex expect = 16 * kPi * kPi * ipow(ia.n - ib.n) * w;
          CHECK(std::abs(psi(ia, ib, v, u) - expect) < 1e-10);
        }
}

TEST_CASE("truncation order") {
  CHECK(truncation_order(1.0, 1.0) == 1);
  CHECK(truncation_order(1.54, 1.0) == 2);
  CHECK(truncation_order(0.38, 1.0) == 1);
  CHECK_THROWS_AS(truncation_order(0.0, 1.0), DomainError);
}
