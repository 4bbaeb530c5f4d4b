#include "shdoa/sph_math.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shdoa/error.hpp"

namespace shdoa {

namespace {

constexpr double kTwoPi = 2.0 * kPi;

// n! as double; exact for n <= 22.
double factorial(int n) {
  static const auto table = [] {
    std::array<double, 171> t{};
    t[0] = 1.0;
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] * static_cast<double>(i);
    return t;
  }();
  if (n < 0 || n >= static_cast<int>(table.size())) {
    throw DomainError("factorial argument out of range: " + std::to_string(n));
  }
  return table[static_cast<std::size_t>(n)];
}

// Power series of j_n, used where upward recurrence loses precision.
double sph_bessel_j_series(int n, double x) {
  double lead = 1.0;
  for (int i = 0; i < n; ++i) lead *= x / (2.0 * i + 3.0);
  // lead = x^n / (2n+1)!!
  const double half_x2 = 0.5 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    term *= -half_x2 / (k * (2.0 * n + 2.0 * k + 1.0));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return lead * sum;
}

}  // namespace

ModeIndex ModeIndex::from_linear(int l) {
  if (l < 0) throw DomainError("negative linear mode index");
  const int n = static_cast<int>(std::floor(std::sqrt(static_cast<double>(l))));
  return ModeIndex{n, l - n * n - n};
}

Direction Direction::from_degrees(double theta_deg, double phi_deg) {
  double phi = std::fmod(phi_deg, 360.0);
  if (phi < 0.0) phi += 360.0;
  return Direction{theta_deg * kPi / 180.0, phi * kPi / 180.0};
}

Direction Direction::from_cartesian(const std::array<double, 3>& v) {
  const double r = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  if (!(r > 0.0)) throw DomainError("cannot take direction of zero vector");
  const double theta = std::acos(std::clamp(v[2] / r, -1.0, 1.0));
  double phi = std::atan2(v[1], v[0]);
  if (phi < 0.0) phi += kTwoPi;
  if (phi >= kTwoPi) phi = 0.0;
  return Direction{theta, phi};
}

std::array<double, 3> Direction::unit_vector() const {
  const double st = std::sin(theta);
  return {st * std::cos(phi), st * std::sin(phi), std::cos(theta)};
}

void Direction::validate() const {
  if (!(theta >= 0.0 && theta <= kPi)) throw DomainError("elevation outside [0, pi]");
  if (!(phi >= 0.0 && phi < kTwoPi)) throw DomainError("azimuth outside [0, 2 pi)");
}

double assoc_legendre(int n, int m_abs, double x) {
  if (m_abs < 0 || m_abs > n) throw DomainError("assoc_legendre requires 0 <= m <= n");
  if (!(std::abs(x) <= 1.0)) throw DomainError("assoc_legendre requires |x| <= 1");
  // P_m^m = (2m-1)!! (1-x^2)^{m/2}
  double pmm = 1.0;
  const double s = std::sqrt((1.0 - x) * (1.0 + x));
  for (int i = 1; i <= m_abs; ++i) pmm *= (2.0 * i - 1.0) * s;
  if (n == m_abs) return pmm;
  double pm1 = x * (2.0 * m_abs + 1.0) * pmm;
  if (n == m_abs + 1) return pm1;
  double pnm = 0.0;
  for (int l = m_abs + 2; l <= n; ++l) {
    pnm = (x * (2.0 * l - 1.0) * pm1 - (l + m_abs - 1.0) * pmm) / (l - m_abs);
    pmm = pm1;
    pm1 = pnm;
  }
  return pnm;
}

Complex sph_harmonic(ModeIndex idx, const Direction& dir) {
  if (!idx.valid()) throw DomainError("invalid mode index");
  const int am = std::abs(idx.m);
  const double norm = std::sqrt((2.0 * idx.n + 1.0) / (4.0 * kPi) * factorial(idx.n - am) /
                                factorial(idx.n + am));
  const double p = assoc_legendre(idx.n, am, std::cos(dir.theta));
  return std::polar(norm * p, idx.m * dir.phi);
}

double sph_bessel_j(int n, double x) {
  if (n < 0) throw DomainError("negative Bessel order");
  if (x < 0.0) throw DomainError("sph_bessel_j requires x >= 0");
  if (x < n + 1.0) return sph_bessel_j_series(n, x);
  double j0 = std::sin(x) / x;
  if (n == 0) return j0;
  double j1 = std::sin(x) / (x * x) - std::cos(x) / x;
  for (int l = 1; l < n; ++l) {
    const double j2 = (2.0 * l + 1.0) / x * j1 - j0;
    j0 = j1;
    j1 = j2;
  }
  return j1;
}

double sph_bessel_y(int n, double x) {
  if (n < 0) throw DomainError("negative Bessel order");
  if (!(x > 0.0)) throw DomainError("sph_bessel_y requires x > 0");
  double y0 = -std::cos(x) / x;
  if (n == 0) return y0;
  double y1 = -std::cos(x) / (x * x) - std::sin(x) / x;
  for (int l = 1; l < n; ++l) {
    const double y2 = (2.0 * l + 1.0) / x * y1 - y0;
    y0 = y1;
    y1 = y2;
  }
  return y1;
}

Complex sph_hankel1(int n, double x) { return {sph_bessel_j(n, x), sph_bessel_y(n, x)}; }

double sph_bessel_j_deriv(int n, double x) {
  if (n == 0) return -sph_bessel_j(1, x);
  if (!(x > 0.0)) return n == 1 ? 1.0 / 3.0 : 0.0;
  return sph_bessel_j(n - 1, x) - (n + 1.0) / x * sph_bessel_j(n, x);
}

Complex sph_hankel1_deriv(int n, double x) {
  if (n == 0) return -sph_hankel1(1, x);
  return sph_hankel1(n - 1, x) - (n + 1.0) / x * sph_hankel1(n, x);
}

Complex radial_b(int n, double xi, ArrayKind kind) {
  if (!(xi > 0.0)) throw DomainError("radial_b requires xi > 0");
  const double j = sph_bessel_j(n, xi);
  if (kind == ArrayKind::open) return {j, 0.0};
  return j - sph_bessel_j_deriv(n, xi) / sph_hankel1_deriv(n, xi) * sph_hankel1(n, xi);
}

double wigner3j(int j1, int j2, int j3, int m1, int m2, int m3) {
  if (j1 < 0 || j2 < 0 || j3 < 0) return 0.0;
  if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m3) > j3) return 0.0;
  if (m1 + m2 + m3 != 0) return 0.0;
  if (j3 < std::abs(j1 - j2) || j3 > j1 + j2) return 0.0;

  const double delta = factorial(j1 + j2 - j3) * factorial(j1 - j2 + j3) *
                       factorial(-j1 + j2 + j3) / factorial(j1 + j2 + j3 + 1);
  const double pre = std::sqrt(delta * factorial(j1 + m1) * factorial(j1 - m1) *
                               factorial(j2 + m2) * factorial(j2 - m2) * factorial(j3 + m3) *
                               factorial(j3 - m3));

  const int k_min = std::max({0, j2 - j3 - m1, j1 - j3 + m2});
  const int k_max = std::min({j1 + j2 - j3, j1 - m1, j2 + m2});
  double sum = 0.0;
  for (int k = k_min; k <= k_max; ++k) {
    const double den = factorial(k) * factorial(j3 - j2 + k + m1) * factorial(j3 - j1 + k - m2) *
                       factorial(j1 + j2 - j3 - k) * factorial(j1 - k - m1) *
                       factorial(j2 - k + m2);
    sum += ((k & 1) ? -1.0 : 1.0) / den;
  }
  const int phase = j1 - j2 - m3;
  return ((phase % 2 != 0) ? -1.0 : 1.0) * pre * sum;
}

Complex ipow(int p) {
  switch (((p % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

Complex coupling_c(int n, int n_prime) { return 16.0 * kPi * kPi * ipow(n - n_prime); }

Complex upsilon(ModeIndex idx, ModeIndex idx_prime, const Direction& dir) {
  return coupling_c(idx.n, idx_prime.n) * std::conj(sph_harmonic(idx, dir)) *
         sph_harmonic(idx_prime, dir);
}

Complex psi(ModeIndex idx, ModeIndex idx_prime, int v, int u) {
  if (std::abs(u) > v) return {0.0, 0.0};
  const int n = idx.n;
  const int np = idx_prime.n;
  const double w = ((idx.m % 2 != 0) ? -1.0 : 1.0) *
                   std::sqrt((2.0 * v + 1.0) * (2.0 * n + 1.0) * (2.0 * np + 1.0) / (4.0 * kPi)) *
                   wigner3j(v, n, np, 0, 0, 0) * wigner3j(v, n, np, u, -idx.m, idx_prime.m);
  return coupling_c(n, np) * w;
}

int truncation_order(double k, double r) {
  if (!(k > 0.0) || !(r > 0.0)) throw DomainError("truncation_order requires k, r > 0");
  return static_cast<int>(std::ceil(k * r));
}

}  // namespace shdoa
