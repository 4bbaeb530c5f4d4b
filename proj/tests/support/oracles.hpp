#pragma once

// Reference implementations used only by tests. Each one takes a different
// route from the library code it checks.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <numbers>
#include <tuple>
#include <utility>
#include <vector>

#include "shdoa/nn.hpp"
#include "shdoa/room_sim.hpp"
#include "shdoa/sph_math.hpp"

namespace oracle {

using Complex = std::complex<double>;
inline constexpr double kPi = std::numbers::pi;

inline long double fact(int n) {
  long double r = 1.0L;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

// Racah's formula for the Clebsch-Gordan coefficient <j1 m1 j2 m2 | J M>,
// summing every integer k and skipping terms with a negative factorial.
inline long double clebsch_racah(int j1, int m1, int j2, int m2, int J, int M) {
  if (m1 + m2 != M) return 0.0L;
  if (J < std::abs(j1 - j2) || J > j1 + j2) return 0.0L;
  if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(M) > J) return 0.0L;
  const long double pre = std::sqrt((2.0L * J + 1) * fact(J + j1 - j2) * fact(J - j1 + j2) * fact(j1 + j2 - J) /
                                    fact(j1 + j2 + J + 1)) *
                          std::sqrt(fact(J + M) * fact(J - M) * fact(j1 - m1) * fact(j1 + m1) * fact(j2 - m2) *
                                    fact(j2 + m2));
  long double sum = 0.0L;
  for (int k = 0; k <= j1 + j2 + J; ++k) {
    const int a[5] = {j1 + j2 - J - k, j1 - m1 - k, j2 + m2 - k, J - j2 + m1 + k, J - j1 - m2 + k};
    if (std::any_of(a, a + 5, [](int x) { return x < 0; })) continue;
    long double den = fact(k);
    for (int x : a) den *= fact(x);
    sum += ((k % 2) ? -1.0L : 1.0L) / den;
  }
  return pre * sum;
}

// 3j symbol through its Clebsch-Gordan relation.
inline double wigner3j_racah(int j1, int j2, int j3, int m1, int m2, int m3) {
  if (j1 < 0 || j2 < 0 || j3 < 0) return 0.0;
  if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m3) > j3) return 0.0;
  if (m1 + m2 + m3 != 0) return 0.0;
  const int p = j1 - j2 - m3;
  const long double sign = (((p % 2) + 2) % 2) ? -1.0L : 1.0L;
  return static_cast<double>(sign / std::sqrt(2.0L * j3 + 1) * clebsch_racah(j1, m1, j2, m2, j3, -m3));
}

inline std::map<int, double> clebsch_lowering_top(int j1, int j2, int J);

// Clebsch-Gordan table for one (j1, j2, J) built by diagonalization-free
// construction: |J J> from orthogonality to every higher-J top state plus
// the Condon-Shortley sign rule, then repeated application of the lowering
// operator. Coefficients for all M are returned as map[(m1, M)].
inline std::map<std::pair<int, int>, double> clebsch_lowering(int j1, int j2, int J) {
  using State = std::map<int, double>;  // m1 -> amplitude, m2 = M - m1
  auto lower = [&](const State& s, int M) {
    State out;
    for (const auto& [m1, a] : s) {
      const int m2 = M - m1;
      if (m1 > -j1) out[m1 - 1] += a * std::sqrt(double(j1 + m1) * (j1 - m1 + 1));
      if (m2 > -j2) out[m1] += a * std::sqrt(double(j2 + m2) * (j2 - m2 + 1));
    }
    double n = 0.0;
    for (const auto& [k, v] : out) n += v * v;
    n = std::sqrt(n);
    for (auto& [k, v] : out) v /= n;
    return out;
  };
  // Top states |J', M=J> for J' > J, obtained recursively by lowering.
  std::vector<State> higher;
  for (int jp = j1 + j2; jp > J; --jp) {
    State s = jp == j1 + j2 ? State{{j1, 1.0}} : clebsch_lowering_top(j1, j2, jp);
    for (int M = jp; M > J; --M) s = lower(s, M);
    higher.push_back(s);
  }
  // Gram-Schmidt the basis of M = J product states against them.
  State top;
  for (int m1 = std::max(-j1, J - j2); m1 <= std::min(j1, J + j2); ++m1) {
    State cand{{m1, 1.0}};
    for (const auto& h : higher) {
      double dot = 0.0;
      for (const auto& [k, v] : h) dot += v * (cand.count(k) ? cand[k] : 0.0);
      for (const auto& [k, v] : h) cand[k] -= dot * v;
    }
    double n = 0.0;
    for (const auto& [k, v] : cand) n += v * v;
    if (n > 1e-10) {
      top = cand;
      break;
    }
  }
  double n = 0.0;
  for (const auto& [k, v] : top) n += v * v;
  n = std::sqrt(n);
  for (auto& [k, v] : top) v /= n;
  if (top.count(j1) && top[j1] < 0)
    for (auto& [k, v] : top) v = -v;
  std::map<std::pair<int, int>, double> table;
  State s = top;
  for (int M = J;; --M) {
    for (const auto& [m1, a] : s) table[{m1, M}] = a;
    if (M == -J) break;
    s = lower(s, M);
  }
  return table;
}

// Top state of (j1 j2) J, needed while building lower-J tables.
inline std::map<int, double> clebsch_lowering_top(int j1, int j2, int J) {
  const auto t = clebsch_lowering(j1, j2, J);
  std::map<int, double> s;
  for (const auto& [key, v] : t)
    if (key.second == J) s[key.first] = v;
  return s;
}

inline double wigner3j_lowering(int j1, int j2, int j3, int m1, int m2, int m3) {
  if (m1 + m2 + m3 != 0 || j3 < std::abs(j1 - j2) || j3 > j1 + j2) return 0.0;
  if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m3) > j3) return 0.0;
  static std::map<std::tuple<int, int, int>, std::map<std::pair<int, int>, double>> cache;
  auto key = std::make_tuple(j1, j2, j3);
  if (!cache.count(key)) cache[key] = clebsch_lowering(j1, j2, j3);
  const auto& t = cache[key];
  const auto it = t.find({m1, -m3});
  const double cg = it == t.end() ? 0.0 : it->second;
  const int p = j1 - j2 - m3;
  return ((((p % 2) + 2) % 2) ? -1.0 : 1.0) / std::sqrt(2.0 * j3 + 1) * cg;
}

// Associated Legendre without Condon-Shortley phase via the closed form
// P_n^m(x) = (1 - x^2)^{m/2} d^m/dx^m P_n(x), with P_n expanded in powers.
inline double legendre_closed(int n, int m, double x) {
  // Rodrigues: P_n(x) = 2^-n sum_k (-1)^k C(n,k) C(2n-2k, n) x^{n-2k}
  double d = 0.0;
  for (int k = 0; 2 * k <= n; ++k) {
    const int p = n - 2 * k;
    if (p < m) continue;
    const double c = ((k % 2) ? -1.0 : 1.0) * static_cast<double>(fact(n) / (fact(k) * fact(n - k))) *
                     static_cast<double>(fact(2 * n - 2 * k) / (fact(n) * fact(n - 2 * k)));
    d += c * static_cast<double>(fact(p) / fact(p - m)) * std::pow(x, p - m);
  }
  return std::pow(0.5, n) * std::pow(1.0 - x * x, 0.5 * m) * d;
}

inline Complex ynm(int n, int m, double theta, double phi) {
  const int a = std::abs(m);
  const double norm = std::sqrt((2 * n + 1) / (4 * kPi) * static_cast<double>(fact(n - a) / fact(n + a)));
  return norm * legendre_closed(n, a, std::cos(theta)) * std::polar(1.0, m * phi);
}

// j_n(x) from its power series.
inline double bessel_j_series(int n, double x) {
  long double sum = 0.0L;
  long double dfact = 1.0L;  // (2n+1)!!
  for (int k = 1; k <= 2 * n + 1; k += 2) dfact *= k;
  long double term = std::pow(static_cast<long double>(x), n) / dfact;
  for (int k = 0; k < 60; ++k) {
    sum += term;
    term *= -0.5L * x * x / ((k + 1) * (2.0L * n + 2 * k + 3));
  }
  return static_cast<double>(sum);
}

// Plane wave pressure at radius r in direction (theta, phi) for a wave
// arriving from dir, truncated at order n_max via the Legendre addition form.
inline Complex plane_wave_pressure(double k, double r, double theta, double phi, const shdoa::Direction& dir,
                                   int n_max) {
  const double cg = std::sin(theta) * std::sin(dir.theta) * std::cos(phi - dir.phi) +
                    std::cos(theta) * std::cos(dir.theta);
  Complex p = 0.0;
  for (int n = 0; n <= n_max; ++n)
    p += double(2 * n + 1) * shdoa::ipow(n) * bessel_j_series(n, k * r) * legendre_closed(n, 0, cg);
  return p;
}

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) {
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        break;
      }
    }
  }
}

// Product grid: n_theta Gauss-Legendre elevations times n_phi uniform azimuths.
inline shdoa::ArrayConfig gauss_product_array(int n_theta, int n_phi, double radius, shdoa::ArrayKind kind) {
  std::vector<double> x, w;
  gauss_legendre(n_theta, x, w);
  shdoa::ArrayConfig a;
  a.radius = radius;
  a.kind = kind;
  for (int i = 0; i < n_theta; ++i)
    for (int j = 0; j < n_phi; ++j) {
      a.mic_directions.push_back({std::acos(x[i]), 2.0 * kPi * j / n_phi});
      a.weights.push_back(w[i] * 2.0 * kPi / n_phi);
    }
  return a;
}

// T60 from the Schroeder backward integral, extrapolating the -5..-25 dB span.
inline double schroeder_t60(const std::vector<double>& h, double fs) {
  std::vector<double> e(h.size());
  double acc = 0.0;
  for (std::size_t i = h.size(); i-- > 0;) {
    acc += h[i] * h[i];
    e[i] = acc;
  }
  long i5 = -1, i25 = -1;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double db = 10.0 * std::log10(e[i] / e[0]);
    if (i5 < 0 && db <= -5.0) i5 = static_cast<long>(i);
    if (db <= -25.0) {
      i25 = static_cast<long>(i);
      break;
    }
  }
  if (i5 < 0 || i25 < 0) return -1.0;
  return 3.0 * static_cast<double>(i25 - i5) / fs;
}

// Central finite-difference gradient of f over params.
inline std::vector<double> fd_gradient(std::vector<double>& params, const std::function<double()>& f,
                                       double h = 1e-4) {
  std::vector<double> g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    const double up = f();
    params[i] = keep - h;
    const double dn = f();
    params[i] = keep;
    g[i] = (up - dn) / (2.0 * h);
  }
  return g;
}

// Worst |a - b| / max(|a|, |b|, floor) over two gradient vectors.
inline double max_rel_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max({std::abs(a[i]), std::abs(b[i]), floor}));
  return worst;
}

}  // namespace oracle
