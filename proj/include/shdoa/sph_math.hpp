#pragma once

// Spherical-harmonic special functions and modal-domain constants.
//
// Phase convention: the associated Legendre functions used here do NOT carry
// the Condon-Shortley factor (-1)^m, so
//
//   Y_nm(theta, phi) = sqrt((2n+1)/(4 pi) (n-|m|)!/(n+|m|)!) P_n|m|(cos theta) e^{i m phi}
//
// and consequently Y_{n,-m} = conj(Y_{n,m}). Every stage (decomposition,
// analytic coherence, features) uses this single definition.

#include <array>
#include <complex>
#include <cstddef>
#include <numbers>

namespace shdoa {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

/// Order / degree pair (n, m) with |m| <= n.
struct ModeIndex {
  int n = 0;
  int m = 0;

  /// Linear index n^2 + n + m.
  [[nodiscard]] constexpr int linear() const { return n * n + n + m; }
  [[nodiscard]] static ModeIndex from_linear(int l);
  [[nodiscard]] constexpr bool valid() const { return n >= 0 && m >= -n && m <= n; }

  friend constexpr bool operator==(const ModeIndex&, const ModeIndex&) = default;
};

/// Number of modes up to and including order n_max, (N+1)^2.
constexpr int num_modes(int n_max) { return (n_max + 1) * (n_max + 1); }

/// Direction on the unit sphere. theta is elevation (polar angle from +z),
/// phi is azimuth; both in radians.
struct Direction {
  double theta = 0.0;
  double phi = 0.0;

  /// Builds a direction from degrees, wrapping azimuth into [0, 360).
  [[nodiscard]] static Direction from_degrees(double theta_deg, double phi_deg);
  /// Direction of a Cartesian vector (need not be unit length, must be non-zero).
  [[nodiscard]] static Direction from_cartesian(const std::array<double, 3>& v);

  [[nodiscard]] std::array<double, 3> unit_vector() const;
  [[nodiscard]] double theta_deg() const { return theta * 180.0 / kPi; }
  [[nodiscard]] double phi_deg() const { return phi * 180.0 / kPi; }
  /// Throws DomainError unless theta in [0, pi] and phi in [0, 2 pi).
  void validate() const;
};

enum class ArrayKind { open, rigid };

/// Associated Legendre function without the Condon-Shortley phase.
double assoc_legendre(int n, int m_abs, double x);

/// Complex spherical harmonic Y_nm(dir).
Complex sph_harmonic(ModeIndex idx, const Direction& dir);

/// Spherical Bessel function of the first kind j_n(x).
double sph_bessel_j(int n, double x);
/// Spherical Bessel function of the second kind y_n(x), x > 0.
double sph_bessel_y(int n, double x);
/// Spherical Hankel function of the first kind h_n(x) = j_n(x) + i y_n(x).
Complex sph_hankel1(int n, double x);
/// d/dx j_n(x).
double sph_bessel_j_deriv(int n, double x);
/// d/dx h_n(x).
Complex sph_hankel1_deriv(int n, double x);

/// Radial mode strength b_n(xi) for an open or rigid spherical array.
Complex radial_b(int n, double xi, ArrayKind kind);

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3). Returns 0 whenever a selection
/// rule fails or a quantum number is invalid.
double wigner3j(int j1, int j2, int j3, int m1, int m2, int m3);

/// i^p for integer p, exact.
Complex ipow(int p);

/// C_nn' = 16 pi^2 i^{n - n'}.
Complex coupling_c(int n, int n_prime);

/// Direct-path coherence kernel C_nn' Y*_nm(dir) Y_n'm'(dir).
Complex upsilon(ModeIndex idx, ModeIndex idx_prime, const Direction& dir);

/// Reverberant coherence kernel C_nn' W_{v,n,n'}^{u,m,m'}.
Complex psi(ModeIndex idx, ModeIndex idx_prime, int v, int u);

/// Soundfield truncation order ceil(k r).
int truncation_order(double k, double r);

}  // namespace shdoa
