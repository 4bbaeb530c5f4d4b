#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "shdoa/error.hpp"
#include "shdoa/shd.hpp"

using namespace shdoa;

namespace {

// Order-limited field sum_nm a_nm b_n(kr) Y_nm evaluated at every microphone.
std::vector<Complex> synthesize(const ArrayConfig& a, const std::vector<Complex>& alpha, double k, int n_max) {
  std::vector<Complex> p(a.num_mics());
  for (std::size_t q = 0; q < a.num_mics(); ++q)
    for (int l = 0; l < num_modes(n_max); ++l) {
      const auto idx = ModeIndex::from_linear(l);
      p[q] += alpha[l] * radial_b(idx.n, k * a.radius, a.kind) * sph_harmonic(idx, a.mic_directions[q]);
    }
  return p;
}

}  // namespace

TEST_CASE("shipped grid residual is frozen") {
  const auto a = default_array({0, 0, 0});
  const double r = check_grid(a, 1);
  CHECK(r <= 1e-6);
  CHECK(r < 1e-14);
  ArrayConfig one;
  one.mic_directions = {{0.3, 0.2}};
  one.weights = {4 * kPi};
  CHECK(check_grid(one, 1) >= 0.9);
  ArrayConfig three;
  three.mic_directions = {{0.3, 0.2}, {1.0, 2.0}, {2.0, 4.0}};
  three.weights = {4.0, 4.5, 3.0};
  CHECK(check_grid(three, 0) == doctest::Approx(std::abs(11.5 / (4 * kPi) - 1.0)));
}

TEST_CASE("decomposition of simple fields") {
  const auto a = default_array({0, 0, 0});
  const double k = 2 * kPi * 1000.0 / 343.0;
  const Decomposer d(a, 1);
  const std::vector<Complex> constant(9, Complex(0.7, -0.2));
  const auto h = d.apply(constant, k);
  const Complex a00 = Complex(0.7, -0.2) * std::sqrt(4 * kPi) / radial_b(0, k * a.radius, a.kind);
  CHECK(std::abs(h.alpha[0] - a00) < 1e-12 * std::abs(a00));
  for (int l = 1; l < 4; ++l) CHECK(std::abs(h.alpha[l]) < 1e-6 * std::abs(a00));
  const auto z = d.apply(std::vector<Complex>(9), k);
  for (const auto& v : z.alpha) CHECK(v == Complex(0.0));
  CHECK_THROWS_AS((void)d.apply(std::vector<Complex>(4), k), ShapeError);
}

TEST_CASE("decomposition is linear and round-trips order-limited fields") {
  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  for (auto kind : {ArrayKind::open, ArrayKind::rigid}) {
    const auto a = default_array({0, 0, 0}, kind);
    const Decomposer d(a, 1);
    for (double f : {500.0, 1250.0, 2000.0}) {
      const double k = 2 * kPi * f / 343.0;
      std::vector<Complex> alpha(4);
      for (auto& v : alpha) v = {g(rng), g(rng)};
      const auto p = synthesize(a, alpha, k, 1);
      const auto h = d.apply(p, k);
      for (int l = 0; l < 4; ++l) CHECK(std::abs(h.alpha[l] - alpha[l]) < 1e-9 * std::abs(alpha[l]) + 1e-12);
      const auto back = synthesize(a, h.alpha, k, 1);
      for (std::size_t q = 0; q < 9; ++q) CHECK(std::abs(back[q] - p[q]) < 1e-9 * std::abs(p[q]));

      std::vector<Complex> p2(9), mix(9);
      for (auto& v : p2) v = {g(rng), g(rng)};
      for (int q = 0; q < 9; ++q) mix[q] = 2.0 * p[q] + Complex(0, 1) * p2[q];
      const auto h2 = d.apply(p2, k);
      const auto hm = d.apply(mix, k);
      for (int l = 0; l < 4; ++l) CHECK(std::abs(hm.alpha[l] - (2.0 * h.alpha[l] + Complex(0, 1) * h2.alpha[l])) < 1e-9);
    }
  }
}

TEST_CASE("plane wave coefficients on a dense grid") {
  const auto a = oracle::gauss_product_array(8, 16, 0.042, ArrayKind::open);
  const Direction src = Direction::from_degrees(60.0, 130.0);
  for (int bin = 8; bin <= 32; bin += 6) {
    const double k = bin_wavenumber(bin, 62.5, 343.0);
    std::vector<Complex> p(a.num_mics());
    for (std::size_t q = 0; q < p.size(); ++q)
      p[q] = oracle::plane_wave_pressure(k, a.radius, a.mic_directions[q].theta, a.mic_directions[q].phi, src, 6);
    const auto h = decompose(p, k, a, 1);
    for (int l = 0; l < 4; ++l) {
      const auto idx = ModeIndex::from_linear(l);
      const Complex expect = 4 * kPi * ipow(idx.n) * std::conj(oracle::ynm(idx.n, idx.m, src.theta, src.phi));
      CHECK(std::abs(h.alpha[l] - expect) < 1e-6 * std::abs(expect));
    }
  }
}

TEST_CASE("radial floor drops ill-conditioned bins") {
  const auto a = default_array({0, 0, 0});
  const Decomposer d(a, 1);
  CHECK(d.well_conditioned(2 * kPi * 1000.0 / 343.0));
  CHECK_FALSE(d.well_conditioned(1e-4));
  CHECK_THROWS_AS((void)d.apply(std::vector<Complex>(9, 1.0), 1e-4), IllConditionedError);
  CHECK_THROWS_AS(Decomposer(a, 3), ConfigError);
}

TEST_CASE("spectrogram decomposition keeps every band bin") {
  MultiChannel m;
  std::mt19937 rng(1);
  std::normal_distribution<double> g;
  m.channels.assign(9, std::vector<double>(2048));
  for (auto& c : m.channels)
    for (auto& v : c) v = g(rng);
  const auto spec = select_band(stft_forward(m, STFTSpec{}), 500.0, 2000.0);
  const auto hs = decompose_spectrogram(spec, default_array({0, 0, 0}), 1, 343.0);
  CHECK(hs.bins.size() == 25);
  CHECK(hs.bins.front() == 8);
  CHECK(hs.alpha[0].rows() == spec.num_frames());
  CHECK(hs.alpha[0].cols() == 4);
}
