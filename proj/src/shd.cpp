#include "shdoa/shd.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "shdoa/error.hpp"

namespace shdoa {

double check_grid(const ArrayConfig& array, int n_max) {
  const int modes = num_modes(n_max);
  double worst = 0.0;
  for (int a = 0; a < modes; ++a) {
    for (int b = 0; b < modes; ++b) {
      Complex sum{0.0, 0.0};
      for (std::size_t q = 0; q < array.num_mics(); ++q) {
        sum += array.weights[q] * sph_harmonic(ModeIndex::from_linear(a), array.mic_directions[q]) *
               std::conj(sph_harmonic(ModeIndex::from_linear(b), array.mic_directions[q]));
      }
      worst = std::max(worst, std::abs(sum - Complex(a == b ? 1.0 : 0.0, 0.0)));
    }
  }
  return worst;
}

Decomposer::Decomposer(const ArrayConfig& array, int n_max) : array_(array), n_max_(n_max) {
  array_.validate();
  if (n_max < 0) throw DomainError("decomposition order must be non-negative");
  if (static_cast<int>(array_.num_mics()) < num_modes(n_max))
    throw ConfigError("array has fewer microphones than harmonic modes");
  const int q_count = static_cast<int>(array_.num_mics());
  weighted_conj_y_.resize(modes(), q_count);
  for (int l = 0; l < modes(); ++l)
    for (int q = 0; q < q_count; ++q)
      weighted_conj_y_(l, q) =
          array_.weights[q] * std::conj(sph_harmonic(ModeIndex::from_linear(l), array_.mic_directions[q]));
}

bool Decomposer::well_conditioned(double k) const {
  const double xi = k * array_.radius;
  if (!(xi > 0.0)) return false;
  for (int n = 0; n <= n_max_; ++n)
    if (std::abs(radial_b(n, xi, array_.kind)) < kRadialFloor) return false;
  return true;
}

Eigen::MatrixXcd Decomposer::transform(double k) const {
  const double xi = k * array_.radius;
  if (!(xi > 0.0)) throw DomainError("wavenumber must be positive");
  Eigen::MatrixXcd t = weighted_conj_y_;
  for (int l = 0; l < modes(); ++l) {
    const Complex b = radial_b(ModeIndex::from_linear(l).n, xi, array_.kind);
    if (std::abs(b) < kRadialFloor) throw IllConditionedError("radial term below floor");
    t.row(l) /= b;
  }
  return t;
}

HarmonicVector Decomposer::apply(std::span<const Complex> mic_spectra, double k) const {
  if (mic_spectra.size() != array_.num_mics())
    throw ShapeError("decompose needs one spectrum value per microphone");
  const double xi = k * array_.radius;
  if (!(xi > 0.0)) throw DomainError("wavenumber must be positive");
  std::vector<Complex> inv_b(static_cast<std::size_t>(n_max_ + 1));
  for (int n = 0; n <= n_max_; ++n) {
    const Complex b = radial_b(n, xi, array_.kind);
    if (std::abs(b) < kRadialFloor) throw IllConditionedError("radial term below floor");
    inv_b[n] = 1.0 / b;
  }
  const Eigen::Map<const Eigen::VectorXcd> p(mic_spectra.data(),
                                             static_cast<Eigen::Index>(mic_spectra.size()));
  const Eigen::VectorXcd raw = weighted_conj_y_ * p;
  HarmonicVector out;
  out.k = k;
  out.alpha.resize(static_cast<std::size_t>(modes()));
  for (int l = 0; l < modes(); ++l) out.alpha[l] = raw(l) * inv_b[ModeIndex::from_linear(l).n];
  return out;
}

HarmonicVector decompose(std::span<const Complex> mic_spectra, double k, const ArrayConfig& array,
                         int n_max) {
  return Decomposer(array, n_max).apply(mic_spectra, k);
}

double bin_wavenumber(int bin, double bin_hz, double speed_of_sound) {
  return 2.0 * kPi * bin * bin_hz / speed_of_sound;
}

HarmonicSpectrogram decompose_spectrogram(const Spectrogram& spec, const ArrayConfig& array,
                                          int n_max, double speed_of_sound) {
  if (spec.channels.size() != array.num_mics())
    throw ShapeError("spectrogram channel count differs from microphone count");
  const Decomposer dec(array, n_max);
  HarmonicSpectrogram out;
  out.n_max = n_max;
  out.first_bin = spec.first_bin;
  out.bin_hz = spec.bin_hz();
  out.num_frames = spec.num_frames();
  const int q_count = static_cast<int>(array.num_mics());
  Eigen::MatrixXcd p(q_count, out.num_frames);
  for (int r = 0; r < spec.num_bins(); ++r) {
    const int bin = spec.first_bin + r;
    const double k = bin_wavenumber(bin, out.bin_hz, speed_of_sound);
    if (!dec.well_conditioned(k)) continue;
    for (int q = 0; q < q_count; ++q) p.row(q) = spec.channels[q].row(r);
    out.bins.push_back(bin);
    out.alpha.push_back((dec.transform(k) * p).transpose());
  }
  return out;
}

void write_coefficients_csv(const std::string& path, const HarmonicSpectrogram& coeffs) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "frame,bin,n,m,re,im\n" << std::setprecision(17);
  for (int t = 0; t < coeffs.num_frames; ++t) {
    for (std::size_t b = 0; b < coeffs.bins.size(); ++b) {
      for (int l = 0; l < coeffs.alpha[b].cols(); ++l) {
        const auto idx = ModeIndex::from_linear(l);
        const Complex v = coeffs.alpha[b](t, l);
        f << t << ',' << coeffs.bins[b] << ',' << idx.n << ',' << idx.m << ',' << v.real() << ','
          << v.imag() << '\n';
      }
    }
  }
}

}  // namespace shdoa
