#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "shdoa/room_sim.hpp"
#include "shdoa/stft.hpp"

namespace shdoa {

/// Bins whose radial term falls below this magnitude are not decomposed.
inline constexpr double kRadialFloor = 1e-3;

/// Soundfield coefficients alpha_nm at one TF bin, indexed by ModeIndex::linear().
struct HarmonicVector {
  std::vector<Complex> alpha;
  double k = 0.0;  ///< wavenumber, rad/m
  int frame = 0;
};

/// Max over mode pairs (n, n' <= n_max) of |sum_q w_q Y_nm Y*_n'm' - delta|.
double check_grid(const ArrayConfig& array, int n_max);

/// Discrete spherical-harmonic transform for a fixed array and order. Caches
/// the weighted conjugate harmonics so repeated calls only cost a small
/// matrix-vector product.
class Decomposer {
 public:
  Decomposer(const ArrayConfig& array, int n_max);

  [[nodiscard]] int n_max() const { return n_max_; }
  [[nodiscard]] int modes() const { return num_modes(n_max_); }

  /// True when every |b_n(k r)|, n <= N, clears kRadialFloor.
  [[nodiscard]] bool well_conditioned(double k) const;

  /// [modes x Q] matrix mapping microphone spectra at wavenumber k to alpha.
  [[nodiscard]] Eigen::MatrixXcd transform(double k) const;

  /// alpha_nm = (1/b_n(kr)) sum_q w_q P_q Y*_nm(x_q). Throws
  /// IllConditionedError below the radial floor.
  [[nodiscard]] HarmonicVector apply(std::span<const Complex> mic_spectra, double k) const;

 private:
  ArrayConfig array_;
  int n_max_;
  Eigen::MatrixXcd weighted_conj_y_;  // [modes x Q]
};

/// Convenience wrapper over Decomposer for a single bin.
HarmonicVector decompose(std::span<const Complex> mic_spectra, double k, const ArrayConfig& array,
                         int n_max);

/// Wavenumber of an absolute DFT bin.
double bin_wavenumber(int bin, double bin_hz, double speed_of_sound);

/// Coefficients for every (bin, frame) of a spectrogram.
struct HarmonicSpectrogram {
  int n_max = 1;
  int first_bin = 0;
  double bin_hz = 62.5;
  int num_frames = 0;
  std::vector<int> bins;                    ///< absolute DFT bins kept
  std::vector<Eigen::MatrixXcd> alpha;      ///< per kept bin: [frames x modes]
};

/// Decomposes every bin of a band-limited spectrogram. Bins that fail the
/// radial floor are dropped.
HarmonicSpectrogram decompose_spectrogram(const Spectrogram& spec, const ArrayConfig& array,
                                          int n_max, double speed_of_sound);

/// Rows "frame,bin,n,m,re,im".
void write_coefficients_csv(const std::string& path, const HarmonicSpectrogram& coeffs);

}  // namespace shdoa
