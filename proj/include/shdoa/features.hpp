#pragma once

// Modal-coherence features: per-bin exponential averaging of alpha alpha^H,
// real/imaginary stacking, energy-based bin selection, the closed-form
// coherence model and the binary dataset format.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "shdoa/shd.hpp"
#include "shdoa/sph_math.hpp"

namespace shdoa {

inline constexpr double kDefaultBeta = 0.8;

/// Estimate of E{alpha_i alpha_j^*} at one TF bin.
struct CoherenceMatrix {
  Eigen::MatrixXcd c;
  int bin = 0;
  int frame = 0;

  [[nodiscard]] static CoherenceMatrix zero(int modes) {
    return CoherenceMatrix{Eigen::MatrixXcd::Zero(modes, modes), 0, 0};
  }
  [[nodiscard]] int modes() const { return static_cast<int>(c.rows()); }
};

/// Real [modes x modes x 2] tensor: channel 0 = Re(c), channel 1 = Im(c).
struct FeatureTensor {
  int modes = 4;
  std::vector<double> values;  ///< index (i * modes + j) * 2 + channel

  [[nodiscard]] double at(int i, int j, int channel) const {
    return values[static_cast<std::size_t>((i * modes + j) * 2 + channel)];
  }
  [[nodiscard]] std::size_t size() const { return values.size(); }
};

struct TFBinFeature {
  FeatureTensor feature;
  double bin_energy = 0.0;  ///< mean |c_ij|
  int bin = 0;
  int frame = 0;
  std::optional<int> label_theta;
  std::optional<int> label_phi;
};

/// c_new = (1 - beta) alpha alpha^H + beta c_prev.
CoherenceMatrix ema_coherence(const CoherenceMatrix& prev, const HarmonicVector& alpha, double beta);

/// Stacks real and imaginary parts. Throws DomainError if c is not Hermitian.
FeatureTensor build_feature(const CoherenceMatrix& c);

/// Mean absolute value of the coherence entries.
double coherence_energy(const Eigen::MatrixXcd& c);

/// K-th percentile of energies: the value at sorted rank floor(K n / 100).
double percentile_threshold(std::span<const double> energies, double percentile_k);

/// Keeps bins whose energy is >= the K-th percentile of the block.
std::vector<TFBinFeature> energy_filter(const std::vector<TFBinFeature>& bins, double percentile_k);

/// Runs the EMA along frames of every bin (reset at frame 0) and emits one
/// feature per (bin, frame), ordered by bin then frame.
std::vector<TFBinFeature> extract_features(const HarmonicSpectrogram& coeffs, double beta);

enum class FeatureNorm { none, trace };

/// Optional per-sample scaling. trace divides both channels by the sum of the
/// diagonal (the total modal power), leaving tensors with zero trace as is.
void normalize_feature(FeatureTensor& t, FeatureNorm norm);

/// One source term of the closed-form modal coherence.
struct AnalyticSource {
  double psd = 1.0;             ///< E{|S|^2}
  double direct_gain_sq = 1.0;  ///< E{|G^(d)|^2}
  Direction dir;
  std::vector<Complex> gamma;   ///< E{gamma_vu}, indexed by ModeIndex{v,u}.linear(); may be empty
};

/// Closed-form E{alpha_nm alpha*_n'm'} summed over uncorrelated sources.
CoherenceMatrix analytic_coherence(const std::vector<AnalyticSource>& sources, int n_max);

/// Labeled feature records plus the class-set sizes they refer to.
struct FeatureDataset {
  int modes = 4;
  int classes_theta = 1;
  int classes_phi = 1;
  std::vector<TFBinFeature> records;
};

/// Little-endian binary: header (magic, version, modes, channels, I, J, count)
/// then per record k:uint16, label_theta:int16, label_phi:int16 and
/// modes*modes*2 float32 values. Missing labels are stored as -1.
void write_dataset(const std::string& path, const FeatureDataset& data);
FeatureDataset read_dataset(const std::string& path);
void write_dataset_csv(const std::string& path, const FeatureDataset& data);

}  // namespace shdoa
