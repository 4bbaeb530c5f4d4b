#pragma once

// Experiment configuration. Files are JSON objects; every key is optional
// and defaults reproduce the S1 azimuth experiment at 30 dB. Unknown keys
// are rejected so typos surface as configuration errors.

#include <cstdint>
#include <string>
#include <vector>

#include "shdoa/estimator.hpp"
#include "shdoa/nn.hpp"
#include "shdoa/room_sim.hpp"
#include "shdoa/stft.hpp"

namespace shdoa {

struct FeatureParams {
  STFTSpec stft;
  double f_lo = 500.0;
  double f_hi = 2000.0;
  double beta = kDefaultBeta;
  double percentile_k = 90.0;
  int n_max = 1;
  FeatureNorm normalization = FeatureNorm::trace;
};

struct EstimatorParams {
  double p_min = 0.5;
  PeakMode mode = PeakMode::cluster;
};

struct Sweeps {
  std::vector<double> snr_db;
  std::vector<int> sources;
  std::vector<double> distances;
};

struct ExperimentConfig {
  std::string experiment_id = "s1_azimuth";
  std::string room_name = "S1";
  RoomConfig room = room_preset("S1");

  ArrayKind array_kind = ArrayKind::open;
  double array_radius = 0.042;
  double array_height = 1.0;

  ClassGrids grids = ClassGrids::azimuth_grid({45.0}, 10.0);
  std::vector<double> test_thetas;  ///< empty: the class elevations
  double source_distance = 1.0;     ///< training and default test distance (m)

  double snr_db = 30.0;
  double train_snr_db = 30.0;
  NoiseKind noise = NoiseKind::white;
  int num_sources = 1;
  int trials = 50;
  int min_separation_cells = 2;
  bool off_grid = false;

  double train_signal_duration_s = 30.0;
  double test_signal_duration_s = 4.0;
  double train_level_spread_db = 6.0;  ///< per-scene level drawn from +-spread

  std::uint64_t seed = 1;
  int threads = 1;

  FeatureParams features;
  ModelShape network;  ///< class counts are taken from grids
  TrainConfig training;
  EstimatorParams estimator;
  Sweeps sweeps;

  /// Throws ConfigError on any inconsistency.
  void validate() const;
  [[nodiscard]] ModelShape model_shape() const;
  [[nodiscard]] ArrayConfig array() const;
  [[nodiscard]] std::vector<double> effective_test_thetas() const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
/// Canonical JSON with every field spelled out.
std::string config_to_json(const ExperimentConfig& cfg);
/// FNV-1a 64 of the canonical JSON, hex encoded.
std::string config_hash(const ExperimentConfig& cfg);

/// Room, array and feature settings a model is tied to.
std::string environment_fingerprint(const ExperimentConfig& cfg);

/// FNV-1a 64 over raw bytes, hex encoded.
std::string hash_bytes(const void* data, std::size_t size);

}  // namespace shdoa
