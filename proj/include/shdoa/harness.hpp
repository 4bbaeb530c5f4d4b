#pragma once

// End-to-end experiments: single-source training data, multi-source
// evaluation trials, the joint elevation/azimuth study, and the report,
// plot and manifest writers.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "shdoa/config.hpp"
#include "shdoa/estimator.hpp"
#include "shdoa/features.hpp"
#include "shdoa/metrics.hpp"
#include "shdoa/nn.hpp"

namespace shdoa {

/// Deterministic child seed from a base seed and a tag plus two indices.
std::uint64_t derive_seed(std::uint64_t base, const std::string& tag, std::uint64_t a = 0, std::uint64_t b = 0);

/// Runs f(i) for i in [0, n) on up to `threads` workers. Exceptions are
/// rethrown (lowest index first) after every worker has stopped.
void parallel_for(int n, int threads, const std::function<void(int)>& f);

/// Renders sources in the configured room, adds noise and returns the
/// multichannel microphone signal.
MultiChannel render_scene(const ExperimentConfig& cfg, const std::vector<SourceSpec>& sources, double snr_db,
                          std::uint64_t noise_seed);

/// STFT, band selection, decomposition, EMA features and the energy filter.
std::vector<TFBinFeature> scene_features(const ExperimentConfig& cfg, const MultiChannel& mics);

/// One labeled single-source scene per (theta, phi) class.
FeatureDataset build_training_dataset(const ExperimentConfig& cfg);

/// Hash of the dataset contents (labels and float32 feature values).
std::string dataset_hash(const FeatureDataset& data);

struct TrainingOutput {
  Model model;
  std::vector<EpochLog> log;
  int best_epoch = 0;
  std::size_t samples = 0;
  std::string dataset_hash;
  double runtime_s = 0.0;
};

TrainingOutput train_on_dataset(const ExperimentConfig& cfg, const FeatureDataset& data,
                                const std::function<void(const EpochLog&)>& on_epoch = {});
TrainingOutput run_training(const ExperimentConfig& cfg, const std::function<void(const EpochLog&)>& on_epoch = {});

/// Per-run overrides of the configured evaluation point.
struct EvalPoint {
  std::optional<double> snr_db;
  std::optional<int> num_sources;
  std::optional<double> distance;
};

struct TrialScene {
  std::vector<GridCell> cells;
  std::vector<Direction> truths;
  std::vector<SourceSpec> sources;
};

/// Samples L distinct test cells at least min_separation_cells apart
/// (Chebyshev distance in class indices, circular in azimuth).
TrialScene sample_scene(const ExperimentConfig& cfg, int num_sources, double distance, std::uint64_t seed);

struct TrialResult {
  int trial = 0;
  TrialScene scene;
  DOAEstimate estimate;
  TrialRecord record;
  PredictionMultiset multiset;
  long active_bins = 0;
  long test_bins = 0;
  long truth_mass = 0;  ///< multiset entries on a true cell
  std::string failure;  ///< non-empty when no estimate could be formed
};

struct ExperimentReport {
  std::string experiment_id;
  std::string room;
  double snr_db = 0.0;
  int num_sources = 1;
  double distance = 1.0;
  double delta_omega = 0.0;
  std::vector<TrialResult> trials;
  double eta_acc = 0.0;
  double eta_adj = 0.0;
  double mean_support = 0.0;
  PredictionMultiset heatmap;  ///< multisets summed over trials
  double runtime_s = 0.0;

  [[nodiscard]] MetricRow row() const;
  [[nodiscard]] std::vector<TrialRecord> records() const;
  /// Share of all multiset entries that land on a true cell.
  [[nodiscard]] double truth_mass_fraction() const;
};

/// Class spacing used for eta_adj: azimuth step on the (first) test plane
/// when I = 1, otherwise the larger of that and the elevation step.
double default_delta_omega(const ExperimentConfig& cfg);

/// Throws ConfigError if the model was trained for another environment or
/// class grid (the fingerprint check is skipped when allow_mismatch is set).
void check_model(const ExperimentConfig& cfg, const Model& model, bool allow_mismatch);

ExperimentReport run_evaluation(const ExperimentConfig& cfg, const Model& model, const EvalPoint& point = {},
                                bool allow_mismatch = false);

struct JointReport {
  ExperimentReport joint;
  ExperimentReport azimuth_only;  ///< same scenes, azimuth head alone
  TrainingOutput training;
};

/// Trains (unless a model is supplied) on the joint grid and evaluates the
/// same scenes both jointly and with the azimuth head alone.
JointReport run_joint_az_el(const ExperimentConfig& cfg, const Model* model = nullptr);

/// Writes the metric report CSV for several reports.
void write_report_csv(const std::string& path, const std::vector<ExperimentReport>& reports);
/// One row per trial and source.
void write_trials_csv(const std::string& path, const ExperimentReport& report);

/// One (x, series, value) point of a figure.
struct PlotPoint {
  double x = 0.0;
  std::string series;
  double value = 0.0;
};

struct Figure {
  std::string name;
  std::string x_label;
  std::string y_label;
  std::vector<PlotPoint> points;
};

/// Writes <dir>/<name>.csv and <dir>/<name>.svg for each figure. Throws
/// IoError for an empty figure.
void emit_plots(const std::string& dir, const std::vector<Figure>& figures);

/// Figure for a sweep where the x coordinate is taken from each report.
Figure sweep_figure(const std::string& name, const std::string& x_label, const std::vector<ExperimentReport>& reports,
                    const std::function<double(const ExperimentReport&)>& x_of);

/// Manifest JSON: config hash, canonical config, version and extra entries.
void write_manifest(const std::string& path, const ExperimentConfig& cfg,
                    const std::vector<std::pair<std::string, std::string>>& extra);

}  // namespace shdoa
