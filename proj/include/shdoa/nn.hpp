#pragma once

// Convolutional classifier over modal-coherence tensors: a stack of 2x2
// "same" convolutions, a dense trunk and two independent sigmoid heads
// (elevation and azimuth), trained with binary cross-entropy.
//
// All parameters live in one flat vector in document order:
//   conv[0..C).{W, b}, dense[0..D).{W, b}, head_theta.{W, b}, head_phi.{W, b}
// Weight matrices are row-major [fan_in x fan_out]. Conv weights index the
// input patch as (dy * 2 + dx) * C_in + c_in.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "shdoa/features.hpp"

namespace shdoa {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ModelShape {
  int modes = 4;          ///< spatial size of the input (modes x modes x 2)
  int conv_layers = 8;
  int filters = 64;
  int dense_layers = 2;
  int dense_width = 512;
  int classes_theta = 1;
  int classes_phi = 1;

  [[nodiscard]] int input_size() const { return modes * modes * 2; }
  void validate() const;
  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

/// Location of one weight matrix and bias vector inside the flat parameter vector.
struct LayerSlot {
  std::size_t weight_offset = 0;
  int fan_in = 0;
  int fan_out = 0;
  std::size_t bias_offset = 0;
};

enum class HeadInit { xavier, zero };

class Model {
 public:
  Model() = default;
  /// All parameters zero.
  explicit Model(const ModelShape& shape);

  /// He-uniform conv/dense weights, Xavier-uniform (or zero) heads, zero biases.
  [[nodiscard]] static Model initialized(const ModelShape& shape, std::uint64_t seed,
                                         HeadInit heads = HeadInit::xavier);

  [[nodiscard]] const ModelShape& shape() const { return shape_; }
  [[nodiscard]] std::span<double> parameters() { return params_; }
  [[nodiscard]] std::span<const double> parameters() const { return params_; }
  [[nodiscard]] std::size_t num_parameters() const { return params_.size(); }
  [[nodiscard]] const std::vector<LayerSlot>& layers() const { return layers_; }

  /// Multiplier applied to every input value before the first layer.
  double input_scale = 1.0;
  /// Free-form description of the room/array the model was trained for.
  std::string fingerprint;

 private:
  ModelShape shape_;
  std::vector<LayerSlot> layers_;
  std::vector<double> params_;
};

/// Sigmoid outputs of both heads for one sample.
struct PredictionScores {
  std::vector<double> p_theta;
  std::vector<double> p_phi;

  [[nodiscard]] int argmax_theta() const;
  [[nodiscard]] int argmax_phi() const;
};

/// One-hot target pair given as class ids.
struct Target {
  int theta = 0;
  int phi = 0;
};

PredictionScores forward(const Model& model, const FeatureTensor& x);

/// Batched inference; rows of x are flattened feature tensors.
std::vector<PredictionScores> forward_batch(const Model& model, const RowMatrix& x);

inline constexpr double kBceEpsilon = 1e-7;

/// Mean over all I + J outputs of the clamped binary cross-entropy.
double bce_loss(const PredictionScores& pred, const Target& target);

/// Mean BCE over the batch and its gradient w.r.t. every parameter (same
/// layout as Model::parameters()). grad is resized as needed.
double loss_and_gradient(const Model& model, const RowMatrix& x, std::span<const Target> targets,
                         std::vector<double>& grad);

/// Mean BCE over the batch without gradients.
double batch_loss(const Model& model, const RowMatrix& x, std::span<const Target> targets);

/// Single-sample gradient.
std::vector<double> backward(const Model& model, const FeatureTensor& x, const Target& target);

enum class Optimizer { sgd, adam };

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 128;
  int epochs = 30;
  Optimizer optimizer = Optimizer::adam;
  std::uint64_t seed = 1;
  double validation_fraction = 0.1;
  HeadInit head_init = HeadInit::xavier;
  /// Multiply inputs by 1 / RMS of the training features (stored in the model).
  bool auto_input_scale = true;

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc_theta = 0.0;
  double val_acc_phi = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<EpochLog> log;
  int best_epoch = 0;
};

/// Packs labeled features into an input matrix and target list.
void pack_dataset(std::span<const TFBinFeature> data, RowMatrix& x, std::vector<Target>& targets);

/// Mini-batch training with a seeded shuffle and best-validation checkpointing.
/// Deterministic for a given (data, shape, config). Epoch 0 in the log holds
/// the losses of the initial weights.
TrainResult train(std::span<const TFBinFeature> data, const ModelShape& shape,
                  const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

void write_training_log_csv(const std::string& path, const std::vector<EpochLog>& log);

/// Versioned binary model file.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);
/// As load_model, but throws ConfigError if the class counts differ.
Model load_model(const std::string& path, int expected_theta, int expected_phi);

}  // namespace shdoa
