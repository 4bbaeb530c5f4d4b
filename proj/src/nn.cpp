#include "shdoa/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>

#include "shdoa/error.hpp"

namespace shdoa {

namespace {

constexpr char kModelMagic[8] = {'S', 'H', 'D', 'O', 'A', 'M', 'D', 'L'};
constexpr char kModelTrailer[4] = {'E', 'N', 'D', '.'};
constexpr std::uint32_t kModelVersion = 1;
constexpr int kEvalChunk = 1024;

using MapRow = Eigen::Map<RowMatrix>;
using ConstMapRow = Eigen::Map<const RowMatrix>;
using MapVec = Eigen::Map<Eigen::RowVectorXd>;
using ConstMapVec = Eigen::Map<const Eigen::RowVectorXd>;

ConstMapRow weight(const Model& m, const LayerSlot& s) {
  return {m.parameters().data() + s.weight_offset, s.fan_in, s.fan_out};
}
ConstMapVec bias(const Model& m, const LayerSlot& s) {
  return {m.parameters().data() + s.bias_offset, s.fan_out};
}
MapRow weight(std::vector<double>& g, const LayerSlot& s) {
  return {g.data() + s.weight_offset, s.fan_in, s.fan_out};
}
MapVec bias(std::vector<double>& g, const LayerSlot& s) { return {g.data() + s.bias_offset, s.fan_out}; }

// Activations are stored as [batch * modes^2 x channels], row b * P + y * M + x.
RowMatrix im2col(const RowMatrix& in, int batch, int modes) {
  const int p = modes * modes;
  const auto c = in.cols();
  RowMatrix col = RowMatrix::Zero(in.rows(), 4 * c);
  for (int b = 0; b < batch; ++b) {
    for (int y = 0; y < modes; ++y) {
      for (int x = 0; x < modes; ++x) {
        const int row = b * p + y * modes + x;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            if (y + dy >= modes || x + dx >= modes) continue;
            col.row(row).segment((dy * 2 + dx) * c, c) = in.row(b * p + (y + dy) * modes + x + dx);
          }
        }
      }
    }
  }
  return col;
}

RowMatrix col2im(const RowMatrix& col, int batch, int modes) {
  const int p = modes * modes;
  const auto c = col.cols() / 4;
  RowMatrix in = RowMatrix::Zero(col.rows(), c);
  for (int b = 0; b < batch; ++b) {
    for (int y = 0; y < modes; ++y) {
      for (int x = 0; x < modes; ++x) {
        const int row = b * p + y * modes + x;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            if (y + dy >= modes || x + dx >= modes) continue;
            in.row(b * p + (y + dy) * modes + x + dx) += col.row(row).segment((dy * 2 + dx) * c, c);
          }
        }
      }
    }
  }
  return in;
}

RowMatrix sigmoid(const RowMatrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

struct Cache {
  int batch = 0;
  std::vector<RowMatrix> cols;       // im2col input of each conv layer
  std::vector<RowMatrix> conv_out;   // post-ReLU conv activations
  std::vector<RowMatrix> dense_in;
  std::vector<RowMatrix> dense_out;  // post-ReLU
  RowMatrix p_theta;
  RowMatrix p_phi;
};

void forward_pass(const Model& model, const RowMatrix& x, Cache& cache) {
  const auto& s = model.shape();
  if (x.cols() != s.input_size()) throw ShapeError("input size does not match the model");
  const int batch = static_cast<int>(x.rows());
  const int p = s.modes * s.modes;
  cache.batch = batch;
  cache.cols.clear();
  cache.conv_out.clear();
  cache.dense_in.clear();
  cache.dense_out.clear();

  // Input rows are (pixel, channel) with channel fastest: reinterpret as [B*P x 2].
  RowMatrix act = ConstMapRow(x.data(), static_cast<Eigen::Index>(batch) * p, 2) * model.input_scale;
  const auto& layers = model.layers();
  std::size_t li = 0;
  for (int c = 0; c < s.conv_layers; ++c, ++li) {
    cache.cols.push_back(im2col(act, batch, s.modes));
    RowMatrix z = cache.cols.back() * weight(model, layers[li]);
    z.rowwise() += bias(model, layers[li]);
    act = z.cwiseMax(0.0);
    cache.conv_out.push_back(act);
  }
  RowMatrix h = MapRow(act.data(), batch, act.size() / batch);
  for (int d = 0; d < s.dense_layers; ++d, ++li) {
    cache.dense_in.push_back(h);
    RowMatrix z = h * weight(model, layers[li]);
    z.rowwise() += bias(model, layers[li]);
    h = z.cwiseMax(0.0);
    cache.dense_out.push_back(h);
  }
  RowMatrix zt = h * weight(model, layers[li]);
  zt.rowwise() += bias(model, layers[li]);
  RowMatrix zp = h * weight(model, layers[li + 1]);
  zp.rowwise() += bias(model, layers[li + 1]);
  cache.p_theta = sigmoid(zt);
  cache.p_phi = sigmoid(zp);
}

double clamped_bce(double p, double y) {
  const double pc = std::clamp(p, kBceEpsilon, 1.0 - kBceEpsilon);
  return -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
}

double cache_loss(const Cache& cache, std::span<const Target> targets) {
  const auto i_count = cache.p_theta.cols();
  const auto j_count = cache.p_phi.cols();
  double total = 0.0;
  for (int b = 0; b < cache.batch; ++b) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < i_count; ++i) sum += clamped_bce(cache.p_theta(b, i), i == targets[b].theta);
    for (Eigen::Index j = 0; j < j_count; ++j) sum += clamped_bce(cache.p_phi(b, j), j == targets[b].phi);
    total += sum / static_cast<double>(i_count + j_count);
  }
  return total / cache.batch;
}

// d(mean loss)/dz for one head; zero where the clamp is active.
RowMatrix head_delta(const RowMatrix& p, std::span<const Target> targets, bool theta, double scale) {
  RowMatrix d(p.rows(), p.cols());
  for (Eigen::Index b = 0; b < p.rows(); ++b) {
    const int label = theta ? targets[b].theta : targets[b].phi;
    for (Eigen::Index k = 0; k < p.cols(); ++k) {
      const double v = p(b, k);
      const bool clamped = v < kBceEpsilon || v > 1.0 - kBceEpsilon;
      d(b, k) = clamped ? 0.0 : (v - (k == label ? 1.0 : 0.0)) * scale;
    }
  }
  return d;
}

void check_targets(const Model& model, std::span<const Target> targets, Eigen::Index rows) {
  if (static_cast<Eigen::Index>(targets.size()) != rows) throw ShapeError("one target per input row");
  for (const auto& t : targets) {
    if (t.theta < 0 || t.theta >= model.shape().classes_theta || t.phi < 0 ||
        t.phi >= model.shape().classes_phi)
      throw ShapeError("target class id out of range");
  }
}

template <typename T>
void put(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw IoError("model file truncated");
  return v;
}

}  // namespace

void ModelShape::validate() const {
  if (modes < 2) throw ConfigError("model input must be at least 2 x 2");
  if (conv_layers < 1 || filters < 1) throw ConfigError("model needs at least one conv layer");
  if (dense_layers < 1 || dense_width < 1) throw ConfigError("model needs at least one dense layer");
  if (classes_theta < 1 || classes_phi < 1) throw ConfigError("class counts must be positive");
}

Model::Model(const ModelShape& shape) : shape_(shape) {
  shape_.validate();
  std::size_t offset = 0;
  auto add = [&](int fan_in, int fan_out) {
    LayerSlot s;
    s.fan_in = fan_in;
    s.fan_out = fan_out;
    s.weight_offset = offset;
    offset += static_cast<std::size_t>(fan_in) * fan_out;
    s.bias_offset = offset;
    offset += static_cast<std::size_t>(fan_out);
    layers_.push_back(s);
  };
  int channels = 2;
  for (int c = 0; c < shape_.conv_layers; ++c) {
    add(4 * channels, shape_.filters);
    channels = shape_.filters;
  }
  int width = shape_.modes * shape_.modes * channels;
  for (int d = 0; d < shape_.dense_layers; ++d) {
    add(width, shape_.dense_width);
    width = shape_.dense_width;
  }
  add(width, shape_.classes_theta);
  add(width, shape_.classes_phi);
  params_.assign(offset, 0.0);
}

Model Model::initialized(const ModelShape& shape, std::uint64_t seed, HeadInit heads) {
  Model m(shape);
  std::mt19937_64 rng(seed);
  const std::size_t hidden = m.layers_.size() - 2;
  for (std::size_t l = 0; l < m.layers_.size(); ++l) {
    const auto& s = m.layers_[l];
    double limit = 0.0;
    if (l < hidden)
      limit = std::sqrt(6.0 / s.fan_in);
    else if (heads == HeadInit::xavier)
      limit = std::sqrt(6.0 / (s.fan_in + s.fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    const std::size_t count = static_cast<std::size_t>(s.fan_in) * s.fan_out;
    for (std::size_t i = 0; i < count; ++i) m.params_[s.weight_offset + i] = limit > 0.0 ? dist(rng) : 0.0;
  }
  return m;
}

int PredictionScores::argmax_theta() const {
  return static_cast<int>(std::max_element(p_theta.begin(), p_theta.end()) - p_theta.begin());
}

int PredictionScores::argmax_phi() const {
  return static_cast<int>(std::max_element(p_phi.begin(), p_phi.end()) - p_phi.begin());
}

std::vector<PredictionScores> forward_batch(const Model& model, const RowMatrix& x) {
  std::vector<PredictionScores> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  Cache cache;
  for (Eigen::Index start = 0; start < x.rows(); start += kEvalChunk) {
    const auto n = std::min<Eigen::Index>(kEvalChunk, x.rows() - start);
    forward_pass(model, x.middleRows(start, n), cache);
    for (Eigen::Index b = 0; b < n; ++b) {
      PredictionScores s;
      s.p_theta.assign(cache.p_theta.row(b).data(), cache.p_theta.row(b).data() + cache.p_theta.cols());
      s.p_phi.assign(cache.p_phi.row(b).data(), cache.p_phi.row(b).data() + cache.p_phi.cols());
      out.push_back(std::move(s));
    }
  }
  return out;
}

PredictionScores forward(const Model& model, const FeatureTensor& x) {
  if (static_cast<int>(x.size()) != model.shape().input_size())
    throw ShapeError("feature tensor does not match the model input");
  const RowMatrix row = ConstMapRow(x.values.data(), 1, static_cast<Eigen::Index>(x.size()));
  return forward_batch(model, row).front();
}

double bce_loss(const PredictionScores& pred, const Target& target) {
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.p_theta.size(); ++i)
    sum += clamped_bce(pred.p_theta[i], static_cast<int>(i) == target.theta);
  for (std::size_t j = 0; j < pred.p_phi.size(); ++j)
    sum += clamped_bce(pred.p_phi[j], static_cast<int>(j) == target.phi);
  const auto n = pred.p_theta.size() + pred.p_phi.size();
  if (n == 0) throw ShapeError("empty prediction");
  return sum / static_cast<double>(n);
}

double batch_loss(const Model& model, const RowMatrix& x, std::span<const Target> targets) {
  check_targets(model, targets, x.rows());
  if (x.rows() == 0) throw InsufficientDataError("empty batch");
  Cache cache;
  double total = 0.0;
  for (Eigen::Index start = 0; start < x.rows(); start += kEvalChunk) {
    const auto n = std::min<Eigen::Index>(kEvalChunk, x.rows() - start);
    forward_pass(model, x.middleRows(start, n), cache);
    total += cache_loss(cache, targets.subspan(static_cast<std::size_t>(start), static_cast<std::size_t>(n))) *
             static_cast<double>(n);
  }
  return total / static_cast<double>(x.rows());
}

double loss_and_gradient(const Model& model, const RowMatrix& x, std::span<const Target> targets,
                         std::vector<double>& grad) {
  check_targets(model, targets, x.rows());
  if (x.rows() == 0) throw InsufficientDataError("empty batch");
  Cache cache;
  forward_pass(model, x, cache);
  const double loss = cache_loss(cache, targets);

  const auto& s = model.shape();
  const auto& layers = model.layers();
  grad.assign(model.num_parameters(), 0.0);
  const double scale = 1.0 / (static_cast<double>(s.classes_theta + s.classes_phi) * cache.batch);

  const std::size_t head_t = layers.size() - 2;
  const std::size_t head_p = layers.size() - 1;
  const RowMatrix dzt = head_delta(cache.p_theta, targets, true, scale);
  const RowMatrix dzp = head_delta(cache.p_phi, targets, false, scale);
  const RowMatrix& trunk = cache.dense_out.back();
  weight(grad, layers[head_t]).noalias() = trunk.transpose() * dzt;
  bias(grad, layers[head_t]) = dzt.colwise().sum();
  weight(grad, layers[head_p]).noalias() = trunk.transpose() * dzp;
  bias(grad, layers[head_p]) = dzp.colwise().sum();
  RowMatrix dh = dzt * weight(model, layers[head_t]).transpose() + dzp * weight(model, layers[head_p]).transpose();

  for (int d = s.dense_layers - 1; d >= 0; --d) {
    const auto& slot = layers[static_cast<std::size_t>(s.conv_layers + d)];
    const RowMatrix dz = (cache.dense_out[d].array() > 0.0).select(dh, 0.0);
    weight(grad, slot).noalias() = cache.dense_in[d].transpose() * dz;
    bias(grad, slot) = dz.colwise().sum();
    dh = dz * weight(model, slot).transpose();
  }

  const int p = s.modes * s.modes;
  RowMatrix da = MapRow(dh.data(), static_cast<Eigen::Index>(cache.batch) * p, s.filters);
  for (int c = s.conv_layers - 1; c >= 0; --c) {
    const auto& slot = layers[static_cast<std::size_t>(c)];
    const RowMatrix dz = (cache.conv_out[c].array() > 0.0).select(da, 0.0);
    weight(grad, slot).noalias() = cache.cols[c].transpose() * dz;
    bias(grad, slot) = dz.colwise().sum();
    if (c > 0) da = col2im(dz * weight(model, slot).transpose(), cache.batch, s.modes);
  }
  return loss;
}

std::vector<double> backward(const Model& model, const FeatureTensor& x, const Target& target) {
  if (static_cast<int>(x.size()) != model.shape().input_size())
    throw ShapeError("feature tensor does not match the model input");
  const RowMatrix row = ConstMapRow(x.values.data(), 1, static_cast<Eigen::Index>(x.size()));
  std::vector<double> grad;
  loss_and_gradient(model, row, std::span<const Target>(&target, 1), grad);
  return grad;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  if (epochs < 0) throw ConfigError("epoch count must be non-negative");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw ConfigError("validation fraction must lie in [0, 1)");
}

void pack_dataset(std::span<const TFBinFeature> data, RowMatrix& x, std::vector<Target>& targets) {
  if (data.empty()) throw InsufficientDataError("empty dataset");
  const auto width = static_cast<Eigen::Index>(data.front().feature.size());
  x.resize(static_cast<Eigen::Index>(data.size()), width);
  targets.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data[i];
    if (static_cast<Eigen::Index>(r.feature.size()) != width) throw ShapeError("mixed feature sizes");
    if (!r.label_theta || !r.label_phi) throw DomainError("training record without both labels");
    x.row(static_cast<Eigen::Index>(i)) = ConstMapRow(r.feature.values.data(), 1, width);
    targets[i] = Target{*r.label_theta, *r.label_phi};
  }
}

TrainResult train(std::span<const TFBinFeature> data, const ModelShape& shape, const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  RowMatrix all_x;
  std::vector<Target> all_t;
  pack_dataset(data, all_x, all_t);
  if (all_x.cols() != shape.input_size()) throw ShapeError("dataset features do not match the model input");

  std::mt19937_64 rng(cfg.seed);
  std::vector<Eigen::Index> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(data.size())));
  if (n_val >= data.size()) n_val = 0;
  const std::size_t n_train = data.size() - n_val;

  auto gather = [&](std::span<const Eigen::Index> idx, RowMatrix& x, std::vector<Target>& t) {
    x.resize(static_cast<Eigen::Index>(idx.size()), all_x.cols());
    t.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = all_x.row(idx[i]);
      t[i] = all_t[static_cast<std::size_t>(idx[i])];
    }
  };
  std::vector<Eigen::Index> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  const std::vector<Eigen::Index> val_idx(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  RowMatrix train_x;
  RowMatrix val_x;
  std::vector<Target> train_t;
  std::vector<Target> val_t;
  gather(train_idx, train_x, train_t);
  gather(val_idx, val_x, val_t);

  TrainResult result;
  result.model = Model::initialized(shape, rng(), cfg.head_init);
  Model& model = result.model;
  if (cfg.auto_input_scale) {
    const double rms = std::sqrt(train_x.squaredNorm() / static_cast<double>(train_x.size()));
    model.input_scale = rms > 0.0 ? 1.0 / rms : 1.0;
  }

  auto evaluate = [&](int epoch, double train_loss) {
    EpochLog row;
    row.epoch = epoch;
    row.train_loss = train_loss;
    if (n_val > 0) {
      row.val_loss = batch_loss(model, val_x, val_t);
      const auto scores = forward_batch(model, val_x);
      int hit_t = 0;
      int hit_p = 0;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        hit_t += scores[i].argmax_theta() == val_t[i].theta;
        hit_p += scores[i].argmax_phi() == val_t[i].phi;
      }
      row.val_acc_theta = static_cast<double>(hit_t) / static_cast<double>(n_val);
      row.val_acc_phi = static_cast<double>(hit_p) / static_cast<double>(n_val);
    } else {
      row.val_loss = train_loss;
    }
    result.log.push_back(row);
    if (on_epoch) on_epoch(row);
    return row;
  };

  double best_loss = evaluate(0, batch_loss(model, train_x, train_t)).val_loss;
  std::vector<double> best_params(model.parameters().begin(), model.parameters().end());

  std::vector<double> grad;
  std::vector<double> m1(model.num_parameters(), 0.0);
  std::vector<double> m2(model.num_parameters(), 0.0);
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kAdamEps = 1e-8;
  long step = 0;
  RowMatrix bx;
  std::vector<Target> bt;
  std::vector<Eigen::Index> local(n_train);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(local.begin(), local.end(), 0);
    std::shuffle(local.begin(), local.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n_train; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n_train - start);
      bx.resize(static_cast<Eigen::Index>(n), train_x.cols());
      bt.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        bx.row(static_cast<Eigen::Index>(i)) = train_x.row(local[start + i]);
        bt[i] = train_t[static_cast<std::size_t>(local[start + i])];
      }
      loss_sum += loss_and_gradient(model, bx, bt, grad) * static_cast<double>(n);
      auto params = model.parameters();
      ++step;
      if (cfg.optimizer == Optimizer::sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg.learning_rate * grad[i];
      } else {
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
        for (std::size_t i = 0; i < params.size(); ++i) {
          m1[i] = kBeta1 * m1[i] + (1.0 - kBeta1) * grad[i];
          m2[i] = kBeta2 * m2[i] + (1.0 - kBeta2) * grad[i] * grad[i];
          params[i] -= cfg.learning_rate * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + kAdamEps);
        }
      }
    }
    const auto row = evaluate(epoch, loss_sum / static_cast<double>(n_train));
    if (n_val == 0 || row.val_loss < best_loss) {
      best_loss = row.val_loss;
      result.best_epoch = epoch;
      std::copy(model.parameters().begin(), model.parameters().end(), best_params.begin());
    }
  }
  std::copy(best_params.begin(), best_params.end(), model.parameters().begin());
  return result;
}

void write_training_log_csv(const std::string& path, const std::vector<EpochLog>& log) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "epoch,train_loss,val_loss,val_acc_theta,val_acc_phi\n" << std::setprecision(10);
  for (const auto& r : log)
    f << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.val_acc_theta << ',' << r.val_acc_phi
      << '\n';
}

void save_model(const Model& model, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  const auto& s = model.shape();
  f.write(kModelMagic, 8);
  put<std::uint32_t>(f, kModelVersion);
  for (int v : {s.modes, s.conv_layers, s.filters, s.dense_layers, s.dense_width, s.classes_theta, s.classes_phi})
    put<std::uint32_t>(f, static_cast<std::uint32_t>(v));
  put<double>(f, model.input_scale);
  put<std::uint32_t>(f, static_cast<std::uint32_t>(model.fingerprint.size()));
  f.write(model.fingerprint.data(), static_cast<std::streamsize>(model.fingerprint.size()));
  put<std::uint64_t>(f, model.num_parameters());
  f.write(reinterpret_cast<const char*>(model.parameters().data()),
          static_cast<std::streamsize>(model.num_parameters() * sizeof(double)));
  f.write(kModelTrailer, 4);
  if (!f) throw IoError("failed writing " + path);
}

Model load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kModelMagic, 8) != 0) throw IoError("not a model file: " + path);
  const auto version = get<std::uint32_t>(f);
  if (version != kModelVersion) throw IoError("unsupported model version " + std::to_string(version));
  ModelShape s;
  for (int* v : {&s.modes, &s.conv_layers, &s.filters, &s.dense_layers, &s.dense_width, &s.classes_theta,
                 &s.classes_phi})
    *v = static_cast<int>(get<std::uint32_t>(f));
  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw IoError(std::string("corrupt model header: ") + e.what());
  }
  Model m(s);
  m.input_scale = get<double>(f);
  const auto fp_len = get<std::uint32_t>(f);
  if (fp_len > (1u << 20)) throw IoError("corrupt model header: fingerprint too long");
  m.fingerprint.resize(fp_len);
  f.read(m.fingerprint.data(), fp_len);
  const auto count = get<std::uint64_t>(f);
  if (count != m.num_parameters()) throw IoError("model parameter count does not match its shape");
  f.read(reinterpret_cast<char*>(m.parameters().data()), static_cast<std::streamsize>(count * sizeof(double)));
  char trailer[4];
  f.read(trailer, 4);
  if (!f || std::memcmp(trailer, kModelTrailer, 4) != 0) throw IoError("model file truncated");
  return m;
}

Model load_model(const std::string& path, int expected_theta, int expected_phi) {
  Model m = load_model(path);
  if (m.shape().classes_theta != expected_theta || m.shape().classes_phi != expected_phi)
    throw ConfigError("model has " + std::to_string(m.shape().classes_theta) + " x " +
                      std::to_string(m.shape().classes_phi) + " classes, configuration expects " +
                      std::to_string(expected_theta) + " x " + std::to_string(expected_phi));
  return m;
}

}  // namespace shdoa
