#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "shdoa/error.hpp"
#include "shdoa/nn.hpp"

using namespace shdoa;

namespace {

ModelShape micro(int classes_theta = 2, int classes_phi = 3) {
  ModelShape s;
  s.modes = 3;
  s.conv_layers = 2;
  s.filters = 3;
  s.dense_layers = 2;
  s.dense_width = 5;
  s.classes_theta = classes_theta;
  s.classes_phi = classes_phi;
  return s;
}

RowMatrix random_inputs(int rows, int cols, std::mt19937& rng) {
  std::normal_distribution<double> g;
  RowMatrix x(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) x(i, j) = g(rng);
  return x;
}

FeatureTensor row_tensor(const RowMatrix& x, int r, int modes) {
  FeatureTensor t;
  t.modes = modes;
  t.values.assign(x.row(r).data(), x.row(r).data() + x.cols());
  return t;
}

double logit(double p) { return std::log(p / (1.0 - p)); }

// Two features decide the classes: sign of v0 for theta, sign of v1 for phi.
std::vector<TFBinFeature> separable(int n, std::uint64_t seed) {
  std::mt19937 rng(static_cast<unsigned>(seed));
  std::normal_distribution<double> g;
  std::vector<TFBinFeature> out;
  for (int i = 0; i < n; ++i) {
    TFBinFeature f;
    f.feature.modes = 2;
    f.feature.values.resize(8);
    for (auto& v : f.feature.values) v = 0.1 * g(rng);
    const int lt = i % 2;
    const int lp = (i / 2) % 2;
    f.feature.values[0] = lt ? 1.0 : -1.0;
    f.feature.values[1] = lp ? 1.0 : -1.0;
    f.label_theta = lt;
    f.label_phi = lp;
    out.push_back(f);
  }
  return out;
}

}  // namespace

TEST_CASE("parameter layout") {
  const ModelShape s;
  Model m(s);
  // 8 conv layers: 2*2*2*64 + 64, then 7 x (2*2*64*64 + 64); dense 4*4*64 -> 512 -> 512; heads 512 -> I, J
  const std::size_t conv = (8 * 64 + 64) + 7 * (256 * 64 + 64);
  const std::size_t dense = (1024 * 512 + 512) + (512 * 512 + 512);
  const std::size_t heads = (512 * 1 + 1) + (512 * 1 + 1);
  CHECK(m.num_parameters() == conv + dense + heads);
  CHECK(m.layers().size() == 12);
  CHECK(m.layers()[7].fan_out == 64);
  CHECK(m.layers()[8].fan_in == 4 * 4 * 64);
  for (double p : m.parameters()) CHECK(p == 0.0);
  ModelShape bad = s;
  bad.modes = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("forward pass basics") {
  ModelShape s;
  s.classes_phi = 36;
  const auto m = Model::initialized(s, 3, HeadInit::zero);
  std::mt19937 rng(1);
  const auto x = random_inputs(2, 32, rng);
  const auto p = forward(m, row_tensor(x, 0, 4));
  CHECK(p.p_theta.size() == 1);
  CHECK(p.p_phi.size() == 36);
  for (double v : p.p_phi) CHECK(v == 0.5);
  const auto init = Model::initialized(s, 3);
  const auto a = forward(init, row_tensor(x, 1, 4));
  const auto b = forward(init, row_tensor(x, 1, 4));
  CHECK(a.p_phi == b.p_phi);
  for (double v : a.p_phi) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  const auto batch = forward_batch(init, x);
  for (std::size_t i = 0; i < a.p_phi.size(); ++i) CHECK(batch[1].p_phi[i] == doctest::Approx(a.p_phi[i]).epsilon(1e-12));
  CHECK_THROWS_AS(forward(init, FeatureTensor{3, std::vector<double>(18)}), ShapeError);
}

TEST_CASE("binary cross-entropy") {
  PredictionScores half{{0.5, 0.5}, {0.5, 0.5, 0.5}};
  CHECK(bce_loss(half, {0, 1}) == doctest::Approx(std::log(2.0)));
  PredictionScores perfect{{1.0, 0.0}, {0.0, 0.0, 1.0}};
  CHECK(bce_loss(perfect, {0, 2}) <= 1e-6);
  PredictionScores quarter{{0.25}, {1.0}};
  // theta contributes -ln 0.25; the phi output is clamped to 1 - eps
  CHECK(bce_loss(quarter, {0, 0}) * 2.0 == doctest::Approx(-std::log(0.25) - std::log(1.0 - kBceEpsilon)).epsilon(1e-9));
}

TEST_CASE("analytic gradient matches finite differences") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const auto shape = micro(2 + trial % 2, 3);
    auto m = Model::initialized(shape, 100 + trial);
    std::normal_distribution<double> g;
    for (auto& p : m.parameters()) p += 0.05 * g(rng);
    m.input_scale = 0.7;
    const auto x = random_inputs(4, shape.input_size(), rng);
    std::vector<Target> t{{0, 1}, {1, 2}, {0, 0}, {1, 1}};
    std::vector<double> grad;
    loss_and_gradient(m, x, t, grad);
    std::vector<double> params(m.parameters().begin(), m.parameters().end());
    const auto fd = oracle::fd_gradient(params, [&] {
      std::copy(params.begin(), params.end(), m.parameters().begin());
      return batch_loss(m, x, t);
    });
    CHECK(oracle::max_rel_error(grad, fd) < 1e-4);
  }
}

TEST_CASE("gradient special cases") {
  const auto shape = micro();
  const Model zero(shape);
  const FeatureTensor x{3, std::vector<double>(18, 0.0)};
  const auto g = backward(zero, x, {1, 2});
  const auto& layers = zero.layers();
  for (std::size_t l = 0; l < 2; ++l)
    for (int i = 0; i < layers[l].fan_in * layers[l].fan_out; ++i) CHECK(g[layers[l].weight_offset + i] == 0.0);
  const auto& head = layers.back();
  bool nonzero = false;
  for (int i = 0; i < head.fan_out; ++i) nonzero |= g[head.bias_offset + i] != 0.0;
  CHECK(nonzero);

  std::mt19937 rng(2);
  const auto m = Model::initialized(shape, 5);
  const auto one = random_inputs(1, 18, rng);
  RowMatrix two(2, 18);
  two.row(0) = one.row(0);
  two.row(1) = one.row(0);
  std::vector<double> g1, g2;
  const std::vector<Target> t1{{1, 0}};
  const std::vector<Target> t2{{1, 0}, {1, 0}};
  loss_and_gradient(m, one, t1, g1);
  loss_and_gradient(m, two, t2, g2);
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g2[i] == doctest::Approx(g1[i]).epsilon(1e-12));
}

TEST_CASE("small-step gradient descent does not increase the loss") {
  std::mt19937 rng(9);
  const auto shape = micro();
  auto m = Model::initialized(shape, 4);
  const auto x = random_inputs(16, 18, rng);
  std::vector<Target> t;
  for (int i = 0; i < 16; ++i) t.push_back({i % 2, i % 3});
  std::vector<double> grad;
  double prev = loss_and_gradient(m, x, t, grad);
  for (int step = 0; step < 10; ++step) {
    for (std::size_t i = 0; i < grad.size(); ++i) m.parameters()[i] -= 1e-4 * grad[i];
    const double now = loss_and_gradient(m, x, t, grad);
    CHECK(now <= prev);
    prev = now;
  }
}

TEST_CASE("network is positively homogeneous without biases") {
  std::mt19937 rng(11);
  const auto shape = micro();
  auto m = Model::initialized(shape, 8);
  const auto x = random_inputs(1, 18, rng);
  auto t = row_tensor(x, 0, 3);
  auto t2 = t;
  for (auto& v : t2.values) v *= 2.0;
  const auto a = forward(m, t);
  const auto b = forward(m, t2);
  for (std::size_t i = 0; i < a.p_phi.size(); ++i)
    CHECK(logit(b.p_phi[i]) == doctest::Approx(2.0 * logit(a.p_phi[i])).epsilon(1e-9));
  // a bias breaks the symmetry
  m.parameters()[m.layers()[0].bias_offset] = 0.5;
  const auto c = forward(m, t);
  const auto d = forward(m, t2);
  bool differs = false;
  for (std::size_t i = 0; i < c.p_phi.size(); ++i)
    differs |= std::abs(logit(d.p_phi[i]) - 2.0 * logit(c.p_phi[i])) > 1e-9;
  CHECK(differs);
}

TEST_CASE("training fits a separable toy problem deterministically") {
  const auto data = separable(200, 3);
  ModelShape s = micro(2, 2);
  s.modes = 2;
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 20;
  cfg.learning_rate = 1e-2;
  cfg.seed = 4;
  const auto r = train(data, s, cfg);
  CHECK(r.log.size() == 51);
  int correct = 0;
  for (const auto& f : data) {
    const auto p = forward(r.model, f.feature);
    correct += p.argmax_theta() == *f.label_theta && p.argmax_phi() == *f.label_phi;
  }
  CHECK(correct >= 198);
  const auto again = train(data, s, cfg);
  CHECK(std::equal(again.model.parameters().begin(), again.model.parameters().end(), r.model.parameters().begin()));

  cfg.epochs = 0;
  cfg.head_init = HeadInit::zero;
  const auto start = train(data, s, cfg);
  CHECK(start.log.at(0).train_loss == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  CHECK_THROWS_AS(train({}, s, cfg), InsufficientDataError);
}

TEST_CASE("model files") {
  ModelShape s = micro(2, 4);
  auto m = Model::initialized(s, 12);
  m.input_scale = 3.5;
  m.fingerprint = "room=S1";
  const auto path = (std::filesystem::temp_directory_path() / "shdoa_model_test.bin").string();
  save_model(m, path);
  const auto back = load_model(path);
  CHECK(back.shape() == s);
  CHECK(back.input_scale == 3.5);
  CHECK(back.fingerprint == "room=S1");
  std::mt19937 rng(1);
  const auto x = row_tensor(random_inputs(1, 18, rng), 0, 3);
  CHECK(forward(back, x).p_phi == forward(m, x).p_phi);
  CHECK_NOTHROW(load_model(path, 2, 4));
  CHECK_THROWS_AS(load_model(path, 1, 36), ConfigError);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 12);
  CHECK_THROWS_AS(load_model(path), IoError);
  std::filesystem::remove(path);
}
