#include "shdoa/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "shdoa/error.hpp"
#include "shdoa/shd.hpp"
#include "shdoa/stft.hpp"

namespace shdoa {

namespace {

constexpr const char* kVersion = "0.1.0";

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Direction antipode(const Direction& d) {
  return Direction::from_degrees(180.0 - d.theta_deg(), d.phi_deg() + 180.0);
}

int circular_gap(int a, int b, int n) {
  const int d = std::abs(a - b) % n;
  return std::min(d, n - d);
}

RowMatrix feature_matrix(const std::vector<TFBinFeature>& feats, int width) {
  RowMatrix x(static_cast<Eigen::Index>(feats.size()), width);
  for (std::size_t i = 0; i < feats.size(); ++i) {
    if (static_cast<int>(feats[i].feature.size()) != width) throw ShapeError("feature width mismatch");
    for (int v = 0; v < width; ++v) x(static_cast<Eigen::Index>(i), v) = feats[i].feature.values[v];
  }
  return x;
}

// Estimates, pairs them with the truths and fills everything but the scene.
void score_trial(const std::vector<ScoredBin>& bins, const ClassGrids& grids, const std::vector<Direction>& truths,
                 const std::vector<GridCell>& truth_cells, int num_sources, const EstimatorParams& params,
                 std::uint64_t seed, TrialResult& out) {
  out.test_bins = 0;
  out.multiset = PredictionMultiset{grids.num_theta(), grids.num_phi(),
                                    std::vector<long>(static_cast<std::size_t>(grids.num_cells()), 0)};
  std::vector<Direction> est_dirs;
  const auto kept = confidence_filter(bins, params.p_min);
  out.test_bins = static_cast<long>(kept.size());
  if (kept.empty()) {
    out.failure = "no bin passed the confidence filter";
  } else {
    out.multiset = prediction_multiset(kept, grids);
    const int usable = std::min(num_sources, out.multiset.distinct());
    if (usable < num_sources)
      out.failure = "only " + std::to_string(usable) + " distinct cells predicted";
    if (usable == 1 || params.mode == PeakMode::histogram)
      out.estimate = peaks_histogram(out.multiset, usable, grids);
    else
      out.estimate = kmeans_sphere(out.multiset, usable, grids, seed);
    est_dirs = out.estimate.directions();
  }
  for (const auto& c : truth_cells)
    if (c.theta_idx < grids.num_theta()) out.truth_mass += out.multiset.count(c.theta_idx, c.phi_idx);

  // A missing estimate is scored as the antipode of whichever truth it is paired with.
  const std::size_t l_count = truths.size();
  std::vector<std::vector<double>> err(l_count, std::vector<double>(l_count, 180.0));
  for (std::size_t i = 0; i < l_count; ++i)
    for (std::size_t j = 0; j < est_dirs.size(); ++j) err[i][j] = angular_error(truths[i], est_dirs[j]);
  const auto perm = optimal_assignment(err);
  out.record = TrialRecord{};
  out.record.truths = truths;
  for (std::size_t i = 0; i < l_count; ++i) {
    const auto j = static_cast<std::size_t>(perm[i]);
    out.record.estimates.push_back(j < est_dirs.size() ? est_dirs[j] : antipode(truths[i]));
    out.record.errors.push_back(err[i][j]);
  }
}

void finalize_report(ExperimentReport& r) {
  const auto recs = r.records();
  r.eta_acc = eta_acc(recs);
  r.eta_adj = eta_adj(recs, r.delta_omega);
  double support = 0.0;
  for (const auto& t : r.trials) {
    double s = 0.0;
    for (const auto& e : t.estimate.estimates) s += static_cast<double>(e.support);
    support += s / static_cast<double>(t.scene.truths.size());
  }
  r.mean_support = support / static_cast<double>(r.trials.size());
  if (r.trials.empty()) return;
  r.heatmap = r.trials.front().multiset;
  std::fill(r.heatmap.counts.begin(), r.heatmap.counts.end(), 0);
  for (const auto& t : r.trials)
    for (std::size_t c = 0; c < r.heatmap.counts.size(); ++c) r.heatmap.counts[c] += t.multiset.counts[c];
}

std::string fmt(double v) {
  std::ostringstream o;
  o << std::setprecision(10) << v;
  return o.str();
}

ExperimentReport evaluate(const ExperimentConfig& cfg, const Model& model, const EvalPoint& point,
                          bool allow_mismatch, ExperimentReport* azimuth_only) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  check_model(cfg, model, allow_mismatch);
  ExperimentReport rep;
  rep.experiment_id = cfg.experiment_id;
  rep.room = cfg.room_name;
  rep.snr_db = point.snr_db.value_or(cfg.snr_db);
  rep.num_sources = point.num_sources.value_or(cfg.num_sources);
  rep.distance = point.distance.value_or(cfg.source_distance);
  rep.delta_omega = default_delta_omega(cfg);
  rep.trials.resize(static_cast<std::size_t>(cfg.trials));

  ClassGrids az_grids;
  az_grids.thetas = {90.0};
  az_grids.phis = cfg.grids.phis;
  std::vector<TrialResult> az_trials(azimuth_only ? rep.trials.size() : 0);

  parallel_for(cfg.trials, cfg.threads, [&](int t) {
    const auto ut = static_cast<std::uint64_t>(t);
    const auto l = static_cast<std::uint64_t>(rep.num_sources);
    TrialResult& tr = rep.trials[static_cast<std::size_t>(t)];
    tr.trial = t;
    tr.scene = sample_scene(cfg, rep.num_sources, rep.distance, derive_seed(cfg.seed, "eval-scene", ut, l));
    const auto mics = render_scene(cfg, tr.scene.sources, rep.snr_db, derive_seed(cfg.seed, "eval-noise", ut, l));
    const auto feats = scene_features(cfg, mics);
    tr.active_bins = static_cast<long>(feats.size());
    const auto scores = forward_batch(model, feature_matrix(feats, model.shape().input_size()));
    std::vector<ScoredBin> bins(feats.size());
    for (std::size_t i = 0; i < feats.size(); ++i) bins[i] = ScoredBin{feats[i].bin, feats[i].frame, scores[i]};
    const auto km_seed = derive_seed(cfg.seed, "kmeans", ut, l);
    score_trial(bins, cfg.grids, tr.scene.truths, tr.scene.cells, rep.num_sources, cfg.estimator, km_seed, tr);

    if (azimuth_only) {
      TrialResult& az = az_trials[static_cast<std::size_t>(t)];
      az.trial = t;
      az.scene = tr.scene;
      az.active_bins = tr.active_bins;
      std::vector<Direction> truths;
      std::vector<GridCell> cells;
      for (std::size_t i = 0; i < tr.scene.truths.size(); ++i) {
        truths.push_back(Direction::from_degrees(90.0, tr.scene.truths[i].phi_deg()));
        cells.push_back(GridCell{0, tr.scene.cells[i].phi_idx});
      }
      for (auto& b : bins) b.scores.p_theta = {1.0};
      score_trial(bins, az_grids, truths, cells, rep.num_sources, cfg.estimator, km_seed, az);
      az.scene.truths = truths;
      az.scene.cells = cells;
    }
  });

  finalize_report(rep);
  rep.runtime_s = seconds_since(t0);
  if (azimuth_only) {
    ExperimentReport& az = *azimuth_only;
    az = ExperimentReport{};
    az.experiment_id = cfg.experiment_id + "_azimuth_only";
    az.room = rep.room;
    az.snr_db = rep.snr_db;
    az.num_sources = rep.num_sources;
    az.distance = rep.distance;
    az.delta_omega = adjacent_separation(az_grids, 90.0);
    az.trials = std::move(az_trials);
    finalize_report(az);
    az.runtime_s = rep.runtime_s;
  }
  return rep;
}

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

void write_svg(const std::string& path, const Figure& fig) {
  constexpr double kW = 640.0;
  constexpr double kH = 400.0;
  constexpr double kLeft = 60.0;
  constexpr double kRight = 150.0;
  constexpr double kTop = 30.0;
  constexpr double kBottom = 50.0;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::vector<std::string> series;
  double x_lo = fig.points.front().x;
  double x_hi = x_lo;
  double y_lo = 0.0;
  double y_hi = 0.0;
  for (const auto& p : fig.points) {
    if (std::find(series.begin(), series.end(), p.series) == series.end()) series.push_back(p.series);
    x_lo = std::min(x_lo, p.x);
    x_hi = std::max(x_hi, p.x);
    y_lo = std::min(y_lo, p.value);
    y_hi = std::max(y_hi, p.value);
  }
  if (x_hi == x_lo) x_hi = x_lo + 1.0;
  if (y_hi == y_lo) y_hi = y_lo + 1.0;
  auto sx = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * (kW - kLeft - kRight); };
  auto sy = [&](double y) { return kH - kBottom - (y - y_lo) / (y_hi - y_lo) * (kH - kTop - kBottom); };

  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << std::fixed << std::setprecision(2);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  f << "<text x=\"" << kW / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << svg_escape(fig.name)
    << "</text>\n";
  f << "<line x1=\"" << kLeft << "\" y1=\"" << kH - kBottom << "\" x2=\"" << kW - kRight << "\" y2=\"" << kH - kBottom
    << "\" stroke=\"black\"/>\n";
  f << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kH - kBottom
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = y_lo + (y_hi - y_lo) * i / 4.0;
    f << "<text x=\"" << kLeft - 6 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\" font-size=\"10\">" << y
      << "</text>\n";
  }
  std::vector<double> xs;
  for (const auto& p : fig.points)
    if (std::find(xs.begin(), xs.end(), p.x) == xs.end()) xs.push_back(p.x);
  for (double x : xs)
    f << "<text x=\"" << sx(x) << "\" y=\"" << kH - kBottom + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
      << fmt(x) << "</text>\n";
  f << "<text x=\"" << (kLeft + kW - kRight) / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
    << svg_escape(fig.x_label) << "</text>\n";
  f << "<text x=\"14\" y=\"" << (kTop + kH - kBottom) / 2 << "\" transform=\"rotate(-90 14 "
    << (kTop + kH - kBottom) / 2 << ")\" text-anchor=\"middle\" font-size=\"12\">" << svg_escape(fig.y_label)
    << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    f << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : fig.points)
      if (p.series == series[s]) f << sx(p.x) << ',' << sy(p.value) << ' ';
    f << "\"/>\n";
    for (const auto& p : fig.points)
      if (p.series == series[s])
        f << "<circle cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.value) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(s);
    f << "<rect x=\"" << kW - kRight + 10 << "\" y=\"" << ly << "\" width=\"10\" height=\"10\" fill=\"" << color
      << "\"/>\n";
    f << "<text x=\"" << kW - kRight + 26 << "\" y=\"" << ly + 9 << "\" font-size=\"11\">" << svg_escape(series[s])
      << "</text>\n";
  }
  f << "</svg>\n";
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, const std::string& tag, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = splitmix(base);
  for (unsigned char c : tag) h = splitmix(h ^ c);
  h = splitmix(h ^ a);
  return splitmix(h ^ (b + 0x632be59bd9b4e019ULL));
}

void parallel_for(int n, int threads, const std::function<void(int)>& f) {
  if (n <= 0) return;
  const int workers = std::max(1, std::min(threads, n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) {
      try {
        f(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<int> next{0};
    std::atomic<bool> stop{false};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < n && !stop; i = next++) {
          try {
            f(i);
          } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
            stop = true;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

MultiChannel render_scene(const ExperimentConfig& cfg, const std::vector<SourceSpec>& sources, double snr_db,
                          std::uint64_t noise_seed) {
  const ArrayConfig array = cfg.array();
  for (const auto& s : sources)
    if (!cfg.room.contains(s.position(array.center)))
      throw ConfigError("source at " + fmt(s.distance) + " m (theta " + fmt(s.direction.theta_deg()) + ", phi " +
                        fmt(s.direction.phi_deg()) + ") lies outside the room");
  MultiChannel mics = synthesize_mixture(sources, cfg.room, array);
  if (std::isinf(snr_db) && snr_db > 0.0) return mics;
  std::optional<BabbleScene> babble;
  if (cfg.noise == NoiseKind::babble) babble = BabbleScene{cfg.room, array, 6};
  return add_noise(mics, snr_db, cfg.noise, noise_seed, babble);
}

std::vector<TFBinFeature> scene_features(const ExperimentConfig& cfg, const MultiChannel& mics) {
  const auto& fp = cfg.features;
  const Spectrogram band = select_band(stft_forward(mics, fp.stft), fp.f_lo, fp.f_hi);
  const HarmonicSpectrogram coeffs = decompose_spectrogram(band, cfg.array(), fp.n_max, cfg.room.speed_of_sound);
  auto feats = energy_filter(extract_features(coeffs, fp.beta), fp.percentile_k);
  for (auto& f : feats) normalize_feature(f.feature, fp.normalization);
  return feats;
}

FeatureDataset build_training_dataset(const ExperimentConfig& cfg) {
  cfg.validate();
  FeatureDataset data;
  data.modes = num_modes(cfg.features.n_max);
  data.classes_theta = cfg.grids.num_theta();
  data.classes_phi = cfg.grids.num_phi();
  const int classes = cfg.grids.num_cells();
  std::vector<std::vector<TFBinFeature>> per_class(static_cast<std::size_t>(classes));
  parallel_for(classes, cfg.threads, [&](int c) {
    const int ti = c / cfg.grids.num_phi();
    const int pj = c % cfg.grids.num_phi();
    const auto uti = static_cast<std::uint64_t>(ti);
    const auto upj = static_cast<std::uint64_t>(pj);
    SourceSpec src;
    src.direction = cfg.grids.direction(ti, pj);
    src.distance = cfg.source_distance;
    src.signal = gen_training_signal(cfg.train_signal_duration_s, derive_seed(cfg.seed, "train-signal", uti, upj),
                                     cfg.features.stft.fs);
    std::mt19937_64 rng(derive_seed(cfg.seed, "train-level", uti, upj));
    const double level_db =
        std::uniform_real_distribution<double>(-cfg.train_level_spread_db, cfg.train_level_spread_db)(rng);
    src.level = std::pow(10.0, level_db / 20.0);
    const auto mics = render_scene(cfg, {src}, cfg.train_snr_db, derive_seed(cfg.seed, "train-noise", uti, upj));
    auto feats = scene_features(cfg, mics);
    for (auto& f : feats) {
      f.label_theta = ti;
      f.label_phi = pj;
    }
    per_class[static_cast<std::size_t>(c)] = std::move(feats);
  });
  for (auto& v : per_class)
    for (auto& f : v) data.records.push_back(std::move(f));
  return data;
}

std::string dataset_hash(const FeatureDataset& data) {
  std::vector<unsigned char> bytes;
  auto append = [&](const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    bytes.insert(bytes.end(), c, c + n);
  };
  for (const auto& r : data.records) {
    const std::int32_t head[3] = {r.bin, r.label_theta.value_or(-1), r.label_phi.value_or(-1)};
    append(head, sizeof head);
    for (double v : r.feature.values) {
      const auto f = static_cast<float>(v);
      append(&f, sizeof f);
    }
  }
  return hash_bytes(bytes.data(), bytes.size());
}

TrainingOutput train_on_dataset(const ExperimentConfig& cfg, const FeatureDataset& data,
                                const std::function<void(const EpochLog&)>& on_epoch) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  if (data.classes_theta != cfg.grids.num_theta() || data.classes_phi != cfg.grids.num_phi())
    throw ConfigError("dataset class counts differ from the configured grids");
  TrainConfig tc = cfg.training;
  tc.seed = derive_seed(cfg.seed, "train");
  auto result = train(data.records, cfg.model_shape(), tc, on_epoch);
  TrainingOutput out;
  out.model = std::move(result.model);
  out.model.fingerprint = environment_fingerprint(cfg);
  out.log = std::move(result.log);
  out.best_epoch = result.best_epoch;
  out.samples = data.records.size();
  out.dataset_hash = dataset_hash(data);
  out.runtime_s = seconds_since(t0);
  return out;
}

TrainingOutput run_training(const ExperimentConfig& cfg, const std::function<void(const EpochLog&)>& on_epoch) {
  const auto t0 = std::chrono::steady_clock::now();
  const FeatureDataset data = build_training_dataset(cfg);
  auto out = train_on_dataset(cfg, data, on_epoch);
  out.runtime_s = seconds_since(t0);
  return out;
}

TrialScene sample_scene(const ExperimentConfig& cfg, int num_sources, double distance, std::uint64_t seed) {
  const auto thetas = cfg.effective_test_thetas();
  const int n_theta = static_cast<int>(thetas.size());
  const int n_phi = cfg.grids.num_phi();
  const int cells = n_theta * n_phi;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, cells - 1);
  std::vector<int> chosen;
  for (int attempt = 0; static_cast<int>(chosen.size()) < num_sources; ++attempt) {
    if (attempt > 10000)
      throw ConfigError("cannot place " + std::to_string(num_sources) + " sources " +
                        std::to_string(cfg.min_separation_cells) + " cells apart");
    const int c = pick(rng);
    bool ok = true;
    for (int o : chosen) {
      const int dt = std::abs(c / n_phi - o / n_phi);
      const int dp = circular_gap(c % n_phi, o % n_phi, n_phi);
      if (std::max(dt, dp) < cfg.min_separation_cells) ok = false;
    }
    if (ok) chosen.push_back(c);
  }
  TrialScene scene;
  const double phi_step = n_phi > 1 ? cfg.grids.phis[1] - cfg.grids.phis[0] : 360.0;
  std::uniform_real_distribution<double> jitter(-0.5 * phi_step, 0.5 * phi_step);
  for (std::size_t l = 0; l < chosen.size(); ++l) {
    const int c = chosen[l];
    const int ti = c / n_phi;
    const int pj = c % n_phi;
    // Cells on test planes outside the class grid keep the nearest class index.
    const auto nearest = std::min_element(cfg.grids.thetas.begin(), cfg.grids.thetas.end(), [&](double a, double b) {
      return std::abs(a - thetas[ti]) < std::abs(b - thetas[ti]);
    });
    scene.cells.push_back(GridCell{static_cast<int>(nearest - cfg.grids.thetas.begin()), pj});
    double phi = cfg.grids.phis[pj];
    if (cfg.off_grid) phi += jitter(rng);
    scene.truths.push_back(Direction::from_degrees(thetas[ti], phi));
    SourceSpec s;
    s.direction = scene.truths.back();
    s.distance = distance;
    s.signal = gen_speech_like_signal(cfg.test_signal_duration_s, derive_seed(seed, "signal", l), cfg.features.stft.fs);
    scene.sources.push_back(std::move(s));
  }
  return scene;
}

MetricRow ExperimentReport::row() const {
  return MetricRow{experiment_id, room, snr_db, num_sources, eta_acc, eta_adj, mean_support};
}

std::vector<TrialRecord> ExperimentReport::records() const {
  std::vector<TrialRecord> out;
  out.reserve(trials.size());
  for (const auto& t : trials) out.push_back(t.record);
  return out;
}

double ExperimentReport::truth_mass_fraction() const {
  long mass = 0;
  long total = 0;
  for (const auto& t : trials) {
    mass += t.truth_mass;
    total += t.multiset.total();
  }
  return total > 0 ? static_cast<double>(mass) / static_cast<double>(total) : 0.0;
}

double default_delta_omega(const ExperimentConfig& cfg) {
  const auto& g = cfg.grids;
  if (g.num_phi() < 2) return g.num_theta() > 1 ? g.thetas[1] - g.thetas[0] : 0.0;
  if (g.num_theta() == 1) return adjacent_separation(g, cfg.effective_test_thetas().front());
  return std::max(adjacent_separation(g, 90.0), g.thetas[1] - g.thetas[0]);
}

void check_model(const ExperimentConfig& cfg, const Model& model, bool allow_mismatch) {
  const ModelShape want = cfg.model_shape();
  const ModelShape& have = model.shape();
  if (have.classes_theta != want.classes_theta || have.classes_phi != want.classes_phi)
    throw ConfigError("model has " + std::to_string(have.classes_theta) + " x " + std::to_string(have.classes_phi) +
                      " classes, configuration expects " + std::to_string(want.classes_theta) + " x " +
                      std::to_string(want.classes_phi));
  if (!(have == want)) throw ConfigError("model architecture differs from the configured network");
  const std::string fp = environment_fingerprint(cfg);
  if (!allow_mismatch && model.fingerprint != fp)
    throw ConfigError("model was trained for '" + model.fingerprint + "' but the configuration describes '" + fp +
                      "' (pass the override flag to evaluate anyway)");
}

ExperimentReport run_evaluation(const ExperimentConfig& cfg, const Model& model, const EvalPoint& point,
                                bool allow_mismatch) {
  return evaluate(cfg, model, point, allow_mismatch, nullptr);
}

JointReport run_joint_az_el(const ExperimentConfig& cfg, const Model* model) {
  if (cfg.grids.num_theta() < 2 || cfg.grids.num_phi() < 2)
    throw ConfigError("joint estimation needs at least two elevation and two azimuth classes");
  JointReport out;
  if (model) {
    out.training.model = *model;
  } else {
    out.training = run_training(cfg);
  }
  out.joint = evaluate(cfg, out.training.model, {}, false, &out.azimuth_only);
  return out;
}

void write_report_csv(const std::string& path, const std::vector<ExperimentReport>& reports) {
  std::vector<MetricRow> rows;
  for (const auto& r : reports) rows.push_back(r.row());
  write_metric_report(path, rows);
}

void write_trials_csv(const std::string& path, const ExperimentReport& report) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "trial,source,true_theta,true_phi,est_theta,est_phi,error_deg,active_bins,test_bins,failure\n"
    << std::setprecision(10);
  for (const auto& t : report.trials) {
    for (std::size_t l = 0; l < t.record.truths.size(); ++l) {
      f << t.trial << ',' << l << ',' << t.record.truths[l].theta_deg() << ',' << t.record.truths[l].phi_deg() << ','
        << t.record.estimates[l].theta_deg() << ',' << t.record.estimates[l].phi_deg() << ',' << t.record.errors[l]
        << ',' << t.active_bins << ',' << t.test_bins << ',' << t.failure << '\n';
    }
  }
}

Figure sweep_figure(const std::string& name, const std::string& x_label, const std::vector<ExperimentReport>& reports,
                    const std::function<double(const ExperimentReport&)>& x_of) {
  Figure fig;
  fig.name = name;
  fig.x_label = x_label;
  fig.y_label = "accuracy (%)";
  for (const auto& r : reports) {
    fig.points.push_back(PlotPoint{x_of(r), "eta_acc", r.eta_acc});
    fig.points.push_back(PlotPoint{x_of(r), "eta_adj", r.eta_adj});
  }
  return fig;
}

void emit_plots(const std::string& dir, const std::vector<Figure>& figures) {
  if (figures.empty()) throw IoError("no figures to write");
  std::filesystem::create_directories(dir);
  for (const auto& fig : figures) {
    if (fig.points.empty()) throw IoError("figure '" + fig.name + "' has no data points");
    const std::string base = (std::filesystem::path(dir) / fig.name).string();
    std::ofstream f(base + ".csv");
    if (!f) throw IoError("cannot open " + base + ".csv for writing");
    f << "x,series,value\n" << std::setprecision(10);
    for (const auto& p : fig.points) f << p.x << ',' << p.series << ',' << p.value << '\n';
    f.close();
    write_svg(base + ".svg", fig);
  }
}

void write_manifest(const std::string& path, const ExperimentConfig& cfg,
                    const std::vector<std::pair<std::string, std::string>>& extra) {
  nlohmann::ordered_json j;
  j["tool"] = "shdoa";
  j["version"] = kVersion;
  j["config_hash"] = config_hash(cfg);
  j["environment"] = environment_fingerprint(cfg);
  for (const auto& [k, v] : extra) j[k] = v;
  j["config"] = nlohmann::json::parse(config_to_json(cfg));
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << j.dump(2) << '\n';
}

}  // namespace shdoa
