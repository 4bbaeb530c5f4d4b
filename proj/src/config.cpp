#include "shdoa/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "shdoa/error.hpp"

namespace shdoa {

namespace {

using nlohmann::json;

// Reads typed fields from one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  [[nodiscard]] const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown configuration key " + path_ + "." + k);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

const char* to_string(ArrayKind k) { return k == ArrayKind::rigid ? "rigid" : "open"; }
const char* to_string(NoiseKind k) { return k == NoiseKind::babble ? "babble" : "white"; }
const char* to_string(PeakMode m) { return m == PeakMode::histogram ? "histogram" : "cluster"; }
const char* to_string(Optimizer o) { return o == Optimizer::sgd ? "sgd" : "adam"; }
const char* to_string(FeatureNorm n) { return n == FeatureNorm::trace ? "trace" : "none"; }

template <typename E>
E parse_enum(const std::string& s, std::initializer_list<std::pair<const char*, E>> options, const std::string& what) {
  for (const auto& [name, value] : options)
    if (s == name) return value;
  throw ConfigError("invalid value '" + s + "' for " + what);
}

RoomConfig preset_or_throw(const std::string& name) {
  try {
    return room_preset(name);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

void read_room(ExperimentConfig& cfg, const json& j) {
  if (j.is_string()) {
    cfg.room_name = j.get<std::string>();
    cfg.room = preset_or_throw(cfg.room_name);
    return;
  }
  Section s(j, "room");
  std::string preset;
  s.read("preset", preset);
  if (!preset.empty()) {
    cfg.room = preset_or_throw(preset);
    cfg.room_name = preset;
  } else {
    cfg.room_name = "custom";
  }
  s.read("name", cfg.room_name);
  std::vector<double> dims;
  s.read("dimensions", dims);
  if (!dims.empty()) {
    if (dims.size() != 3) throw ConfigError("room.dimensions needs three values");
    cfg.room.dimensions = {dims[0], dims[1], dims[2]};
  }
  s.read("t60", cfg.room.t60);
  s.read("speed_of_sound", cfg.room.speed_of_sound);
  s.read("max_reflection_order", cfg.room.max_reflection_order);
  s.read("rir_duration_s", cfg.room.rir_duration_s);
  s.finish();
}

void read_grids(ExperimentConfig& cfg, const json& j) {
  Section s(j, "grids");
  std::vector<double> thetas = cfg.grids.thetas;
  std::vector<double> phis;
  double phi_step = 0.0;
  s.read("thetas", thetas);
  s.read("phis", phis);
  s.read("phi_step", phi_step);
  s.finish();
  if (!phis.empty() && phi_step > 0.0) throw ConfigError("grids: give either phis or phi_step, not both");
  if (phi_step > 0.0) {
    cfg.grids = ClassGrids::azimuth_grid(thetas, phi_step);
  } else {
    cfg.grids.thetas = thetas;
    if (!phis.empty()) cfg.grids.phis = phis;
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  room.validate();
  grids.validate();
  features.stft.validate();
  training.validate();
  model_shape().validate();
  if (!(array_radius > 0.0)) throw ConfigError("array radius must be positive");
  if (!(source_distance > 0.0)) throw ConfigError("source distance must be positive");
  if (num_sources < 1 || num_sources > 8) throw ConfigError("number of sources must lie in [1, 8]");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (min_separation_cells < 1) throw ConfigError("min_separation_cells must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (!(train_signal_duration_s > 0.0) || !(test_signal_duration_s > 0.0))
    throw ConfigError("signal durations must be positive");
  if (train_level_spread_db < 0.0) throw ConfigError("train_level_spread_db must be non-negative");
  if (!(features.f_lo >= 0.0 && features.f_lo < features.f_hi && features.f_hi <= features.stft.fs / 2.0))
    throw ConfigError("feature band must satisfy 0 <= f_lo < f_hi <= fs/2");
  if (!(features.beta >= 0.0 && features.beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  if (!(features.percentile_k >= 0.0 && features.percentile_k < 100.0))
    throw ConfigError("percentile must lie in [0, 100)");
  if (features.n_max < 0) throw ConfigError("decomposition order must be non-negative");
  if (!(estimator.p_min >= 0.0 && estimator.p_min <= 1.0)) throw ConfigError("p_min must lie in [0, 1]");
  for (double t : effective_test_thetas())
    if (t < 0.0 || t > 180.0) throw ConfigError("test elevation outside [0, 180]");
  for (int l : sweeps.sources)
    if (l < 1 || l > 8) throw ConfigError("swept source counts must lie in [1, 8]");
  for (double d : sweeps.distances)
    if (!(d > 0.0)) throw ConfigError("swept distances must be positive");
  const ArrayConfig a = array();
  if (!room.contains(a.center)) throw ConfigError("array center lies outside the room");
  if (static_cast<int>(a.num_mics()) < num_modes(features.n_max))
    throw ConfigError("array has fewer microphones than harmonic modes");
}

ModelShape ExperimentConfig::model_shape() const {
  ModelShape s = network;
  s.modes = num_modes(features.n_max);
  s.classes_theta = grids.num_theta();
  s.classes_phi = grids.num_phi();
  return s;
}

ArrayConfig ExperimentConfig::array() const {
  return default_array({room.dimensions[0] / 2.0, room.dimensions[1] / 2.0, array_height}, array_kind, array_radius);
}

std::vector<double> ExperimentConfig::effective_test_thetas() const {
  return test_thetas.empty() ? grids.thetas : test_thetas;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  Section s(root, "config");
  s.read("experiment_id", cfg.experiment_id);
  if (const auto* r = s.child("room")) read_room(cfg, *r);
  if (const auto* a = s.child("array")) {
    Section as(*a, "array");
    std::string kind = to_string(cfg.array_kind);
    as.read("kind", kind);
    cfg.array_kind = parse_enum<ArrayKind>(kind, {{"open", ArrayKind::open}, {"rigid", ArrayKind::rigid}}, "array.kind");
    as.read("radius", cfg.array_radius);
    as.read("height", cfg.array_height);
    as.finish();
  }
  if (const auto* g = s.child("grids")) read_grids(cfg, *g);
  s.read("test_thetas", cfg.test_thetas);
  s.read("source_distance", cfg.source_distance);
  s.read("snr_db", cfg.snr_db);
  s.read("train_snr_db", cfg.train_snr_db);
  std::string noise = to_string(cfg.noise);
  s.read("noise", noise);
  cfg.noise = parse_enum<NoiseKind>(noise, {{"white", NoiseKind::white}, {"babble", NoiseKind::babble}}, "noise");
  s.read("sources", cfg.num_sources);
  s.read("trials", cfg.trials);
  s.read("min_separation_cells", cfg.min_separation_cells);
  s.read("off_grid", cfg.off_grid);
  s.read("train_signal_duration_s", cfg.train_signal_duration_s);
  s.read("test_signal_duration_s", cfg.test_signal_duration_s);
  s.read("train_level_spread_db", cfg.train_level_spread_db);
  s.read("seed", cfg.seed);
  s.read("threads", cfg.threads);
  if (const auto* f = s.child("features")) {
    Section fs(*f, "features");
    fs.read("f_lo", cfg.features.f_lo);
    fs.read("f_hi", cfg.features.f_hi);
    fs.read("beta", cfg.features.beta);
    fs.read("percentile", cfg.features.percentile_k);
    fs.read("order", cfg.features.n_max);
    fs.read("sample_rate", cfg.features.stft.fs);
    fs.read("window", cfg.features.stft.window_len);
    fs.read("hop", cfg.features.stft.hop);
    fs.read("dft", cfg.features.stft.dft_len);
    std::string norm = to_string(cfg.features.normalization);
    fs.read("normalization", norm);
    cfg.features.normalization =
        parse_enum<FeatureNorm>(norm, {{"none", FeatureNorm::none}, {"trace", FeatureNorm::trace}}, "features.normalization");
    fs.finish();
  }
  if (const auto* n = s.child("network")) {
    Section ns(*n, "network");
    ns.read("conv_layers", cfg.network.conv_layers);
    ns.read("filters", cfg.network.filters);
    ns.read("dense_layers", cfg.network.dense_layers);
    ns.read("dense_width", cfg.network.dense_width);
    ns.finish();
  }
  if (const auto* t = s.child("training")) {
    Section ts(*t, "training");
    ts.read("learning_rate", cfg.training.learning_rate);
    ts.read("batch_size", cfg.training.batch_size);
    ts.read("epochs", cfg.training.epochs);
    std::string opt = to_string(cfg.training.optimizer);
    ts.read("optimizer", opt);
    cfg.training.optimizer =
        parse_enum<Optimizer>(opt, {{"adam", Optimizer::adam}, {"sgd", Optimizer::sgd}}, "training.optimizer");
    ts.read("validation_fraction", cfg.training.validation_fraction);
    ts.read("auto_input_scale", cfg.training.auto_input_scale);
    ts.finish();
  }
  if (const auto* e = s.child("estimator")) {
    Section es(*e, "estimator");
    es.read("p_min", cfg.estimator.p_min);
    std::string mode = to_string(cfg.estimator.mode);
    es.read("mode", mode);
    cfg.estimator.mode = parse_enum<PeakMode>(
        mode, {{"cluster", PeakMode::cluster}, {"histogram", PeakMode::histogram}}, "estimator.mode");
    es.finish();
  }
  if (const auto* w = s.child("sweeps")) {
    Section ws(*w, "sweeps");
    ws.read("snr_db", cfg.sweeps.snr_db);
    ws.read("sources", cfg.sweeps.sources);
    ws.read("distances", cfg.sweeps.distances);
    ws.finish();
  }
  s.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read configuration file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["experiment_id"] = cfg.experiment_id;
  j["room"] = {{"name", cfg.room_name},
               {"dimensions", {cfg.room.dimensions[0], cfg.room.dimensions[1], cfg.room.dimensions[2]}},
               {"t60", cfg.room.t60},
               {"speed_of_sound", cfg.room.speed_of_sound},
               {"max_reflection_order", cfg.room.max_reflection_order},
               {"rir_duration_s", cfg.room.rir_duration_s}};
  j["array"] = {{"kind", to_string(cfg.array_kind)}, {"radius", cfg.array_radius}, {"height", cfg.array_height}};
  j["grids"] = {{"thetas", cfg.grids.thetas}, {"phis", cfg.grids.phis}};
  j["test_thetas"] = cfg.test_thetas;
  j["source_distance"] = cfg.source_distance;
  j["snr_db"] = cfg.snr_db;
  j["train_snr_db"] = cfg.train_snr_db;
  j["noise"] = to_string(cfg.noise);
  j["sources"] = cfg.num_sources;
  j["trials"] = cfg.trials;
  j["min_separation_cells"] = cfg.min_separation_cells;
  j["off_grid"] = cfg.off_grid;
  j["train_signal_duration_s"] = cfg.train_signal_duration_s;
  j["test_signal_duration_s"] = cfg.test_signal_duration_s;
  j["train_level_spread_db"] = cfg.train_level_spread_db;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["features"] = {{"f_lo", cfg.features.f_lo},          {"f_hi", cfg.features.f_hi},
                   {"beta", cfg.features.beta},          {"percentile", cfg.features.percentile_k},
                   {"order", cfg.features.n_max},        {"sample_rate", cfg.features.stft.fs},
                   {"window", cfg.features.stft.window_len}, {"hop", cfg.features.stft.hop},
                   {"dft", cfg.features.stft.dft_len}, {"normalization", to_string(cfg.features.normalization)}};
  j["network"] = {{"conv_layers", cfg.network.conv_layers},
                  {"filters", cfg.network.filters},
                  {"dense_layers", cfg.network.dense_layers},
                  {"dense_width", cfg.network.dense_width}};
  j["training"] = {{"learning_rate", cfg.training.learning_rate},
                   {"batch_size", cfg.training.batch_size},
                   {"epochs", cfg.training.epochs},
                   {"optimizer", to_string(cfg.training.optimizer)},
                   {"validation_fraction", cfg.training.validation_fraction},
                   {"auto_input_scale", cfg.training.auto_input_scale}};
  j["estimator"] = {{"p_min", cfg.estimator.p_min}, {"mode", to_string(cfg.estimator.mode)}};
  j["sweeps"] = {{"snr_db", cfg.sweeps.snr_db}, {"sources", cfg.sweeps.sources}, {"distances", cfg.sweeps.distances}};
  return j.dump(2);
}

std::string hash_bytes(const void* data, std::size_t size) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = config_to_json(cfg);
  return hash_bytes(text.data(), text.size());
}

std::string environment_fingerprint(const ExperimentConfig& cfg) {
  std::ostringstream o;
  o.precision(10);
  o << "room=" << cfg.room_name << ";dims=" << cfg.room.dimensions[0] << 'x' << cfg.room.dimensions[1] << 'x'
    << cfg.room.dimensions[2] << ";t60=" << cfg.room.t60 << ";c=" << cfg.room.speed_of_sound
    << ";array=" << to_string(cfg.array_kind) << ";radius=" << cfg.array_radius << ";height=" << cfg.array_height
    << ";order=" << cfg.features.n_max << ";beta=" << cfg.features.beta << ";band=" << cfg.features.f_lo << '-'
    << cfg.features.f_hi << ";norm=" << to_string(cfg.features.normalization);
  return o.str();
}

}  // namespace shdoa
