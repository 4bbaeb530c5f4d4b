// Command-line front end: simulate, extract, train, eval, joint, report.
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shdoa/config.hpp"
#include "shdoa/error.hpp"
#include "shdoa/harness.hpp"

namespace fs = std::filesystem;
using namespace shdoa;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<int> threads;
};

ExperimentConfig resolve(const Globals& g) {
  ExperimentConfig cfg = g.config_path.empty() ? ExperimentConfig{} : load_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  if (g.threads) cfg.threads = *g.threads;
  cfg.validate();
  fs::create_directories(g.out);
  return cfg;
}

std::string out_path(const Globals& g, const std::string& name) { return (fs::path(g.out) / name).string(); }

void log_epoch(const EpochLog& r) {
  std::fprintf(stderr, "epoch %3d  train %.5f  val %.5f  acc(theta) %.3f  acc(phi) %.3f\n", r.epoch, r.train_loss,
               r.val_loss, r.val_acc_theta, r.val_acc_phi);
}

std::string point_tag(const ExperimentReport& r) {
  std::ostringstream o;
  o << "snr" << r.snr_db << "_L" << r.num_sources << "_d" << r.distance;
  return o.str();
}

void save_training(const Globals& g, const ExperimentConfig& cfg, const TrainingOutput& t) {
  save_model(t.model, out_path(g, "model.bin"));
  write_training_log_csv(out_path(g, "training_log.csv"), t.log);
  write_manifest(out_path(g, "manifest.json"), cfg,
                 {{"stage", "train"},
                  {"dataset_hash", t.dataset_hash},
                  {"samples", std::to_string(t.samples)},
                  {"best_epoch", std::to_string(t.best_epoch)}});
  std::fprintf(stderr, "trained on %zu samples in %.1f s, best epoch %d\n", t.samples, t.runtime_s, t.best_epoch);
}

int cmd_simulate(const Globals& g, int trial, std::optional<int> sources, std::optional<double> snr) {
  const auto cfg = resolve(g);
  const int l = sources.value_or(cfg.num_sources);
  const double s = snr.value_or(cfg.snr_db);
  const auto ut = static_cast<std::uint64_t>(trial);
  const auto ul = static_cast<std::uint64_t>(l);
  const auto scene = sample_scene(cfg, l, cfg.source_distance, derive_seed(cfg.seed, "eval-scene", ut, ul));
  const auto mics = render_scene(cfg, scene.sources, s, derive_seed(cfg.seed, "eval-noise", ut, ul));
  write_wav(out_path(g, "scene.wav"), mics);
  std::ofstream f(out_path(g, "scene.csv"));
  f << "source,theta_deg,phi_deg,distance_m\n";
  for (std::size_t i = 0; i < scene.truths.size(); ++i)
    f << i << ',' << scene.truths[i].theta_deg() << ',' << scene.truths[i].phi_deg() << ',' << cfg.source_distance
      << '\n';
  write_manifest(out_path(g, "manifest.json"), cfg, {{"stage", "simulate"}, {"trial", std::to_string(trial)}});
  return 0;
}

int cmd_extract(const Globals& g, bool csv) {
  const auto cfg = resolve(g);
  const auto data = build_training_dataset(cfg);
  write_dataset(out_path(g, "dataset.bin"), data);
  if (csv) write_dataset_csv(out_path(g, "dataset.csv"), data);
  write_manifest(out_path(g, "manifest.json"), cfg,
                 {{"stage", "extract"},
                  {"dataset_hash", dataset_hash(data)},
                  {"samples", std::to_string(data.records.size())}});
  std::fprintf(stderr, "wrote %zu feature records\n", data.records.size());
  return 0;
}

int cmd_train(const Globals& g, const std::string& dataset) {
  const auto cfg = resolve(g);
  const auto t = dataset.empty() ? run_training(cfg, log_epoch) : train_on_dataset(cfg, read_dataset(dataset), log_epoch);
  save_training(g, cfg, t);
  return 0;
}

int cmd_eval(const Globals& g, const std::string& model_path, bool allow_mismatch) {
  const auto cfg = resolve(g);
  const Model model = load_model(model_path, cfg.grids.num_theta(), cfg.grids.num_phi());
  const auto snrs = cfg.sweeps.snr_db.empty() ? std::vector<double>{cfg.snr_db} : cfg.sweeps.snr_db;
  const auto counts = cfg.sweeps.sources.empty() ? std::vector<int>{cfg.num_sources} : cfg.sweeps.sources;
  const auto dists = cfg.sweeps.distances.empty() ? std::vector<double>{cfg.source_distance} : cfg.sweeps.distances;
  std::vector<ExperimentReport> reports;
  for (double d : dists) {
    for (int l : counts) {
      for (double s : snrs) {
        auto r = run_evaluation(cfg, model, EvalPoint{s, l, d}, allow_mismatch);
        std::fprintf(stderr, "snr %g dB, L %d, %g m: eta_acc %.1f%%  eta_adj %.1f%%  (%.1f s)\n", s, l, d, r.eta_acc,
                     r.eta_adj, r.runtime_s);
        write_trials_csv(out_path(g, "trials_" + point_tag(r) + ".csv"), r);
        write_multiset_csv(out_path(g, "multiset_" + point_tag(r) + ".csv"), r.heatmap);
        reports.push_back(std::move(r));
      }
    }
  }
  write_report_csv(out_path(g, "report.csv"), reports);
  std::vector<Figure> figs;
  if (snrs.size() > 1)
    figs.push_back(sweep_figure("accuracy_vs_snr", "SNR (dB)", reports, [](const auto& r) { return r.snr_db; }));
  if (counts.size() > 1)
    figs.push_back(sweep_figure("accuracy_vs_sources", "number of sources", reports,
                                [](const auto& r) { return static_cast<double>(r.num_sources); }));
  if (dists.size() > 1)
    figs.push_back(sweep_figure("accuracy_vs_distance", "distance (m)", reports, [](const auto& r) { return r.distance; }));
  if (!figs.empty()) emit_plots(out_path(g, "plots"), figs);
  write_manifest(out_path(g, "manifest.json"), cfg, {{"stage", "eval"}, {"model", model_path}});
  return 0;
}

int cmd_joint(const Globals& g, const std::string& model_path) {
  const auto cfg = resolve(g);
  std::optional<Model> model;
  if (!model_path.empty()) model = load_model(model_path, cfg.grids.num_theta(), cfg.grids.num_phi());
  const auto rep = run_joint_az_el(cfg, model ? &*model : nullptr);
  if (!model) save_training(g, cfg, rep.training);
  write_report_csv(out_path(g, "report.csv"), {rep.joint, rep.azimuth_only});
  write_trials_csv(out_path(g, "trials_joint.csv"), rep.joint);
  write_multiset_csv(out_path(g, "heatmap.csv"), rep.joint.heatmap);
  std::fprintf(stderr, "joint eta_adj %.1f%%, azimuth-only eta_adj %.1f%%, truth mass %.3f\n", rep.joint.eta_adj,
               rep.azimuth_only.eta_adj, rep.joint.truth_mass_fraction());
  write_manifest(out_path(g, "manifest.json"), cfg, {{"stage", "joint"}});
  return 0;
}

// Rebuilds sweep figures from report CSVs written by eval.
int cmd_report(const Globals& g, const std::vector<std::string>& inputs) {
  std::vector<ExperimentReport> rows;
  for (const auto& path : inputs) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read " + path);
    std::string line;
    std::getline(f, line);
    if (line != "experiment_id,room,snr_db,L,eta_acc,eta_adj,mean_support")
      throw IoError(path + " is not a metric report");
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::stringstream ss(line);
      for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
      if (cells.size() != 7) throw IoError("malformed row in " + path + ": " + line);
      ExperimentReport r;
      r.experiment_id = cells[0];
      r.room = cells[1];
      r.snr_db = std::stod(cells[2]);
      r.num_sources = std::stoi(cells[3]);
      r.eta_acc = std::stod(cells[4]);
      r.eta_adj = std::stod(cells[5]);
      r.mean_support = std::stod(cells[6]);
      rows.push_back(std::move(r));
    }
  }
  if (rows.empty()) throw IoError("no report rows to plot");
  std::map<std::string, std::vector<ExperimentReport>> by_snr_group;
  std::map<std::string, std::vector<ExperimentReport>> by_l_group;
  for (const auto& r : rows) {
    by_snr_group[r.experiment_id + "_" + r.room + "_L" + std::to_string(r.num_sources)].push_back(r);
    std::ostringstream key;
    key << r.experiment_id << '_' << r.room << "_snr" << r.snr_db;
    by_l_group[key.str()].push_back(r);
  }
  std::vector<Figure> figs;
  for (const auto& [key, group] : by_snr_group)
    if (group.size() > 1)
      figs.push_back(sweep_figure("snr_" + key, "SNR (dB)", group, [](const auto& r) { return r.snr_db; }));
  for (const auto& [key, group] : by_l_group)
    if (group.size() > 1)
      figs.push_back(sweep_figure("sources_" + key, "number of sources", group,
                                  [](const auto& r) { return static_cast<double>(r.num_sources); }));
  if (figs.empty()) {
    Figure f;
    f.name = "accuracy";
    f.x_label = "row";
    f.y_label = "accuracy (%)";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      f.points.push_back(PlotPoint{static_cast<double>(i), "eta_acc", rows[i].eta_acc});
      f.points.push_back(PlotPoint{static_cast<double>(i), "eta_adj", rows[i].eta_adj});
    }
    figs.push_back(std::move(f));
  }
  fs::create_directories(g.out);
  emit_plots(out_path(g, "plots"), figs);
  std::fprintf(stderr, "wrote %zu figure(s) to %s\n", figs.size(), out_path(g, "plots").c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-source DOA estimation from spherical-harmonic modal coherence"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Experiment configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override the configured base seed");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for scenes and trials")->check(CLI::PositiveNumber);

  int trial = 0;
  std::optional<int> sources;
  std::optional<double> snr;
  auto* simulate = app.add_subcommand("simulate", "Render one evaluation scene to a WAV file");
  simulate->add_option("--trial", trial, "Trial index whose scene is rendered");
  simulate->add_option("--sources", sources, "Number of sources");
  simulate->add_option("--snr", snr, "SNR in dB");

  bool csv = false;
  auto* extract = app.add_subcommand("extract", "Build the labeled single-source feature dataset");
  extract->add_flag("--csv", csv, "Also write a CSV export");

  std::string dataset;
  auto* train_cmd = app.add_subcommand("train", "Train a model (building the dataset unless one is given)");
  train_cmd->add_option("--dataset", dataset, "Dataset written by extract")->check(CLI::ExistingFile);

  std::string model_path;
  bool allow_mismatch = false;
  auto* eval = app.add_subcommand("eval", "Evaluate a model over the configured sweeps");
  eval->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
  eval->add_flag("--allow-mismatch", allow_mismatch, "Evaluate even if the model was trained for another room");

  std::string joint_model;
  auto* joint = app.add_subcommand("joint", "Joint elevation/azimuth experiment with heat-map output");
  joint->add_option("--model", joint_model, "Pretrained joint model (trains one when omitted)")
      ->check(CLI::ExistingFile);

  std::vector<std::string> inputs;
  auto* report = app.add_subcommand("report", "Plot CSV/SVG figures from metric report CSVs");
  report->add_option("inputs", inputs, "Report CSV files")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(g, trial, sources, snr);
    if (*extract) return cmd_extract(g, csv);
    if (*train_cmd) return cmd_train(g, dataset);
    if (*eval) return cmd_eval(g, model_path, allow_mismatch);
    if (*joint) return cmd_joint(g, joint_model);
    if (*report) return cmd_report(g, inputs);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
