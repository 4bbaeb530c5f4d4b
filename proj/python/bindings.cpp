#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "shdoa/config.hpp"
#include "shdoa/error.hpp"
#include "shdoa/features.hpp"
#include "shdoa/harness.hpp"
#include "shdoa/metrics.hpp"
#include "shdoa/nn.hpp"
#include "shdoa/shd.hpp"
#include "shdoa/sph_math.hpp"
#include "shdoa/stft.hpp"

namespace py = pybind11;
using namespace shdoa;

namespace {

using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ComplexArray = py::array_t<Complex, py::array::c_style | py::array::forcecast>;

py::array_t<Complex> to_numpy(const Eigen::MatrixXcd& m) {
  py::array_t<Complex> out({m.rows(), m.cols()});
  auto v = out.mutable_unchecked<2>();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) v(i, j) = m(i, j);
  return out;
}

MultiChannel from_numpy(const RealArray& a, double fs) {
  if (a.ndim() != 2) throw ShapeError("expected a [channels, samples] array");
  MultiChannel m;
  m.fs = fs;
  const auto v = a.unchecked<2>();
  m.channels.assign(static_cast<std::size_t>(a.shape(0)), std::vector<double>(static_cast<std::size_t>(a.shape(1))));
  for (py::ssize_t c = 0; c < a.shape(0); ++c)
    for (py::ssize_t t = 0; t < a.shape(1); ++t) m.channels[c][t] = v(c, t);
  return m;
}

py::array_t<double> to_numpy(const MultiChannel& m) {
  py::array_t<double> out({static_cast<py::ssize_t>(m.num_channels()), static_cast<py::ssize_t>(m.length())});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t c = 0; c < m.num_channels(); ++c)
    for (std::size_t t = 0; t < m.length(); ++t) v(c, t) = m.channels[c][t];
  return out;
}

// Features as an [N, modes, modes, 2] array plus bin, frame and energy columns.
py::dict features_to_dict(const std::vector<TFBinFeature>& feats, int modes) {
  const auto n = static_cast<py::ssize_t>(feats.size());
  py::array_t<double> values({n, static_cast<py::ssize_t>(modes), static_cast<py::ssize_t>(modes), py::ssize_t{2}});
  py::array_t<int> bins(n), frames(n);
  py::array_t<double> energy(n);
  double* dst = values.mutable_data();
  for (py::ssize_t i = 0; i < n; ++i) {
    const auto& f = feats[static_cast<std::size_t>(i)];
    std::copy(f.feature.values.begin(), f.feature.values.end(), dst + i * modes * modes * 2);
    bins.mutable_data()[i] = f.bin;
    frames.mutable_data()[i] = f.frame;
    energy.mutable_data()[i] = f.bin_energy;
  }
  py::dict d;
  d["features"] = values;
  d["bin"] = bins;
  d["frame"] = frames;
  d["energy"] = energy;
  return d;
}

py::dict report_to_dict(const ExperimentReport& r) {
  py::dict d;
  d["experiment_id"] = r.experiment_id;
  d["room"] = r.room;
  d["snr_db"] = r.snr_db;
  d["num_sources"] = r.num_sources;
  d["distance"] = r.distance;
  d["delta_omega"] = r.delta_omega;
  d["eta_acc"] = r.eta_acc;
  d["eta_adj"] = r.eta_adj;
  d["mean_support"] = r.mean_support;
  py::list trials;
  for (const auto& t : r.trials) {
    py::dict td;
    std::vector<std::pair<double, double>> truths, estimates;
    for (const auto& x : t.record.truths) truths.emplace_back(x.theta_deg(), x.phi_deg());
    for (const auto& x : t.record.estimates) estimates.emplace_back(x.theta_deg(), x.phi_deg());
    td["truths"] = truths;
    td["estimates"] = estimates;
    td["errors"] = t.record.errors;
    td["active_bins"] = t.active_bins;
    td["test_bins"] = t.test_bins;
    td["failure"] = t.failure;
    trials.append(td);
  }
  d["trials"] = trials;
  return d;
}

py::list log_to_list(const std::vector<EpochLog>& log) {
  py::list out;
  for (const auto& e : log) {
    py::dict d;
    d["epoch"] = e.epoch;
    d["train_loss"] = e.train_loss;
    d["val_loss"] = e.val_loss;
    d["val_acc_theta"] = e.val_acc_theta;
    d["val_acc_phi"] = e.val_acc_phi;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spherical-harmonic DOA estimation core";

  // registered base first: translators run in reverse registration order
  auto& base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  // configuration
  py::class_<ExperimentConfig>(m, "Config")
      .def(py::init<>())
      .def_readwrite("experiment_id", &ExperimentConfig::experiment_id)
      .def_readonly("room_name", &ExperimentConfig::room_name)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("trials", &ExperimentConfig::trials)
      .def_readwrite("snr_db", &ExperimentConfig::snr_db)
      .def_readwrite("num_sources", &ExperimentConfig::num_sources)
      .def_readwrite("threads", &ExperimentConfig::threads)
      .def_property_readonly("thetas", [](const ExperimentConfig& c) { return c.grids.thetas; })
      .def_property_readonly("phis", [](const ExperimentConfig& c) { return c.grids.phis; })
      .def("validate", &ExperimentConfig::validate)
      .def("to_json", [](const ExperimentConfig& c) { return config_to_json(c); })
      .def("hash", [](const ExperimentConfig& c) { return config_hash(c); })
      .def("__repr__", [](const ExperimentConfig& c) { return "<Config " + c.experiment_id + " " + config_hash(c) + ">"; });
  m.def("parse_config", &parse_config, py::arg("json_text"));
  m.def("load_config", &load_config, py::arg("path"));

  // spherical harmonics and the array
  m.def(
      "sph_harmonic", [](int n, int mm, double theta, double phi) { return sph_harmonic({n, mm}, {theta, phi}); },
      py::arg("n"), py::arg("m"), py::arg("theta"), py::arg("phi"));
  m.def("wigner3j", &wigner3j, py::arg("j1"), py::arg("j2"), py::arg("j3"), py::arg("m1"), py::arg("m2"),
        py::arg("m3"));
  m.def(
      "check_grid", [](int n_max) { return check_grid(default_array({0, 0, 0}), n_max); }, py::arg("n_max") = 1,
      "Quadrature residual of the shipped 9-microphone grid.");
  m.def("array_directions", [] {
    std::vector<std::pair<double, double>> out;
    for (const auto& d : default_array({0, 0, 0}).mic_directions) out.emplace_back(d.theta, d.phi);
    return out;
  });

  // signals
  m.def(
      "simulate",
      [](const ExperimentConfig& cfg, int trial, std::optional<int> sources, std::optional<double> snr_db) {
        const int l = sources.value_or(cfg.num_sources);
        const auto ut = static_cast<std::uint64_t>(trial), ul = static_cast<std::uint64_t>(l);
        const auto scene = sample_scene(cfg, l, cfg.source_distance, derive_seed(cfg.seed, "eval-scene", ut, ul));
        const auto mics = render_scene(cfg, scene.sources, snr_db.value_or(cfg.snr_db),
                                       derive_seed(cfg.seed, "eval-noise", ut, ul));
        std::vector<std::pair<double, double>> truths;
        for (const auto& d : scene.truths) truths.emplace_back(d.theta_deg(), d.phi_deg());
        return py::make_tuple(to_numpy(mics), truths);
      },
      py::arg("config"), py::arg("trial") = 0, py::arg("sources") = py::none(), py::arg("snr_db") = py::none(),
      "Renders one evaluation scene; returns (signals [channels, samples], [(theta_deg, phi_deg), ...]).");
  m.def(
      "stft",
      [](const RealArray& x) {
        if (x.ndim() != 1) throw ShapeError("expected a 1-D signal");
        const std::vector<double> s(x.data(), x.data() + x.size());
        return to_numpy(stft_forward(s, STFTSpec{}).channels.at(0));
      },
      py::arg("signal"), "Hann 256 / hop 128 STFT at 16 kHz; returns [129 bins, frames].");
  m.def(
      "decompose",
      [](const ComplexArray& spectra, double k, int n_max) {
        const std::vector<Complex> p(spectra.data(), spectra.data() + spectra.size());
        return decompose(p, k, default_array({0, 0, 0}), n_max).alpha;
      },
      py::arg("mic_spectra"), py::arg("k"), py::arg("n_max") = 1);
  m.def(
      "analytic_coherence",
      [](double theta, double phi, int n_max) {
        return to_numpy(analytic_coherence({AnalyticSource{1.0, 1.0, Direction{theta, phi}, {}}}, n_max).c);
      },
      py::arg("theta"), py::arg("phi"), py::arg("n_max") = 1);
  m.def(
      "extract_features",
      [](const ExperimentConfig& cfg, const RealArray& signals) {
        return features_to_dict(scene_features(cfg, from_numpy(signals, cfg.features.stft.fs)),
                                num_modes(cfg.features.n_max));
      },
      py::arg("config"), py::arg("signals"), "Energy-filtered modal coherence features of a multichannel signal.");

  // model
  py::class_<Model>(m, "Model")
      .def_property_readonly("num_parameters", &Model::num_parameters)
      .def_readonly("input_scale", &Model::input_scale)
      .def_readonly("fingerprint", &Model::fingerprint)
      .def(
          "predict",
          [](const Model& model, const RealArray& features) {
            const auto n = features.shape(0);
            const auto width = features.size() / std::max<py::ssize_t>(n, 1);
            RowMatrix x = Eigen::Map<const RowMatrix>(features.data(), n, width);
            const auto scores = forward_batch(model, x);
            py::array_t<double> pt({n, static_cast<py::ssize_t>(model.shape().classes_theta)});
            py::array_t<double> pp({n, static_cast<py::ssize_t>(model.shape().classes_phi)});
            for (py::ssize_t i = 0; i < n; ++i) {
              std::copy(scores[i].p_theta.begin(), scores[i].p_theta.end(), pt.mutable_data(i, 0));
              std::copy(scores[i].p_phi.begin(), scores[i].p_phi.end(), pp.mutable_data(i, 0));
            }
            return py::make_tuple(pt, pp);
          },
          py::arg("features"), "Returns (p_theta [N, I], p_phi [N, J]).")
      .def("save", [](const Model& model, const std::string& path) { save_model(model, path); });
  m.def("load_model", [](const std::string& path) { return load_model(path); }, py::arg("path"));
  m.def(
      "train",
      [](const ExperimentConfig& cfg) {
        TrainingOutput out;
        {
          py::gil_scoped_release release;
          out = run_training(cfg);
        }
        return py::make_tuple(std::move(out.model), log_to_list(out.log));
      },
      py::arg("config"), "Builds the single-source dataset and trains; returns (model, epoch log).");
  m.def(
      "evaluate",
      [](const ExperimentConfig& cfg, const Model& model, std::optional<double> snr_db, std::optional<int> sources,
         std::optional<double> distance, bool allow_mismatch) {
        ExperimentReport rep;
        {
          py::gil_scoped_release release;
          rep = run_evaluation(cfg, model, {snr_db, sources, distance}, allow_mismatch);
        }
        return report_to_dict(rep);
      },
      py::arg("config"), py::arg("model"), py::arg("snr_db") = py::none(), py::arg("sources") = py::none(),
      py::arg("distance") = py::none(), py::arg("allow_mismatch") = false);

  // metrics
  m.def(
      "angular_error",
      [](double t1, double p1, double t2, double p2) {
        return angular_error(Direction::from_degrees(t1, p1), Direction::from_degrees(t2, p2));
      },
      py::arg("theta1_deg"), py::arg("phi1_deg"), py::arg("theta2_deg"), py::arg("phi2_deg"));
  m.def(
      "optimal_assignment", [](const std::vector<std::vector<double>>& err) { return optimal_assignment(err); },
      py::arg("errors"), "Estimate index per truth for an [L, L] error matrix.");
  m.def(
      "eta",
      [](const std::vector<std::vector<double>>& errors, double delta_omega) {
        std::vector<TrialRecord> recs;
        for (const auto& e : errors) {
          TrialRecord r;
          r.truths.resize(e.size());
          r.estimates.resize(e.size());
          r.errors = e;
          recs.push_back(std::move(r));
        }
        return py::make_tuple(eta_acc(recs), eta_adj(recs, delta_omega));
      },
      py::arg("errors"), py::arg("delta_omega"), "Returns (eta_acc, eta_adj) in percent from per-trial errors.");
  m.def("adjacent_separation", [](double theta_deg, double phi_step) {
    return adjacent_separation(ClassGrids::azimuth_grid({theta_deg}, phi_step), theta_deg);
  });
}
