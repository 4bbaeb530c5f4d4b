#include "shdoa/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>

#include "shdoa/error.hpp"

namespace shdoa {

namespace {

constexpr char kDatasetMagic[8] = {'S', 'H', 'D', 'O', 'A', 'D', 'S', 'T'};
constexpr std::uint32_t kDatasetVersion = 1;

template <typename T>
void put(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw IoError("dataset file truncated");
  return v;
}

}  // namespace

CoherenceMatrix ema_coherence(const CoherenceMatrix& prev, const HarmonicVector& alpha, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("EMA factor beta must lie in [0, 1]");
  const auto modes = static_cast<Eigen::Index>(alpha.alpha.size());
  if (prev.c.rows() != modes || prev.c.cols() != modes)
    throw ShapeError("coherence matrix and alpha vector sizes differ");
  const Eigen::Map<const Eigen::VectorXcd> a(alpha.alpha.data(), modes);
  CoherenceMatrix out;
  out.c = (1.0 - beta) * (a * a.adjoint()) + beta * prev.c;
  out.bin = prev.bin;
  out.frame = alpha.frame;
  return out;
}

FeatureTensor build_feature(const CoherenceMatrix& c) {
  const int modes = c.modes();
  if (c.c.cols() != modes) throw ShapeError("coherence matrix must be square");
  const double scale = std::max(1.0, c.c.cwiseAbs().maxCoeff());
  if ((c.c - c.c.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw DomainError("coherence matrix is not Hermitian");
  FeatureTensor t;
  t.modes = modes;
  t.values.resize(static_cast<std::size_t>(modes * modes * 2));
  for (int i = 0; i < modes; ++i) {
    for (int j = 0; j < modes; ++j) {
      t.values[(i * modes + j) * 2] = c.c(i, j).real();
      t.values[(i * modes + j) * 2 + 1] = c.c(i, j).imag();
    }
  }
  return t;
}

double coherence_energy(const Eigen::MatrixXcd& c) { return c.cwiseAbs().mean(); }

double percentile_threshold(std::span<const double> energies, double percentile_k) {
  if (energies.empty()) throw InsufficientDataError("no bins to filter");
  if (!(percentile_k >= 0.0 && percentile_k < 100.0))
    throw DomainError("percentile must lie in [0, 100)");
  std::vector<double> sorted(energies.begin(), energies.end());
  const auto n = sorted.size();
  auto rank = static_cast<std::size_t>(std::floor(percentile_k * static_cast<double>(n) / 100.0));
  rank = std::min(rank, n - 1);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank), sorted.end());
  return sorted[rank];
}

std::vector<TFBinFeature> energy_filter(const std::vector<TFBinFeature>& bins, double percentile_k) {
  std::vector<double> energies;
  energies.reserve(bins.size());
  for (const auto& b : bins) energies.push_back(b.bin_energy);
  const double threshold = percentile_threshold(energies, percentile_k);
  std::vector<TFBinFeature> out;
  for (const auto& b : bins)
    if (b.bin_energy >= threshold) out.push_back(b);
  return out;
}

std::vector<TFBinFeature> extract_features(const HarmonicSpectrogram& coeffs, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("EMA factor beta must lie in [0, 1]");
  const int modes = num_modes(coeffs.n_max);
  std::vector<TFBinFeature> out;
  out.reserve(coeffs.bins.size() * static_cast<std::size_t>(coeffs.num_frames));
  for (std::size_t b = 0; b < coeffs.bins.size(); ++b) {
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(modes, modes);
    for (int t = 0; t < coeffs.num_frames; ++t) {
      const Eigen::VectorXcd a = coeffs.alpha[b].row(t).transpose();
      c = (1.0 - beta) * (a * a.adjoint()) + beta * c;
      TFBinFeature f;
      f.bin = coeffs.bins[b];
      f.frame = t;
      f.bin_energy = coherence_energy(c);
      f.feature.modes = modes;
      f.feature.values.resize(static_cast<std::size_t>(modes * modes * 2));
      for (int i = 0; i < modes; ++i) {
        for (int j = 0; j < modes; ++j) {
          f.feature.values[(i * modes + j) * 2] = c(i, j).real();
          f.feature.values[(i * modes + j) * 2 + 1] = c(i, j).imag();
        }
      }
      out.push_back(std::move(f));
    }
  }
  return out;
}

void normalize_feature(FeatureTensor& t, FeatureNorm norm) {
  if (norm == FeatureNorm::none) return;
  double trace = 0.0;
  for (int i = 0; i < t.modes; ++i) trace += t.values[static_cast<std::size_t>((i * t.modes + i) * 2)];
  if (!(trace > 0.0)) return;
  for (auto& v : t.values) v /= trace;
}

CoherenceMatrix analytic_coherence(const std::vector<AnalyticSource>& sources, int n_max) {
  const int modes = num_modes(n_max);
  CoherenceMatrix out = CoherenceMatrix::zero(modes);
  for (const auto& s : sources) {
    if (s.psd < 0.0 || s.direct_gain_sq < 0.0)
      throw DomainError("source PSD and direct gain must be non-negative");
    for (int a = 0; a < modes; ++a) {
      const auto ia = ModeIndex::from_linear(a);
      for (int b = 0; b < modes; ++b) {
        const auto ib = ModeIndex::from_linear(b);
        Complex term = s.direct_gain_sq * upsilon(ia, ib, s.dir);
        for (std::size_t g = 0; g < s.gamma.size(); ++g) {
          if (s.gamma[g] == Complex{}) continue;
          const auto vu = ModeIndex::from_linear(static_cast<int>(g));
          term += s.gamma[g] * psi(ia, ib, vu.n, vu.m);
        }
        out.c(a, b) += s.psd * term;
      }
    }
  }
  return out;
}

void write_dataset(const std::string& path, const FeatureDataset& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  const auto values = static_cast<std::size_t>(data.modes * data.modes * 2);
  f.write(kDatasetMagic, 8);
  put<std::uint32_t>(f, kDatasetVersion);
  put<std::uint32_t>(f, static_cast<std::uint32_t>(data.modes));
  put<std::uint32_t>(f, 2u);
  put<std::uint32_t>(f, static_cast<std::uint32_t>(data.classes_theta));
  put<std::uint32_t>(f, static_cast<std::uint32_t>(data.classes_phi));
  put<std::uint64_t>(f, data.records.size());
  for (const auto& r : data.records) {
    if (r.feature.values.size() != values) throw ShapeError("record tensor size differs from header");
    put<std::uint16_t>(f, static_cast<std::uint16_t>(r.bin));
    put<std::int16_t>(f, static_cast<std::int16_t>(r.label_theta.value_or(-1)));
    put<std::int16_t>(f, static_cast<std::int16_t>(r.label_phi.value_or(-1)));
    for (double v : r.feature.values) put<float>(f, static_cast<float>(v));
  }
  if (!f) throw IoError("failed writing " + path);
}

FeatureDataset read_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kDatasetMagic, 8) != 0) throw IoError("not a feature dataset: " + path);
  if (get<std::uint32_t>(f) != kDatasetVersion) throw IoError("unsupported dataset version");
  FeatureDataset d;
  d.modes = static_cast<int>(get<std::uint32_t>(f));
  if (get<std::uint32_t>(f) != 2u) throw IoError("dataset channel count must be 2");
  d.classes_theta = static_cast<int>(get<std::uint32_t>(f));
  d.classes_phi = static_cast<int>(get<std::uint32_t>(f));
  const auto count = get<std::uint64_t>(f);
  const auto values = static_cast<std::size_t>(d.modes * d.modes * 2);
  d.records.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t i = 0; i < count; ++i) {
    TFBinFeature r;
    r.bin = get<std::uint16_t>(f);
    const auto lt = get<std::int16_t>(f);
    const auto lp = get<std::int16_t>(f);
    if (lt >= 0) r.label_theta = lt;
    if (lp >= 0) r.label_phi = lp;
    r.feature.modes = d.modes;
    r.feature.values.resize(values);
    for (auto& v : r.feature.values) v = get<float>(f);
    d.records.push_back(std::move(r));
  }
  return d;
}

void write_dataset_csv(const std::string& path, const FeatureDataset& data) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "bin,label_theta,label_phi";
  const int n = data.modes * data.modes * 2;
  for (int v = 0; v < n; ++v) f << ",v" << v;
  f << '\n' << std::setprecision(9);
  for (const auto& r : data.records) {
    f << r.bin << ',' << r.label_theta.value_or(-1) << ',' << r.label_phi.value_or(-1);
    for (double v : r.feature.values) f << ',' << v;
    f << '\n';
  }
}

}  // namespace shdoa
