#include "shdoa/estimator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "shdoa/error.hpp"

namespace shdoa {

namespace {

using Vec = std::array<double, 3>;

double dist2(const Vec& a, const Vec& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

// Picks an index with probability proportional to mass; falls back to the
// first positive entry when rounding leaves the draw past the end.
std::size_t draw(const std::vector<double>& mass, std::mt19937_64& rng) {
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  const double r = std::uniform_real_distribution<double>(0.0, total)(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    acc += mass[i];
    if (r < acc) return i;
  }
  for (std::size_t i = mass.size(); i-- > 0;)
    if (mass[i] > 0.0) return i;
  return 0;
}

struct Clustering {
  std::vector<int> label;
  double inertia = std::numeric_limits<double>::infinity();
};

Clustering lloyd(const std::vector<Vec>& pts, const std::vector<double>& w, int k, std::mt19937_64& rng) {
  const std::size_t n = pts.size();
  std::vector<Vec> centers;
  centers.push_back(pts[draw(w, rng)]);
  std::vector<double> d2(n);
  while (static_cast<int>(centers.size()) < k) {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, dist2(pts[i], c));
      d2[i] = w[i] * best;
    }
    if (std::accumulate(d2.begin(), d2.end(), 0.0) <= 0.0) break;
    centers.push_back(pts[draw(d2, rng)]);
  }
  // Distinct cells can still share a unit vector (several azimuths at a
  // pole); duplicate centers are then unavoidable.
  while (static_cast<int>(centers.size()) < k) centers.push_back(pts[centers.size() % n]);

  Clustering out;
  out.label.assign(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = dist2(pts[i], centers[0]);
      for (int c = 1; c < k; ++c) {
        const double d = dist2(pts[i], centers[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (out.label[i] != best) {
        out.label[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<Vec> sum(static_cast<std::size_t>(k), Vec{0.0, 0.0, 0.0});
    std::vector<double> mass(static_cast<std::size_t>(k), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(out.label[i]);
      for (int a = 0; a < 3; ++a) sum[c][a] += w[i] * pts[i][a];
      mass[c] += w[i];
    }
    for (int c = 0; c < k; ++c) {
      if (mass[c] > 0.0) {
        for (int a = 0; a < 3; ++a) centers[c][a] = sum[c][a] / mass[c];
        continue;
      }
      // Empty cluster: move it onto the point with the largest weighted error.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = w[i] * dist2(pts[i], centers[static_cast<std::size_t>(out.label[i])]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      centers[c] = pts[far];
      out.label[far] = c;
    }
  }
  out.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) out.inertia += w[i] * dist2(pts[i], centers[static_cast<std::size_t>(out.label[i])]);
  return out;
}

void sort_estimates(DOAEstimate& est, const ClassGrids& grids) {
  std::sort(est.estimates.begin(), est.estimates.end(), [&](const Estimate& a, const Estimate& b) {
    if (a.support != b.support) return a.support > b.support;
    return a.cell.theta_idx * grids.num_phi() + a.cell.phi_idx < b.cell.theta_idx * grids.num_phi() + b.cell.phi_idx;
  });
}

Estimate make_estimate(int cell, long support, const ClassGrids& grids) {
  Estimate e;
  e.cell = GridCell{cell / grids.num_phi(), cell % grids.num_phi()};
  e.theta_deg = grids.thetas[static_cast<std::size_t>(e.cell.theta_idx)];
  e.phi_deg = grids.phis[static_cast<std::size_t>(e.cell.phi_idx)];
  e.support = support;
  return e;
}

void check_multiset(const PredictionMultiset& ms, int num_sources, const ClassGrids& grids) {
  if (ms.num_theta != grids.num_theta() || ms.num_phi != grids.num_phi())
    throw ShapeError("multiset and class grids differ in size");
  if (num_sources < 1) throw DomainError("number of sources must be positive");
  if (ms.distinct() < num_sources)
    throw InsufficientDataError("multiset has " + std::to_string(ms.distinct()) + " distinct cells, need " +
                                std::to_string(num_sources));
}

}  // namespace

Direction ClassGrids::direction(int theta_idx, int phi_idx) const {
  return Direction::from_degrees(thetas.at(static_cast<std::size_t>(theta_idx)),
                                 phis.at(static_cast<std::size_t>(phi_idx)));
}

void ClassGrids::validate() const {
  if (thetas.empty() || phis.empty()) throw ConfigError("class grids must not be empty");
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    if (thetas[i] < 0.0 || thetas[i] > 180.0) throw ConfigError("elevation class outside [0, 180]");
    if (i > 0 && !(thetas[i] > thetas[i - 1])) throw ConfigError("elevation classes must be strictly increasing");
  }
  for (std::size_t j = 0; j < phis.size(); ++j) {
    if (phis[j] < 0.0 || phis[j] >= 360.0) throw ConfigError("azimuth class outside [0, 360)");
    if (j > 0 && !(phis[j] > phis[j - 1])) throw ConfigError("azimuth classes must be strictly increasing");
  }
}

ClassGrids ClassGrids::azimuth_grid(std::vector<double> thetas_deg, double step_deg) {
  if (!(step_deg > 0.0)) throw ConfigError("azimuth step must be positive");
  ClassGrids g;
  g.thetas = std::move(thetas_deg);
  for (int j = 0; j * step_deg < 360.0 - 1e-9; ++j) g.phis.push_back(j * step_deg);
  g.validate();
  return g;
}

ClassGrids ClassGrids::joint_grid(double theta_lo, double theta_hi, double theta_step, double phi_step) {
  if (!(theta_step > 0.0) || theta_hi < theta_lo) throw ConfigError("invalid elevation range");
  std::vector<double> thetas;
  for (int i = 0; theta_lo + i * theta_step <= theta_hi + 1e-9; ++i) thetas.push_back(theta_lo + i * theta_step);
  return azimuth_grid(std::move(thetas), phi_step);
}

std::vector<ScoredBin> confidence_filter(std::span<const ScoredBin> bins, double p_min) {
  if (!(p_min >= 0.0 && p_min <= 1.0)) throw DomainError("p_min must lie in [0, 1]");
  std::vector<ScoredBin> out;
  for (const auto& b : bins) {
    const auto& s = b.scores;
    if (s.p_theta.empty() || s.p_phi.empty()) throw ShapeError("scored bin without scores");
    if (*std::max_element(s.p_theta.begin(), s.p_theta.end()) >= p_min &&
        *std::max_element(s.p_phi.begin(), s.p_phi.end()) >= p_min)
      out.push_back(b);
  }
  return out;
}

long PredictionMultiset::total() const { return std::accumulate(counts.begin(), counts.end(), 0L); }

int PredictionMultiset::distinct() const {
  return static_cast<int>(std::count_if(counts.begin(), counts.end(), [](long c) { return c > 0; }));
}

PredictionMultiset prediction_multiset(std::span<const ScoredBin> bins, const ClassGrids& grids) {
  if (bins.empty()) throw InsufficientDataError("no bins survived the confidence filter");
  PredictionMultiset ms;
  ms.num_theta = grids.num_theta();
  ms.num_phi = grids.num_phi();
  ms.counts.assign(static_cast<std::size_t>(grids.num_cells()), 0);
  for (const auto& b : bins) {
    if (static_cast<int>(b.scores.p_theta.size()) != ms.num_theta ||
        static_cast<int>(b.scores.p_phi.size()) != ms.num_phi)
      throw ShapeError("score vector length differs from class grid");
    ++ms.counts[static_cast<std::size_t>(b.scores.argmax_theta() * ms.num_phi + b.scores.argmax_phi())];
  }
  return ms;
}

std::vector<Direction> DOAEstimate::directions() const {
  std::vector<Direction> out;
  out.reserve(estimates.size());
  for (const auto& e : estimates) out.push_back(Direction::from_degrees(e.theta_deg, e.phi_deg));
  return out;
}

DOAEstimate peaks_histogram(const PredictionMultiset& ms, int num_sources, const ClassGrids& grids) {
  check_multiset(ms, num_sources, grids);
  std::vector<int> cells(ms.counts.size());
  std::iota(cells.begin(), cells.end(), 0);
  std::stable_sort(cells.begin(), cells.end(), [&](int a, int b) { return ms.counts[a] > ms.counts[b]; });
  DOAEstimate est;
  for (int l = 0; l < num_sources; ++l) est.estimates.push_back(make_estimate(cells[l], ms.counts[cells[l]], grids));
  return est;
}

DOAEstimate kmeans_sphere(const PredictionMultiset& ms, int num_sources, const ClassGrids& grids,
                          std::uint64_t seed, int restarts) {
  check_multiset(ms, num_sources, grids);
  if (restarts < 1) throw DomainError("k-means needs at least one restart");
  std::vector<int> cells;
  std::vector<Vec> pts;
  std::vector<double> w;
  for (int c = 0; c < static_cast<int>(ms.counts.size()); ++c) {
    if (ms.counts[c] == 0) continue;
    cells.push_back(c);
    pts.push_back(grids.direction(c / ms.num_phi, c % ms.num_phi).unit_vector());
    w.push_back(static_cast<double>(ms.counts[c]));
  }
  Clustering best;
  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(r));
    auto c = lloyd(pts, w, num_sources, rng);
    if (c.inertia < best.inertia) best = std::move(c);
  }
  DOAEstimate est;
  for (int k = 0; k < num_sources; ++k) {
    int peak = -1;
    long mass = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (best.label[i] != k) continue;
      mass += ms.counts[cells[i]];
      if (peak < 0 || ms.counts[cells[i]] > ms.counts[peak]) peak = cells[i];
    }
    if (peak >= 0) est.estimates.push_back(make_estimate(peak, mass, grids));
  }
  sort_estimates(est, grids);
  return est;
}

DOAEstimate estimate_doas(std::span<const ScoredBin> bins, const ClassGrids& grids, int num_sources, double p_min,
                          PeakMode mode, std::uint64_t seed, PredictionMultiset* ms_out) {
  const auto kept = confidence_filter(bins, p_min);
  if (kept.empty())
    throw InsufficientDataError("all " + std::to_string(bins.size()) + " bins fell below p_min = " +
                                std::to_string(p_min));
  auto ms = prediction_multiset(kept, grids);
  if (ms_out) *ms_out = ms;
  if (num_sources == 1 || mode == PeakMode::histogram) return peaks_histogram(ms, num_sources, grids);
  return kmeans_sphere(ms, num_sources, grids, seed);
}

void write_multiset_csv(const std::string& path, const PredictionMultiset& ms) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "theta_class,phi_class,count\n";
  for (int i = 0; i < ms.num_theta; ++i)
    for (int j = 0; j < ms.num_phi; ++j)
      if (ms.count(i, j) > 0) f << i << ',' << j << ',' << ms.count(i, j) << '\n';
}

}  // namespace shdoa
