#pragma once

// Multi-source DOA estimation from per-bin class scores: confidence
// filtering, the joint (theta, phi) prediction multiset, and either the L
// largest histogram peaks or k-means on the unit sphere.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shdoa/nn.hpp"
#include "shdoa/sph_math.hpp"

namespace shdoa {

/// Elevation and azimuth class centers in degrees.
struct ClassGrids {
  std::vector<double> thetas;
  std::vector<double> phis;

  [[nodiscard]] int num_theta() const { return static_cast<int>(thetas.size()); }
  [[nodiscard]] int num_phi() const { return static_cast<int>(phis.size()); }
  [[nodiscard]] int num_cells() const { return num_theta() * num_phi(); }
  [[nodiscard]] Direction direction(int theta_idx, int phi_idx) const;
  /// Throws ConfigError unless both grids are non-empty, strictly increasing and in range.
  void validate() const;

  /// Azimuths 0, step, 2 step, ... < 360 on the given elevation planes.
  [[nodiscard]] static ClassGrids azimuth_grid(std::vector<double> thetas_deg, double step_deg);
  /// Elevations lo, lo + step, ..., hi combined with a uniform azimuth grid.
  [[nodiscard]] static ClassGrids joint_grid(double theta_lo, double theta_hi, double theta_step,
                                             double phi_step);
};

struct GridCell {
  int theta_idx = 0;
  int phi_idx = 0;

  friend bool operator==(const GridCell&, const GridCell&) = default;
};

/// Network scores of one TF bin.
struct ScoredBin {
  int bin = 0;
  int frame = 0;
  PredictionScores scores;
};

/// Bins whose best elevation score and best azimuth score both reach p_min.
std::vector<ScoredBin> confidence_filter(std::span<const ScoredBin> bins, double p_min);

/// Dense I x J count table of jointly packed argmax predictions.
struct PredictionMultiset {
  int num_theta = 0;
  int num_phi = 0;
  std::vector<long> counts;  ///< index theta_idx * num_phi + phi_idx

  [[nodiscard]] long count(int theta_idx, int phi_idx) const {
    return counts[static_cast<std::size_t>(theta_idx * num_phi + phi_idx)];
  }
  [[nodiscard]] long total() const;
  [[nodiscard]] int distinct() const;
};

/// Per bin, (argmax over thetas, argmax over phis); ties go to the lowest index.
PredictionMultiset prediction_multiset(std::span<const ScoredBin> bins, const ClassGrids& grids);

struct Estimate {
  GridCell cell;
  double theta_deg = 0.0;
  double phi_deg = 0.0;
  long support = 0;  ///< multiset mass behind this estimate
};

/// Estimates ordered by decreasing support, ties by lower cell index.
struct DOAEstimate {
  std::vector<Estimate> estimates;

  [[nodiscard]] std::vector<Direction> directions() const;
};

/// The L most frequent cells; equal counts go to the lower linear cell index.
DOAEstimate peaks_histogram(const PredictionMultiset& ms, int num_sources, const ClassGrids& grids);

inline constexpr int kKmeansRestarts = 20;

/// k-means (k = L) on unit vectors weighted by multiplicity, k-means++ seeding,
/// best inertia over restarts; each cluster reports its most frequent cell.
DOAEstimate kmeans_sphere(const PredictionMultiset& ms, int num_sources, const ClassGrids& grids,
                          std::uint64_t seed, int restarts = kKmeansRestarts);

enum class PeakMode { histogram, cluster };

/// Confidence filter, multiset, then histogram peaks for L = 1 or the chosen
/// mode otherwise. When ms_out is given it receives the multiset.
DOAEstimate estimate_doas(std::span<const ScoredBin> bins, const ClassGrids& grids, int num_sources,
                          double p_min, PeakMode mode, std::uint64_t seed,
                          PredictionMultiset* ms_out = nullptr);

/// Rows "theta_class,phi_class,count" for every non-empty cell.
void write_multiset_csv(const std::string& path, const PredictionMultiset& ms);

}  // namespace shdoa
