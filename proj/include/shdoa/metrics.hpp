#pragma once

#include <span>
#include <string>
#include <vector>

#include "shdoa/estimator.hpp"
#include "shdoa/sph_math.hpp"

namespace shdoa {

/// Errors at or below this many degrees count as exact matches.
inline constexpr double kExactMatchDeg = 1e-9;

/// Great-circle angle between two directions, degrees in [0, 180].
double angular_error(const Direction& a, const Direction& b);

/// perm[l] is the estimate paired with truth l. Maximizes the number of exact
/// matches, then minimizes the summed error; first permutation in
/// lexicographic order wins remaining ties.
std::vector<int> optimal_assignment(std::span<const Direction> truths, std::span<const Direction> estimates);

/// Same objective on a square error matrix err[truth][estimate] (degrees).
std::vector<int> optimal_assignment(const std::vector<std::vector<double>>& err);

struct TrialRecord {
  std::vector<Direction> truths;
  std::vector<Direction> estimates;  ///< reordered to match truths
  std::vector<double> errors;        ///< degrees

  /// Pairs estimates with truths via optimal_assignment.
  [[nodiscard]] static TrialRecord assign(std::span<const Direction> truths, std::span<const Direction> estimates);
};

/// Percentage of exact (0 degree) errors over all sources of all trials.
double eta_acc(std::span<const TrialRecord> records);

/// Percentage of errors <= delta_omega over all sources of all trials.
double eta_adj(std::span<const TrialRecord> records, double delta_omega_deg);

/// Angle between two neighbouring azimuth classes on the plane theta.
double adjacent_separation(const ClassGrids& grids, double plane_theta_deg);

struct MetricRow {
  std::string experiment_id;
  std::string room;
  double snr_db = 0.0;
  int num_sources = 1;
  double eta_acc = 0.0;
  double eta_adj = 0.0;
  double mean_support = 0.0;
};

/// Header "experiment_id,room,snr_db,L,eta_acc,eta_adj,mean_support".
void write_metric_report(const std::string& path, std::span<const MetricRow> rows);

}  // namespace shdoa
