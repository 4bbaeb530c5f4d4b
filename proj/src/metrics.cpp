#include "shdoa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "shdoa/error.hpp"

namespace shdoa {

double angular_error(const Direction& a, const Direction& b) {
  if (a.theta == b.theta && a.phi == b.phi) return 0.0;
  const double c = std::sin(a.theta) * std::sin(b.theta) * std::cos(a.phi - b.phi) +
                   std::cos(a.theta) * std::cos(b.theta);
  return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / kPi;
}

std::vector<int> optimal_assignment(const std::vector<std::vector<double>>& err) {
  const int n = static_cast<int>(err.size());
  if (n > 8) throw DomainError("exhaustive assignment supports at most 8 sources");
  for (const auto& row : err)
    if (static_cast<int>(row.size()) != n) throw ShapeError("error matrix must be square");
  std::vector<int> perm(err.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  int best_exact = -1;
  double best_total = 0.0;
  do {
    int exact = 0;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      exact += err[i][perm[i]] <= kExactMatchDeg;
      total += err[i][perm[i]];
    }
    if (exact > best_exact || (exact == best_exact && total < best_total)) {
      best_exact = exact;
      best_total = total;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::vector<int> optimal_assignment(std::span<const Direction> truths, std::span<const Direction> estimates) {
  if (truths.size() != estimates.size()) throw ShapeError("truths and estimates differ in length");
  std::vector<std::vector<double>> err(truths.size(), std::vector<double>(truths.size()));
  for (std::size_t i = 0; i < truths.size(); ++i)
    for (std::size_t j = 0; j < truths.size(); ++j) err[i][j] = angular_error(truths[i], estimates[j]);
  return optimal_assignment(err);
}

TrialRecord TrialRecord::assign(std::span<const Direction> truths, std::span<const Direction> estimates) {
  const auto perm = optimal_assignment(truths, estimates);
  TrialRecord r;
  r.truths.assign(truths.begin(), truths.end());
  for (std::size_t l = 0; l < perm.size(); ++l) {
    r.estimates.push_back(estimates[static_cast<std::size_t>(perm[l])]);
    r.errors.push_back(angular_error(truths[l], r.estimates.back()));
  }
  return r;
}

namespace {

double fraction_within(std::span<const TrialRecord> records, double limit) {
  long hits = 0;
  long total = 0;
  for (const auto& r : records) {
    if (r.errors.size() != r.truths.size()) throw ShapeError("trial record lengths differ");
    for (double e : r.errors) {
      hits += e <= limit;
      ++total;
    }
  }
  if (total == 0) throw InsufficientDataError("no errors to score");
  return 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

double eta_acc(std::span<const TrialRecord> records) { return fraction_within(records, kExactMatchDeg); }

double eta_adj(std::span<const TrialRecord> records, double delta_omega_deg) {
  if (!(delta_omega_deg >= 0.0)) throw DomainError("delta_omega must be non-negative");
  return fraction_within(records, std::max(delta_omega_deg, kExactMatchDeg));
}

double adjacent_separation(const ClassGrids& grids, double plane_theta_deg) {
  if (grids.num_phi() < 2) throw InsufficientDataError("adjacent separation needs two azimuth classes");
  return angular_error(Direction::from_degrees(plane_theta_deg, grids.phis[0]),
                       Direction::from_degrees(plane_theta_deg, grids.phis[1]));
}

void write_metric_report(const std::string& path, std::span<const MetricRow> rows) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "experiment_id,room,snr_db,L,eta_acc,eta_adj,mean_support\n" << std::setprecision(10);
  for (const auto& r : rows)
    f << r.experiment_id << ',' << r.room << ',' << r.snr_db << ',' << r.num_sources << ',' << r.eta_acc << ','
      << r.eta_adj << ',' << r.mean_support << '\n';
}

}  // namespace shdoa
