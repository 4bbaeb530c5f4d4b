#include <doctest.h>

#include <algorithm>
#include <random>

#include "shdoa/error.hpp"
#include "shdoa/estimator.hpp"

using namespace shdoa;

namespace {

ScoredBin peaked(int num_theta, int num_phi, int ti, int pj, double p = 0.9) {
  ScoredBin b;
  b.scores.p_theta.assign(static_cast<std::size_t>(num_theta), 0.1);
  b.scores.p_phi.assign(static_cast<std::size_t>(num_phi), 0.1);
  b.scores.p_theta[static_cast<std::size_t>(ti)] = p;
  b.scores.p_phi[static_cast<std::size_t>(pj)] = p;
  return b;
}

PredictionMultiset multiset(const ClassGrids& g, const std::vector<std::pair<int, long>>& cells) {
  PredictionMultiset ms;
  ms.num_theta = g.num_theta();
  ms.num_phi = g.num_phi();
  ms.counts.assign(static_cast<std::size_t>(g.num_cells()), 0);
  for (const auto& [c, n] : cells) ms.counts[static_cast<std::size_t>(c)] = n;
  return ms;
}

std::vector<int> cells_of(const DOAEstimate& e, const ClassGrids& g) {
  std::vector<int> out;
  for (const auto& x : e.estimates) out.push_back(x.cell.theta_idx * g.num_phi() + x.cell.phi_idx);
  std::sort(out.begin(), out.end());
  return out;
}

// Best 2-partition of weighted points by brute force over all label masks.
std::vector<int> brute_two_clusters(const PredictionMultiset& ms, const ClassGrids& g) {
  std::vector<int> cells;
  for (int c = 0; c < g.num_cells(); ++c)
    if (ms.counts[static_cast<std::size_t>(c)] > 0) cells.push_back(c);
  double best = 1e300;
  std::vector<int> result;
  const int n = static_cast<int>(cells.size());
  for (int mask = 1; mask < (1 << n) - 1; ++mask) {
    double cost = 0.0;
    std::vector<int> peaks;
    for (int side = 0; side < 2; ++side) {
      std::array<double, 3> mean{0, 0, 0};
      double w = 0.0;
      int peak = -1;
      for (int i = 0; i < n; ++i) {
        if (((mask >> i) & 1) != side) continue;
        const auto u = g.direction(cells[i] / g.num_phi(), cells[i] % g.num_phi()).unit_vector();
        const double c = static_cast<double>(ms.counts[cells[i]]);
        for (int k = 0; k < 3; ++k) mean[k] += c * u[k];
        w += c;
        if (peak < 0 || ms.counts[cells[i]] > ms.counts[peak]) peak = cells[i];
      }
      for (auto& m : mean) m /= w;
      for (int i = 0; i < n; ++i) {
        if (((mask >> i) & 1) != side) continue;
        const auto u = g.direction(cells[i] / g.num_phi(), cells[i] % g.num_phi()).unit_vector();
        double d = 0.0;
        for (int k = 0; k < 3; ++k) d += (u[k] - mean[k]) * (u[k] - mean[k]);
        cost += static_cast<double>(ms.counts[cells[i]]) * d;
      }
      peaks.push_back(peak);
    }
    if (cost < best) {
      best = cost;
      result = peaks;
    }
  }
  std::sort(result.begin(), result.end());
  return result;
}

}  // namespace

TEST_CASE("class grids") {
  const auto g = ClassGrids::azimuth_grid({45.0}, 10.0);
  CHECK(g.num_phi() == 36);
  CHECK(g.phis.back() == 350.0);
  const auto j = ClassGrids::joint_grid(30.0, 150.0, 20.0, 30.0);
  CHECK(j.num_theta() == 7);
  CHECK(j.num_phi() == 12);
  CHECK(j.num_cells() == 84);
  CHECK_THROWS_AS((ClassGrids{{45.0, 30.0}, {0.0}}.validate()), ConfigError);
  CHECK_THROWS_AS((ClassGrids{{45.0}, {}}.validate()), ConfigError);
}

TEST_CASE("confidence filter") {
  const auto g = ClassGrids::azimuth_grid({45.0}, 90.0);
  std::vector<ScoredBin> bins{peaked(1, 4, 0, 1, 0.9)};
  bins[0].scores.p_phi[1] = 0.8;
  auto weak = peaked(1, 4, 0, 2, 0.9);
  weak.scores.p_phi[2] = 0.3;
  bins.push_back(weak);
  CHECK(confidence_filter(bins, 0.5).size() == 1);
  CHECK(confidence_filter(bins, 0.0).size() == 2);
  std::size_t prev = 2;
  for (double p = 0.0; p <= 1.0; p += 0.05) {
    const auto n = confidence_filter(bins, p).size();
    CHECK(n <= prev);
    prev = n;
  }
}

TEST_CASE("prediction multiset") {
  const auto g = ClassGrids::azimuth_grid({30.0, 50.0, 70.0, 90.0}, 30.0);
  const std::vector<ScoredBin> one{peaked(4, 12, 3, 7)};
  const auto ms = prediction_multiset(one, g);
  CHECK(ms.count(3, 7) == 1);
  CHECK(ms.total() == 1);
  auto tie = peaked(4, 12, 1, 2);
  tie.scores.p_phi[5] = 0.9;
  CHECK(prediction_multiset(std::vector<ScoredBin>{tie}, g).count(1, 2) == 1);
  const std::vector<ScoredBin> many(100, peaked(4, 12, 2, 4));
  CHECK(prediction_multiset(many, g).count(2, 4) == 100);
  CHECK_THROWS_AS(prediction_multiset(std::vector<ScoredBin>{}, g), InsufficientDataError);
}

TEST_CASE("histogram peaks") {
  const auto g = ClassGrids::azimuth_grid({45.0}, 10.0);
  const auto ms = multiset(g, {{3, 50}, {10, 30}, {20, 20}});
  CHECK(cells_of(peaks_histogram(ms, 1, g), g) == std::vector<int>{3});
  CHECK(cells_of(peaks_histogram(ms, 2, g), g) == std::vector<int>{3, 10});
  const auto tie = multiset(g, {{9, 10}, {4, 10}});
  CHECK(cells_of(peaks_histogram(tie, 1, g), g) == std::vector<int>{4});
  CHECK(peaks_histogram(ms, 2, g).estimates[0].support == 50);
  CHECK_THROWS_AS(peaks_histogram(ms, 4, g), InsufficientDataError);
}

TEST_CASE("k-means on the sphere") {
  const auto g = ClassGrids::azimuth_grid({45.0}, 10.0);
  const auto single = multiset(g, {{7, 25}});
  const auto e = kmeans_sphere(single, 1, g, 1);
  CHECK(cells_of(e, g) == std::vector<int>{7});
  CHECK(e.estimates[0].support == 25);

  const auto two = multiset(g, {{5, 60}, {4, 10}, {6, 12}, {20, 40}, {21, 8}});
  CHECK(cells_of(kmeans_sphere(two, 2, g, 3), g) == std::vector<int>{5, 20});
  CHECK(cells_of(kmeans_sphere(two, 2, g, 3), g) == brute_two_clusters(two, g));

  // 355 and 5 degrees fall in one cluster
  const auto fine = ClassGrids::azimuth_grid({45.0}, 5.0);
  const auto seam = multiset(fine, {{71, 30}, {1, 25}, {0, 10}, {36, 30}});
  const auto s = kmeans_sphere(seam, 2, fine, 2);
  CHECK(cells_of(s, fine) == std::vector<int>{36, 71});

  std::mt19937 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> cell(0, 35);
    std::uniform_int_distribution<long> count(1, 50);
    std::vector<std::pair<int, long>> cs;
    for (int i = 0; i < 6; ++i) cs.emplace_back(cell(rng), count(rng));
    const auto ms = multiset(g, cs);
    if (ms.distinct() < 2) continue;
    const auto est = kmeans_sphere(ms, 2, g, 11);
    for (const auto& x : est.estimates) CHECK(ms.count(x.cell.theta_idx, x.cell.phi_idx) > 0);
  }
  CHECK_THROWS_AS(kmeans_sphere(single, 2, g, 1), InsufficientDataError);
}

TEST_CASE("clustering handles a split dominant source") {
  const auto g = ClassGrids::azimuth_grid({45.0}, 10.0);
  const auto ms = multiset(g, {{10, 45}, {11, 40}, {25, 15}});
  CHECK(cells_of(peaks_histogram(ms, 2, g), g) == std::vector<int>{10, 11});
  CHECK(cells_of(kmeans_sphere(ms, 2, g, 1), g) == std::vector<int>{10, 25});
}

TEST_CASE("end-to-end estimation") {
  const auto g = ClassGrids::azimuth_grid({45.0}, 10.0);
  std::vector<ScoredBin> bins;
  for (int i = 0; i < 40; ++i) bins.push_back(peaked(1, 36, 0, 8));
  for (int i = 0; i < 30; ++i) bins.push_back(peaked(1, 36, 0, 27));
  for (int i = 0; i < 10; ++i) bins.push_back(peaked(1, 36, 0, 9, 0.4));
  PredictionMultiset ms;
  const auto e = estimate_doas(bins, g, 2, 0.5, PeakMode::cluster, 1, &ms);
  CHECK(cells_of(e, g) == std::vector<int>{8, 27});
  CHECK(ms.total() == 70);
  auto shuffled = bins;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937(3));
  CHECK(cells_of(estimate_doas(shuffled, g, 2, 0.5, PeakMode::cluster, 1), g) == cells_of(e, g));
  // L = 1 always takes the histogram path
  CHECK(cells_of(estimate_doas(bins, g, 1, 0.5, PeakMode::cluster, 1), g) == std::vector<int>{8});
  CHECK_THROWS_AS(estimate_doas(bins, g, 2, 0.95, PeakMode::cluster, 1), InsufficientDataError);
}
