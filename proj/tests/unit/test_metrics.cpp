#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <filesystem>
#include <numeric>
#include <random>

#include "shdoa/error.hpp"
#include "shdoa/metrics.hpp"

using namespace shdoa;

namespace {

TrialRecord record(std::vector<double> errors) {
  TrialRecord r;
  r.truths.resize(errors.size());
  r.estimates.resize(errors.size());
  r.errors = std::move(errors);
  return r;
}

}  // namespace

TEST_CASE("angular error") {
  const auto a = Direction::from_degrees(45, 40);
  CHECK(angular_error(a, a) == 0.0);
  CHECK(angular_error(Direction::from_degrees(90, 0), Direction::from_degrees(90, 180)) == doctest::Approx(180.0));
  CHECK(angular_error(a, Direction::from_degrees(45, 50)) == doctest::Approx(7.07).epsilon(1e-3));
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> th(0.0, 180.0), ph(0.0, 359.9);
  for (int i = 0; i < 200; ++i) {
    const auto x = Direction::from_degrees(th(rng), ph(rng));
    const auto y = Direction::from_degrees(th(rng), ph(rng));
    const double e = angular_error(x, y);
    CHECK(e == angular_error(y, x));
    CHECK(e >= 0.0);
    CHECK(e <= 180.0);
  }
}

TEST_CASE("optimal assignment") {
  const auto A = Direction::from_degrees(45, 10), B = Direction::from_degrees(45, 200);
  const std::vector<Direction> truths{A, B}, est{B, A};
  CHECK(optimal_assignment(truths, est) == std::vector<int>{1, 0});
  const auto r = TrialRecord::assign(truths, est);
  CHECK(r.errors == std::vector<double>{0.0, 0.0});

  // exact matches beat a smaller total error
  const std::vector<std::vector<double>> err{{0.0, 1.0}, {1.0, 50.0}};
  CHECK(optimal_assignment(err) == std::vector<int>{0, 1});
  const std::vector<std::vector<double>> none{{5.0, 1.0}, {2.0, 9.0}};
  CHECK(optimal_assignment(none) == std::vector<int>{1, 0});
  CHECK_THROWS_AS(optimal_assignment(truths, std::vector<Direction>{A}), ShapeError);
}

TEST_CASE("eta metrics") {
  const std::vector<TrialRecord> recs{record({0.0, 0.0, 3.0}), record({0.0})};
  CHECK(eta_acc(recs) == doctest::Approx(75.0));
  CHECK(eta_adj(recs, 3.0) == doctest::Approx(100.0));
  CHECK(eta_adj(recs, 2.0) == doctest::Approx(75.0));
  CHECK(eta_acc(std::vector<TrialRecord>{record({5.0, 6.0})}) == 0.0);
  CHECK(eta_adj(std::vector<TrialRecord>{record({5.0, 6.0})}, 7.07) == 100.0);
  CHECK(eta_adj(std::vector<TrialRecord>{record({1.5 * 7.07})}, 7.07) == 0.0);
  CHECK_THROWS_AS(eta_acc(std::vector<TrialRecord>{}), InsufficientDataError);
  CHECK_THROWS_AS(eta_adj(recs, -1.0), DomainError);
}

TEST_CASE("adjacent separation") {
  // cos D = (1 + cos 10) / 2 at theta = 45
  CHECK(adjacent_separation(ClassGrids::azimuth_grid({45.0}, 10.0), 45.0) ==
        doctest::Approx(std::acos(0.5 * (1.0 + std::cos(kPi / 18))) * 180.0 / kPi));
  CHECK(std::abs(adjacent_separation(ClassGrids::azimuth_grid({45.0}, 10.0), 45.0) - 7.07) <= 0.01);
  CHECK(adjacent_separation(ClassGrids::azimuth_grid({90.0}, 30.0), 90.0) == doctest::Approx(30.0));
  // both points at theta = 95: cos D = sin^2(95) cos 30 + cos^2(95)
  const double s = std::sin(95.0 * kPi / 180.0), c = std::cos(95.0 * kPi / 180.0);
  CHECK(adjacent_separation(ClassGrids::azimuth_grid({95.0}, 30.0), 95.0) ==
        doctest::Approx(std::acos(s * s * std::cos(kPi / 6) + c * c) * 180.0 / kPi));
  CHECK_THROWS_AS(adjacent_separation(ClassGrids{{45.0}, {0.0}}, 45.0), InsufficientDataError);
}

TEST_CASE("metric report CSV") {
  const auto path = (std::filesystem::temp_directory_path() / "shdoa_metrics_test.csv").string();
  const std::vector<MetricRow> rows{{"x", "S1", 30.0, 2, 50.0, 75.0, 12.5}};
  write_metric_report(path, rows);
  std::ifstream f(path);
  std::string header, line;
  std::getline(f, header);
  std::getline(f, line);
  CHECK(header == "experiment_id,room,snr_db,L,eta_acc,eta_adj,mean_support");
  CHECK(line == "x,S1,30,2,50,75,12.5");
  std::filesystem::remove(path);
}
