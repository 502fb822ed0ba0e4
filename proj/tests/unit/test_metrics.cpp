#include <doctest.h>

#include <stdexcept>

#include <random>
#include <vector>

#include "guidebot/perception.hpp"
#include "oracles/oracles.hpp"

using namespace guidebot;

namespace {

ClusterLabels make(std::vector<int> l) {
  ClusterLabels c;
  for (int x : l) c.num_clusters = std::max(c.num_clusters, x);
  c.labels = std::move(l);
  return c;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("two-cluster fixture") {
    const std::vector<Point2D> pts{{0, 0}, {0, 1}, {10, 0}, {10, 1}};
    const auto l = make({1, 1, 2, 2});
    CHECK(dbi(pts, l) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(std::abs(dbi(pts, l) - oracle::dbi(pts, l.labels)) < 1e-12);
    CHECK(silhouette(pts, l) == doctest::Approx(0.9).epsilon(1e-3));
    CHECK(std::abs(silhouette(pts, l) - oracle::silhouette(pts, l.labels)) < 1e-12);
  }

  TEST_CASE("singleton clusters have zero dispersion") {
    const std::vector<Point2D> pts{{0, 0}, {4, 3}};
    CHECK(dbi(pts, make({1, 2})) == 0.0);
  }

  TEST_CASE("tight far clusters and interleaved labels") {
    std::vector<Point2D> pts;
    std::vector<int> lab;
    for (int i = 0; i < 10; ++i) {
      pts.push_back({0.01 * i, 0.0});
      lab.push_back(1);
      pts.push_back({100 + 0.01 * i, 0.0});
      lab.push_back(2);
    }
    CHECK(silhouette(pts, make(lab)) > 0.9);

    std::vector<Point2D> line;
    std::vector<int> alt;
    for (int i = 0; i < 20; ++i) {
      line.push_back({static_cast<double>(i), 0.0});
      alt.push_back(1 + i % 2);
    }
    CHECK(silhouette(line, make(alt)) < 0.5);
  }

  TEST_CASE("noise is excluded and fewer than two clusters throws") {
    const std::vector<Point2D> pts{{0, 0}, {0, 1}, {10, 0}, {10, 1}, {50, 50}};
    const auto l = make({1, 1, 2, 2, ClusterLabels::kNoise});
    CHECK(dbi(pts, l) == doctest::Approx(0.1));
    CHECK_THROWS_AS(dbi(pts, make({1, 1, 1, 1, 1})), std::invalid_argument);
    CHECK_THROWS_AS(silhouette(pts, make({1, 1, 1, 1, 1})), std::invalid_argument);
  }

  TEST_CASE("random labelings stay in range and match the oracle") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> coord(-5, 5);
    std::uniform_int_distribution<int> npts(4, 40), nclu(2, 5);
    for (int t = 0; t < 1000; ++t) {
      const int n = npts(rng);
      const int k = std::min(nclu(rng), n);
      std::vector<Point2D> pts(static_cast<std::size_t>(n));
      for (auto& p : pts) p = {coord(rng), coord(rng)};
      std::vector<int> lab(static_cast<std::size_t>(n));
      std::uniform_int_distribution<int> pick(1, k);
      for (int i = 0; i < n; ++i) lab[static_cast<std::size_t>(i)] = i < k ? i + 1 : pick(rng);
      const auto l = make(lab);
      const double d = dbi(pts, l);
      const double s = silhouette(pts, l);
      CHECK(d >= 0.0);
      CHECK(s >= -1.0);
      CHECK(s <= 1.0);
      CHECK(d == doctest::Approx(oracle::dbi(pts, lab)).epsilon(1e-9));
      CHECK(s == doctest::Approx(oracle::silhouette(pts, lab)).epsilon(1e-9));
    }
  }
}
