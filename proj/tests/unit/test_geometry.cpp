#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "guidebot/geometry.hpp"

using namespace guidebot;

namespace {

// Smallest-area origin-centered ellipse containing pts, by brute force over
// orientation and major axis; the minor axis is the smallest that still fits.
double grid_search_min_area(const std::vector<Point2D>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 360; ++it) {
    const double th = kPi * it / 360.0;
    const double c = std::cos(th), s = std::sin(th);
    for (double a = 0.5; a <= 4.0; a += 0.002) {
      double need_b2 = 0.0;
      bool ok = true;
      for (const auto& p : pts) {
        const double u = c * p.x + s * p.y;
        const double v = -s * p.x + c * p.y;
        const double rem = 1.0 - (u * u) / (a * a);
        if (rem <= 1e-12) {
          ok = false;
          break;
        }
        need_b2 = std::max(need_b2, v * v / rem);
      }
      if (ok) best = std::min(best, kPi * a * std::sqrt(need_b2));
    }
  }
  return best;
}

double ray_conic_root(double a, double b, double th, double ray) {
  // Bisection on t for the point t*(cos ray, sin ray) hitting the boundary.
  double lo = 0.0, hi = 10.0 * std::max(a, b);
  for (int i = 0; i < 200; ++i) {
    const double t = 0.5 * (lo + hi);
    const double x = t * std::cos(ray), y = t * std::sin(ray);
    const double u = std::cos(th) * x + std::sin(th) * y;
    const double v = -std::sin(th) * x + std::cos(th) * y;
    (u * u / (a * a) + v * v / (b * b) < 1.0 ? lo : hi) = t;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("wrap_angle examples and convention") {
    CHECK(wrap_angle(0.0) == 0.0);
    CHECK(wrap_angle(3 * kPi) == doctest::Approx(kPi).epsilon(1e-12));
    CHECK(wrap_angle(2 * kPi + 0.5) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
    CHECK_THROWS_AS(wrap_angle(std::nan("")), std::invalid_argument);
    CHECK_THROWS_AS(wrap_angle(std::numeric_limits<double>::infinity()), std::invalid_argument);
  }

  TEST_CASE("wrap_angle property: range and 2pi congruence") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-100.0, 100.0);
    for (int i = 0; i < 5000; ++i) {
      const double x = d(rng);
      const double w = wrap_angle(x);
      CHECK(w > -kPi);
      CHECK(w <= kPi);
      const double turns = (x - w) / (2 * kPi);
      CHECK(std::abs(turns - std::round(turns)) < 1e-9);
    }
  }

  TEST_CASE("mvee of the four axis points is the unit circle") {
    const std::vector<Point2D> pts{{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
    const Ellipse e = mvee_fit(pts, 1e-6);
    CHECK(e.a == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(e.b == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(std::abs(e.center.x) < 1e-6);
    CHECK(std::abs(e.center.y) < 1e-6);
    for (const auto& p : pts) CHECK(ellipse_quadratic_form(e, p) <= 1.0 + 1e-9);
    CHECK(kPi * e.a * e.b == doctest::Approx(grid_search_min_area(pts)).epsilon(5e-3));
  }

  TEST_CASE("mvee matches grid-search area on symmetric random sets") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> d(-1.5, 1.5);
    for (int trial = 0; trial < 4; ++trial) {
      std::vector<Point2D> pts;
      for (int i = 0; i < 6; ++i) {
        const Point2D p{d(rng), 0.5 * d(rng)};
        pts.push_back(p);
        pts.push_back({-p.x, -p.y});
      }
      const Ellipse e = mvee_fit(pts, 1e-7, 1e-3);
      for (const auto& p : pts) CHECK(ellipse_quadratic_form(e, p) <= 1.0 + 1e-9);
      CHECK(e.a >= e.b);
      CHECK(e.theta > -kPi / 2);
      CHECK(e.theta <= kPi / 2);
      CHECK(kPi * e.a * e.b == doctest::Approx(grid_search_min_area(pts)).epsilon(1e-2));
    }
  }

  TEST_CASE("mvee degenerate fallbacks") {
    const std::vector<Point2D> one{{2, 3}};
    const Ellipse c = mvee_fit(one, 1e-6, 0.05);
    CHECK(c.center.x == doctest::Approx(2.0));
    CHECK(c.center.y == doctest::Approx(3.0));
    CHECK(c.a == doctest::Approx(0.05));
    CHECK(c.b == doctest::Approx(0.05));

    const std::vector<Point2D> line{{0, 0}, {1, 0}, {2, 0}};
    const Ellipse l = mvee_fit(line, 1e-6, 0.05);
    CHECK(l.center.x == doctest::Approx(1.0));
    CHECK(l.center.y == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(l.b == doctest::Approx(0.05));
    CHECK(l.a >= 1.0 + 0.05 - 1e-12);
    for (const auto& p : line) CHECK(ellipse_quadratic_form(l, p) <= 1.0 + 1e-9);

    CHECK_THROWS_AS(mvee_fit(std::vector<Point2D>{}, 1e-6), std::invalid_argument);
    CHECK_THROWS_AS(mvee_fit(line, 0.0), std::invalid_argument);
  }

  TEST_CASE("boundary distance along axes and a diagonal") {
    const Ellipse e{{0, 0}, 2.0, 1.0, 0.0};
    CHECK(ellipse_boundary_distance(e, {5, 0}) == doctest::Approx(2.0));
    CHECK(ellipse_boundary_distance(e, {0, 5}) == doctest::Approx(1.0));
    CHECK(ellipse_boundary_distance(e, {1, 1}) == doctest::Approx(1.26491).epsilon(1e-5));
    CHECK(ellipse_boundary_distance(e, {1, 1}) == doctest::Approx(ray_conic_root(2, 1, 0, kPi / 4)).epsilon(1e-9));
    CHECK_THROWS_AS(ellipse_boundary_distance(e, {0, 0}), std::invalid_argument);
  }

  TEST_CASE("boundary distance agrees with root finding for rotated ellipses") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    for (int i = 0; i < 200; ++i) {
      const Ellipse e{{0.3, -0.2}, 1.7, 0.6, ang(rng)};
      const double ray = ang(rng);
      const Point2D to{e.center.x + 3 * std::cos(ray), e.center.y + 3 * std::sin(ray)};
      CHECK(ellipse_boundary_distance(e, to) == doctest::Approx(ray_conic_root(1.7, 0.6, e.theta, ray)).epsilon(1e-9));
    }
  }

  TEST_CASE("support derivative matches central differences") {
    const Ellipse e{{0, 0}, 2.0, 0.7, 0.4};
    for (double ray = -3.0; ray < 3.0; ray += 0.37) {
      const double h = 1e-6;
      auto r = [&](double a) { return ellipse_boundary_distance(e, {std::cos(a), std::sin(a)}); };
      const double fd = (r(ray + h) - r(ray - h)) / (2 * h);
      CHECK(ellipse_support_derivative(e, ray) == doctest::Approx(fd).epsilon(1e-6));
    }
  }

  TEST_CASE("signed distance sign and circle case") {
    const Ellipse c{{1, 1}, 1.0, 1.0, 0.0};
    CHECK(ellipse_signed_distance(c, {3, 1}) == doctest::Approx(1.0));
    CHECK(ellipse_signed_distance(c, {1, 1.5}) == doctest::Approx(-0.5));
  }

  TEST_CASE("user position on the rod") {
    auto p = user_position({0, 0, 0}, 1.0);
    CHECK(p.x == doctest::Approx(-1.0));
    CHECK(p.y == doctest::Approx(0.0));
    p = user_position({0, 0, kPi / 2}, 1.0);
    CHECK(p.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p.y == doctest::Approx(-1.0));
    p = user_position({2, 3, kPi}, 0.8);
    CHECK(p.x == doctest::Approx(2.8));
    CHECK(p.y == doctest::Approx(3.0));
  }
}
