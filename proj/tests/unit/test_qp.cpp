#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <limits>
#include <random>

#include "guidebot/planner/qp.hpp"
#include "oracles/oracles.hpp"

using namespace guidebot;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

QpProblem unbounded(int n) {
  QpProblem qp;
  qp.hessian = Eigen::MatrixXd::Identity(n, n);
  qp.linear = Eigen::VectorXd::Zero(n);
  qp.ineq = Eigen::MatrixXd::Zero(0, n);
  qp.ineq_rhs = Eigen::VectorXd::Zero(0);
  qp.lower = Eigen::VectorXd::Constant(n, -kInf);
  qp.upper = Eigen::VectorXd::Constant(n, kInf);
  return qp;
}

// Random strictly convex QP whose rows are satisfied by a known point, so it
// is always feasible.
QpProblem random_qp(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nv(1, 10), nr(0, 8);
  std::normal_distribution<double> g(0, 1);
  const int n = nv(rng);
  int rows = nr(rng);
  QpProblem qp = unbounded(n);
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = g(rng);
  qp.hessian = m * m.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i) qp.linear(i) = 3 * g(rng);
  Eigen::VectorXd z0(n);
  for (int i = 0; i < n; ++i) z0(i) = g(rng);
  // Spend part of the row budget on finite bounds.
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::bernoulli_distribution coin(0.5);
  while (rows > 0 && coin(rng)) {
    const int i = pick(rng);
    if (coin(rng)) {
      qp.lower(i) = z0(i) - std::abs(g(rng));
    } else {
      qp.upper(i) = z0(i) + std::abs(g(rng));
    }
    --rows;
  }
  qp.ineq = Eigen::MatrixXd(rows, n);
  qp.ineq_rhs = Eigen::VectorXd(rows);
  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < n; ++j) qp.ineq(r, j) = g(rng);
    qp.ineq_rhs(r) = qp.ineq.row(r).dot(z0) - std::abs(g(rng));
  }
  return qp;
}

}  // namespace

TEST_SUITE("qp") {
  TEST_CASE("one-dimensional examples") {
    auto qp = unbounded(1);
    qp.hessian(0, 0) = 2.0;
    qp.linear(0) = -6.0;  // (u-3)^2 up to a constant
    auto s = solve_qp(qp);
    CHECK(s.status == QpStatus::Optimal);
    CHECK(s.z(0) == doctest::Approx(3.0).epsilon(1e-12));
    qp.upper(0) = 1.0;
    s = solve_qp(qp);
    CHECK(s.status == QpStatus::Optimal);
    CHECK(s.z(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.multipliers(1) == doctest::Approx(4.0).epsilon(1e-9));  // upper-bound multiplier
    CHECK(s.kkt.max() < 1e-9);
  }

  TEST_CASE("infeasible rows are reported") {
    auto qp = unbounded(1);
    qp.ineq = Eigen::MatrixXd::Ones(2, 1);
    qp.ineq(1, 0) = -1;
    qp.ineq_rhs = Eigen::Vector2d(1.0, 0.0);  // u >= 1 and u <= 0
    CHECK(solve_qp(qp).status == QpStatus::Infeasible);
    qp.ineq_rhs = Eigen::Vector2d(0.0, 0.0);
    CHECK(solve_qp(qp).status == QpStatus::Optimal);
  }

  TEST_CASE("infeasibility found with a full active set") {
    // Two rows become active in two variables before the third conflicting row is added;
    // the remaining step direction is pure roundoff and must not be taken.
    auto qp = unbounded(2);
    qp.hessian << 0.92344957811614437, -0.31691511048324816, -0.31691511048324816, 0.23660215184296923;
    qp.linear << 0.6089538188928314, -1.5729703469599259;
    qp.ineq.resize(7, 2);
    qp.ineq << -0.85844143550986873, -0.8292049585934369, -0.0043905330271132303, -0.7220791286819227,
        -0.36127845059416341, 0.95393157604711298, 0.32881446925862812, 0.77328707068779923,
        -0.029172404811960373, 0.72239896985214425, -0.54538014322177497, -0.54872497417719202,
        0.12606591623586505, -0.27040806654483474;
    qp.ineq_rhs.resize(7);
    qp.ineq_rhs << -0.50514590799474735, 0.34854068854951925, -0.80229247078437305, -0.67432366383743692,
        -0.27202741739655922, 0.140960196380995, -0.9226077934067396;
    qp.upper(1) = 1.5853568358051311;
    CHECK_FALSE(oracle::qp_by_enumeration(qp).has_value());
    CHECK(solve_qp(qp).status == QpStatus::Infeasible);
  }

  TEST_CASE("validation") {
    auto qp = unbounded(2);
    qp.hessian(1, 1) = -1.0;
    CHECK_THROWS_AS(solve_qp(qp), std::invalid_argument);
    auto bad = unbounded(2);
    bad.linear = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }

  TEST_CASE("random problems match active-set enumeration") {
    std::mt19937_64 rng(555);
    for (int t = 0; t < 500; ++t) {
      const auto qp = random_qp(rng);
      const auto s = solve_qp(qp);
      const auto ref = oracle::qp_by_enumeration(qp);
      REQUIRE(ref);
      CHECK(s.status == QpStatus::Optimal);
      CHECK(std::abs(oracle::qp_objective(qp, s.z) - *ref) <= 1e-5);
      CHECK(kkt_residuals(qp, s.z, s.multipliers).max() < 1e-6);
    }
  }
}
