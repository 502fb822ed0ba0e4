#pragma once

#include <Eigen/Core>
#include <string_view>

namespace guidebot {

/// min 1/2 z'Hz + g'z  s.t.  A z >= b,  lower <= z <= upper.
/// Infinite bounds are ignored.
struct QpProblem {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;
  Eigen::MatrixXd ineq;
  Eigen::VectorXd ineq_rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  [[nodiscard]] Eigen::Index num_vars() const { return linear.size(); }
  /// Sizes consistent and finite; throws std::invalid_argument otherwise.
  void validate() const;
};

enum class QpStatus { Optimal, MaxIterations, Infeasible };

std::string_view to_string(QpStatus s);

struct KktResiduals {
  double stationarity{0.0};
  double primal{0.0};
  double complementarity{0.0};
  double dual{0.0};  // most negative multiplier, reported as a positive number

  [[nodiscard]] double max() const;
};

struct QpSolution {
  Eigen::VectorXd z;
  /// Multipliers for the general rows followed by lower and upper bounds.
  Eigen::VectorXd multipliers;
  QpStatus status{QpStatus::Optimal};
  int iterations{0};
  KktResiduals kkt;
};

struct QpOptions {
  double tolerance{1e-9};
  int max_iterations{500};
};

/// Goldfarb-Idnani dual active-set method for strictly convex QPs. Bounds
/// are handled as ordinary rows. On infeasibility or iteration exhaustion the
/// last primal iterate is returned with the corresponding status.
/// Throws std::invalid_argument if the Hessian is not positive definite.
QpSolution solve_qp(const QpProblem& qp, const QpOptions& options = {});

/// KKT residuals of (z, multipliers) for the problem, in the solver's row order.
KktResiduals kkt_residuals(const QpProblem& qp, const Eigen::VectorXd& z, const Eigen::VectorXd& multipliers);

}  // namespace guidebot
