#pragma once

#include <Eigen/Core>

namespace guidebot {

struct PlannerConfig {
  int horizon{10};  // Z
  double dt{0.1};
  Eigen::Matrix3d Q{Eigen::Vector3d(5.0, 5.0, 1.0).asDiagonal()};
  Eigen::Matrix3d Qf{Eigen::Vector3d(10.0, 10.0, 2.0).asDiagonal()};
  Eigen::Matrix3d R{Eigen::Vector3d(0.2, 0.2, 0.1).asDiagonal()};
  Eigen::Matrix3d S{Eigen::Vector3d(1.0, 1.0, 0.5).asDiagonal()};
  double kappa1{1e3};
  double kappa2{1e5};
  double beta{0.2};
  double mu{0.9};
  double d_safe1{0.3};
  double d_safe2{0.5};
  double v_max{1.0};
  double w_max{1.0};
  double rod_length{0.8};
  double cruise_speed{0.6};
  double robot_radius{0.25};
  /// Obstacles whose current center is farther than this from the robot are ignored.
  double obstacle_range{6.0};

  /// Slacks fixed at zero: every CBF row is a hard constraint.
  bool hard_constraints{false};
  /// CBF rows are built at all (OA mode).
  bool obstacle_avoidance{true};
  /// Reference tracking term active (GN mode).
  bool global_navigation{true};

  /// Extra relinearizations when the step-0 barrier condition fails on the
  /// nonlinear model.
  int sqp_iterations{3};
  double qp_tolerance{1e-9};
  int qp_max_iterations{500};

  /// Throws std::invalid_argument on any violated invariant.
  void validate() const;
  /// kappa2 == 0 drops the user rows entirely.
  [[nodiscard]] bool user_constraints() const { return kappa2 > 0.0; }
};

}  // namespace guidebot
