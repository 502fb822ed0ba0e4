#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "guidebot/geometry.hpp"
#include "guidebot/planner/config.hpp"

namespace guidebot {

enum class Agent { Robot = 1, User = 2 };

/// Center distance minus the ellipse's radial support toward the agent minus
/// d_safe. Throws std::invalid_argument if the agent sits on the center.
double cbf_value(Point2D agent_pos, const Ellipse& obstacle, double d_safe);

Point2D agent_position(Agent agent, const Pose2D& robot, double rod_length);

double cbf_agent_value(Agent agent, const Pose2D& robot, const Ellipse& obstacle, double d_safe, double rod_length);

/// Gradient of cbf_agent_value with respect to the robot pose (x, y, theta).
Eigen::Vector3d cbf_gradient(Agent agent, const Pose2D& robot, const Ellipse& obstacle, double rod_length);

/// States x_0..x_Z and controls u_0..u_{Z-1} the constraints are linearized about.
struct Nominal {
  std::vector<Pose2D> states;
  std::vector<VelocityCommand> controls;
};

/// x_{k+1} = x_k + R(theta_k) u_k dt. Headings are left unwrapped.
Nominal rollout(const Pose2D& x0, std::span<const VelocityCommand> controls, double dt);

/// G_k with x_k - x_0 = G_k u for the stacked controls u, rotations frozen at
/// the nominal headings. Returns 3 x 3Z.
Eigen::MatrixXd state_sensitivity(const Nominal& nominal, int k, double dt);

/// coeffs . u + delta[slack_index] >= rhs, where u stacks the Z controls.
struct CbfConstraintRow {
  Agent agent{Agent::Robot};
  int obstacle{0};
  int step{0};
  Eigen::VectorXd coeffs;
  double rhs{0.0};
  /// Index of the slack in the full decision vector (controls then slacks).
  int slack_index{0};
  double h_now{0.0};   // h at nominal step k
  double h_next{0.0};  // h at nominal step k+1
};

/// One row per step k in [0, Z), obstacle j and agent. predictions[j] holds
/// obstacle j at steps 0..Z. Agents sitting on an obstacle center are skipped.
std::vector<CbfConstraintRow> build_constraints(const Nominal& nominal,
                                                const std::vector<std::vector<Ellipse>>& predictions,
                                                const PlannerConfig& config);

}  // namespace guidebot
