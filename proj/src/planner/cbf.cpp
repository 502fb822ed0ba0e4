#include "guidebot/planner/cbf.hpp"

#include <cmath>
#include <stdexcept>

namespace guidebot {

double cbf_value(Point2D agent_pos, const Ellipse& obstacle, double d_safe) {
  return distance(agent_pos, obstacle.center) - ellipse_boundary_distance(obstacle, agent_pos) - d_safe;
}

Point2D agent_position(Agent agent, const Pose2D& robot, double rod_length) {
  return agent == Agent::Robot ? robot.position() : user_position(robot, rod_length);
}

double cbf_agent_value(Agent agent, const Pose2D& robot, const Ellipse& obstacle, double d_safe, double rod_length) {
  return cbf_value(agent_position(agent, robot, rod_length), obstacle, d_safe);
}

Eigen::Vector3d cbf_gradient(Agent agent, const Pose2D& robot, const Ellipse& obstacle, double rod_length) {
  const Point2D p = agent_position(agent, robot, rod_length);
  const double dx = p.x - obstacle.center.x;
  const double dy = p.y - obstacle.center.y;
  const double rho2 = dx * dx + dy * dy;
  if (rho2 == 0.0) throw std::invalid_argument("cbf_gradient: agent coincides with obstacle center");
  const double rho = std::sqrt(rho2);
  const double dr = ellipse_support_derivative(obstacle, std::atan2(dy, dx));
  const double gx = dx / rho + dr * dy / rho2;
  const double gy = dy / rho - dr * dx / rho2;
  double gt = 0.0;
  if (agent == Agent::User) {
    gt = gx * rod_length * std::sin(robot.theta) - gy * rod_length * std::cos(robot.theta);
  }
  return {gx, gy, gt};
}

Nominal rollout(const Pose2D& x0, std::span<const VelocityCommand> controls, double dt) {
  Nominal n;
  n.controls.assign(controls.begin(), controls.end());
  n.states.reserve(controls.size() + 1);
  n.states.push_back(x0);
  for (const auto& u : controls) {
    const Pose2D& x = n.states.back();
    const double c = std::cos(x.theta);
    const double s = std::sin(x.theta);
    n.states.push_back({x.x + dt * (c * u.vx - s * u.vy), x.y + dt * (s * u.vx + c * u.vy), x.theta + dt * u.wz});
  }
  return n;
}

Eigen::MatrixXd state_sensitivity(const Nominal& nominal, int k, double dt) {
  const int z = static_cast<int>(nominal.controls.size());
  if (k < 0 || k > z || nominal.states.size() != nominal.controls.size() + 1) {
    throw std::invalid_argument("state_sensitivity: step out of range");
  }
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3, 3 * z);
  for (int j = 0; j < k; ++j) {
    const double th = nominal.states[static_cast<std::size_t>(j)].theta;
    const double c = std::cos(th);
    const double s = std::sin(th);
    g(0, 3 * j) = dt * c;
    g(0, 3 * j + 1) = -dt * s;
    g(1, 3 * j) = dt * s;
    g(1, 3 * j + 1) = dt * c;
    g(2, 3 * j + 2) = dt;
  }
  return g;
}

std::vector<CbfConstraintRow> build_constraints(const Nominal& nominal,
                                                const std::vector<std::vector<Ellipse>>& predictions,
                                                const PlannerConfig& config) {
  std::vector<CbfConstraintRow> rows;
  if (!config.obstacle_avoidance || predictions.empty()) return rows;
  const int z = static_cast<int>(nominal.controls.size());
  if (static_cast<int>(nominal.states.size()) != z + 1) {
    throw std::invalid_argument("build_constraints: nominal needs Z+1 states");
  }
  for (const auto& pred : predictions) {
    if (static_cast<int>(pred.size()) < z + 1) {
      throw std::invalid_argument("build_constraints: each obstacle needs Z+1 predicted ellipses");
    }
  }
  Eigen::VectorXd u_bar(3 * z);
  for (int k = 0; k < z; ++k) {
    const auto& u = nominal.controls[static_cast<std::size_t>(k)];
    u_bar.segment<3>(3 * k) << u.vx, u.vy, u.wz;
  }
  std::vector<Eigen::MatrixXd> sens;
  sens.reserve(static_cast<std::size_t>(z) + 1);
  for (int k = 0; k <= z; ++k) sens.push_back(state_sensitivity(nominal, k, config.dt));

  const double decay = 1.0 - config.beta;
  for (const Agent agent : {Agent::Robot, Agent::User}) {
    const double d_safe = agent == Agent::Robot ? config.d_safe1 : config.d_safe2;
    const int slack_base = agent == Agent::Robot ? 3 * z : 4 * z;
    for (std::size_t j = 0; j < predictions.size(); ++j) {
      for (int k = 0; k < z; ++k) {
        const auto& xk = nominal.states[static_cast<std::size_t>(k)];
        const auto& xk1 = nominal.states[static_cast<std::size_t>(k) + 1];
        const auto& ek = predictions[j][static_cast<std::size_t>(k)];
        const auto& ek1 = predictions[j][static_cast<std::size_t>(k) + 1];
        const Point2D pk = agent_position(agent, xk, config.rod_length);
        const Point2D pk1 = agent_position(agent, xk1, config.rod_length);
        if (distance(pk, ek.center) < 1e-9 || distance(pk1, ek1.center) < 1e-9) continue;

        CbfConstraintRow row;
        row.agent = agent;
        row.obstacle = static_cast<int>(j);
        row.step = k;
        row.slack_index = slack_base + k;
        row.h_now = cbf_value(pk, ek, d_safe);
        row.h_next = cbf_value(pk1, ek1, d_safe);
        const Eigen::RowVector3d g1 = cbf_gradient(agent, xk1, ek1, config.rod_length).transpose();
        row.coeffs = (g1 * sens[static_cast<std::size_t>(k) + 1]).transpose();
        if (k > 0) {
          const Eigen::RowVector3d g0 = cbf_gradient(agent, xk, ek, config.rod_length).transpose();
          row.coeffs -= decay * (g0 * sens[static_cast<std::size_t>(k)]).transpose();
        }
        row.rhs = decay * row.h_now - row.h_next + row.coeffs.dot(u_bar);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

}  // namespace guidebot
