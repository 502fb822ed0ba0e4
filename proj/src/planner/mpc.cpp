#include "guidebot/planner/mpc.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <limits>
#include <string>
#include <cmath>
#include <stdexcept>

#include "guidebot/planner/astar.hpp"

namespace guidebot {
namespace {

bool symmetric_psd(const Eigen::Matrix3d& m) {
  if (!m.allFinite() || (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) {
    return false;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(m);
  return eig.eigenvalues().minCoeff() >= -1e-12;
}

VelocityCommand clamp_command(const VelocityCommand& u, const PlannerConfig& c) {
  return {std::clamp(u.vx, -c.v_max, c.v_max), std::clamp(u.vy, -c.v_max, c.v_max),
          std::clamp(u.wz, -c.w_max, c.w_max)};
}

std::vector<VelocityCommand> controls_of(const Eigen::VectorXd& z, int horizon) {
  std::vector<VelocityCommand> out(static_cast<std::size_t>(horizon));
  for (int k = 0; k < horizon; ++k) out[static_cast<std::size_t>(k)] = {z(3 * k), z(3 * k + 1), z(3 * k + 2)};
  return out;
}

// Refreshes the cached route when the goal or the map changed.
void update_route(const PlannerInput& in, PlannerMemory& mem, const PlannerConfig& cfg) {
  const bool stale = mem.route_grid != in.grid || !mem.route_goal || !(*mem.route_goal == *in.goal);
  if (!stale) return;
  mem.route_grid = in.grid;
  mem.route_goal = in.goal;
  mem.inflated = std::make_shared<const BinaryGrid>(inflate(*in.grid, cfg.robot_radius + cfg.d_safe1));
  mem.route.reset();

  const BinaryGrid& g = *mem.inflated;
  const auto goal_cell = g.spec.cell_of(*in.goal);
  if (!goal_cell || g.occupied(*goal_cell)) return;
  Point2D start = in.x0.position();
  const auto start_cell = g.spec.cell_of(start);
  if (!start_cell || g.occupied(*start_cell)) {
    const auto free = nearest_free(g, start);
    if (!free) return;
    start = *free;
  }
  const auto path = astar(g, start, *in.goal);
  if (!path) return;
  auto pts = shortcut_path(g, path->waypoints);
  pts.front() = in.x0.position();
  pts.back() = *in.goal;
  mem.route = std::move(pts);
}

}  // namespace

void PlannerConfig::validate() const {
  auto fail = [](const char* what) { throw std::invalid_argument(std::string("PlannerConfig: ") + what); };
  if (horizon < 1) fail("horizon must be >= 1");
  if (!(dt > 0.0)) fail("dt must be positive");
  if (!symmetric_psd(Q) || !symmetric_psd(Qf) || !symmetric_psd(R) || !symmetric_psd(S)) {
    fail("weight matrices must be symmetric PSD");
  }
  if (!(kappa1 >= 0.0) || !(kappa2 >= 0.0)) fail("slack penalties must be >= 0");
  if (!(beta > 0.0 && beta <= 1.0)) fail("beta must lie in (0, 1]");
  if (!(mu > 0.0 && mu <= 1.0)) fail("mu must lie in (0, 1]");
  if (!(d_safe1 >= 0.0) || !(d_safe2 >= 0.0)) fail("safety distances must be >= 0");
  if (!(v_max > 0.0) || !(w_max > 0.0)) fail("velocity limits must be positive");
  if (!(rod_length >= 0.0) || !(cruise_speed >= 0.0) || !(robot_radius >= 0.0)) fail("lengths must be >= 0");
  if (!(obstacle_range > 0.0)) fail("obstacle_range must be positive");
  if (sqp_iterations < 0 || qp_max_iterations < 1 || !(qp_tolerance > 0.0)) fail("invalid solver settings");
}

std::string_view to_string(PlanStatus s) {
  switch (s) {
    case PlanStatus::Optimal: return "optimal";
    case PlanStatus::Inexact: return "inexact";
    case PlanStatus::Degraded: return "degraded";
    case PlanStatus::NoPath: return "no_path";
  }
  return "unknown";
}

std::vector<Pose2D> reference_from_path(std::span<const Point2D> path, const Pose2D& x0, int horizon, double dt,
                                        double cruise_speed) {
  if (path.empty()) throw std::invalid_argument("reference_from_path: empty path");
  if (horizon < 1) throw std::invalid_argument("reference_from_path: horizon must be >= 1");
  std::vector<Point2D> pts{path.front()};
  for (const auto& p : path.subspan(1)) {
    if (distance(p, pts.back()) > 1e-12) pts.push_back(p);
  }
  std::vector<Pose2D> out;
  out.reserve(static_cast<std::size_t>(horizon));
  if (pts.size() == 1) {
    out.assign(static_cast<std::size_t>(horizon), Pose2D{pts[0].x, pts[0].y, x0.theta});
    return out;
  }

  const std::size_t nseg = pts.size() - 1;
  std::vector<double> cum(pts.size(), 0.0);
  for (std::size_t i = 0; i < nseg; ++i) cum[i + 1] = cum[i] + distance(pts[i], pts[i + 1]);

  double best = std::numeric_limits<double>::infinity();
  double s0 = 0.0;
  for (std::size_t i = 0; i < nseg; ++i) {
    const double ex = pts[i + 1].x - pts[i].x;
    const double ey = pts[i + 1].y - pts[i].y;
    const double len2 = ex * ex + ey * ey;
    const double t = std::clamp(((x0.x - pts[i].x) * ex + (x0.y - pts[i].y) * ey) / len2, 0.0, 1.0);
    const double d = std::hypot(pts[i].x + t * ex - x0.x, pts[i].y + t * ey - x0.y);
    if (d < best) {
      best = d;
      s0 = cum[i] + t * (cum[i + 1] - cum[i]);
    }
  }

  const double total = cum.back();
  for (int k = 0; k < horizon; ++k) {
    const double s = std::min(s0 + (k + 1) * cruise_speed * dt, total);
    std::size_t i = 0;
    while (i + 1 < nseg && s >= cum[i + 1]) ++i;
    const double t = (s - cum[i]) / (cum[i + 1] - cum[i]);
    const double ex = pts[i + 1].x - pts[i].x;
    const double ey = pts[i + 1].y - pts[i].y;
    out.push_back({pts[i].x + t * ex, pts[i].y + t * ey, std::atan2(ey, ex)});
  }
  return out;
}

QpProblem build_qp(const Pose2D& x0, const VelocityCommand& u_prev, std::span<const Pose2D> refs,
                   const VelocityCommand& v_tgt, std::span<const CbfConstraintRow> constraints,
                   const Nominal& nominal, const PlannerConfig& config) {
  const int z = config.horizon;
  const DecisionLayout layout{z};
  const int n = layout.size();
  const int nu = 3 * z;
  if (static_cast<int>(nominal.controls.size()) != z || (!refs.empty() && static_cast<int>(refs.size()) != z)) {
    throw std::invalid_argument("build_qp: nominal and references must span the horizon");
  }

  QpProblem qp;
  qp.hessian = Eigen::MatrixXd::Zero(n, n);
  qp.linear = Eigen::VectorXd::Zero(n);
  auto huu = qp.hessian.topLeftCorner(nu, nu);
  auto gu = qp.linear.head(nu);

  if (!refs.empty() && config.global_navigation) {
    const Eigen::Vector3d x0v(x0.x, x0.y, x0.theta);
    for (int k = 1; k <= z; ++k) {
      const Eigen::Matrix3d& w = k < z ? config.Q : config.Qf;
      const Eigen::MatrixXd g = state_sensitivity(nominal, k, config.dt);
      const Pose2D& r = refs[static_cast<std::size_t>(k - 1)];
      const double th_nom = nominal.states[static_cast<std::size_t>(k)].theta;
      const Eigen::Vector3d rv(r.x, r.y, th_nom + wrap_angle(r.theta - th_nom));
      const Eigen::MatrixXd wg = w * g;
      huu += 2.0 * g.transpose() * wg;
      gu += 2.0 * wg.transpose() * (x0v - rv);
    }
  }

  const Eigen::Vector3d vt(v_tgt.vx, v_tgt.vy, v_tgt.wz);
  const Eigen::Vector3d up(u_prev.vx, u_prev.vy, u_prev.wz);
  double mu_k = 1.0;
  for (int k = 0; k < z; ++k) {
    const int i = layout.control(k);
    huu.block<3, 3>(i, i) += 2.0 * (config.R + config.S);
    gu.segment<3>(i) -= 2.0 * mu_k * config.R * vt;
    if (k == 0) {
      gu.segment<3>(i) -= 2.0 * config.S * up;
    } else {
      const int j = layout.control(k - 1);
      huu.block<3, 3>(j, j) += 2.0 * config.S;
      huu.block<3, 3>(i, j) -= 2.0 * config.S;
      huu.block<3, 3>(j, i) -= 2.0 * config.S;
    }
    mu_k *= config.mu;
  }
  for (int k = 0; k < z; ++k) {
    qp.hessian(layout.robot_slack(k), layout.robot_slack(k)) = 2.0 * config.kappa1;
    qp.hessian(layout.user_slack(k), layout.user_slack(k)) = 2.0 * config.kappa2;
  }
  qp.hessian = 0.5 * (qp.hessian + qp.hessian.transpose());
  qp.hessian.diagonal().array() += 1e-8;

  const bool users = config.user_constraints();
  std::vector<const CbfConstraintRow*> kept;
  for (const auto& row : constraints) {
    if (row.agent == Agent::User && !users) continue;
    if (row.coeffs.size() != nu) throw std::invalid_argument("build_qp: constraint row has wrong width");
    kept.push_back(&row);
  }
  qp.ineq = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(kept.size()), n);
  qp.ineq_rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t r = 0; r < kept.size(); ++r) {
    const auto ri = static_cast<Eigen::Index>(r);
    qp.ineq.row(ri).head(nu) = kept[r]->coeffs.transpose();
    qp.ineq(ri, kept[r]->slack_index) = 1.0;
    qp.ineq_rhs(ri) = kept[r]->rhs;
  }

  const double inf = std::numeric_limits<double>::infinity();
  qp.lower = Eigen::VectorXd::Zero(n);
  qp.upper = Eigen::VectorXd::Constant(n, inf);
  for (int k = 0; k < z; ++k) {
    const int i = layout.control(k);
    qp.lower.segment<3>(i) << -config.v_max, -config.v_max, -config.w_max;
    qp.upper.segment<3>(i) << config.v_max, config.v_max, config.w_max;
    if (config.hard_constraints) {
      qp.upper(layout.robot_slack(k)) = 0.0;
      qp.upper(layout.user_slack(k)) = 0.0;
    }
    if (!users) qp.upper(layout.user_slack(k)) = 0.0;
  }
  return qp;
}

Planner::Planner(PlannerConfig config) : config_(std::move(config)) { config_.validate(); }

PlanResult plan_step(const PlannerInput& input, PlannerMemory& memory, const PlannerConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  const int z = config.horizon;
  const DecisionLayout layout{z};
  PlanResult result;
  auto& diag = result.diagnostics;

  std::vector<Pose2D> refs;
  if (config.global_navigation && input.goal && input.grid) {
    update_route(input, memory, config);
    if (!memory.route) {
      diag.status = PlanStatus::NoPath;
      memory.warm_controls.clear();
      return result;
    }
    refs = reference_from_path(*memory.route, input.x0, z, config.dt, config.cruise_speed);
  }

  if (config.obstacle_avoidance) {
    for (const auto& obs : input.obstacles) {
      if (static_cast<int>(obs.size()) < z + 1) {
        throw std::invalid_argument("plan_step: obstacle prediction shorter than Z+1");
      }
      if (distance(obs.front().center, input.x0.position()) <= config.obstacle_range) diag.obstacles.push_back(obs);
    }
  }
  for (const auto& obs : diag.obstacles) {
    const Point2D pr = input.x0.position();
    const Point2D pu = user_position(input.x0, config.rod_length);
    if (distance(pr, obs.front().center) > 0.0) {
      diag.h_min_robot = std::min(diag.h_min_robot, cbf_value(pr, obs.front(), config.d_safe1));
    }
    if (distance(pu, obs.front().center) > 0.0) {
      diag.h_min_user = std::min(diag.h_min_user, cbf_value(pu, obs.front(), config.d_safe2));
    }
  }

  std::vector<VelocityCommand> warm = memory.warm_controls;
  if (static_cast<int>(warm.size()) != z) warm.assign(static_cast<std::size_t>(z), VelocityCommand{});
  for (auto& u : warm) u = clamp_command(u, config);

  QpOptions qopt;
  qopt.tolerance = config.qp_tolerance;
  qopt.max_iterations = config.qp_max_iterations;

  std::optional<QpSolution> accepted;
  Nominal accepted_nominal;
  bool barrier_ok = false;
  for (int round = 0; round <= config.sqp_iterations; ++round) {
    Nominal nominal = rollout(input.x0, warm, config.dt);
    const auto rows = build_constraints(nominal, diag.obstacles, config);
    const auto qp = build_qp(input.x0, input.u_prev, refs, input.v_tgt, rows, nominal, config);
    auto sol = solve_qp(qp, qopt);
    diag.qp_iterations += sol.iterations;
    diag.sqp_rounds = round + 1;
    if (sol.status != QpStatus::Optimal) {
      if (!accepted) {
        accepted = std::move(sol);
        accepted_nominal = std::move(nominal);
      }
      break;
    }
    const auto controls = controls_of(sol.z, z);
    const Pose2D x1 = rollout(input.x0, std::span(controls).first(1), config.dt).states[1];
    barrier_ok = true;
    for (const auto& row : rows) {
      if (row.step != 0 || (row.agent == Agent::User && !config.user_constraints())) continue;
      const double d_safe = row.agent == Agent::Robot ? config.d_safe1 : config.d_safe2;
      const auto& e1 = diag.obstacles[static_cast<std::size_t>(row.obstacle)][1];
      const double h1 = cbf_agent_value(row.agent, x1, e1, d_safe, config.rod_length);
      if (h1 < (1.0 - config.beta) * row.h_now - sol.z(row.slack_index) - 1e-9) {
        barrier_ok = false;
        break;
      }
    }
    accepted = std::move(sol);
    accepted_nominal = std::move(nominal);
    if (barrier_ok) break;
    warm = controls;
    for (auto& u : warm) u = clamp_command(u, config);
  }

  const QpSolution& sol = *accepted;
  diag.qp_status = sol.status;
  diag.kkt_residual = sol.kkt.max();
  if (sol.status != QpStatus::Optimal) {
    diag.status = PlanStatus::Degraded;
  } else {
    diag.status = barrier_ok ? PlanStatus::Optimal : PlanStatus::Inexact;
  }
  auto controls = controls_of(sol.z, z);
  for (auto& u : controls) u = clamp_command(u, config);
  for (int k = 0; k < z; ++k) {
    const double d1 = std::max(0.0, sol.z(layout.robot_slack(k)));
    const double d2 = std::max(0.0, sol.z(layout.user_slack(k)));
    if (k == 0) {
      diag.slack_robot = d1;
      diag.slack_user = d2;
    }
    diag.slack_robot_max = std::max(diag.slack_robot_max, d1);
    diag.slack_user_max = std::max(diag.slack_user_max, d2);
  }
  result.command = controls.front();
  diag.predicted = rollout(input.x0, controls, config.dt);
  diag.references = std::move(refs);

  std::vector<VelocityCommand> shifted(controls.begin() + 1, controls.end());
  shifted.push_back(controls.back());
  memory.warm_controls = std::move(shifted);
  diag.solve_micros =
      std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

}  // namespace guidebot
