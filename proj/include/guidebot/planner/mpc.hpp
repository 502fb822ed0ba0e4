#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "guidebot/geometry.hpp"
#include "guidebot/perception.hpp"
#include "guidebot/planner/cbf.hpp"
#include "guidebot/planner/config.hpp"
#include "guidebot/planner/qp.hpp"

namespace guidebot {

/// Z poses sampled along the polyline every cruise_speed*dt of arc length,
/// starting one sample past the closest-point projection of x0 and saturating
/// at the end. Headings follow the segment tangent; a single-point path keeps
/// x0's heading. Throws std::invalid_argument on an empty path.
std::vector<Pose2D> reference_from_path(std::span<const Point2D> path, const Pose2D& x0, int horizon, double dt,
                                        double cruise_speed);

/// Decision vector layout: 3Z controls, then Z robot slacks, then Z user slacks.
struct DecisionLayout {
  int horizon{0};
  [[nodiscard]] int size() const { return 5 * horizon; }
  [[nodiscard]] int control(int k) const { return 3 * k; }
  [[nodiscard]] int robot_slack(int k) const { return 3 * horizon + k; }
  [[nodiscard]] int user_slack(int k) const { return 4 * horizon + k; }
};

/// Condensed QP over the decision vector. States are eliminated through the
/// dynamics with headings frozen at the nominal trajectory. An empty `refs`
/// drops the tracking term. User rows are left out when kappa2 == 0, and
/// their slacks are pinned to zero.
QpProblem build_qp(const Pose2D& x0, const VelocityCommand& u_prev, std::span<const Pose2D> refs,
                   const VelocityCommand& v_tgt, std::span<const CbfConstraintRow> constraints,
                   const Nominal& nominal, const PlannerConfig& config);

enum class PlanStatus {
  Optimal,   // QP solved and the barrier condition holds on the nonlinear model
  Inexact,   // QP solved but relinearization left a residual barrier violation
  Degraded,  // QP infeasible or out of iterations; best iterate applied
  NoPath,    // global planner found no route; zero command
};

std::string_view to_string(PlanStatus s);

struct PlannerInput {
  Pose2D x0;
  VelocityCommand u_prev;
  VelocityCommand v_tgt;
  /// Static occupancy map for the global planner (not inflated). May be null
  /// when no goal is set.
  std::shared_ptr<const BinaryGrid> grid;
  std::optional<Point2D> goal;
  /// Per obstacle: ellipse at steps 0..Z.
  std::vector<std::vector<Ellipse>> obstacles;
};

struct PlanDiagnostics {
  PlanStatus status{PlanStatus::Optimal};
  QpStatus qp_status{QpStatus::Optimal};
  int qp_iterations{0};
  int sqp_rounds{0};
  double kkt_residual{0.0};
  double solve_micros{0.0};
  /// Smallest barrier value over the considered obstacles at the current pose
  /// (1e3 when there are none).
  double h_min_robot{1e3};
  double h_min_user{1e3};
  /// Step-0 slacks and the largest slack over the horizon.
  double slack_robot{0.0};
  double slack_user{0.0};
  double slack_robot_max{0.0};
  double slack_user_max{0.0};
  /// Obstacles the constraints were built from (same layout as the input).
  std::vector<std::vector<Ellipse>> obstacles;
  Nominal predicted;
  std::vector<Pose2D> references;
};

struct PlanResult {
  VelocityCommand command;
  PlanDiagnostics diagnostics;
};

/// State carried between control steps: warm start and the cached route.
struct PlannerMemory {
  std::vector<VelocityCommand> warm_controls;
  std::shared_ptr<const BinaryGrid> route_grid;
  std::optional<Point2D> route_goal;
  std::shared_ptr<const BinaryGrid> inflated;
  std::optional<std::vector<Point2D>> route;  // nullopt: no path
};

/// One control step: route (re)planning when the goal or grid changes,
/// references, constraint linearization around the shifted previous solution,
/// QP solve and up to sqp_iterations relinearizations. The returned command
/// always satisfies the velocity bounds.
PlanResult plan_step(const PlannerInput& input, PlannerMemory& memory, const PlannerConfig& config);

class Planner {
 public:
  explicit Planner(PlannerConfig config);

  PlanResult step(const PlannerInput& input) { return plan_step(input, memory_, config_); }
  [[nodiscard]] const PlannerConfig& config() const { return config_; }
  [[nodiscard]] const PlannerMemory& memory() const { return memory_; }

 private:
  PlannerConfig config_;
  PlannerMemory memory_;
};

}  // namespace guidebot
