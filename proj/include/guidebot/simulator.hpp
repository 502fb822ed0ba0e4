#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "guidebot/force.hpp"
#include "guidebot/perception.hpp"
#include "guidebot/planner/mpc.hpp"
#include "guidebot/scenario.hpp"
#include "guidebot/tracking.hpp"

namespace guidebot {

struct ObstacleState {
  int id{0};
  Ellipse ellipse;
  /// Empty for static obstacles.
  std::optional<DynamicObstacle> script;
};

struct WorldState {
  double time{0.0};
  Pose2D robot;
  VelocityCommand velocity;
  Point2D user;
  double rod_length{0.8};
  std::vector<ObstacleState> obstacles;
  Wrench2D applied_wrench;
};

/// Center of a scripted obstacle at time t.
Point2D scripted_position(const DynamicObstacle& d, double t);

WorldState initial_world(const ScenarioConfig& cfg);

/// Integrates the robot pose exactly for one step of constant body velocity
/// (headings stay wrapped), moves scripted obstacles to time + dt and
/// recomputes the user position.
WorldState step_world(const WorldState& state, const VelocityCommand& command, double dt);

/// Synthetic point cloud of every obstacle within the perception window
/// around the robot: boundary and interior lattice points at obstacle height
/// plus scattered ground returns below the height threshold, with seeded
/// isotropic noise.
std::vector<Point3D> synth_scan(const WorldState& state, const SensorConfig& sensor, double window,
                                std::mt19937_64& rng);

/// Signed distance from a disc of the given radius to the nearest obstacle
/// surface (1e3 when there are none).
double surface_clearance(Point2D p, double radius, std::span<const ObstacleState> obstacles);

/// Smallest center distance minus the obstacle's radial support toward p
/// (1e3 when there are none).
double radial_clearance(Point2D p, std::span<const ObstacleState> obstacles);

struct StepRecord {
  double t{0.0};
  Pose2D pose;
  VelocityCommand command;
  Wrench2D wrench_est;
  VelocityCommand v_tgt;
  double hmin_robot{1e3};
  double hmin_user{1e3};
  double dmin_robot{1e3};
  double dmin_user{1e3};
  double slack1{0.0};
  double slack2{0.0};
  PlanStatus status{PlanStatus::Optimal};
};

enum class FailureCause { None, Collision, Infeasible, Timeout, NoPath };

std::string_view to_string(FailureCause c);

struct RunSummary {
  std::string name;
  bool success{false};
  FailureCause cause{FailureCause::None};
  double completion_time{0.0};
  bool goal_reached{false};
  int steps{0};
  double path_length{0.0};
  double min_surface_robot{1e3};
  double min_surface_user{1e3};
  /// Ground-truth radial clearances (same measure the barrier uses, without d_safe).
  double min_clearance_robot{1e3};
  double min_clearance_user{1e3};
  int invariance_checks{0};
  int invariance_violations{0};
  double worst_invariance_margin{0.0};
  double mean_plan_ms{0.0};
  double mean_perception_ms{0.0};
  int degraded_steps{0};
  int inexact_steps{0};
};

struct RunResult {
  RunSummary summary;
  std::vector<StepRecord> steps;
};

/// Closed loop for one scenario. Each tick: force estimation, sensing and
/// tracking, planning, then the world step and bookkeeping.
class Simulation {
 public:
  explicit Simulation(ScenarioConfig cfg);

  /// Advances one tick; returns false once the run has ended.
  bool tick();
  /// Runs ticks until the run ends.
  RunResult run();

  [[nodiscard]] const WorldState& world() const { return world_; }
  [[nodiscard]] const ScenarioConfig& config() const { return cfg_; }
  [[nodiscard]] const RunSummary& summary() const { return summary_; }
  [[nodiscard]] const std::vector<StepRecord>& steps() const { return steps_; }
  [[nodiscard]] bool finished() const { return finished_; }
  [[nodiscard]] const ForceSnapshot& force() const { return estimator_.snapshot(); }
  [[nodiscard]] const std::vector<ObstacleTrack>& tracks() const { return tracker_.tracks(); }
  [[nodiscard]] const PlanResult& last_plan() const { return last_plan_; }
  /// Route of the global planner, empty when none.
  [[nodiscard]] std::vector<Point2D> route() const;

  /// Wrench used instead of the scenario script while set.
  void set_external_wrench(std::optional<Wrench2D> w) { external_wrench_ = w; }
  void set_goal(std::optional<Point2D> goal);
  void set_modes(const ModeFlags& modes);
  /// Static map the global planner searches (not inflated).
  [[nodiscard]] const std::shared_ptr<const BinaryGrid>& global_grid() const { return grid_; }

 private:
  void apply_modes();
  void finish(FailureCause cause, bool success);

  ScenarioConfig cfg_;
  WorldState world_;
  ForceEstimator estimator_;
  Tracker tracker_;
  PlannerConfig planner_cfg_;
  PlannerMemory planner_memory_;
  std::shared_ptr<const BinaryGrid> grid_;
  std::mt19937_64 scan_rng_;
  std::optional<Wrench2D> external_wrench_;
  VelocityCommand last_command_;
  PlanResult last_plan_;
  RunSummary summary_;
  std::vector<StepRecord> steps_;
  double degraded_since_{-1.0};
  double plan_ms_total_{0.0};
  double perception_ms_total_{0.0};
  bool finished_{false};
};

RunResult run_scenario(const ScenarioConfig& cfg);

inline constexpr const char* kStepLogHeader =
    "t,x,y,theta,vx,vy,wz,fx_est,fy_est,mz_est,vtgt_x,vtgt_y,vtgt_w,hmin_robot,hmin_user,dmin_robot,dmin_user,"
    "slack1,slack2,status";

void write_step_log(std::ostream& out, const std::vector<StepRecord>& steps);
nlohmann::json summary_to_json(const RunSummary& s);

}  // namespace guidebot
