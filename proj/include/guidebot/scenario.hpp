#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "guidebot/force.hpp"
#include "guidebot/geometry.hpp"
#include "guidebot/perception.hpp"
#include "guidebot/planner/config.hpp"
#include "guidebot/tracking.hpp"

namespace guidebot {

inline constexpr int kScenarioSchemaVersion = 1;

/// Thrown for anything wrong with a scenario file or override.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WorldBounds {
  double x_min{-5.0};
  double y_min{-5.0};
  double x_max{25.0};
  double y_max{5.0};
  /// Cell size of the global occupancy map used by A*.
  double resolution{0.1};
};

/// Moves along the polyline at constant speed once time reaches start_time,
/// turning instantly at waypoints, and stays at the last waypoint (or starts
/// over when loop is set).
struct DynamicObstacle {
  double a{0.3};
  double b{0.3};
  double theta{0.0};
  double speed{1.0};
  double start_time{0.0};
  std::vector<Point2D> waypoints;
  bool loop{false};
};

struct ForcePulse {
  double t_start{0.0};
  double duration{0.0};
  Wrench2D wrench;
};

struct ModeFlags {
  bool fc{true};
  bool gn{true};
  bool oa{true};
};

struct SensorConfig {
  /// Lattice spacing for obstacle points (boundary and interior), meters.
  double point_spacing{0.05};
  double noise_sigma{0.0};
  double obstacle_height{0.5};
  int ground_points{300};
  double ground_height{0.02};
};

struct ScenarioConfig {
  int schema_version{kScenarioSchemaVersion};
  std::string name{"scenario"};
  WorldBounds world;
  double dt{0.1};
  double duration{30.0};
  Pose2D robot_start;
  std::optional<Point2D> goal;
  /// When false the run succeeds by surviving until `duration`.
  bool require_goal{true};
  double goal_tolerance{0.3};
  ModeFlags modes;
  std::vector<Ellipse> static_obstacles;
  std::vector<DynamicObstacle> dynamic_obstacles;
  std::vector<ForcePulse> force_script;
  PlannerConfig planner;
  PerceptionConfig perception;
  TrackingConfig tracking;
  ForceConfig force;
  SensorConfig sensor;
  double robot_radius{0.25};
  double user_radius{0.25};
  /// Continuous degraded-solver time that fails the run.
  double watchdog_seconds{5.0};
  std::uint64_t seed{1};

  /// Throws ConfigError on any violated invariant.
  void validate() const;
};

nlohmann::json scenario_to_json(const ScenarioConfig& cfg);
/// Missing keys take their defaults; unknown keys are rejected.
ScenarioConfig scenario_from_json(const nlohmann::json& j);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Applies "dotted.key=value" assignments on top of the fully populated
/// configuration. The key must already exist; the value is parsed as JSON and
/// falls back to a plain string.
ScenarioConfig apply_overrides(const ScenarioConfig& cfg, std::span<const std::string> assignments);

/// Wrench the script applies at time t (zero outside every pulse).
Wrench2D scripted_wrench(std::span<const ForcePulse> script, double t);

}  // namespace guidebot
