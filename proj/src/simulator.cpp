#include "guidebot/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "guidebot/planner/astar.hpp"

namespace guidebot {
namespace {

constexpr double kNoObstacle = 1e3;

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

std::string_view to_string(FailureCause c) {
  switch (c) {
    case FailureCause::None: return "none";
    case FailureCause::Collision: return "collision";
    case FailureCause::Infeasible: return "infeasible";
    case FailureCause::Timeout: return "timeout";
    case FailureCause::NoPath: return "no_path";
  }
  return "unknown";
}

Point2D scripted_position(const DynamicObstacle& d, double t) {
  const auto& wp = d.waypoints;
  if (wp.empty()) throw std::invalid_argument("scripted_position: no waypoints");
  if (wp.size() == 1 || t <= d.start_time || d.speed == 0.0) return wp.front();
  std::vector<Point2D> pts = wp;
  if (d.loop) pts.push_back(wp.front());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) total += distance(pts[i], pts[i + 1]);
  double s = d.speed * (t - d.start_time);
  if (d.loop && total > 0.0) {
    s = std::fmod(s, total);
  } else if (s >= total) {
    return pts.back();
  }
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double len = distance(pts[i], pts[i + 1]);
    if (s <= len && len > 0.0) {
      const double f = s / len;
      return {pts[i].x + f * (pts[i + 1].x - pts[i].x), pts[i].y + f * (pts[i + 1].y - pts[i].y)};
    }
    s -= len;
  }
  return pts.back();
}

WorldState initial_world(const ScenarioConfig& cfg) {
  WorldState w;
  w.robot = cfg.robot_start;
  w.robot.theta = wrap_angle(w.robot.theta);
  w.rod_length = cfg.planner.rod_length;
  w.user = user_position(w.robot, w.rod_length);
  int id = 0;
  for (const auto& e : cfg.static_obstacles) w.obstacles.push_back({id++, e, std::nullopt});
  for (const auto& d : cfg.dynamic_obstacles) {
    w.obstacles.push_back({id++, Ellipse{scripted_position(d, 0.0), d.a, d.b, d.theta}, d});
  }
  return w;
}

WorldState step_world(const WorldState& state, const VelocityCommand& command, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_world: dt must be positive");
  WorldState next = state;
  const double c = std::cos(state.robot.theta);
  const double s = std::sin(state.robot.theta);
  next.robot.x = state.robot.x + dt * (c * command.vx - s * command.vy);
  next.robot.y = state.robot.y + dt * (s * command.vx + c * command.vy);
  next.robot.theta = wrap_angle(state.robot.theta + dt * command.wz);
  next.velocity = command;
  next.time = state.time + dt;
  for (auto& o : next.obstacles) {
    if (o.script) o.ellipse.center = scripted_position(*o.script, next.time);
  }
  next.user = user_position(next.robot, next.rod_length);
  return next;
}

std::vector<Point3D> synth_scan(const WorldState& state, const SensorConfig& sensor, double window,
                                std::mt19937_64& rng) {
  std::vector<Point3D> cloud;
  const double half = 0.5 * window;
  const Point2D rc = state.robot.position();
  std::normal_distribution<double> noise(0.0, 1.0);
  auto emit = [&](double x, double y, double z) {
    if (sensor.noise_sigma > 0.0) {
      x += sensor.noise_sigma * noise(rng);
      y += sensor.noise_sigma * noise(rng);
    }
    if (std::abs(x - rc.x) <= half && std::abs(y - rc.y) <= half) cloud.push_back({x, y, z});
  };
  for (const auto& o : state.obstacles) {
    const Ellipse& e = o.ellipse;
    if (std::abs(e.center.x - rc.x) > half + e.a || std::abs(e.center.y - rc.y) > half + e.a) continue;
    const double c = std::cos(e.theta);
    const double s = std::sin(e.theta);
    auto place = [&](double u, double v) { emit(e.center.x + c * u - s * v, e.center.y + s * u + c * v, sensor.obstacle_height); };
    const double sp = sensor.point_spacing;
    for (double u = -e.a; u <= e.a + 1e-12; u += sp) {
      for (double v = -e.b; v <= e.b + 1e-12; v += sp) {
        if ((u / e.a) * (u / e.a) + (v / e.b) * (v / e.b) <= 1.0) place(u, v);
      }
    }
    // Ramanujan's perimeter approximation sets the boundary sample count.
    const double perim = kPi * (3.0 * (e.a + e.b) - std::sqrt((3.0 * e.a + e.b) * (e.a + 3.0 * e.b)));
    const int n = std::max(8, static_cast<int>(std::ceil(perim / sp)));
    for (int i = 0; i < n; ++i) {
      const double phi = 2.0 * kPi * i / n;
      place(e.a * std::cos(phi), e.b * std::sin(phi));
    }
  }
  std::uniform_real_distribution<double> coord(-half, half);
  for (int i = 0; i < sensor.ground_points; ++i) {
    const double x = rc.x + coord(rng);
    const double y = rc.y + coord(rng);
    cloud.push_back({x, y, sensor.ground_height});
  }
  return cloud;
}

double surface_clearance(Point2D p, double radius, std::span<const ObstacleState> obstacles) {
  double best = kNoObstacle;
  for (const auto& o : obstacles) best = std::min(best, ellipse_signed_distance(o.ellipse, p) - radius);
  return best;
}

double radial_clearance(Point2D p, std::span<const ObstacleState> obstacles) {
  double best = kNoObstacle;
  for (const auto& o : obstacles) {
    const double d = distance(p, o.ellipse.center);
    best = std::min(best, d > 0.0 ? d - ellipse_boundary_distance(o.ellipse, p) : -o.ellipse.b);
  }
  return best;
}

Simulation::Simulation(ScenarioConfig cfg)
    : cfg_([&] {
        cfg.planner.dt = cfg.dt;
        cfg.planner.robot_radius = cfg.robot_radius;
        cfg.validate();
        return std::move(cfg);
      }()),
      world_(initial_world(cfg_)),
      estimator_(cfg_.force, cfg_.seed * 2 + 1),
      tracker_(cfg_.tracking),
      planner_cfg_(cfg_.planner),
      scan_rng_(cfg_.seed) {
  const auto& w = cfg_.world;
  GridSpec spec;
  spec.resolution = w.resolution;
  spec.origin = {w.x_min, w.y_min};
  spec.width = static_cast<int>(std::ceil((w.x_max - w.x_min) / w.resolution));
  spec.height = static_cast<int>(std::ceil((w.y_max - w.y_min) / w.resolution));
  grid_ = std::make_shared<const BinaryGrid>(rasterize_ellipses(spec, cfg_.static_obstacles));
  summary_.name = cfg_.name;
  apply_modes();
  const Point2D ur = world_.robot.position();
  summary_.min_surface_robot = surface_clearance(ur, cfg_.robot_radius, world_.obstacles);
  summary_.min_surface_user = surface_clearance(world_.user, cfg_.user_radius, world_.obstacles);
  summary_.min_clearance_robot = radial_clearance(ur, world_.obstacles);
  summary_.min_clearance_user = radial_clearance(world_.user, world_.obstacles);
}

void Simulation::apply_modes() {
  planner_cfg_.global_navigation = cfg_.modes.gn;
  planner_cfg_.obstacle_avoidance = cfg_.modes.oa;
}

void Simulation::set_modes(const ModeFlags& modes) {
  cfg_.modes = modes;
  apply_modes();
}

void Simulation::set_goal(std::optional<Point2D> goal) { cfg_.goal = goal; }

std::vector<Point2D> Simulation::route() const {
  if (planner_memory_.route && cfg_.modes.gn && cfg_.goal) return *planner_memory_.route;
  return {};
}

void Simulation::finish(FailureCause cause, bool success) {
  finished_ = true;
  summary_.success = success;
  summary_.cause = cause;
  summary_.completion_time = world_.time;
}

bool Simulation::tick() {
  if (finished_) return false;
  const double dt = cfg_.dt;

  const Wrench2D applied = external_wrench_ ? *external_wrench_ : scripted_wrench(cfg_.force_script, world_.time);
  world_.applied_wrench = applied;
  const auto& snap = estimator_.advance(applied, world_.velocity, dt);
  const VelocityCommand v_tgt = cfg_.modes.fc ? snap.v_tgt : VelocityCommand{};

  const auto t_perc = std::chrono::steady_clock::now();
  std::vector<std::vector<Ellipse>> predictions;
  if (cfg_.modes.oa) {
    const auto cloud = synth_scan(world_, cfg_.sensor, cfg_.perception.window, scan_rng_);
    const auto perc = perceive(cloud, world_.robot.position(), cfg_.perception);
    tracker_.update(perc.ellipses, dt);
    for (const auto& track : tracker_.tracks()) {
      std::vector<Ellipse> seq{track.ellipse()};
      const auto ahead = predict_trajectory(track, planner_cfg_.horizon, dt);
      seq.insert(seq.end(), ahead.begin(), ahead.end());
      predictions.push_back(std::move(seq));
    }
  }
  perception_ms_total_ += elapsed_ms(t_perc);

  const auto t_plan = std::chrono::steady_clock::now();
  PlannerInput input;
  input.x0 = world_.robot;
  input.u_prev = last_command_;
  input.v_tgt = v_tgt;
  input.grid = grid_;
  input.goal = cfg_.goal;
  input.obstacles = std::move(predictions);
  last_plan_ = plan_step(input, planner_memory_, planner_cfg_);
  plan_ms_total_ += elapsed_ms(t_plan);
  const auto& diag = last_plan_.diagnostics;

  const WorldState next = step_world(world_, last_plan_.command, dt);

  if (diag.status == PlanStatus::Optimal) {
    const double decay = 1.0 - planner_cfg_.beta;
    for (const Agent agent : {Agent::Robot, Agent::User}) {
      if (agent == Agent::User && !planner_cfg_.user_constraints()) continue;
      const double slack = agent == Agent::Robot ? diag.slack_robot : diag.slack_user;
      if (slack > 1e-9) continue;
      const double d_safe = agent == Agent::Robot ? planner_cfg_.d_safe1 : planner_cfg_.d_safe2;
      for (const auto& obs : diag.obstacles) {
        const Point2D p0 = agent_position(agent, world_.robot, planner_cfg_.rod_length);
        const Point2D p1 = agent_position(agent, next.robot, planner_cfg_.rod_length);
        if (distance(p0, obs[0].center) == 0.0 || distance(p1, obs[1].center) == 0.0) continue;
        const double h0 = cbf_value(p0, obs[0], d_safe);
        if (!(h0 > 0.0)) continue;
        const double margin = cbf_value(p1, obs[1], d_safe) - decay * h0;
        ++summary_.invariance_checks;
        summary_.worst_invariance_margin = std::min(summary_.worst_invariance_margin, margin);
        if (margin < -1e-6) ++summary_.invariance_violations;
      }
    }
  }

  summary_.path_length += distance(world_.robot.position(), next.robot.position());
  world_ = next;
  last_command_ = last_plan_.command;
  ++summary_.steps;
  if (diag.status == PlanStatus::Degraded) ++summary_.degraded_steps;
  if (diag.status == PlanStatus::Inexact) ++summary_.inexact_steps;

  StepRecord rec;
  rec.t = world_.time;
  rec.pose = world_.robot;
  rec.command = last_plan_.command;
  rec.wrench_est = snap.wrench;
  rec.v_tgt = v_tgt;
  rec.hmin_robot = diag.h_min_robot;
  rec.hmin_user = diag.h_min_user;
  rec.dmin_robot = surface_clearance(world_.robot.position(), cfg_.robot_radius, world_.obstacles);
  rec.dmin_user = surface_clearance(world_.user, cfg_.user_radius, world_.obstacles);
  rec.slack1 = diag.slack_robot;
  rec.slack2 = diag.slack_user;
  rec.status = diag.status;
  steps_.push_back(rec);

  summary_.min_surface_robot = std::min(summary_.min_surface_robot, rec.dmin_robot);
  summary_.min_surface_user = std::min(summary_.min_surface_user, rec.dmin_user);
  summary_.min_clearance_robot =
      std::min(summary_.min_clearance_robot, radial_clearance(world_.robot.position(), world_.obstacles));
  summary_.min_clearance_user = std::min(summary_.min_clearance_user, radial_clearance(world_.user, world_.obstacles));
  summary_.mean_plan_ms = plan_ms_total_ / summary_.steps;
  summary_.mean_perception_ms = perception_ms_total_ / summary_.steps;

  if (rec.dmin_robot <= 0.0 || rec.dmin_user <= 0.0) {
    finish(FailureCause::Collision, false);
  } else if (diag.status == PlanStatus::NoPath && cfg_.require_goal) {
    finish(FailureCause::NoPath, false);
  } else if (cfg_.goal && cfg_.modes.gn && distance(world_.robot.position(), *cfg_.goal) <= cfg_.goal_tolerance) {
    summary_.goal_reached = true;
    finish(FailureCause::None, true);
  } else {
    if (diag.status == PlanStatus::Degraded) {
      if (degraded_since_ < 0.0) degraded_since_ = world_.time - dt;
    } else {
      degraded_since_ = -1.0;
    }
    if (degraded_since_ >= 0.0 && world_.time - degraded_since_ > cfg_.watchdog_seconds + 1e-9) {
      finish(FailureCause::Infeasible, false);
    } else if (world_.time >= cfg_.duration - 1e-9) {
      if (cfg_.require_goal) {
        finish(FailureCause::Timeout, false);
      } else {
        finish(FailureCause::None, true);
      }
    }
  }
  return !finished_;
}

RunResult Simulation::run() {
  while (tick()) {
  }
  return {summary_, steps_};
}

RunResult run_scenario(const ScenarioConfig& cfg) {
  Simulation sim(cfg);
  return sim.run();
}

void write_step_log(std::ostream& out, const std::vector<StepRecord>& steps) {
  out << kStepLogHeader << '\n';
  for (const auto& r : steps) {
    out << fmt::format("{:.3f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},"
                       "{:.6f},{:.6f},{:.6f},{:.6f},{:.9f},{:.9f},{}\n",
                       r.t, r.pose.x, r.pose.y, r.pose.theta, r.command.vx, r.command.vy, r.command.wz,
                       r.wrench_est.fx, r.wrench_est.fy, r.wrench_est.mz, r.v_tgt.vx, r.v_tgt.vy, r.v_tgt.wz,
                       r.hmin_robot, r.hmin_user, r.dmin_robot, r.dmin_user, r.slack1, r.slack2,
                       to_string(r.status));
  }
}

nlohmann::json summary_to_json(const RunSummary& s) {
  return {{"name", s.name},
          {"success", s.success},
          {"failure_cause", std::string(to_string(s.cause))},
          {"completion_time", s.completion_time},
          {"goal_reached", s.goal_reached},
          {"steps", s.steps},
          {"path_length", s.path_length},
          {"min_surface_robot", s.min_surface_robot},
          {"min_surface_user", s.min_surface_user},
          {"min_clearance_robot", s.min_clearance_robot},
          {"min_clearance_user", s.min_clearance_user},
          {"invariance_checks", s.invariance_checks},
          {"invariance_violations", s.invariance_violations},
          {"worst_invariance_margin", s.worst_invariance_margin},
          {"mean_plan_ms", s.mean_plan_ms},
          {"mean_perception_ms", s.mean_perception_ms},
          {"degraded_steps", s.degraded_steps},
          {"inexact_steps", s.inexact_steps}};
}

}  // namespace guidebot
