#include "guidebot/service/live_session.hpp"

#include <cmath>
#include <limits>

#include "guidebot/planner/astar.hpp"

namespace guidebot {

using nlohmann::json;

namespace {

json error_reply(const std::string& detail) { return {{"type", "error"}, {"detail", detail}}; }

double number_or(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw std::invalid_argument(std::string("field '") + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw std::invalid_argument(std::string("field '") + key + "' must be finite");
  return x;
}

bool bool_or(const json& obj, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean()) throw std::invalid_argument(std::string("field '") + key + "' must be a boolean");
  return obj.at(key).get<bool>();
}

const json& object_field(const json& msg, const char* key) {
  if (!msg.contains(key) || !msg.at(key).is_object()) {
    throw std::invalid_argument(std::string("missing object field '") + key + "'");
  }
  return msg.at(key);
}

}  // namespace

Wrench2D ForceHold::at(double t) const {
  const double since = t - start;
  if (since < 0.0) return {};
  double scale = 1.0;
  if (since > hold_s) scale = std::max(0.0, 1.0 - (since - hold_s) / kForceDecaySeconds);
  return {scale * wrench.fx, scale * wrench.fy, scale * wrench.mz};
}

LiveSession::LiveSession(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
  // A live session runs until someone stops it.
  cfg_.duration = std::numeric_limits<double>::max();
  cfg_.require_goal = false;
  reset();
}

void LiveSession::reset() {
  sim_ = std::make_unique<Simulation>(cfg_);
  force_.reset();
  paused_ = false;
}

std::optional<std::string> LiveSession::validate_goal(Point2D goal) const {
  const auto& grid = sim_->global_grid();
  const auto inflated = inflate(*grid, cfg_.robot_radius + cfg_.planner.d_safe1);
  const auto cell = inflated.spec.cell_of(goal);
  if (!cell || inflated.occupied(*cell)) return "unreachable-goal";
  Point2D start = sim_->world().robot.position();
  const auto sc = inflated.spec.cell_of(start);
  if (!sc || inflated.occupied(*sc)) {
    const auto free = nearest_free(inflated, start);
    if (!free) return "unreachable-goal";
    start = *free;
  }
  if (!astar(inflated, start, goal)) return "unreachable-goal";
  return std::nullopt;
}

std::optional<json> LiveSession::handle_command(const std::string& text) {
  json msg;
  try {
    msg = json::parse(text);
  } catch (const json::parse_error& e) {
    return error_reply(std::string("malformed JSON: ") + e.what());
  }
  return handle_command(msg);
}

std::optional<json> LiveSession::handle_command(const json& msg) {
  if (!msg.is_object() || !msg.contains("type") || !msg.at("type").is_string()) {
    return error_reply("message must be an object with a string 'type'");
  }
  const std::string type = msg.at("type").get<std::string>();
  try {
    if (type == "force") {
      const json& f = object_field(msg, "force");
      ForceHold hold;
      hold.wrench = {number_or(f, "fx", 0.0), number_or(f, "fy", 0.0), number_or(f, "mz", 0.0)};
      const double hold_ms = number_or(f, "hold_ms", 250.0);
      if (hold_ms < 0.0) return error_reply("hold_ms must be >= 0");
      hold.hold_s = hold_ms / 1000.0;
      hold.start = time();
      force_ = hold;
    } else if (type == "goal") {
      const json& g = object_field(msg, "goal");
      const Point2D goal{number_or(g, "x", std::nan("")), number_or(g, "y", std::nan(""))};
      if (!std::isfinite(goal.x) || !std::isfinite(goal.y)) return error_reply("goal needs x and y");
      if (auto err = validate_goal(goal)) return error_reply(*err);
      sim_->set_goal(goal);
    } else if (type == "pause") {
      paused_ = true;
    } else if (type == "resume") {
      paused_ = false;
    } else if (type == "reset") {
      reset();
    } else if (type == "mode") {
      const json& m = object_field(msg, "mode");
      ModeFlags modes = sim_->config().modes;
      modes.fc = bool_or(m, "fc", modes.fc);
      modes.gn = bool_or(m, "gn", modes.gn);
      modes.oa = bool_or(m, "oa", modes.oa);
      sim_->set_modes(modes);
    } else {
      return error_reply("unknown command type '" + type + "'");
    }
  } catch (const std::invalid_argument& e) {
    return error_reply(e.what());
  }
  return std::nullopt;
}

json LiveSession::tick() {
  if (!paused_ && !sim_->finished()) {
    if (force_) sim_->set_external_wrench(force_->at(time()));
    sim_->tick();
  }
  return snapshot();
}

json LiveSession::snapshot() const {
  const auto& w = sim_->world();
  const auto& force = sim_->force();
  const auto& diag = sim_->last_plan().diagnostics;
  json obstacles = json::array();
  const int horizon = sim_->config().planner.horizon;
  for (const auto& t : sim_->tracks()) {
    json pred = json::array();
    for (const auto& e : predict_trajectory(t, horizon, sim_->config().dt)) pred.push_back({{"x", e.center.x}, {"y", e.center.y}});
    const Ellipse e = t.ellipse();
    obstacles.push_back({{"id", t.id}, {"x", e.center.x}, {"y", e.center.y}, {"a", e.a}, {"b", e.b},
                         {"theta", e.theta}, {"pred", pred}});
  }
  json path = json::array();
  for (const auto& p : sim_->route()) path.push_back({{"x", p.x}, {"y", p.y}});
  std::string status;
  if (sim_->finished()) {
    status = "finished:" + std::string(to_string(sim_->summary().cause));
  } else if (paused_) {
    status = "paused";
  } else {
    status = std::string(to_string(diag.status));
  }
  const VelocityCommand v_tgt = sim_->config().modes.fc ? force.v_tgt : VelocityCommand{};
  return {{"type", "snapshot"},
          {"t", w.time},
          {"robot", {{"x", w.robot.x}, {"y", w.robot.y}, {"theta", w.robot.theta}, {"vx", w.velocity.vx},
                     {"vy", w.velocity.vy}, {"wz", w.velocity.wz}}},
          {"user", {{"x", w.user.x}, {"y", w.user.y}}},
          {"obstacles", obstacles},
          {"wrench_est", {{"fx", force.wrench.fx}, {"fy", force.wrench.fy}, {"mz", force.wrench.mz}}},
          {"v_tgt", {{"vx", v_tgt.vx}, {"vy", v_tgt.vy}, {"wz", v_tgt.wz}}},
          {"h_min", {{"robot", diag.h_min_robot}, {"user", diag.h_min_user}}},
          {"path", path},
          {"status", status}};
}

}  // namespace guidebot
