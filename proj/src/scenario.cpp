#include "guidebot/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace guidebot {

using nlohmann::json;

namespace {

// Reads optional keys from one JSON object and rejects the ones nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  const json* sub(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  [[nodiscard]] std::string where(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown key '" + (path_.empty() ? k : path_ + "." + k) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Point2D point_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(where + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

json point_to(Point2D p) { return json::array({p.x, p.y}); }

Eigen::Matrix3d matrix_from(const json& j, const std::string& where) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  try {
    if (j.is_array() && j.size() == 3 && j[0].is_number()) {
      for (int i = 0; i < 3; ++i) m(i, i) = j[static_cast<std::size_t>(i)].get<double>();
      return m;
    }
    if (j.is_array() && j.size() == 3) {
      for (int r = 0; r < 3; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || row.size() != 3) throw ConfigError(where + ": expected a 3x3 matrix");
        for (int c = 0; c < 3; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
      }
      return m;
    }
  } catch (const json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ": expected a 3-element diagonal or a 3x3 matrix");
}

json matrix_to(const Eigen::Matrix3d& m) {
  if (m.isDiagonal(0.0)) return json::array({m(0, 0), m(1, 1), m(2, 2)});
  json rows = json::array();
  for (int r = 0; r < 3; ++r) rows.push_back(json::array({m(r, 0), m(r, 1), m(r, 2)}));
  return rows;
}

void read_matrix(ObjectReader& r, const char* key, Eigen::Matrix3d& out) {
  if (const json* j = r.sub(key)) out = matrix_from(*j, r.where(key));
}

Ellipse ellipse_from(const json& j, const std::string& where) {
  Ellipse e;
  ObjectReader r(j, where);
  r.get("x", e.center.x);
  r.get("y", e.center.y);
  r.get("a", e.a);
  r.get("b", e.b);
  r.get("theta", e.theta);
  r.finish();
  return e;
}

}  // namespace

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid scenario: " + what); };
  if (schema_version != kScenarioSchemaVersion) fail("unsupported schema_version " + std::to_string(schema_version));
  if (!(dt > 0.0)) fail("dt must be positive");
  if (!(duration > 0.0)) fail("duration must be positive");
  if (!(world.x_max > world.x_min) || !(world.y_max > world.y_min) || !(world.resolution > 0.0)) {
    fail("world bounds are empty or resolution is not positive");
  }
  auto inside = [&](Point2D p) {
    return p.x >= world.x_min && p.x <= world.x_max && p.y >= world.y_min && p.y <= world.y_max;
  };
  if (!inside(robot_start.position())) fail("robot_start lies outside the world");
  if (goal && !inside(*goal)) fail("goal lies outside the world");
  if (require_goal && !goal) fail("require_goal is set but no goal is given");
  if (!(goal_tolerance > 0.0)) fail("goal_tolerance must be positive");
  for (const auto& e : static_obstacles) {
    if (!(e.a > 0.0) || !(e.b > 0.0)) fail("static obstacle axes must be positive");
  }
  for (const auto& d : dynamic_obstacles) {
    if (!(d.a > 0.0) || !(d.b > 0.0)) fail("dynamic obstacle axes must be positive");
    if (!(d.speed >= 0.0)) fail("dynamic obstacle speed must be >= 0");
    if (d.waypoints.empty()) fail("dynamic obstacle needs at least one waypoint");
  }
  std::vector<ForcePulse> pulses = force_script;
  std::sort(pulses.begin(), pulses.end(), [](const auto& x, const auto& y) { return x.t_start < y.t_start; });
  for (std::size_t i = 0; i < pulses.size(); ++i) {
    if (!(pulses[i].duration >= 0.0)) fail("force pulse duration must be >= 0");
    if (i > 0 && pulses[i].t_start < pulses[i - 1].t_start + pulses[i - 1].duration) fail("force pulses overlap");
  }
  try {
    planner.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (std::abs(planner.dt - dt) > 1e-12) fail("planner dt must equal the scenario dt");
  if (!(perception.window > 0.0) || !(perception.resolution > 0.0) || !(perception.mvee_tolerance > 0.0) ||
      perception.clustering.k < 1 || perception.clustering.min_pts < 1) {
    fail("perception settings out of range");
  }
  if (!(tracking.d_max > 0.0) || tracking.max_missed < 0) fail("tracking settings out of range");
  if (!(force.alpha > 0.0 && force.alpha <= 1.0) || !(force.gamma > 0.0 && force.gamma < 1.0) || force.window < 1 ||
      !(force.p0 > 0.0) || !(force.rate_hz > 0.0) || !(force.fixture.inertia.m > 0.0) ||
      !(force.fixture.inertia.jz > 0.0) || force.noise_sigma < 0.0) {
    fail("force settings out of range");
  }
  if (!(sensor.point_spacing > 0.0) || sensor.noise_sigma < 0.0 || sensor.ground_points < 0) {
    fail("sensor settings out of range");
  }
  if (!(robot_radius > 0.0) || !(user_radius > 0.0)) fail("agent radii must be positive");
  if (!(watchdog_seconds > 0.0)) fail("watchdog_seconds must be positive");
}

json scenario_to_json(const ScenarioConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["name"] = c.name;
  j["world"] = {{"x_min", c.world.x_min}, {"y_min", c.world.y_min}, {"x_max", c.world.x_max},
                {"y_max", c.world.y_max}, {"resolution", c.world.resolution}};
  j["dt"] = c.dt;
  j["duration"] = c.duration;
  j["robot_start"] = {{"x", c.robot_start.x}, {"y", c.robot_start.y}, {"theta", c.robot_start.theta}};
  j["goal"] = c.goal ? point_to(*c.goal) : json(nullptr);
  j["require_goal"] = c.require_goal;
  j["goal_tolerance"] = c.goal_tolerance;
  j["modes"] = {{"fc", c.modes.fc}, {"gn", c.modes.gn}, {"oa", c.modes.oa}};
  j["static_obstacles"] = json::array();
  for (const auto& e : c.static_obstacles) {
    j["static_obstacles"].push_back({{"x", e.center.x}, {"y", e.center.y}, {"a", e.a}, {"b", e.b}, {"theta", e.theta}});
  }
  j["dynamic_obstacles"] = json::array();
  for (const auto& d : c.dynamic_obstacles) {
    json wp = json::array();
    for (const auto& p : d.waypoints) wp.push_back(point_to(p));
    j["dynamic_obstacles"].push_back({{"a", d.a}, {"b", d.b}, {"theta", d.theta}, {"speed", d.speed},
                                      {"start_time", d.start_time}, {"waypoints", wp}, {"loop", d.loop}});
  }
  j["force_script"] = json::array();
  for (const auto& p : c.force_script) {
    j["force_script"].push_back({{"t_start", p.t_start}, {"duration", p.duration}, {"fx", p.wrench.fx},
                                 {"fy", p.wrench.fy}, {"mz", p.wrench.mz}});
  }
  const auto& pl = c.planner;
  j["planner"] = {{"horizon", pl.horizon},
                  {"Q", matrix_to(pl.Q)},
                  {"Qf", matrix_to(pl.Qf)},
                  {"R", matrix_to(pl.R)},
                  {"S", matrix_to(pl.S)},
                  {"kappa1", pl.kappa1},
                  {"kappa2", pl.kappa2},
                  {"beta", pl.beta},
                  {"mu", pl.mu},
                  {"d_safe1", pl.d_safe1},
                  {"d_safe2", pl.d_safe2},
                  {"v_max", pl.v_max},
                  {"w_max", pl.w_max},
                  {"rod_length", pl.rod_length},
                  {"cruise_speed", pl.cruise_speed},
                  {"obstacle_range", pl.obstacle_range},
                  {"hard_constraints", pl.hard_constraints},
                  {"sqp_iterations", pl.sqp_iterations},
                  {"qp_tolerance", pl.qp_tolerance},
                  {"qp_max_iterations", pl.qp_max_iterations}};
  const auto& pc = c.perception;
  j["perception"] = {{"window", pc.window},
                     {"resolution", pc.resolution},
                     {"height_threshold", pc.height_threshold},
                     {"gradient_threshold", pc.gradient_threshold},
                     {"k", pc.clustering.k},
                     {"min_pts", pc.clustering.min_pts},
                     {"mvee_tolerance", pc.mvee_tolerance}};
  const auto& tc = c.tracking;
  j["tracking"] = {{"jerk_sigma", tc.jerk_sigma},
                   {"shape_sigma", tc.shape_sigma},
                   {"meas_pos_sigma", tc.meas_pos_sigma},
                   {"meas_shape_sigma", tc.meas_shape_sigma},
                   {"meas_theta_sigma", tc.meas_theta_sigma},
                   {"derivative_variance", tc.derivative_variance},
                   {"d_max", tc.d_max},
                   {"max_missed", tc.max_missed}};
  const auto& fc = c.force;
  j["force"] = {{"alpha", fc.alpha},
                {"p0", fc.p0},
                {"window", fc.window},
                {"rate_hz", fc.rate_hz},
                {"gamma", fc.gamma},
                {"deadband_force", fc.deadband.force},
                {"deadband_moment", fc.deadband.moment},
                {"mass", fc.fixture.inertia.m},
                {"inertia_z", fc.fixture.inertia.jz},
                {"damping_linear", fc.fixture.damping_linear},
                {"damping_angular", fc.fixture.damping_angular},
                {"noise_sigma", fc.noise_sigma}};
  const auto& sc = c.sensor;
  j["sensor"] = {{"point_spacing", sc.point_spacing},
                 {"noise_sigma", sc.noise_sigma},
                 {"obstacle_height", sc.obstacle_height},
                 {"ground_points", sc.ground_points},
                 {"ground_height", sc.ground_height}};
  j["robot_radius"] = c.robot_radius;
  j["user_radius"] = c.user_radius;
  j["watchdog_seconds"] = c.watchdog_seconds;
  j["seed"] = c.seed;
  return j;
}

ScenarioConfig scenario_from_json(const json& j) {
  ScenarioConfig c;
  ObjectReader r(j, "");
  r.get("schema_version", c.schema_version);
  r.get("name", c.name);
  if (const json* w = r.sub("world")) {
    ObjectReader rw(*w, "world");
    rw.get("x_min", c.world.x_min);
    rw.get("y_min", c.world.y_min);
    rw.get("x_max", c.world.x_max);
    rw.get("y_max", c.world.y_max);
    rw.get("resolution", c.world.resolution);
    rw.finish();
  }
  r.get("dt", c.dt);
  r.get("duration", c.duration);
  if (const json* s = r.sub("robot_start")) {
    ObjectReader rs(*s, "robot_start");
    rs.get("x", c.robot_start.x);
    rs.get("y", c.robot_start.y);
    rs.get("theta", c.robot_start.theta);
    rs.finish();
  }
  if (const json* g = r.sub("goal"); g && !g->is_null()) c.goal = point_from(*g, "goal");
  r.get("require_goal", c.require_goal);
  if (!j.contains("require_goal")) c.require_goal = c.goal.has_value();
  r.get("goal_tolerance", c.goal_tolerance);
  if (const json* m = r.sub("modes")) {
    ObjectReader rm(*m, "modes");
    rm.get("fc", c.modes.fc);
    rm.get("gn", c.modes.gn);
    rm.get("oa", c.modes.oa);
    rm.finish();
  }
  if (const json* so = r.sub("static_obstacles")) {
    if (!so->is_array()) throw ConfigError("static_obstacles: expected an array");
    for (std::size_t i = 0; i < so->size(); ++i) {
      c.static_obstacles.push_back(ellipse_from((*so)[i], "static_obstacles[" + std::to_string(i) + "]"));
    }
  }
  if (const json* dob = r.sub("dynamic_obstacles")) {
    if (!dob->is_array()) throw ConfigError("dynamic_obstacles: expected an array");
    for (std::size_t i = 0; i < dob->size(); ++i) {
      const std::string where = "dynamic_obstacles[" + std::to_string(i) + "]";
      DynamicObstacle d;
      ObjectReader rd((*dob)[i], where);
      rd.get("a", d.a);
      rd.get("b", d.b);
      rd.get("theta", d.theta);
      rd.get("speed", d.speed);
      rd.get("start_time", d.start_time);
      rd.get("loop", d.loop);
      if (const json* wp = rd.sub("waypoints")) {
        if (!wp->is_array()) throw ConfigError(where + ".waypoints: expected an array");
        for (const auto& p : *wp) d.waypoints.push_back(point_from(p, where + ".waypoints"));
      }
      rd.finish();
      c.dynamic_obstacles.push_back(std::move(d));
    }
  }
  if (const json* fs = r.sub("force_script")) {
    if (!fs->is_array()) throw ConfigError("force_script: expected an array");
    for (std::size_t i = 0; i < fs->size(); ++i) {
      ForcePulse p;
      ObjectReader rp((*fs)[i], "force_script[" + std::to_string(i) + "]");
      rp.get("t_start", p.t_start);
      rp.get("duration", p.duration);
      rp.get("fx", p.wrench.fx);
      rp.get("fy", p.wrench.fy);
      rp.get("mz", p.wrench.mz);
      rp.finish();
      c.force_script.push_back(p);
    }
  }
  if (const json* p = r.sub("planner")) {
    auto& pl = c.planner;
    ObjectReader rp(*p, "planner");
    rp.get("horizon", pl.horizon);
    read_matrix(rp, "Q", pl.Q);
    read_matrix(rp, "Qf", pl.Qf);
    read_matrix(rp, "R", pl.R);
    read_matrix(rp, "S", pl.S);
    rp.get("kappa1", pl.kappa1);
    rp.get("kappa2", pl.kappa2);
    rp.get("beta", pl.beta);
    rp.get("mu", pl.mu);
    rp.get("d_safe1", pl.d_safe1);
    rp.get("d_safe2", pl.d_safe2);
    rp.get("v_max", pl.v_max);
    rp.get("w_max", pl.w_max);
    rp.get("rod_length", pl.rod_length);
    rp.get("cruise_speed", pl.cruise_speed);
    rp.get("obstacle_range", pl.obstacle_range);
    rp.get("hard_constraints", pl.hard_constraints);
    rp.get("sqp_iterations", pl.sqp_iterations);
    rp.get("qp_tolerance", pl.qp_tolerance);
    rp.get("qp_max_iterations", pl.qp_max_iterations);
    rp.finish();
  }
  if (const json* p = r.sub("perception")) {
    auto& pc = c.perception;
    ObjectReader rp(*p, "perception");
    rp.get("window", pc.window);
    rp.get("resolution", pc.resolution);
    rp.get("height_threshold", pc.height_threshold);
    rp.get("gradient_threshold", pc.gradient_threshold);
    rp.get("k", pc.clustering.k);
    rp.get("min_pts", pc.clustering.min_pts);
    rp.get("mvee_tolerance", pc.mvee_tolerance);
    rp.finish();
  }
  if (const json* p = r.sub("tracking")) {
    auto& tc = c.tracking;
    ObjectReader rp(*p, "tracking");
    rp.get("jerk_sigma", tc.jerk_sigma);
    rp.get("shape_sigma", tc.shape_sigma);
    rp.get("meas_pos_sigma", tc.meas_pos_sigma);
    rp.get("meas_shape_sigma", tc.meas_shape_sigma);
    rp.get("meas_theta_sigma", tc.meas_theta_sigma);
    rp.get("derivative_variance", tc.derivative_variance);
    rp.get("d_max", tc.d_max);
    rp.get("max_missed", tc.max_missed);
    rp.finish();
  }
  if (const json* p = r.sub("force")) {
    auto& fc = c.force;
    ObjectReader rp(*p, "force");
    rp.get("alpha", fc.alpha);
    rp.get("p0", fc.p0);
    rp.get("window", fc.window);
    rp.get("rate_hz", fc.rate_hz);
    rp.get("gamma", fc.gamma);
    rp.get("deadband_force", fc.deadband.force);
    rp.get("deadband_moment", fc.deadband.moment);
    rp.get("mass", fc.fixture.inertia.m);
    rp.get("inertia_z", fc.fixture.inertia.jz);
    rp.get("damping_linear", fc.fixture.damping_linear);
    rp.get("damping_angular", fc.fixture.damping_angular);
    rp.get("noise_sigma", fc.noise_sigma);
    rp.finish();
  }
  if (const json* p = r.sub("sensor")) {
    auto& sc = c.sensor;
    ObjectReader rp(*p, "sensor");
    rp.get("point_spacing", sc.point_spacing);
    rp.get("noise_sigma", sc.noise_sigma);
    rp.get("obstacle_height", sc.obstacle_height);
    rp.get("ground_points", sc.ground_points);
    rp.get("ground_height", sc.ground_height);
    rp.finish();
  }
  r.get("robot_radius", c.robot_radius);
  r.get("user_radius", c.user_radius);
  r.get("watchdog_seconds", c.watchdog_seconds);
  r.get("seed", c.seed);
  r.finish();

  c.planner.dt = c.dt;
  c.planner.robot_radius = c.robot_radius;
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in '" + path.string() + "': " + e.what());
  }
  return scenario_from_json(j);
}

ScenarioConfig apply_overrides(const ScenarioConfig& cfg, std::span<const std::string> assignments) {
  if (assignments.empty()) return cfg;
  json j = scenario_to_json(cfg);
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + a + "' is not key=value");
    const std::string key = a.substr(0, eq);
    const std::string text = a.substr(eq + 1);
    json* node = &j;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) {
      if (node->is_object() && node->contains(part)) {
        node = &(*node)[part];
      } else if (node->is_array() && !part.empty() && std::all_of(part.begin(), part.end(), ::isdigit) &&
                 std::stoul(part) < node->size()) {
        node = &(*node)[std::stoul(part)];
      } else {
        throw ConfigError("override key '" + key + "' does not name a configuration entry");
      }
    }
    json value;
    try {
      value = json::parse(text);
    } catch (const json::parse_error&) {
      value = text;
    }
    *node = value;
  }
  return scenario_from_json(j);
}

Wrench2D scripted_wrench(std::span<const ForcePulse> script, double t) {
  for (const auto& p : script) {
    if (t >= p.t_start && t < p.t_start + p.duration) return p.wrench;
  }
  return {};
}

}  // namespace guidebot
