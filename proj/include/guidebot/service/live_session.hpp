#pragma once

#include <memory>
#include <optional>
#include <string>

#include "json.hpp"

#include "guidebot/scenario.hpp"
#include "guidebot/simulator.hpp"

namespace guidebot {

/// Force commanded over the wire: held for hold_s of simulation time, then
/// ramped linearly to zero over kForceDecaySeconds.
struct ForceHold {
  Wrench2D wrench;
  double start{0.0};
  double hold_s{0.0};

  static constexpr double kForceDecaySeconds = 0.3;
  [[nodiscard]] Wrench2D at(double t) const;
};

/// The live simulation behind the websocket service. All state changes go
/// through handle_command or tick.
class LiveSession {
 public:
  explicit LiveSession(ScenarioConfig cfg);

  /// Parses and applies one command message. Returns an error reply
  /// ({"type":"error","detail":...}) when the message is rejected.
  std::optional<nlohmann::json> handle_command(const std::string& text);
  std::optional<nlohmann::json> handle_command(const nlohmann::json& msg);

  /// Advances the simulation one step unless paused or finished, then
  /// returns the snapshot for broadcasting.
  nlohmann::json tick();
  [[nodiscard]] nlohmann::json snapshot() const;

  [[nodiscard]] bool paused() const { return paused_; }
  [[nodiscard]] double time() const { return sim_->world().time; }
  [[nodiscard]] const Simulation& simulation() const { return *sim_; }

 private:
  void reset();
  std::optional<std::string> validate_goal(Point2D goal) const;

  ScenarioConfig cfg_;
  std::unique_ptr<Simulation> sim_;
  std::optional<ForceHold> force_;
  bool paused_{false};
};

}  // namespace guidebot
