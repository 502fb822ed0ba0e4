#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "guidebot/geometry.hpp"

namespace guidebot {

using TrackState = Eigen::Matrix<double, 9, 1>;
using TrackCovariance = Eigen::Matrix<double, 9, 9>;
using MeasurementVector = Eigen::Matrix<double, 5, 1>;
using MeasurementCovariance = Eigen::Matrix<double, 5, 5>;

/// Observation of one ellipse: [x, y, a, b, theta].
struct Measurement {
  MeasurementVector z;

  static Measurement from(const Ellipse& e);
};

/// State layout: [x, y, vx, vy, ax, ay, a, b, theta].
struct ObstacleTrack {
  int id{0};
  TrackState state{TrackState::Zero()};
  TrackCovariance covariance{TrackCovariance::Identity()};
  int missed_frames{0};

  [[nodiscard]] Ellipse ellipse() const;
  [[nodiscard]] Point2D velocity() const { return {state(2), state(3)}; }
};

struct Association {
  std::vector<std::pair<int, int>> matches;  // (prev index, current index)
  std::vector<int> unmatched_prev;
  std::vector<int> unmatched_cur;
};

/// Kuhn-Munkres assignment on center distances. Pairs farther apart than
/// d_max are forbidden; among admissible assignments the one with the most
/// matches wins, ties broken by smallest total distance.
Association associate(std::span<const Ellipse> prev, std::span<const Ellipse> cur, double d_max);

/// Solves a square assignment problem; returns the column assigned to each row.
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost);

struct TrackingConfig {
  double jerk_sigma{2.0};        // m/s^3, motion block
  double shape_sigma{0.05};      // per step, shape block
  double meas_pos_sigma{0.05};   // m
  double meas_shape_sigma{0.1};  // m
  double meas_theta_sigma{0.1};  // rad
  double derivative_variance{1e3};
  double d_max{1.0};
  int max_missed{5};
};

struct KalmanNoise {
  TrackCovariance process;
  MeasurementCovariance measurement;

  /// Piecewise-constant jerk on the motion block, random walk on the shape.
  static KalmanNoise from_config(const TrackingConfig& cfg, double dt);
  /// Throws std::invalid_argument unless both matrices are symmetric PSD.
  void validate() const;
};

/// Constant-acceleration transition with an identity shape block.
TrackCovariance transition_matrix(double dt);

/// Predict, then update with z when present. The theta innovation is wrapped
/// into (-pi/2, pi/2] because an ellipse is symmetric under a half turn.
ObstacleTrack kf_step(const ObstacleTrack& track, const std::optional<Measurement>& z, double dt,
                      const KalmanNoise& noise);

/// Open-loop prediction; element i is the ellipse i+1 steps ahead with the
/// shape frozen at the current estimate.
std::vector<Ellipse> predict_trajectory(const ObstacleTrack& track, int n_steps, double dt);

struct TrackSet {
  std::vector<ObstacleTrack> tracks;
  int next_id{1};
};

ObstacleTrack spawn_track(int id, const Ellipse& e, const TrackingConfig& cfg);

/// Applies one frame of associations: matched tracks are updated, missed ones
/// coast, stale ones (missed_frames > max_missed) are dropped, and unmatched
/// ellipses start new tracks.
TrackSet manage_tracks(TrackSet set, const Association& assoc, std::span<const Ellipse> current,
                       const TrackingConfig& cfg, double dt);

/// Owns the track set across frames.
class Tracker {
 public:
  explicit Tracker(TrackingConfig cfg = {}) : cfg_(cfg) {}

  void update(std::span<const Ellipse> ellipses, double dt);
  [[nodiscard]] const std::vector<ObstacleTrack>& tracks() const { return set_.tracks; }
  [[nodiscard]] const TrackingConfig& config() const { return cfg_; }
  void reset() { set_ = {}; }

 private:
  TrackingConfig cfg_;
  TrackSet set_;
};

}  // namespace guidebot
