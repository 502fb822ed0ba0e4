#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <deque>
#include <random>
#include <utility>

#include "guidebot/geometry.hpp"

namespace guidebot {

struct Wrench2D {
  double fx{0.0};  // N
  double fy{0.0};  // N
  double mz{0.0};  // N m

  friend bool operator==(const Wrench2D&, const Wrench2D&) = default;
};

/// Exponentially weighted recursive least squares over a generic dimension.
struct RlsState {
  Eigen::VectorXd estimate;
  Eigen::MatrixXd covariance;
  double alpha{0.98};
  /// Set when the last step had to regularize a singular inner matrix.
  bool regularized{false};

  /// Zero estimate, covariance p0 * I. Throws on n < 1, p0 <= 0 or alpha outside (0, 1].
  static RlsState make(int n, double alpha, double p0);
};

/// One RLS update for tau_obs = regressor * A. The regressor plays the
/// transposed-Jacobian role. Throws std::invalid_argument on dimension mismatch.
RlsState rls_step(const RlsState& state, const Eigen::MatrixXd& regressor, const Eigen::VectorXd& tau_obs);

/// Base-frame planar wrench from an estimate vector. A 3-vector is taken as
/// (fx, fy, mz) directly; longer vectors must hold a 6-row base block
/// (fx, fy, fz, mx, my, mz) first. Other sizes throw std::invalid_argument.
Wrench2D extract_base_wrench(const Eigen::VectorXd& estimate);

/// Ring buffer of the last `capacity` wrench samples with their time steps.
class ImpulseBuffer {
 public:
  ImpulseBuffer(std::size_t capacity, double gamma);

  void push(const Wrench2D& w, double dt);
  void clear() { samples_.clear(); }
  [[nodiscard]] bool empty() const { return samples_.empty(); }
  [[nodiscard]] std::size_t size() const { return samples_.size(); }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  [[nodiscard]] double gamma() const { return gamma_; }
  /// Oldest first.
  [[nodiscard]] const std::deque<std::pair<Wrench2D, double>>& samples() const { return samples_; }

 private:
  std::size_t capacity_;
  double gamma_;
  std::deque<std::pair<Wrench2D, double>> samples_;
};

/// Discounted impulse: the newest sample has weight 1, each older one gamma
/// times the next. Throws std::invalid_argument on an empty buffer.
Eigen::Vector3d accumulate_impulse(const ImpulseBuffer& buffer);

struct InertiaParams {
  double m{50.0};
  double jz{8.0};
};

struct Deadband {
  double force{5.0};   // N
  double moment{2.0};  // N m
};

/// v0 + W^-1 L with W = diag(m, m, jz); zero when both the force magnitude
/// and the moment of `current` are below the deadband.
VelocityCommand compliance_velocity(const Eigen::Vector3d& impulse, const VelocityCommand& v0,
                                    const InertiaParams& inertia, const Deadband& deadband,
                                    const Wrench2D& current);

struct FixtureParams {
  InertiaParams inertia;
  double damping_linear{10.0};   // N s/m
  double damping_angular{4.0};   // N m s
};

struct FixtureState {
  Pose2D pose;
  VelocityCommand velocity;  // body frame
};

struct FixtureStep {
  FixtureState state;
  Eigen::Vector3d acceleration;
  Eigen::Vector3d tau_obs;
  Eigen::Matrix3d regressor;
};

/// Planar rigid body under an applied body-frame wrench and viscous damping,
/// integrated with semi-implicit Euler. tau_obs = W * accel + D * v equals the
/// applied wrench, so a noiseless RLS chain recovers it exactly.
FixtureStep planar_fixture_step(const FixtureState& state, const Wrench2D& applied, const FixtureParams& params,
                                double dt);

struct ForceConfig {
  double alpha{0.98};
  double p0{1e3};
  int window{20};          // N_r
  double rate_hz{50.0};
  double gamma{0.9};
  Deadband deadband;
  FixtureParams fixture;
  double noise_sigma{0.0};  // N (and N m) added to tau_obs
};

struct ForceSnapshot {
  Wrench2D wrench;
  Eigen::Vector3d impulse{Eigen::Vector3d::Zero()};
  VelocityCommand v_tgt;
  bool regularized{false};
};

/// Fixture, RLS, impulse window and the robot velocity history wired together.
class ForceEstimator {
 public:
  explicit ForceEstimator(const ForceConfig& cfg, std::uint64_t seed = 0);

  /// Advances the estimator by `period` seconds (rounded to whole estimator
  /// steps, at least one) while the user applies `applied`. `robot_velocity`
  /// is the current body velocity of the robot.
  const ForceSnapshot& advance(const Wrench2D& applied, const VelocityCommand& robot_velocity, double period);

  [[nodiscard]] const ForceSnapshot& snapshot() const { return snapshot_; }
  [[nodiscard]] const RlsState& rls() const { return rls_; }
  [[nodiscard]] const ForceConfig& config() const { return cfg_; }

 private:
  ForceConfig cfg_;
  RlsState rls_;
  ImpulseBuffer impulses_;
  FixtureState fixture_;
  std::deque<VelocityCommand> velocity_history_;
  std::mt19937_64 rng_;
  ForceSnapshot snapshot_;
};

}  // namespace guidebot
