#include "guidebot/force.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace guidebot {

RlsState RlsState::make(int n, double alpha, double p0) {
  if (n < 1) throw std::invalid_argument("RlsState: dimension must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("RlsState: alpha must lie in (0, 1]");
  if (!(p0 > 0.0)) throw std::invalid_argument("RlsState: p0 must be positive");
  RlsState s;
  s.estimate = Eigen::VectorXd::Zero(n);
  s.covariance = p0 * Eigen::MatrixXd::Identity(n, n);
  s.alpha = alpha;
  return s;
}

RlsState rls_step(const RlsState& state, const Eigen::MatrixXd& regressor, const Eigen::VectorXd& tau_obs) {
  const auto n = state.estimate.size();
  if (state.covariance.rows() != n || state.covariance.cols() != n || regressor.cols() != n ||
      regressor.rows() != tau_obs.size()) {
    throw std::invalid_argument("rls_step: dimension mismatch");
  }
  const Eigen::Index m = regressor.rows();
  const Eigen::MatrixXd& p = state.covariance;
  const Eigen::MatrixXd pht = p * regressor.transpose();
  Eigen::MatrixXd inner = state.alpha * Eigen::MatrixXd::Identity(m, m) + regressor * pht;

  RlsState out = state;
  out.regularized = false;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(inner);
  const double scale = inner.diagonal().cwiseAbs().maxCoeff();
  const double min_pivot = ldlt.vectorD().cwiseAbs().minCoeff();
  if (ldlt.info() != Eigen::Success || !(min_pivot > 1e-12 * std::max(scale, 1.0))) {
    inner += 1e-9 * Eigen::MatrixXd::Identity(m, m);
    ldlt.compute(inner);
    out.regularized = true;
  }
  // K = P H^T (alpha I + H P H^T)^-1, computed as a solve on the transpose.
  const Eigen::MatrixXd gain = ldlt.solve(pht.transpose()).transpose();
  out.estimate = state.estimate + gain * (tau_obs - regressor * state.estimate);
  Eigen::MatrixXd next = (p - gain * regressor * p) / state.alpha;
  out.covariance = 0.5 * (next + next.transpose());
  return out;
}

Wrench2D extract_base_wrench(const Eigen::VectorXd& estimate) {
  if (estimate.size() == 3) return {estimate(0), estimate(1), estimate(2)};
  if (estimate.size() >= 6) return {estimate(0), estimate(1), estimate(5)};
  throw std::invalid_argument("extract_base_wrench: estimate must have 3 or at least 6 rows");
}

ImpulseBuffer::ImpulseBuffer(std::size_t capacity, double gamma) : capacity_(capacity), gamma_(gamma) {
  if (capacity < 1) throw std::invalid_argument("ImpulseBuffer: capacity must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("ImpulseBuffer: gamma must lie in (0, 1]");
}

void ImpulseBuffer::push(const Wrench2D& w, double dt) {
  samples_.emplace_back(w, dt);
  while (samples_.size() > capacity_) samples_.pop_front();
}

Eigen::Vector3d accumulate_impulse(const ImpulseBuffer& buffer) {
  if (buffer.empty()) throw std::invalid_argument("accumulate_impulse: empty buffer");
  Eigen::Vector3d l = Eigen::Vector3d::Zero();
  double weight = 1.0;
  const auto& s = buffer.samples();
  for (auto it = s.rbegin(); it != s.rend(); ++it) {
    const auto& [w, dt] = *it;
    l += weight * dt * Eigen::Vector3d(w.fx, w.fy, w.mz);
    weight *= buffer.gamma();
  }
  return l;
}

VelocityCommand compliance_velocity(const Eigen::Vector3d& impulse, const VelocityCommand& v0,
                                    const InertiaParams& inertia, const Deadband& deadband,
                                    const Wrench2D& current) {
  if (!(inertia.m > 0.0) || !(inertia.jz > 0.0)) {
    throw std::invalid_argument("compliance_velocity: inertia must be positive");
  }
  const double f = std::hypot(current.fx, current.fy);
  if (f < deadband.force && std::abs(current.mz) < deadband.moment) return {};
  return {v0.vx + impulse(0) / inertia.m, v0.vy + impulse(1) / inertia.m, v0.wz + impulse(2) / inertia.jz};
}

FixtureStep planar_fixture_step(const FixtureState& state, const Wrench2D& applied, const FixtureParams& params,
                                double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("planar_fixture_step: dt must be positive");
  const Eigen::Vector3d w(params.inertia.m, params.inertia.m, params.inertia.jz);
  const Eigen::Vector3d d(params.damping_linear, params.damping_linear, params.damping_angular);
  const Eigen::Vector3d v(state.velocity.vx, state.velocity.vy, state.velocity.wz);
  const Eigen::Vector3d f(applied.fx, applied.fy, applied.mz);

  FixtureStep out;
  out.acceleration = (f - d.cwiseProduct(v)).cwiseQuotient(w);
  const Eigen::Vector3d v_new = v + dt * out.acceleration;
  out.tau_obs = w.cwiseProduct(out.acceleration) + d.cwiseProduct(v);
  out.regressor = Eigen::Matrix3d::Identity();

  out.state.velocity = {v_new(0), v_new(1), v_new(2)};
  const double c = std::cos(state.pose.theta);
  const double s = std::sin(state.pose.theta);
  out.state.pose.x = state.pose.x + dt * (c * v_new(0) - s * v_new(1));
  out.state.pose.y = state.pose.y + dt * (s * v_new(0) + c * v_new(1));
  out.state.pose.theta = wrap_angle(state.pose.theta + dt * v_new(2));
  return out;
}

ForceEstimator::ForceEstimator(const ForceConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      rls_(RlsState::make(3, cfg.alpha, cfg.p0)),
      impulses_(static_cast<std::size_t>(std::max(cfg.window, 1)), cfg.gamma),
      rng_(seed) {
  if (cfg.window < 1) throw std::invalid_argument("ForceConfig: window must be >= 1");
  if (!(cfg.rate_hz > 0.0)) throw std::invalid_argument("ForceConfig: rate_hz must be positive");
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) throw std::invalid_argument("ForceConfig: gamma must lie in (0, 1)");
  if (cfg.noise_sigma < 0.0) throw std::invalid_argument("ForceConfig: noise_sigma must be >= 0");
}

const ForceSnapshot& ForceEstimator::advance(const Wrench2D& applied, const VelocityCommand& robot_velocity,
                                             double period) {
  const double h = 1.0 / cfg_.rate_hz;
  const int steps = std::max(1, static_cast<int>(std::lround(period / h)));
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int i = 0; i < steps; ++i) {
    const auto step = planar_fixture_step(fixture_, applied, cfg_.fixture, h);
    fixture_ = step.state;
    Eigen::VectorXd tau = step.tau_obs;
    if (cfg_.noise_sigma > 0.0) {
      for (int j = 0; j < 3; ++j) tau(j) += cfg_.noise_sigma * noise(rng_);
    }
    rls_ = rls_step(rls_, step.regressor, tau);
    snapshot_.regularized = rls_.regularized;
    snapshot_.wrench = extract_base_wrench(rls_.estimate);
    impulses_.push(snapshot_.wrench, h);

    velocity_history_.push_back(robot_velocity);
    while (velocity_history_.size() > static_cast<std::size_t>(cfg_.window)) velocity_history_.pop_front();
  }
  snapshot_.impulse = accumulate_impulse(impulses_);
  snapshot_.v_tgt = compliance_velocity(snapshot_.impulse, velocity_history_.front(), cfg_.fixture.inertia,
                                        cfg_.deadband, snapshot_.wrench);
  return snapshot_;
}

}  // namespace guidebot
