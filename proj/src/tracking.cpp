#include "guidebot/tracking.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace guidebot {
namespace {

double half_turn_wrap(double angle) {
  double t = wrap_angle(angle);
  if (t > kPi / 2) t -= kPi;
  if (t <= -kPi / 2) t += kPi;
  return t;
}

constexpr double kMinAxis = 1e-3;

void canonicalize_shape(TrackState& s) {
  s(6) = std::max(s(6), kMinAxis);
  s(7) = std::max(s(7), kMinAxis);
  if (s(7) > s(6)) {
    std::swap(s(6), s(7));
    s(8) += kPi / 2;
  }
  s(8) = half_turn_wrap(s(8));
}

Eigen::Matrix<double, 5, 9> observation_matrix() {
  Eigen::Matrix<double, 5, 9> h = Eigen::Matrix<double, 5, 9>::Zero();
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  h(2, 6) = 1.0;
  h(3, 7) = 1.0;
  h(4, 8) = 1.0;
  return h;
}

template <typename M>
bool symmetric_psd(const M& m) {
  if (!m.allFinite() || (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + m.cwiseAbs().maxCoeff())) {
    return false;
  }
  Eigen::SelfAdjointEigenSolver<M> eig(m);
  return eig.eigenvalues().minCoeff() >= -1e-12 * (1.0 + m.cwiseAbs().maxCoeff());
}

}  // namespace

Measurement Measurement::from(const Ellipse& e) {
  Measurement m;
  m.z << e.center.x, e.center.y, e.a, e.b, half_turn_wrap(e.theta);
  return m;
}

Ellipse ObstacleTrack::ellipse() const {
  return Ellipse{{state(0), state(1)}, state(6), state(7), state(8)};
}

std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
  // Shortest augmenting path with row/column potentials, O(n^3).
  const int n = static_cast<int>(cost.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                           u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) {
    if (p[static_cast<std::size_t>(j)] > 0) row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  }
  return row_to_col;
}

Association associate(std::span<const Ellipse> prev, std::span<const Ellipse> cur, double d_max) {
  if (!(d_max > 0.0)) {
    throw std::invalid_argument("associate: d_max must be positive");
  }
  Association out;
  const std::size_t n = std::max(prev.size(), cur.size());
  if (n > 0) {
    // A forbidden or dummy pairing costs more than any set of admissible
    // pairs, so the optimum first maximizes the number of gated matches.
    const double forbidden = 2.0 * static_cast<double>(n) * d_max + 1.0;
    std::vector<std::vector<double>> cost(n, std::vector<double>(n, forbidden));
    for (std::size_t i = 0; i < prev.size(); ++i) {
      for (std::size_t j = 0; j < cur.size(); ++j) {
        const double d = distance(prev[i].center, cur[j].center);
        if (d <= d_max) cost[i][j] = d;
      }
    }
    const auto assign = hungarian(cost);
    std::vector<char> cur_used(cur.size(), 0);
    for (std::size_t i = 0; i < prev.size(); ++i) {
      const int j = assign[i];
      if (j >= 0 && static_cast<std::size_t>(j) < cur.size() && distance(prev[i].center, cur[static_cast<std::size_t>(j)].center) <= d_max) {
        out.matches.emplace_back(static_cast<int>(i), j);
        cur_used[static_cast<std::size_t>(j)] = 1;
      } else {
        out.unmatched_prev.push_back(static_cast<int>(i));
      }
    }
    for (std::size_t j = 0; j < cur.size(); ++j) {
      if (!cur_used[j]) out.unmatched_cur.push_back(static_cast<int>(j));
    }
  }
  return out;
}

KalmanNoise KalmanNoise::from_config(const TrackingConfig& cfg, double dt) {
  KalmanNoise n;
  n.process.setZero();
  const Eigen::Vector3d g(dt * dt * dt / 6.0, dt * dt / 2.0, dt);
  const Eigen::Matrix3d q_axis = cfg.jerk_sigma * cfg.jerk_sigma * g * g.transpose();
  for (int axis = 0; axis < 2; ++axis) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        n.process(axis + 2 * i, axis + 2 * j) = q_axis(i, j);
      }
    }
  }
  for (int i = 6; i < 9; ++i) n.process(i, i) = cfg.shape_sigma * cfg.shape_sigma;
  n.measurement.setZero();
  n.measurement(0, 0) = n.measurement(1, 1) = cfg.meas_pos_sigma * cfg.meas_pos_sigma;
  n.measurement(2, 2) = n.measurement(3, 3) = cfg.meas_shape_sigma * cfg.meas_shape_sigma;
  n.measurement(4, 4) = cfg.meas_theta_sigma * cfg.meas_theta_sigma;
  return n;
}

void KalmanNoise::validate() const {
  if (!symmetric_psd(process)) throw std::invalid_argument("KalmanNoise: process noise is not symmetric PSD");
  if (!symmetric_psd(measurement)) throw std::invalid_argument("KalmanNoise: measurement noise is not symmetric PSD");
}

TrackCovariance transition_matrix(double dt) {
  TrackCovariance a = TrackCovariance::Identity();
  a(0, 2) = dt;
  a(1, 3) = dt;
  a(0, 4) = 0.5 * dt * dt;
  a(1, 5) = 0.5 * dt * dt;
  a(2, 4) = dt;
  a(3, 5) = dt;
  return a;
}

ObstacleTrack kf_step(const ObstacleTrack& track, const std::optional<Measurement>& z, double dt,
                      const KalmanNoise& noise) {
  if (!(dt > 0.0)) throw std::invalid_argument("kf_step: dt must be positive");
  const TrackCovariance a = transition_matrix(dt);
  ObstacleTrack out = track;
  out.state = a * track.state;
  out.covariance = a * track.covariance * a.transpose() + noise.process;

  if (z) {
    const auto h = observation_matrix();
    MeasurementVector innovation = z->z - h * out.state;
    innovation(4) = half_turn_wrap(innovation(4));
    const MeasurementCovariance s = h * out.covariance * h.transpose() + noise.measurement;
    const Eigen::Matrix<double, 9, 5> gain = out.covariance * h.transpose() * s.inverse();
    out.state += gain * innovation;
    const TrackCovariance i_kh = TrackCovariance::Identity() - gain * h;
    out.covariance = i_kh * out.covariance * i_kh.transpose() + gain * noise.measurement * gain.transpose();
    out.missed_frames = 0;
  } else {
    ++out.missed_frames;
  }
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  canonicalize_shape(out.state);
  return out;
}

std::vector<Ellipse> predict_trajectory(const ObstacleTrack& track, int n_steps, double dt) {
  if (n_steps < 1) throw std::invalid_argument("predict_trajectory: n_steps must be >= 1");
  const TrackCovariance a = transition_matrix(dt);
  std::vector<Ellipse> out;
  out.reserve(static_cast<std::size_t>(n_steps));
  TrackState s = track.state;
  for (int i = 0; i < n_steps; ++i) {
    s = a * s;
    out.push_back(Ellipse{{s(0), s(1)}, track.state(6), track.state(7), track.state(8)});
  }
  return out;
}

ObstacleTrack spawn_track(int id, const Ellipse& e, const TrackingConfig& cfg) {
  ObstacleTrack t;
  t.id = id;
  t.state << e.center.x, e.center.y, 0.0, 0.0, 0.0, 0.0, e.a, e.b, e.theta;
  canonicalize_shape(t.state);
  t.covariance.setZero();
  const double pos = cfg.meas_pos_sigma * cfg.meas_pos_sigma;
  const double shape = cfg.meas_shape_sigma * cfg.meas_shape_sigma;
  t.covariance.diagonal() << pos, pos, cfg.derivative_variance, cfg.derivative_variance, cfg.derivative_variance,
      cfg.derivative_variance, shape, shape, cfg.meas_theta_sigma * cfg.meas_theta_sigma;
  return t;
}

TrackSet manage_tracks(TrackSet set, const Association& assoc, std::span<const Ellipse> current,
                       const TrackingConfig& cfg, double dt) {
  const auto noise = KalmanNoise::from_config(cfg, dt);
  std::vector<std::optional<Measurement>> meas(set.tracks.size());
  for (const auto& [pi, ci] : assoc.matches) {
    meas[static_cast<std::size_t>(pi)] = Measurement::from(current[static_cast<std::size_t>(ci)]);
  }
  TrackSet out;
  out.next_id = set.next_id;
  for (std::size_t i = 0; i < set.tracks.size(); ++i) {
    auto t = kf_step(set.tracks[i], meas[i], dt, noise);
    if (t.missed_frames <= cfg.max_missed) out.tracks.push_back(std::move(t));
  }
  for (const int ci : assoc.unmatched_cur) {
    out.tracks.push_back(spawn_track(out.next_id++, current[static_cast<std::size_t>(ci)], cfg));
  }
  return out;
}

void Tracker::update(std::span<const Ellipse> ellipses, double dt) {
  std::vector<Ellipse> prev;
  prev.reserve(set_.tracks.size());
  for (const auto& t : set_.tracks) prev.push_back(t.ellipse());
  const auto assoc = associate(prev, ellipses, cfg_.d_max);
  set_ = manage_tracks(std::move(set_), assoc, ellipses, cfg_, dt);
}

}  // namespace guidebot
