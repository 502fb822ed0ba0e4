#include "guidebot/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace guidebot {

double wrap_angle(double angle) {
  if (!std::isfinite(angle)) {
    throw std::invalid_argument("wrap_angle: non-finite angle");
  }
  double r = std::remainder(angle, 2.0 * kPi);  // [-pi, pi]
  if (r <= -kPi) {
    r += 2.0 * kPi;
  }
  return r;
}

double distance(Point2D p, Point2D q) { return std::hypot(p.x - q.x, p.y - q.y); }

namespace {

// Canonical ellipse orientation: theta in (-pi/2, pi/2].
double canonical_axis_angle(double theta) {
  double t = wrap_angle(theta);
  if (t > kPi / 2) t -= kPi;
  if (t <= -kPi / 2) t += kPi;
  return t;
}

Ellipse collinear_fallback(std::span<const Point2D> points, const Eigen::Vector2d& axis, Point2D mean,
                           double min_radius) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& p : points) {
    const double s = axis.x() * (p.x - mean.x) + axis.y() * (p.y - mean.y);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  const double mid = 0.5 * (lo + hi);
  Ellipse e;
  e.center = {mean.x + mid * axis.x(), mean.y + mid * axis.y()};
  e.a = 0.5 * (hi - lo) + min_radius;
  e.b = min_radius;
  e.theta = canonical_axis_angle(std::atan2(axis.y(), axis.x()));
  return e;
}

}  // namespace

Ellipse mvee_fit(std::span<const Point2D> points, const MveeOptions& options) {
  if (points.empty()) {
    throw std::invalid_argument("mvee_fit: empty point set");
  }
  if (!(options.tolerance > 0.0)) {
    throw std::invalid_argument("mvee_fit: tolerance must be positive");
  }
  const auto n = static_cast<Eigen::Index>(points.size());
  const double r_min = options.min_radius;

  Point2D mean{};
  for (const auto& p : points) {
    mean.x += p.x;
    mean.y += p.y;
  }
  mean.x /= static_cast<double>(n);
  mean.y /= static_cast<double>(n);

  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : points) {
    const Eigen::Vector2d d(p.x - mean.x, p.y - mean.y);
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> pca(cov);
  const Eigen::Vector2d major = pca.eigenvectors().col(1);
  const Eigen::Vector2d minor = pca.eigenvectors().col(0);

  double lo_major = std::numeric_limits<double>::infinity(), hi_major = -lo_major;
  double lo_minor = lo_major, hi_minor = -lo_major;
  for (const auto& p : points) {
    const Eigen::Vector2d d(p.x - mean.x, p.y - mean.y);
    lo_major = std::min(lo_major, major.dot(d));
    hi_major = std::max(hi_major, major.dot(d));
    lo_minor = std::min(lo_minor, minor.dot(d));
    hi_minor = std::max(hi_minor, minor.dot(d));
  }
  const double width_major = hi_major - lo_major;
  const double width_minor = hi_minor - lo_minor;

  if (width_major <= 1e-12) {
    return Ellipse{mean, r_min, r_min, 0.0};
  }
  if (n <= 2 || width_minor <= 1e-9 * std::max(1.0, width_major)) {
    return collinear_fallback(points, major, mean, r_min);
  }

  // Khachiyan on the lifted points q_i = [p_i; 1].
  constexpr double d = 2.0;
  Eigen::Matrix<double, 3, Eigen::Dynamic> q(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    q.col(i) << points[static_cast<std::size_t>(i)].x - mean.x, points[static_cast<std::size_t>(i)].y - mean.y, 1.0;
  }
  Eigen::VectorXd u = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Eigen::Matrix3d x = q * u.asDiagonal() * q.transpose();
    const Eigen::Matrix3d x_inv = x.inverse();
    Eigen::Index j = 0;
    double max_m = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = q.col(i).dot(x_inv * q.col(i));
      if (m > max_m) {
        max_m = m;
        j = i;
      }
    }
    if ((max_m - (d + 1.0)) / (d + 1.0) <= options.tolerance) {
      break;
    }
    const double step = (max_m - d - 1.0) / ((d + 1.0) * (max_m - 1.0));
    u *= (1.0 - step);
    u(j) += step;
  }

  const Eigen::Vector2d c = q.topRows<2>() * u;
  const Eigen::Matrix2d scatter = q.topRows<2>() * u.asDiagonal() * q.topRows<2>().transpose() - c * c.transpose();
  Eigen::Matrix2d shape = scatter.inverse() / d;

  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector2d r = q.col(i).head<2>() - c;
    worst = std::max(worst, r.dot(shape * r));
  }
  if (worst > 0.0) {
    shape /= worst;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(shape);
  const double lambda_small = std::max(eig.eigenvalues()(0), 1e-300);
  const double lambda_large = std::max(eig.eigenvalues()(1), 1e-300);
  const Eigen::Vector2d axis = eig.eigenvectors().col(0);

  Ellipse e;
  e.center = {mean.x + c.x(), mean.y + c.y()};
  e.a = 1.0 / std::sqrt(lambda_small);
  e.b = std::max(1.0 / std::sqrt(lambda_large), r_min);
  e.a = std::max(e.a, e.b);
  e.theta = canonical_axis_angle(std::atan2(axis.y(), axis.x()));
  return e;
}

double ellipse_quadratic_form(const Ellipse& e, Point2D p) {
  const double dx = p.x - e.center.x;
  const double dy = p.y - e.center.y;
  const double c = std::cos(e.theta);
  const double s = std::sin(e.theta);
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  return (lx * lx) / (e.a * e.a) + (ly * ly) / (e.b * e.b);
}

double ellipse_boundary_distance(const Ellipse& e, Point2D toward) {
  const double dx = toward.x - e.center.x;
  const double dy = toward.y - e.center.y;
  if (dx == 0.0 && dy == 0.0) {
    throw std::invalid_argument("ellipse_boundary_distance: point coincides with ellipse center");
  }
  const double phi = std::atan2(dy, dx) - e.theta;
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  return e.a * e.b / std::sqrt(e.b * e.b * c * c + e.a * e.a * s * s);
}

double ellipse_support_derivative(const Ellipse& e, double ray_angle_world) {
  const double phi = ray_angle_world - e.theta;
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  const double den = e.b * e.b * c * c + e.a * e.a * s * s;
  return -e.a * e.b * (e.a * e.a - e.b * e.b) * s * c / (den * std::sqrt(den));
}

namespace {

// Root of F(s) = (r0 z0 / (s + r0))^2 + (z1 / (s + 1))^2 - 1 by bisection.
double ellipse_root(double r0, double z0, double z1, double g) {
  const double n0 = r0 * z0;
  double s0 = z1 - 1.0;
  double s1 = g < 0.0 ? 0.0 : std::hypot(n0, z1) - 1.0;
  double s = 0.0;
  for (int i = 0; i < 1100; ++i) {
    s = 0.5 * (s0 + s1);
    if (s == s0 || s == s1) break;
    const double ratio0 = n0 / (s + r0);
    const double ratio1 = z1 / (s + 1.0);
    g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
    if (g > 0.0) {
      s0 = s;
    } else if (g < 0.0) {
      s1 = s;
    } else {
      break;
    }
  }
  return s;
}

// Closest-point distance for the axis-aligned ellipse with e0 >= e1 and a query
// in the first quadrant.
double first_quadrant_distance(double e0, double e1, double y0, double y1) {
  if (y1 > 0.0) {
    if (y0 > 0.0) {
      const double z0 = y0 / e0;
      const double z1 = y1 / e1;
      const double g = z0 * z0 + z1 * z1 - 1.0;
      if (g == 0.0) return 0.0;
      const double r0 = (e0 / e1) * (e0 / e1);
      const double sbar = ellipse_root(r0, z0, z1, g);
      const double x0 = r0 * y0 / (sbar + r0);
      const double x1 = y1 / (sbar + 1.0);
      return std::hypot(x0 - y0, x1 - y1);
    }
    return std::abs(y1 - e1);
  }
  const double numer0 = e0 * y0;
  const double denom0 = e0 * e0 - e1 * e1;
  if (numer0 < denom0) {
    const double xde0 = numer0 / denom0;
    const double x0 = e0 * xde0;
    const double x1 = e1 * std::sqrt(1.0 - xde0 * xde0);
    return std::hypot(x0 - y0, x1);
  }
  return std::abs(y0 - e0);
}

}  // namespace

double ellipse_signed_distance(const Ellipse& e, Point2D p) {
  const double dx = p.x - e.center.x;
  const double dy = p.y - e.center.y;
  const double c = std::cos(e.theta);
  const double s = std::sin(e.theta);
  double lx = std::abs(c * dx + s * dy);
  double ly = std::abs(-s * dx + c * dy);
  double e0 = e.a;
  double e1 = e.b;
  if (e1 > e0) {
    std::swap(e0, e1);
    std::swap(lx, ly);
  }
  const double dist = first_quadrant_distance(e0, e1, lx, ly);
  return ellipse_quadratic_form(e, p) < 1.0 ? -dist : dist;
}

Point2D user_position(const Pose2D& robot, double rod_length) {
  return {robot.x - rod_length * std::cos(robot.theta), robot.y - rod_length * std::sin(robot.theta)};
}

}  // namespace guidebot
