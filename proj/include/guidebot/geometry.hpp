#pragma once

#include <span>
#include <vector>

namespace guidebot {

inline constexpr double kPi = 3.14159265358979323846;

struct Point2D {
  double x{0.0};
  double y{0.0};

  friend bool operator==(const Point2D&, const Point2D&) = default;
};

/// Planar pose. theta is kept in (-pi, pi] (see wrap_angle).
struct Pose2D {
  double x{0.0};
  double y{0.0};
  double theta{0.0};

  [[nodiscard]] Point2D position() const { return {x, y}; }
};

/// Body-frame velocity: vx forward, vy lateral (left), wz yaw rate.
struct VelocityCommand {
  double vx{0.0};
  double vy{0.0};
  double wz{0.0};

  friend bool operator==(const VelocityCommand&, const VelocityCommand&) = default;
};

/// Rotated ellipse; a is the semi-major axis, so a >= b > 0.
struct Ellipse {
  Point2D center;
  double a{1.0};
  double b{1.0};
  double theta{0.0};
};

/// Maps an angle into (-pi, pi]. The lower end is open: -pi maps to +pi.
/// Throws std::invalid_argument for NaN or infinite input.
double wrap_angle(double angle);

double distance(Point2D p, Point2D q);

struct MveeOptions {
  /// Khachiyan stopping tolerance on the relative dual gap.
  double tolerance{1e-6};
  int max_iterations{1000};
  /// Fallback radius for degenerate (1-2 point or collinear) inputs and the
  /// floor applied to the minor axis.
  double min_radius{0.05};
};

/// Minimum-volume enclosing ellipse by Khachiyan's weight-update method.
/// The returned ellipse is rescaled so every input point satisfies the
/// quadratic form <= 1, and its minor axis is floored at min_radius.
/// Throws std::invalid_argument on empty input or non-positive tolerance.
Ellipse mvee_fit(std::span<const Point2D> points, const MveeOptions& options = {});

inline Ellipse mvee_fit(std::span<const Point2D> points, double tolerance, double min_radius = 0.05) {
  MveeOptions o;
  o.tolerance = tolerance;
  o.min_radius = min_radius;
  return mvee_fit(points, o);
}

/// Value of (p - c)^T A (p - c) for the ellipse; <= 1 inside.
double ellipse_quadratic_form(const Ellipse& e, Point2D p);

/// Radial support of the ellipse along the ray from its center toward
/// `toward`: ab / sqrt(b^2 cos^2 phi + a^2 sin^2 phi), phi in the ellipse frame.
/// Throws std::invalid_argument if `toward` coincides with the center.
double ellipse_boundary_distance(const Ellipse& e, Point2D toward);

/// Derivative of the radial support with respect to the ray angle.
double ellipse_support_derivative(const Ellipse& e, double ray_angle_world);

/// Euclidean distance from p to the ellipse curve; negative inside.
double ellipse_signed_distance(const Ellipse& e, Point2D p);

/// Position of the user holding a rigid rod of length rod_length behind the robot.
Point2D user_position(const Pose2D& robot, double rod_length);

}  // namespace guidebot
