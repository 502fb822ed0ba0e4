#pragma once

#include <optional>
#include <span>
#include <vector>

#include "guidebot/geometry.hpp"
#include "guidebot/perception.hpp"

namespace guidebot {

struct GridPath {
  std::vector<GridCell> cells;
  /// Cell centers of `cells`.
  std::vector<Point2D> waypoints;
  /// Path length in cell units (1 per straight move, sqrt(2) per diagonal).
  double cost{0.0};
};

/// 8-connected A* with the octile heuristic. Ties are broken by lower
/// heuristic, then by insertion order, so results are deterministic.
/// Throws std::invalid_argument if start or goal is outside the grid or on an
/// occupied cell; returns nullopt when the goal is unreachable.
std::optional<GridPath> astar(const BinaryGrid& grid, Point2D start, Point2D goal);

/// Marks every cell whose center lies within `radius` of an occupied cell center.
BinaryGrid inflate(const BinaryGrid& grid, double radius);

/// Cells whose centers fall inside any of the ellipses.
BinaryGrid rasterize_ellipses(const GridSpec& spec, std::span<const Ellipse> ellipses);

/// True when the straight segment p-q crosses no occupied cell.
bool line_of_sight(const BinaryGrid& grid, Point2D p, Point2D q);

/// Drops waypoints that can be skipped without losing line of sight.
std::vector<Point2D> shortcut_path(const BinaryGrid& grid, std::span<const Point2D> waypoints);

/// Center of the free cell fewest 4-connected steps away from p's cell
/// (p is clamped into the grid first), or nullopt if no cell is free.
std::optional<Point2D> nearest_free(const BinaryGrid& grid, Point2D p);

}  // namespace guidebot
