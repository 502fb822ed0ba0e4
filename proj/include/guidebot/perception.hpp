#pragma once

#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "guidebot/geometry.hpp"
#include "guidebot/kernels.hpp"

namespace guidebot {

struct Point3D {
  double x{0.0};
  double y{0.0};
  double z{0.0};
};

struct GridCell {
  int row{0};
  int col{0};
  friend bool operator==(const GridCell&, const GridCell&) = default;
};

/// Shape and placement of a square-celled grid. Row index grows with y,
/// column index with x; (0,0) is the cell whose lower-left corner is `origin`.
struct GridSpec {
  int width{0};
  int height{0};
  double resolution{0.1};
  Point2D origin;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  [[nodiscard]] std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col);
  }
  [[nodiscard]] bool contains(GridCell c) const { return c.row >= 0 && c.col >= 0 && c.row < height && c.col < width; }
  [[nodiscard]] Point2D cell_center(GridCell c) const {
    return {origin.x + (c.col + 0.5) * resolution, origin.y + (c.row + 0.5) * resolution};
  }
  /// Cell containing p, or nullopt when p is outside the grid.
  [[nodiscard]] std::optional<GridCell> cell_of(Point2D p) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Max point height per cell; empty cells hold NaN.
struct ElevationGrid {
  GridSpec spec;
  std::vector<double> values;

  static constexpr double kEmpty = std::numeric_limits<double>::quiet_NaN();
  [[nodiscard]] bool empty(int row, int col) const;
  [[nodiscard]] double at(int row, int col) const { return values[spec.index(row, col)]; }
};

struct GradientGrid {
  GridSpec spec;
  std::vector<double> values;

  [[nodiscard]] double at(int row, int col) const { return values[spec.index(row, col)]; }
};

struct BinaryGrid {
  GridSpec spec;
  std::vector<std::uint8_t> cells;

  BinaryGrid() = default;
  explicit BinaryGrid(GridSpec s) : spec(s), cells(s.size(), 0) {}

  [[nodiscard]] bool occupied(int row, int col) const { return cells[spec.index(row, col)] != 0; }
  [[nodiscard]] bool occupied(GridCell c) const { return occupied(c.row, c.col); }
  void set(int row, int col, bool value = true) { cells[spec.index(row, col)] = value ? 1 : 0; }
  [[nodiscard]] std::size_t occupied_count() const;
};

struct ClusterLabels {
  static constexpr int kNoise = -1;
  /// One entry per point (or occupied cell): cluster id in 1..num_clusters, or kNoise.
  std::vector<int> labels;
  int num_clusters{0};
};

struct ClusteringParams {
  int k{1};
  int min_pts{3};
};

/// Result of clustering a binary grid: occupied cells in row-major order and
/// their labels (labels.labels[i] belongs to cells[i]).
struct GridClustering {
  std::vector<GridCell> cells;
  ClusterLabels labels;
};

ElevationGrid build_elevation(std::span<const Point3D> cloud, double window, double resolution,
                              Point2D robot_center);

/// Sobel magnitude with empty cells read as height 0 and replicated borders.
GradientGrid sobel_gradient(const ElevationGrid& elev);

/// g = (q > q_th) OR (s > s_th). Throws std::invalid_argument on shape mismatch.
BinaryGrid binarize(const ElevationGrid& elev, const GradientGrid& grad, double q_th, double s_th);

/// Eight-way connected grid DBSCAN: a cell's neighborhood is the
/// (2k+1)x(2k+1) window around it, itself included. Cells are scanned
/// row-major and clusters grow with a FIFO queue.
GridClustering grid_dbscan(const BinaryGrid& grid, const ClusteringParams& params);

/// Classical O(n^2) DBSCAN over explicit points, scanned in input order.
ClusterLabels naive_dbscan(std::span<const Point2D> points, double eps, int min_pts, kernels::Metric metric);

/// Centers of all occupied cells in row-major order.
std::vector<Point2D> occupied_cell_centers(const BinaryGrid& grid);

/// Davies-Bouldin index; noise excluded. Throws if fewer than two clusters.
double dbi(std::span<const Point2D> points, const ClusterLabels& labels);

/// Mean silhouette; noise excluded, singleton clusters contribute 0.
/// Throws if fewer than two clusters.
double silhouette(std::span<const Point2D> points, const ClusterLabels& labels);

/// Whitespace separated "x y z" records, one per line. Blank lines and lines
/// starting with '#' are skipped; throws std::runtime_error on malformed lines.
std::vector<Point3D> read_point_cloud(std::istream& in);

struct PerceptionConfig {
  double window{15.0};
  double resolution{0.1};
  double height_threshold{0.15};
  double gradient_threshold{0.3};
  ClusteringParams clustering{1, 3};
  double mvee_tolerance{1e-6};
};

struct PerceptionResult {
  BinaryGrid grid;
  GridClustering clusters;
  std::vector<Ellipse> ellipses;
};

/// Point cloud to obstacle ellipses: elevation, gradient, binarization,
/// clustering and one enclosing ellipse per cluster.
PerceptionResult perceive(std::span<const Point3D> cloud, Point2D robot_center, const PerceptionConfig& config);

}  // namespace guidebot
