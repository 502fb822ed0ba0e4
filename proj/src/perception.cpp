#include "guidebot/perception.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <stdexcept>
#include <string>

namespace guidebot {

std::optional<GridCell> GridSpec::cell_of(Point2D p) const {
  const double fc = std::floor((p.x - origin.x) / resolution);
  const double fr = std::floor((p.y - origin.y) / resolution);
  if (!(fc >= 0.0 && fr >= 0.0 && fc < width && fr < height)) {
    return std::nullopt;
  }
  return GridCell{static_cast<int>(fr), static_cast<int>(fc)};
}

bool ElevationGrid::empty(int row, int col) const { return std::isnan(values[spec.index(row, col)]); }

std::size_t BinaryGrid::occupied_count() const {
  std::size_t n = 0;
  for (auto v : cells) n += v != 0 ? 1 : 0;
  return n;
}

ElevationGrid build_elevation(std::span<const Point3D> cloud, double window, double resolution,
                              Point2D robot_center) {
  if (!(window > 0.0) || !(resolution > 0.0)) {
    throw std::invalid_argument("build_elevation: window and resolution must be positive");
  }
  const int n = std::max(1, static_cast<int>(std::lround(window / resolution)));
  ElevationGrid grid;
  grid.spec = GridSpec{n, n, resolution, {robot_center.x - 0.5 * window, robot_center.y - 0.5 * window}};
  grid.values.assign(grid.spec.size(), ElevationGrid::kEmpty);
  for (const auto& p : cloud) {
    const auto cell = grid.spec.cell_of({p.x, p.y});
    if (!cell) continue;
    double& v = grid.values[grid.spec.index(cell->row, cell->col)];
    if (std::isnan(v) || p.z > v) v = p.z;
  }
  return grid;
}

GradientGrid sobel_gradient(const ElevationGrid& elev) {
  const int w = elev.spec.width;
  const int h = elev.spec.height;
  if (w <= 0 || h <= 0) {
    throw std::invalid_argument("sobel_gradient: empty grid");
  }
  const auto stride = static_cast<std::size_t>(w) + 2;
  std::vector<double> padded(stride * (static_cast<std::size_t>(h) + 2));
  for (int r = -1; r <= h; ++r) {
    const int sr = std::clamp(r, 0, h - 1);
    for (int c = -1; c <= w; ++c) {
      const int sc = std::clamp(c, 0, w - 1);
      const double v = elev.values[elev.spec.index(sr, sc)];
      padded[static_cast<std::size_t>(r + 1) * stride + static_cast<std::size_t>(c + 1)] = std::isnan(v) ? 0.0 : v;
    }
  }
  GradientGrid grad;
  grad.spec = elev.spec;
  grad.values.resize(elev.spec.size());
  kernels::sobel_magnitude(padded, w, h, grad.values);
  return grad;
}

BinaryGrid binarize(const ElevationGrid& elev, const GradientGrid& grad, double q_th, double s_th) {
  if (elev.spec.width != grad.spec.width || elev.spec.height != grad.spec.height ||
      elev.values.size() != grad.values.size()) {
    throw std::invalid_argument("binarize: elevation and gradient grids differ in shape");
  }
  BinaryGrid out(elev.spec);
  for (std::size_t i = 0; i < elev.values.size(); ++i) {
    const double q = elev.values[i];
    const bool tall = !std::isnan(q) && q > q_th;
    out.cells[i] = (tall || grad.values[i] > s_th) ? 1 : 0;
  }
  return out;
}

GridClustering grid_dbscan(const BinaryGrid& grid, const ClusteringParams& params) {
  if (params.k < 1 || params.min_pts < 1) {
    throw std::invalid_argument("grid_dbscan: k and min_pts must be >= 1");
  }
  const int w = grid.spec.width;
  const int h = grid.spec.height;
  const int k = params.k;

  GridClustering out;
  std::vector<int> slot(grid.spec.size(), -1);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (grid.occupied(r, c)) {
        slot[grid.spec.index(r, c)] = static_cast<int>(out.cells.size());
        out.cells.push_back({r, c});
      }
    }
  }

  // Summed-area table gives every window count in O(1).
  const auto sw = static_cast<std::size_t>(w) + 1;
  std::vector<int> sat(sw * (static_cast<std::size_t>(h) + 1), 0);
  for (int r = 0; r < h; ++r) {
    int row_sum = 0;
    for (int c = 0; c < w; ++c) {
      row_sum += grid.occupied(r, c) ? 1 : 0;
      sat[static_cast<std::size_t>(r + 1) * sw + static_cast<std::size_t>(c + 1)] =
          sat[static_cast<std::size_t>(r) * sw + static_cast<std::size_t>(c + 1)] + row_sum;
    }
  }
  auto window_count = [&](GridCell cell) {
    const auto r0 = static_cast<std::size_t>(std::max(cell.row - k, 0));
    const auto c0 = static_cast<std::size_t>(std::max(cell.col - k, 0));
    const auto r1 = static_cast<std::size_t>(std::min(cell.row + k, h - 1)) + 1;
    const auto c1 = static_cast<std::size_t>(std::min(cell.col + k, w - 1)) + 1;
    return sat[r1 * sw + c1] - sat[r0 * sw + c1] - sat[r1 * sw + c0] + sat[r0 * sw + c0];
  };

  constexpr int kUnset = 0;
  auto& labels = out.labels.labels;
  labels.assign(out.cells.size(), kUnset);
  std::deque<int> queue;

  auto claim_neighbors = [&](GridCell center, int cluster) {
    for (int r = std::max(center.row - k, 0); r <= std::min(center.row + k, h - 1); ++r) {
      for (int c = std::max(center.col - k, 0); c <= std::min(center.col + k, w - 1); ++c) {
        const int j = slot[grid.spec.index(r, c)];
        if (j < 0) continue;
        if (labels[static_cast<std::size_t>(j)] == ClusterLabels::kNoise) {
          labels[static_cast<std::size_t>(j)] = cluster;
        } else if (labels[static_cast<std::size_t>(j)] == kUnset) {
          labels[static_cast<std::size_t>(j)] = cluster;
          queue.push_back(j);
        }
      }
    }
  };

  int cluster = 0;
  for (std::size_t i = 0; i < out.cells.size(); ++i) {
    if (labels[i] != kUnset) continue;
    if (window_count(out.cells[i]) < params.min_pts) {
      labels[i] = ClusterLabels::kNoise;
      continue;
    }
    ++cluster;
    labels[i] = cluster;
    claim_neighbors(out.cells[i], cluster);
    while (!queue.empty()) {
      const int q = queue.front();
      queue.pop_front();
      const GridCell qc = out.cells[static_cast<std::size_t>(q)];
      if (window_count(qc) >= params.min_pts) {
        claim_neighbors(qc, cluster);
      }
    }
  }
  out.labels.num_clusters = cluster;
  return out;
}

ClusterLabels naive_dbscan(std::span<const Point2D> points, double eps, int min_pts, kernels::Metric metric) {
  if (!(eps > 0.0)) {
    throw std::invalid_argument("naive_dbscan: eps must be positive");
  }
  const std::size_t n = points.size();
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = points[i].x;
    ys[i] = points[i].y;
  }
  auto is_core = [&](std::size_t i) {
    return kernels::count_within(xs, ys, xs[i], ys[i], eps, metric) >= static_cast<std::size_t>(min_pts);
  };

  constexpr int kUnset = 0;
  ClusterLabels out;
  out.labels.assign(n, kUnset);
  auto& labels = out.labels;
  std::deque<std::uint32_t> queue;
  std::vector<std::uint32_t> neighbors;

  auto claim_neighbors = [&](std::size_t center, int cluster) {
    neighbors.clear();
    kernels::collect_within(xs, ys, xs[center], ys[center], eps, metric, neighbors);
    for (const auto j : neighbors) {
      if (labels[j] == ClusterLabels::kNoise) {
        labels[j] = cluster;
      } else if (labels[j] == kUnset) {
        labels[j] = cluster;
        queue.push_back(j);
      }
    }
  };

  int cluster = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != kUnset) continue;
    if (!is_core(i)) {
      labels[i] = ClusterLabels::kNoise;
      continue;
    }
    ++cluster;
    labels[i] = cluster;
    claim_neighbors(i, cluster);
    while (!queue.empty()) {
      const auto q = queue.front();
      queue.pop_front();
      if (is_core(q)) claim_neighbors(q, cluster);
    }
  }
  out.num_clusters = cluster;
  return out;
}

std::vector<Point2D> occupied_cell_centers(const BinaryGrid& grid) {
  std::vector<Point2D> pts;
  for (int r = 0; r < grid.spec.height; ++r) {
    for (int c = 0; c < grid.spec.width; ++c) {
      if (grid.occupied(r, c)) pts.push_back(grid.spec.cell_center({r, c}));
    }
  }
  return pts;
}

std::vector<Point3D> read_point_cloud(std::istream& in) {
  std::vector<Point3D> cloud;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    Point3D p;
    std::string extra;
    if (!(ss >> p.x >> p.y >> p.z) || (ss >> extra)) {
      throw std::runtime_error("point cloud line " + std::to_string(line_no) + ": expected 'x y z'");
    }
    cloud.push_back(p);
  }
  return cloud;
}

PerceptionResult perceive(std::span<const Point3D> cloud, Point2D robot_center, const PerceptionConfig& config) {
  PerceptionResult out;
  const auto elev = build_elevation(cloud, config.window, config.resolution, robot_center);
  const auto grad = sobel_gradient(elev);
  out.grid = binarize(elev, grad, config.height_threshold, config.gradient_threshold);
  out.clusters = grid_dbscan(out.grid, config.clustering);

  std::vector<std::vector<Point2D>> members(static_cast<std::size_t>(out.clusters.labels.num_clusters));
  for (std::size_t i = 0; i < out.clusters.cells.size(); ++i) {
    const int id = out.clusters.labels.labels[i];
    if (id > 0) members[static_cast<std::size_t>(id - 1)].push_back(out.grid.spec.cell_center(out.clusters.cells[i]));
  }
  MveeOptions opts;
  opts.tolerance = config.mvee_tolerance;
  opts.min_radius = 0.5 * config.resolution;
  out.ellipses.reserve(members.size());
  for (const auto& m : members) {
    out.ellipses.push_back(mvee_fit(m, opts));
  }
  return out;
}

}  // namespace guidebot
