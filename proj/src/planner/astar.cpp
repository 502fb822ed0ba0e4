#include "guidebot/planner/astar.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <stdexcept>
#include <tuple>

namespace guidebot {
namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

double octile(GridCell a, GridCell b) {
  const double dx = std::abs(a.col - b.col);
  const double dy = std::abs(a.row - b.row);
  return (dx + dy) + (kSqrt2 - 2.0) * std::min(dx, dy);
}

GridCell checked_cell(const BinaryGrid& grid, Point2D p, const char* what) {
  const auto cell = grid.spec.cell_of(p);
  if (!cell) throw std::invalid_argument(std::string("astar: ") + what + " is outside the grid");
  if (grid.occupied(*cell)) throw std::invalid_argument(std::string("astar: ") + what + " is on an occupied cell");
  return *cell;
}

}  // namespace

std::optional<GridPath> astar(const BinaryGrid& grid, Point2D start, Point2D goal) {
  const GridCell s = checked_cell(grid, start, "start");
  const GridCell g = checked_cell(grid, goal, "goal");
  const auto& spec = grid.spec;

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(spec.size(), inf);
  std::vector<int> parent(spec.size(), -1);
  std::vector<char> closed(spec.size(), 0);

  // (f, h, sequence, index); the sequence number makes ties deterministic.
  using Entry = std::tuple<double, double, std::uint64_t, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::uint64_t seq = 0;
  const auto si = spec.index(s.row, s.col);
  const auto gi = spec.index(g.row, g.col);
  cost[si] = 0.0;
  open.emplace(octile(s, g), octile(s, g), seq++, si);

  static constexpr int kDr[8] = {0, 1, 0, -1, 1, 1, -1, -1};
  static constexpr int kDc[8] = {1, 0, -1, 0, 1, -1, 1, -1};

  while (!open.empty()) {
    const auto [f, h, order, idx] = open.top();
    open.pop();
    if (closed[idx]) continue;
    closed[idx] = 1;
    if (idx == gi) break;
    const GridCell cur{static_cast<int>(idx / static_cast<std::size_t>(spec.width)),
                       static_cast<int>(idx % static_cast<std::size_t>(spec.width))};
    for (int d = 0; d < 8; ++d) {
      const GridCell nb{cur.row + kDr[d], cur.col + kDc[d]};
      if (!spec.contains(nb) || grid.occupied(nb)) continue;
      const bool diagonal = d >= 4;
      // No corner cutting: both orthogonal neighbors of a diagonal move must be free.
      if (diagonal && (grid.occupied(cur.row + kDr[d], cur.col) || grid.occupied(cur.row, cur.col + kDc[d]))) continue;
      const auto ni = spec.index(nb.row, nb.col);
      if (closed[ni]) continue;
      const double c = cost[idx] + (diagonal ? kSqrt2 : 1.0);
      if (c < cost[ni]) {
        cost[ni] = c;
        parent[ni] = static_cast<int>(idx);
        const double hn = octile(nb, g);
        open.emplace(c + hn, hn, seq++, ni);
      }
    }
  }
  if (!closed[gi]) return std::nullopt;

  GridPath path;
  path.cost = cost[gi];
  for (int i = static_cast<int>(gi); i >= 0; i = parent[static_cast<std::size_t>(i)]) {
    path.cells.push_back({i / spec.width, i % spec.width});
  }
  std::reverse(path.cells.begin(), path.cells.end());
  path.waypoints.reserve(path.cells.size());
  for (const auto& c : path.cells) path.waypoints.push_back(spec.cell_center(c));
  return path;
}

BinaryGrid inflate(const BinaryGrid& grid, double radius) {
  if (radius < 0.0) throw std::invalid_argument("inflate: radius must be >= 0");
  BinaryGrid out(grid.spec);
  const int reach = static_cast<int>(std::ceil(radius / grid.spec.resolution));
  const double r2 = (radius / grid.spec.resolution) * (radius / grid.spec.resolution) + 1e-9;
  std::vector<std::pair<int, int>> offsets;
  for (int dr = -reach; dr <= reach; ++dr) {
    for (int dc = -reach; dc <= reach; ++dc) {
      if (dr * dr + dc * dc <= r2) offsets.emplace_back(dr, dc);
    }
  }
  for (int r = 0; r < grid.spec.height; ++r) {
    for (int c = 0; c < grid.spec.width; ++c) {
      if (!grid.occupied(r, c)) continue;
      for (const auto& [dr, dc] : offsets) {
        const GridCell n{r + dr, c + dc};
        if (grid.spec.contains(n)) out.set(n.row, n.col);
      }
    }
  }
  return out;
}

BinaryGrid rasterize_ellipses(const GridSpec& spec, std::span<const Ellipse> ellipses) {
  BinaryGrid out(spec);
  for (const auto& e : ellipses) {
    const double reach = e.a;
    const auto lo = spec.cell_of({e.center.x - reach, e.center.y - reach});
    const int r0 = lo ? lo->row : 0;
    const int c0 = lo ? lo->col : 0;
    const int r1 = std::min(spec.height - 1, static_cast<int>(std::floor((e.center.y + reach - spec.origin.y) / spec.resolution)));
    const int c1 = std::min(spec.width - 1, static_cast<int>(std::floor((e.center.x + reach - spec.origin.x) / spec.resolution)));
    for (int r = std::max(r0, 0); r <= r1; ++r) {
      for (int c = std::max(c0, 0); c <= c1; ++c) {
        if (ellipse_quadratic_form(e, spec.cell_center({r, c})) <= 1.0) out.set(r, c);
      }
    }
  }
  return out;
}

bool line_of_sight(const BinaryGrid& grid, Point2D p, Point2D q) {
  const double len = distance(p, q);
  const int steps = std::max(1, static_cast<int>(std::ceil(len / (0.25 * grid.spec.resolution))));
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const auto cell = grid.spec.cell_of({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
    if (!cell || grid.occupied(*cell)) return false;
  }
  return true;
}

std::vector<Point2D> shortcut_path(const BinaryGrid& grid, std::span<const Point2D> waypoints) {
  std::vector<Point2D> out;
  if (waypoints.empty()) return out;
  std::size_t i = 0;
  out.push_back(waypoints[0]);
  while (i + 1 < waypoints.size()) {
    std::size_t j = waypoints.size() - 1;
    while (j > i + 1 && !line_of_sight(grid, waypoints[i], waypoints[j])) --j;
    out.push_back(waypoints[j]);
    i = j;
  }
  return out;
}

std::optional<Point2D> nearest_free(const BinaryGrid& grid, Point2D p) {
  const auto& spec = grid.spec;
  GridCell start{std::clamp(static_cast<int>(std::floor((p.y - spec.origin.y) / spec.resolution)), 0, spec.height - 1),
                 std::clamp(static_cast<int>(std::floor((p.x - spec.origin.x) / spec.resolution)), 0, spec.width - 1)};
  std::vector<char> seen(spec.size(), 0);
  std::deque<GridCell> queue{start};
  seen[spec.index(start.row, start.col)] = 1;
  while (!queue.empty()) {
    const GridCell c = queue.front();
    queue.pop_front();
    if (!grid.occupied(c)) return spec.cell_center(c);
    static constexpr int kDr[4] = {0, 1, 0, -1};
    static constexpr int kDc[4] = {1, 0, -1, 0};
    for (int d = 0; d < 4; ++d) {
      const GridCell n{c.row + kDr[d], c.col + kDc[d]};
      if (spec.contains(n) && !seen[spec.index(n.row, n.col)]) {
        seen[spec.index(n.row, n.col)] = 1;
        queue.push_back(n);
      }
    }
  }
  return std::nullopt;
}

}  // namespace guidebot
