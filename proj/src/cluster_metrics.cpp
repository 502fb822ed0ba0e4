#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "guidebot/perception.hpp"

namespace guidebot {
namespace {

struct ClusterColumns {
  std::vector<std::vector<double>> xs;
  std::vector<std::vector<double>> ys;
};

ClusterColumns group(std::span<const Point2D> points, const ClusterLabels& labels, const char* who) {
  if (labels.labels.size() != points.size()) {
    throw std::invalid_argument(std::string(who) + ": label count does not match point count");
  }
  ClusterColumns g;
  g.xs.resize(static_cast<std::size_t>(labels.num_clusters));
  g.ys.resize(static_cast<std::size_t>(labels.num_clusters));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int id = labels.labels[i];
    if (id <= 0) continue;
    if (id > labels.num_clusters) {
      throw std::invalid_argument(std::string(who) + ": label out of range");
    }
    g.xs[static_cast<std::size_t>(id - 1)].push_back(points[i].x);
    g.ys[static_cast<std::size_t>(id - 1)].push_back(points[i].y);
  }
  std::size_t non_empty = 0;
  for (const auto& c : g.xs) non_empty += c.empty() ? 0 : 1;
  if (non_empty < 2) {
    throw std::invalid_argument(std::string(who) + ": needs at least two clusters");
  }
  return g;
}

}  // namespace

double dbi(std::span<const Point2D> points, const ClusterLabels& labels) {
  const auto g = group(points, labels, "dbi");
  std::vector<Point2D> centroid;
  std::vector<double> spread;
  for (std::size_t c = 0; c < g.xs.size(); ++c) {
    const auto& xs = g.xs[c];
    const auto& ys = g.ys[c];
    if (xs.empty()) continue;
    Point2D m{};
    for (std::size_t i = 0; i < xs.size(); ++i) {
      m.x += xs[i];
      m.y += ys[i];
    }
    m.x /= static_cast<double>(xs.size());
    m.y /= static_cast<double>(xs.size());
    centroid.push_back(m);
    spread.push_back(kernels::sum_distances(xs, ys, m.x, m.y) / static_cast<double>(xs.size()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < centroid.size(); ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < centroid.size(); ++j) {
      if (i == j) continue;
      const double sep = distance(centroid[i], centroid[j]);
      const double ratio = sep > 0.0 ? (spread[i] + spread[j]) / sep : std::numeric_limits<double>::infinity();
      worst = std::max(worst, ratio);
    }
    total += worst;
  }
  return total / static_cast<double>(centroid.size());
}

double silhouette(std::span<const Point2D> points, const ClusterLabels& labels) {
  const auto g = group(points, labels, "silhouette");
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < g.xs.size(); ++c) {
    const auto& xs = g.xs[c];
    const auto& ys = g.ys[c];
    for (std::size_t i = 0; i < xs.size(); ++i) {
      ++counted;
      if (xs.size() == 1) continue;
      const double intra = kernels::sum_distances(xs, ys, xs[i], ys[i]) / static_cast<double>(xs.size() - 1);
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t o = 0; o < g.xs.size(); ++o) {
        if (o == c || g.xs[o].empty()) continue;
        nearest = std::min(nearest, kernels::sum_distances(g.xs[o], g.ys[o], xs[i], ys[i]) /
                                        static_cast<double>(g.xs[o].size()));
      }
      const double denom = std::max(intra, nearest);
      if (denom > 0.0) total += (nearest - intra) / denom;
    }
  }
  return total / static_cast<double>(counted);
}

}  // namespace guidebot
