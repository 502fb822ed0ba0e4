#include "oracles/oracles.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>

namespace oracle {

using guidebot::Point2D;

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] < 0) != (b[i] < 0)) return false;
    if (a[i] < 0) continue;
    auto [it1, new1] = ab.emplace(a[i], b[i]);
    auto [it2, new2] = ba.emplace(b[i], a[i]);
    if (it1->second != b[i] || it2->second != a[i]) return false;
  }
  return true;
}

namespace {

double dist(Point2D p, Point2D q) { return std::sqrt((p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y)); }

std::map<int, std::vector<std::size_t>> groups(const std::vector<int>& labels) {
  std::map<int, std::vector<std::size_t>> g;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) g[labels[i]].push_back(i);
  }
  return g;
}

}  // namespace

double dbi(std::span<const Point2D> pts, const std::vector<int>& labels) {
  const auto g = groups(labels);
  std::vector<Point2D> centers;
  std::vector<double> spread;
  for (const auto& [id, idx] : g) {
    Point2D c{0, 0};
    for (auto i : idx) {
      c.x += pts[i].x;
      c.y += pts[i].y;
    }
    c.x /= static_cast<double>(idx.size());
    c.y /= static_cast<double>(idx.size());
    double s = 0;
    for (auto i : idx) s += dist(pts[i], c);
    centers.push_back(c);
    spread.push_back(s / static_cast<double>(idx.size()));
  }
  double total = 0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    double worst = 0;
    for (std::size_t j = 0; j < centers.size(); ++j) {
      if (i != j) worst = std::max(worst, (spread[i] + spread[j]) / dist(centers[i], centers[j]));
    }
    total += worst;
  }
  return total / static_cast<double>(centers.size());
}

double silhouette(std::span<const Point2D> pts, const std::vector<int>& labels) {
  const auto g = groups(labels);
  double total = 0;
  std::size_t n = 0;
  for (const auto& [id, idx] : g) {
    for (auto i : idx) {
      ++n;
      if (idx.size() == 1) continue;
      double a = 0;
      for (auto j : idx) a += dist(pts[i], pts[j]);
      a /= static_cast<double>(idx.size() - 1);
      double b = std::numeric_limits<double>::infinity();
      for (const auto& [other, oidx] : g) {
        if (other == id) continue;
        double m = 0;
        for (auto j : oidx) m += dist(pts[i], pts[j]);
        b = std::min(b, m / static_cast<double>(oidx.size()));
      }
      const double den = std::max(a, b);
      total += den > 0 ? (b - a) / den : 0.0;
    }
  }
  return total / static_cast<double>(n);
}

std::pair<int, double> best_assignment(std::span<const Point2D> prev, std::span<const Point2D> cur, double d_max) {
  const std::size_t n = std::max(prev.size(), cur.size());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::pair<int, double> best{-1, 0.0};
  do {
    int m = 0;
    double c = 0;
    for (std::size_t i = 0; i < prev.size(); ++i) {
      const auto j = static_cast<std::size_t>(perm[i]);
      if (j >= cur.size()) continue;
      const double d = dist(prev[i], cur[j]);
      if (d <= d_max) {
        ++m;
        c += d;
      }
    }
    if (m > best.first || (m == best.first && c < best.second)) best = {m, c};
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double qp_objective(const guidebot::QpProblem& qp, const Eigen::VectorXd& z) {
  return 0.5 * z.dot(qp.hessian * z) + qp.linear.dot(z);
}

std::optional<double> qp_by_enumeration(const guidebot::QpProblem& qp) {
  const Eigen::Index n = qp.num_vars();
  // Stack everything as rows c'z >= d.
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  for (Eigen::Index i = 0; i < qp.ineq.rows(); ++i) {
    rows.emplace_back(qp.ineq.row(i).transpose());
    rhs.push_back(qp.ineq_rhs(i));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isfinite(qp.lower(i))) {
      rows.emplace_back(Eigen::VectorXd::Unit(n, i));
      rhs.push_back(qp.lower(i));
    }
    if (std::isfinite(qp.upper(i))) {
      rows.emplace_back(-Eigen::VectorXd::Unit(n, i));
      rhs.push_back(-qp.upper(i));
    }
  }
  const std::size_t m = rows.size();
  std::optional<double> best;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    std::vector<std::size_t> act;
    for (std::size_t r = 0; r < m; ++r) {
      if (mask & (std::uint64_t{1} << r)) act.push_back(r);
    }
    const auto k = static_cast<Eigen::Index>(act.size());
    if (k > n) continue;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n + k);
    kkt.topLeftCorner(n, n) = qp.hessian;
    b.head(n) = -qp.linear;
    for (Eigen::Index a = 0; a < k; ++a) {
      const auto r = act[static_cast<std::size_t>(a)];
      kkt.block(0, n + a, n, 1) = -rows[r];
      kkt.block(n + a, 0, 1, n) = rows[r].transpose();
      b(n + a) = rhs[r];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(b);
    const Eigen::VectorXd z = sol.head(n);
    if (k > 0 && sol.tail(k).minCoeff() < -1e-9) continue;
    bool feasible = true;
    for (std::size_t r = 0; r < m && feasible; ++r) feasible = rows[r].dot(z) >= rhs[r] - 1e-9;
    if (!feasible) continue;
    const double f = qp_objective(qp, z);
    if (!best || f < *best) best = f;
  }
  return best;
}

std::optional<double> dijkstra_cost(const guidebot::BinaryGrid& grid, guidebot::GridCell s, guidebot::GridCell g) {
  const int w = grid.spec.width, h = grid.spec.height;
  std::vector<double> d(grid.spec.size(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  d[grid.spec.index(s.row, s.col)] = 0;
  pq.push({0.0, grid.spec.index(s.row, s.col)});
  while (!pq.empty()) {
    auto [c, i] = pq.top();
    pq.pop();
    if (c > d[i]) continue;
    const int r = static_cast<int>(i) / w, col = static_cast<int>(i) % w;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const int nr = r + dr, nc = col + dc;
        if (nr < 0 || nc < 0 || nr >= h || nc >= w || grid.occupied(nr, nc)) continue;
        if (dr != 0 && dc != 0 && (grid.occupied(r + dr, col) || grid.occupied(r, col + dc))) continue;
        const double nd = c + ((dr != 0 && dc != 0) ? std::sqrt(2.0) : 1.0);
        const auto j = grid.spec.index(nr, nc);
        if (nd < d[j]) {
          d[j] = nd;
          pq.push({nd, j});
        }
      }
    }
  }
  const double r = d[grid.spec.index(g.row, g.col)];
  if (!std::isfinite(r)) return std::nullopt;
  return r;
}

std::vector<double> sobel(const guidebot::ElevationGrid& elev) {
  const int w = elev.spec.width, h = elev.spec.height;
  auto at = [&](int r, int c) {
    r = std::clamp(r, 0, h - 1);
    c = std::clamp(c, 0, w - 1);
    const double v = elev.values[elev.spec.index(r, c)];
    return std::isnan(v) ? 0.0 : v;
  };
  const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  const int ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  std::vector<double> out(elev.spec.size());
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double gx = 0, gy = 0;
      for (int i = -1; i <= 1; ++i) {
        for (int j = -1; j <= 1; ++j) {
          gx += kx[i + 1][j + 1] * at(r + i, c + j);
          gy += ky[i + 1][j + 1] * at(r + i, c + j);
        }
      }
      out[elev.spec.index(r, c)] = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

double tracking_mpc_cost(const Eigen::VectorXd& z, const guidebot::Pose2D& x0, const guidebot::VelocityCommand& u_prev,
                         std::span<const guidebot::Pose2D> refs, const guidebot::Nominal& nominal,
                         const guidebot::PlannerConfig& cfg) {
  const int zh = cfg.horizon;
  double cost = 0;
  Eigen::Vector3d x(x0.x, x0.y, x0.theta);
  Eigen::Vector3d prev(u_prev.vx, u_prev.vy, u_prev.wz);
  for (int k = 0; k < zh; ++k) {
    const Eigen::Vector3d u = z.segment<3>(3 * k);
    const double th = nominal.states[static_cast<std::size_t>(k)].theta;
    x += cfg.dt * Eigen::Vector3d(std::cos(th) * u(0) - std::sin(th) * u(1), std::sin(th) * u(0) + std::cos(th) * u(1), u(2));
    if (!refs.empty()) {
      const auto& r = refs[static_cast<std::size_t>(k)];
      const Eigen::Vector3d e = x - Eigen::Vector3d(r.x, r.y, r.theta);
      cost += e.dot((k + 1 < zh ? cfg.Q : cfg.Qf) * e);
    }
    cost += u.dot(cfg.R * u);
    cost += (u - prev).dot(cfg.S * (u - prev));
    prev = u;
    cost += cfg.kappa1 * z(3 * zh + k) * z(3 * zh + k) + cfg.kappa2 * z(4 * zh + k) * z(4 * zh + k);
  }
  return cost + 0.5e-8 * z.squaredNorm();
}

void quadratic_terms(const std::function<double(const Eigen::VectorXd&)>& f, int n, Eigen::MatrixXd& hessian,
                     Eigen::VectorXd& linear) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  const double f0 = f(zero);
  hessian.resize(n, n);
  linear.resize(n);
  std::vector<double> fp(static_cast<std::size_t>(n)), fm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    fp[static_cast<std::size_t>(i)] = f(Eigen::VectorXd::Unit(n, i));
    fm[static_cast<std::size_t>(i)] = f(-Eigen::VectorXd::Unit(n, i));
    hessian(i, i) = fp[static_cast<std::size_t>(i)] + fm[static_cast<std::size_t>(i)] - 2 * f0;
    linear(i) = 0.5 * (fp[static_cast<std::size_t>(i)] - fm[static_cast<std::size_t>(i)]);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double fij = f(Eigen::VectorXd::Unit(n, i) + Eigen::VectorXd::Unit(n, j));
      hessian(i, j) = hessian(j, i) = fij - fp[static_cast<std::size_t>(i)] - fp[static_cast<std::size_t>(j)] + f0;
    }
  }
}

guidebot::BinaryGrid random_grid(std::mt19937_64& rng, int w, int h, double density) {
  guidebot::BinaryGrid g(guidebot::GridSpec{w, h, 0.1, {0, 0}});
  std::bernoulli_distribution occ(density);
  for (auto& c : g.cells) c = occ(rng) ? 1 : 0;
  return g;
}

}  // namespace oracle
