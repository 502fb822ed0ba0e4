#include "guidebot/planner/qp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace guidebot {
namespace {

// All constraints in the form a_i' z >= b_i. Bounds become signed unit rows.
struct RowSet {
  const QpProblem& qp;
  std::vector<Eigen::Index> lower_vars;
  std::vector<Eigen::Index> upper_vars;

  explicit RowSet(const QpProblem& p) : qp(p) {
    for (Eigen::Index i = 0; i < qp.num_vars(); ++i) {
      if (std::isfinite(qp.lower(i))) lower_vars.push_back(i);
      if (std::isfinite(qp.upper(i))) upper_vars.push_back(i);
    }
  }

  [[nodiscard]] Eigen::Index general() const { return qp.ineq.rows(); }
  [[nodiscard]] Eigen::Index size() const {
    return general() + static_cast<Eigen::Index>(lower_vars.size() + upper_vars.size());
  }

  [[nodiscard]] double value(Eigen::Index i, const Eigen::VectorXd& z) const {
    if (i < general()) return qp.ineq.row(i).dot(z) - qp.ineq_rhs(i);
    i -= general();
    if (i < static_cast<Eigen::Index>(lower_vars.size())) {
      const auto v = lower_vars[static_cast<std::size_t>(i)];
      return z(v) - qp.lower(v);
    }
    const auto v = upper_vars[static_cast<std::size_t>(i - static_cast<Eigen::Index>(lower_vars.size()))];
    return qp.upper(v) - z(v);
  }

  [[nodiscard]] Eigen::VectorXd normal(Eigen::Index i) const {
    if (i < general()) return qp.ineq.row(i).transpose();
    Eigen::VectorXd a = Eigen::VectorXd::Zero(qp.num_vars());
    i -= general();
    if (i < static_cast<Eigen::Index>(lower_vars.size())) {
      a(lower_vars[static_cast<std::size_t>(i)]) = 1.0;
    } else {
      a(upper_vars[static_cast<std::size_t>(i - static_cast<Eigen::Index>(lower_vars.size()))]) = -1.0;
    }
    return a;
  }

  /// Maps solver multipliers (one per row in this set) to the public layout:
  /// general rows, then one entry per variable for lower and upper bounds.
  [[nodiscard]] Eigen::VectorXd to_public(const Eigen::VectorXd& lambda) const {
    const auto n = qp.num_vars();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(general() + 2 * n);
    out.head(general()) = lambda.head(general());
    Eigen::Index k = general();
    for (const auto v : lower_vars) out(general() + v) = lambda(k++);
    for (const auto v : upper_vars) out(general() + n + v) = lambda(k++);
    return out;
  }
};

}  // namespace

void QpProblem::validate() const {
  const auto n = num_vars();
  if (n == 0 || hessian.rows() != n || hessian.cols() != n || lower.size() != n || upper.size() != n ||
      ineq.cols() != (ineq.rows() == 0 ? ineq.cols() : n) || ineq.rows() != ineq_rhs.size()) {
    throw std::invalid_argument("QpProblem: inconsistent dimensions");
  }
  if (!hessian.allFinite() || !linear.allFinite() || !ineq.allFinite() || !ineq_rhs.allFinite()) {
    throw std::invalid_argument("QpProblem: non-finite data");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isnan(lower(i)) || std::isnan(upper(i)) || lower(i) > upper(i)) {
      throw std::invalid_argument("QpProblem: invalid bounds");
    }
  }
}

std::string_view to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::MaxIterations: return "max_iterations";
    case QpStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

double KktResiduals::max() const { return std::max({stationarity, primal, complementarity, dual}); }

KktResiduals kkt_residuals(const QpProblem& qp, const Eigen::VectorXd& z, const Eigen::VectorXd& multipliers) {
  const auto n = qp.num_vars();
  const auto m = qp.ineq.rows();
  if (multipliers.size() != m + 2 * n || z.size() != n) {
    throw std::invalid_argument("kkt_residuals: dimension mismatch");
  }
  KktResiduals r;
  Eigen::VectorXd grad = qp.hessian * z + qp.linear;
  if (m > 0) grad -= qp.ineq.transpose() * multipliers.head(m);
  grad -= multipliers.segment(m, n);
  grad += multipliers.tail(n);
  r.stationarity = grad.cwiseAbs().maxCoeff();

  auto account = [&](double slack, double lambda) {
    r.primal = std::max(r.primal, -slack);
    r.complementarity = std::max(r.complementarity, std::abs(lambda * slack));
    r.dual = std::max(r.dual, -lambda);
  };
  for (Eigen::Index i = 0; i < m; ++i) account(qp.ineq.row(i).dot(z) - qp.ineq_rhs(i), multipliers(i));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isfinite(qp.lower(i))) account(z(i) - qp.lower(i), multipliers(m + i));
    if (std::isfinite(qp.upper(i))) account(qp.upper(i) - z(i), multipliers(m + n + i));
  }
  return r;
}

QpSolution solve_qp(const QpProblem& qp, const QpOptions& options) {
  qp.validate();
  const auto n = qp.num_vars();
  Eigen::LLT<Eigen::MatrixXd> llt(qp.hessian);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("solve_qp: Hessian is not positive definite");
  }
  const Eigen::MatrixXd h_inv = llt.solve(Eigen::MatrixXd::Identity(n, n));

  const RowSet rows(qp);
  const auto total = rows.size();
  std::vector<Eigen::Index> active;
  std::vector<Eigen::VectorXd> active_hn;  // H^-1 a_j for each active row
  std::vector<Eigen::VectorXd> active_n;
  std::vector<double> u;                   // multipliers of active rows
  std::vector<char> is_active(static_cast<std::size_t>(total), 0);

  QpSolution sol;
  sol.z = -h_inv * qp.linear;
  const double tol = options.tolerance;
  const double inf = std::numeric_limits<double>::infinity();

  auto finish = [&](QpStatus status) {
    sol.status = status;
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(total);
    for (std::size_t k = 0; k < active.size(); ++k) lambda(active[k]) = u[k];
    sol.multipliers = rows.to_public(lambda);
    sol.kkt = kkt_residuals(qp, sol.z, sol.multipliers);
    return sol;
  };

  while (true) {
    // Most violated row, scaled by its norm.
    Eigen::Index p = -1;
    double worst = -tol;
    for (Eigen::Index i = 0; i < total; ++i) {
      if (is_active[static_cast<std::size_t>(i)]) continue;
      const double s = rows.value(i, sol.z);
      const double scale = i < rows.general() ? std::max(1.0, qp.ineq.row(i).norm()) : 1.0;
      if (s / scale < worst) {
        worst = s / scale;
        p = i;
      }
    }
    if (p < 0) return finish(QpStatus::Optimal);

    const Eigen::VectorXd np = rows.normal(p);
    const Eigen::VectorXd hp = h_inv * np;
    double u_plus = 0.0;

    while (true) {
      if (++sol.iterations > options.max_iterations) return finish(QpStatus::MaxIterations);
      const auto q = static_cast<Eigen::Index>(active.size());
      Eigen::VectorXd r = Eigen::VectorXd::Zero(q);
      Eigen::VectorXd z = hp;
      if (q > 0) {
        Eigen::MatrixXd m(q, q);
        Eigen::VectorXd rhs(q);
        for (Eigen::Index a = 0; a < q; ++a) {
          rhs(a) = active_n[static_cast<std::size_t>(a)].dot(hp);
          for (Eigen::Index b = 0; b < q; ++b) {
            m(a, b) = active_n[static_cast<std::size_t>(a)].dot(active_hn[static_cast<std::size_t>(b)]);
          }
        }
        r = m.ldlt().solve(rhs);
        for (Eigen::Index a = 0; a < q; ++a) z -= r(a) * active_hn[static_cast<std::size_t>(a)];
      }

      // Dual step length: largest step keeping active multipliers >= 0.
      double t1 = inf;
      Eigen::Index block = -1;
      for (Eigen::Index a = 0; a < q; ++a) {
        if (r(a) > 1e-12) {
          const double t = u[static_cast<std::size_t>(a)] / r(a);
          if (t < t1) {
            t1 = t;
            block = a;
          }
        }
      }
      // Primal step length: makes row p active.
      // With n rows active the step direction is zero up to roundoff; a relative test keeps
      // that roundoff from producing a huge primal step.
      if (q >= n) z.setZero();
      const double curvature = z.dot(np);
      const bool primal_move = curvature > 1e-12 * np.dot(hp);
      const double t2 = primal_move ? -rows.value(p, sol.z) / curvature : inf;
      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) return finish(QpStatus::Infeasible);

      if (primal_move) sol.z += t * z;
      for (Eigen::Index a = 0; a < q; ++a) u[static_cast<std::size_t>(a)] -= t * r(a);
      u_plus += t;

      if (primal_move && t2 <= t1) {
        active.push_back(p);
        active_n.push_back(np);
        active_hn.push_back(hp);
        u.push_back(u_plus);
        is_active[static_cast<std::size_t>(p)] = 1;
        break;
      }
      const auto b = static_cast<std::size_t>(block);
      is_active[static_cast<std::size_t>(active[b])] = 0;
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(b));
      active_n.erase(active_n.begin() + static_cast<std::ptrdiff_t>(b));
      active_hn.erase(active_hn.begin() + static_cast<std::ptrdiff_t>(b));
      u.erase(u.begin() + static_cast<std::ptrdiff_t>(b));
    }
  }
}

}  // namespace guidebot
