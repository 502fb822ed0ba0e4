// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Optional arguments select criteria whose name contains any of them.

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "guidebot/batch.hpp"
#include "guidebot/cluster_bench.hpp"
#include "guidebot/force.hpp"
#include "guidebot/perception.hpp"
#include "guidebot/planner/mpc.hpp"
#include "guidebot/planner/qp.hpp"
#include "guidebot/simulator.hpp"
#include "guidebot/tracking.hpp"
#include "oracles/oracles.hpp"

using namespace guidebot;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass{false};
  std::string detail;
};

struct Criterion {
  std::string name;
  std::function<Outcome()> check;
};

ScenarioConfig load(const std::string& name) { return load_scenario(fs::path(GUIDEBOT_SCENARIO_DIR) / name); }

std::vector<fs::path> shipped_scenarios() {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(GUIDEBOT_SCENARIO_DIR)) {
    if (e.path().extension() == ".json") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome clustering_equivalence() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> edge(1, 64);
  std::uniform_real_distribution<double> density(0.02, 0.6);
  std::uniform_int_distribution<int> kdist(1, 3), mdist(1, 9);
  int mismatches = 0;
  const int n = 250;
  for (int t = 0; t < n; ++t) {
    const auto grid = oracle::random_grid(rng, edge(rng), edge(rng), density(rng));
    const ClusteringParams p{kdist(rng), mdist(rng)};
    const auto fast = grid_dbscan(grid, p);
    std::vector<Point2D> pts;
    for (const auto& c : fast.cells) pts.push_back(grid.spec.cell_center(c));
    const auto slow = naive_dbscan(pts, p.k * grid.spec.resolution * (1 + 1e-9), p.min_pts, kernels::Metric::Chebyshev);
    if (!oracle::same_partition(fast.labels.labels, slow.labels)) ++mismatches;
  }
  return {mismatches == 0, fmt::format("{} random grids up to 64x64, {} mismatches", n, mismatches)};
}

Outcome clustering_scaling() {
  const std::vector<int> sizes{150, 300, 450, 600};
  const auto r = run_cluster_bench(sizes, 3);
  bool faster = true;
  std::string times;
  for (const int s : sizes) {
    double g = 0, nv = 0;
    for (const auto& m : r.summaries) {
      if (m.edge != s) continue;
      (m.method == "grid" ? g : nv) = m.median_ms;
    }
    times += fmt::format(" {}:{:.1f}/{:.1f}ms", s, g, nv);
    if (s >= 300 && !(g < nv)) faster = false;
  }
  const bool pass = r.exponent_grid <= 1.3 && r.exponent_naive >= 1.7 && faster;
  return {pass, fmt::format("exponent grid {:.3f} (<= 1.3), naive {:.3f} (>= 1.7); grid/naive{}", r.exponent_grid,
                            r.exponent_naive, times)};
}

Outcome cluster_metrics() {
  const std::vector<Point2D> pts{{0, 0}, {0, 1}, {10, 0}, {10, 1}};
  ClusterLabels l;
  l.labels = {1, 1, 2, 2};
  l.num_clusters = 2;
  const double d = dbi(pts, l), s = silhouette(pts, l);
  const double od = oracle::dbi(pts, l.labels), os = oracle::silhouette(pts, l.labels);
  bool fixture = std::abs(d - 0.1) <= 1e-9 && std::abs(s - 0.9) <= 1e-3 && std::abs(d - od) <= 1e-9 &&
                 std::abs(s - os) <= 1e-9;

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> c(-5, 5);
  std::uniform_int_distribution<int> np(4, 40);
  int out_of_range = 0, oracle_mismatch = 0;
  for (int t = 0; t < 1000; ++t) {
    const int n = np(rng);
    std::uniform_int_distribution<int> kd(2, std::max(2, n / 2));
    const int k = kd(rng);
    std::uniform_int_distribution<int> lab(1, k);
    std::vector<Point2D> p;
    ClusterLabels cl;
    cl.num_clusters = k;
    for (int i = 0; i < n; ++i) {
      p.push_back({c(rng), c(rng)});
      cl.labels.push_back(i < k ? i + 1 : lab(rng));
    }
    const double dv = dbi(p, cl), sv = silhouette(p, cl);
    if (!(dv >= 0.0) || !(sv >= -1.0 && sv <= 1.0)) ++out_of_range;
    if (std::abs(dv - oracle::dbi(p, cl.labels)) > 1e-9 * std::max(1.0, dv) ||
        std::abs(sv - oracle::silhouette(p, cl.labels)) > 1e-9) {
      ++oracle_mismatch;
    }
  }
  return {fixture && out_of_range == 0 && oracle_mismatch == 0,
          fmt::format("fixture DBI {:.12f} SIL {:.6f}; 1000 random labelings: {} out of range, {} oracle mismatches", d,
                      s, out_of_range, oracle_mismatch)};
}

Outcome rls_recovery() {
  const Wrench2D applied{10, -5, 2};
  auto rel_err = [&](const Wrench2D& w) {
    return std::max({std::abs(w.fx - applied.fx) / 10.0, std::abs(w.fy - applied.fy) / 5.0,
                     std::abs(w.mz - applied.mz) / 2.0});
  };
  auto chain = [&](double sigma, std::uint64_t seed) {
    FixtureState st;
    auto rls = RlsState::make(3, 0.98, 1e3);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma > 0 ? sigma : 1.0);
    int first_ok = -1;
    for (int i = 1; i <= 200; ++i) {
      const auto step = planar_fixture_step(st, applied, FixtureParams{}, 0.02);
      st = step.state;
      Eigen::VectorXd tau = step.tau_obs;
      if (sigma > 0) {
        for (int j = 0; j < 3; ++j) tau(j) += noise(rng);
      }
      rls = rls_step(rls, step.regressor, tau);
      if (first_ok < 0 && rel_err(extract_base_wrench(rls.estimate)) <= 0.02) first_ok = i;
    }
    return std::make_pair(first_ok, rel_err(extract_base_wrench(rls.estimate)));
  };
  const auto [steps, err0] = chain(0.0, 0);
  double worst_noisy = 0;
  for (std::uint64_t s = 1; s <= 20; ++s) worst_noisy = std::max(worst_noisy, chain(0.5, s).second);
  const bool pass = steps > 0 && steps <= 200 && err0 <= 0.02 && worst_noisy <= 0.10;
  return {pass, fmt::format("noiseless within 2% after {} steps (final {:.2e}); sigma 0.5 worst error over 20 seeds "
                            "at step 200: {:.1f}%",
                            steps, err0, 100 * worst_noisy)};
}

Outcome compliance_arithmetic() {
  const InertiaParams inertia{50.0, 8.0};
  const Deadband deadband{5.0, 2.0};
  const auto v = compliance_velocity(Eigen::Vector3d(10, 0, 0), {}, inertia, deadband, {30, 0, 0});
  const double e1 = std::abs(v.vx - 0.2) + std::abs(v.vy) + std::abs(v.wz);
  const auto v2 = compliance_velocity(Eigen::Vector3d(5, -2.5, 4), {0.1, 0.2, -0.3}, inertia, deadband, {30, 0, 0});
  const double e2 = std::abs(v2.vx - 0.2) + std::abs(v2.vy - 0.15) + std::abs(v2.wz - 0.2);
  ImpulseBuffer buf(3, 0.5);
  buf.push({10, 0, 0}, 0.02);
  buf.push({20, 0, 0}, 0.02);
  buf.push({40, 0, 0}, 0.02);
  const double e3 = std::abs(accumulate_impulse(buf)(0) - (0.8 + 0.2 + 0.05));
  const double worst = std::max({e1, e2, e3});
  return {worst <= 1e-12, fmt::format("largest deviation from closed form {:.2e} (L = 10 N s at 50 kg -> {:.15f} m/s)",
                                      worst, v.vx)};
}

Outcome cbf_invariance() {
  int runs = 0, checks = 0, violations = 0;
  double worst = 0;
  for (const auto& path : shipped_scenarios()) {
    const auto base = load_scenario(path);
    for (const auto v : kAllVariants) {
      const auto r = run_scenario(apply_variant(base, v));
      ++runs;
      checks += r.summary.invariance_checks;
      violations += r.summary.invariance_violations;
      worst = std::min(worst, r.summary.worst_invariance_margin);
    }
  }
  return {violations == 0 && checks > 0,
          fmt::format("{} runs, {} barrier checks, {} violations, worst margin {:.2e}", runs, checks, violations, worst)};
}

Outcome qp_correctness() {
  std::mt19937_64 rng(5150);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_int_distribution<int> nv(1, 10), nr(0, 8);
  int compared = 0, mismatches = 0, infeasible_agree = 0;
  double worst = 0;
  for (int t = 0; t < 500; ++t) {
    const int n = nv(rng), m = nr(rng);
    QpProblem qp;
    Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return u(rng); });
    qp.hessian = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
    qp.linear = Eigen::VectorXd::NullaryExpr(n, [&] { return 2 * u(rng); });
    qp.ineq = Eigen::MatrixXd::NullaryExpr(m, n, [&] { return u(rng); });
    qp.ineq_rhs = Eigen::VectorXd::NullaryExpr(m, [&] { return u(rng); });
    qp.lower = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
    qp.upper = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    for (int i = 0; i < n; ++i) {
      if (u(rng) > 0.3) qp.lower(i) = -1.0 - std::abs(u(rng));
      if (u(rng) > 0.3) qp.upper(i) = 1.0 + std::abs(u(rng));
    }
    const auto sol = solve_qp(qp);
    const auto ref = oracle::qp_by_enumeration(qp);
    if (!ref) {
      if (sol.status == QpStatus::Infeasible) {
        ++infeasible_agree;
      } else {
        ++mismatches;
      }
      continue;
    }
    ++compared;
    const double err = sol.status == QpStatus::Optimal ? std::abs(oracle::qp_objective(qp, sol.z) - *ref)
                                                       : std::numeric_limits<double>::infinity();
    worst = std::max(worst, err);
    if (!(err <= 1e-5)) ++mismatches;
  }
  return {mismatches == 0, fmt::format("500 random QPs (<= 10 vars, <= 8 rows): {} compared, {} infeasible in both, "
                                       "{} mismatches, worst objective gap {:.2e}",
                                       compared, infeasible_agree, mismatches, worst)};
}

Outcome degradation() {
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0;
  bool rows_equal = true;
  for (int trial = 0; trial < 50; ++trial) {
    PlannerConfig cfg;
    cfg.horizon = 6;
    const int n = 5 * cfg.horizon;
    const Pose2D x0{u(rng), u(rng), 0.5 * u(rng)};
    const VelocityCommand up{0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng)};
    std::vector<VelocityCommand> warm;
    for (int k = 0; k < cfg.horizon; ++k) warm.push_back({0.5 * u(rng), 0.2 * u(rng), 0.3 * u(rng)});
    const auto nominal = rollout(x0, warm, cfg.dt);
    std::vector<Pose2D> refs;
    for (int k = 0; k < cfg.horizon; ++k) {
      refs.push_back({x0.x + 0.06 * (k + 1), x0.y + 0.05 * u(rng), x0.theta + 0.1 * u(rng)});
    }
    const std::vector<std::vector<Ellipse>> obs{
        std::vector<Ellipse>(static_cast<std::size_t>(cfg.horizon) + 1, Ellipse{{x0.x + 2, x0.y}, 0.5, 0.4, 0.3})};
    const auto rows = build_constraints(nominal, obs, cfg);
    const auto qp = build_qp(x0, up, refs, {}, rows, nominal, cfg);
    Eigen::MatrixXd h;
    Eigen::VectorXd g;
    oracle::quadratic_terms(
        [&](const Eigen::VectorXd& z) { return oracle::tracking_mpc_cost(z, x0, up, refs, nominal, cfg); }, n, h, g);
    const double scale = 1.0 + h.cwiseAbs().maxCoeff();
    worst = std::max({worst, (qp.hessian - h).cwiseAbs().maxCoeff() / scale, (qp.linear - g).cwiseAbs().maxCoeff() / scale});
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      Eigen::RowVectorXd expect = Eigen::RowVectorXd::Zero(n);
      expect.head(3 * cfg.horizon) = rows[r].coeffs.transpose();
      expect(rows[r].slack_index) = 1.0;
      rows_equal = rows_equal && qp.ineq.row(ri) == expect && qp.ineq_rhs(ri) == rows[r].rhs;
    }
  }
  const bool matrices = worst <= 1e-9 && rows_equal;

  const auto cfg = load("q1_force_only.json");
  const auto run = run_scenario(cfg);
  const double release = cfg.force_script.front().t_start + cfg.force_script.front().duration;
  double x_release = 0, stop = -1;
  for (const auto& s : run.steps) {
    if (std::abs(s.t - release) < 1e-6) x_release = s.pose.x;
    const bool still = std::abs(s.command.vx) < 1e-3 && std::abs(s.command.vy) < 1e-3 && std::abs(s.command.wz) < 1e-3;
    if (s.t > release && still && stop < 0) stop = s.t;
    if (s.t > release && !still) stop = -1;
  }
  const bool behaviour = x_release > 0.1 && stop > 0 && stop - release <= 5.0;
  return {matrices && behaviour,
          fmt::format("v_tgt = 0 QP vs tracking MPC: worst relative gap {:.1e}, rows identical: {}; FC-only push moved "
                      "{:.2f} m by release, stopped {:.1f} s after release",
                      worst, rows_equal ? "yes" : "no", x_release, stop > 0 ? stop - release : -1.0)};
}

Outcome safety_ordering() {
  const int trials = 24;
  std::string detail;
  bool pass = true;
  for (const char* name : {"q3_static_field.json", "q4_pedestrian.json"}) {
    const auto base = load(name);
    const auto rows = run_batch(base, trials, base.seed * 1000, kAllVariants);
    auto succ = [&](CbfVariant v) {
      for (const auto& r : rows) {
        if (r.variant == v) return r.successes;
      }
      return -1;
    };
    const int ruS = succ(CbfVariant::RobotUserSoft), roS = succ(CbfVariant::RobotOnlySoft);
    const int ruH = succ(CbfVariant::RobotUserHard), roH = succ(CbfVariant::RobotOnlyHard);
    const bool ordering = ruS >= roS && ruS >= ruH && ruH >= roH;

    const double d_safe2 = base.planner.d_safe2;
    double ru_worst = 1e9, ro_best_violation = 1e9;
    for (const auto& r : rows) {
      for (const auto& o : r.outcomes) {
        const double c = o.summary.min_clearance_user;
        if (r.variant == CbfVariant::RobotUserSoft && o.summary.success) ru_worst = std::min(ru_worst, c);
        if (r.variant == CbfVariant::RobotOnlySoft || r.variant == CbfVariant::RobotOnlyHard) {
          ro_best_violation = std::min(ro_best_violation, c);
        }
      }
    }
    const bool clearance = ru_worst >= d_safe2 - 0.05 && ro_best_violation < d_safe2;
    pass = pass && ordering && clearance;
    detail += fmt::format("{}: success RUS {}/{} ROS {} RUH {} ROH {}; RUS min user clearance {:.3f}, robot-only min "
                          "{:.3f}. ",
                          base.name, ruS, trials, roS, ruH, roH, ru_worst, ro_best_violation);
  }
  return {pass, detail};
}

Outcome tracking() {
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<int> sz(0, 6);
  std::uniform_real_distribution<double> c(0, 3);
  int bad = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<Ellipse> p(static_cast<std::size_t>(sz(rng))), q(static_cast<std::size_t>(sz(rng)));
    std::vector<Point2D> pc, qc;
    for (auto& e : p) {
      e = {{c(rng), c(rng)}, 0.3, 0.2, 0};
      pc.push_back(e.center);
    }
    for (auto& e : q) {
      e = {{c(rng), c(rng)}, 0.3, 0.2, 0};
      qc.push_back(e.center);
    }
    const auto a = associate(p, q, 1.0);
    const auto [m, cost] = oracle::best_assignment(pc, qc, 1.0);
    double total = 0;
    for (auto [i, j] : a.matches) total += distance(pc[static_cast<std::size_t>(i)], qc[static_cast<std::size_t>(j)]);
    if (static_cast<int>(a.matches.size()) != m || std::abs(total - cost) > 1e-9 * std::max(1.0, cost)) ++bad;
  }

  const TrackingConfig cfg;
  const double dt = 0.1;
  const auto noise = KalmanNoise::from_config(cfg, dt);
  auto truth = [](double time) {
    return Ellipse{{1.0 + 0.4 * time + 0.25 * time * time, -2.0 + 0.3 * time - 0.1 * time * time}, 0.5, 0.3, 0.1};
  };
  auto track = spawn_track(1, truth(0), cfg);
  double worst = 0;
  for (int k = 1; k <= 400; ++k) {
    if (k > 300) {
      worst = std::max(worst, distance(predict_trajectory(track, 1, dt)[0].center, truth(k * dt).center));
    }
    track = kf_step(track, Measurement::from(truth(k * dt)), dt, noise);
  }
  return {bad == 0 && worst < 1e-9,
          fmt::format("assignment vs brute force: {} of 1000 differ; constant-acceleration one-step error {:.2e} m "
                      "after 300 warm-up frames",
                      bad, worst)};
}

Outcome determinism() {
  int identical = 0, total = 0;
  for (const auto& path : shipped_scenarios()) {
    auto cfg = load_scenario(path);
    cfg.duration = std::min(cfg.duration, 10.0);
    auto log = [&] {
      std::ostringstream ss;
      write_step_log(ss, run_scenario(cfg).steps);
      return ss.str();
    };
    ++total;
    identical += log() == log() ? 1 : 0;
  }
  return {identical == total, fmt::format("{} of {} scenarios produced byte-identical step logs", identical, total)};
}

Outcome throughput() {
  auto cfg = load("q3_static_field.json");
  cfg.static_obstacles.resize(3);
  // Dynamic paths stay clear of the static ones; touching footprints merge into one cluster.
  cfg.dynamic_obstacles.push_back({0.3, 0.3, 0, 1.0, 0.0, {{11, 2.3}, {-2, 2.3}}, false});
  cfg.dynamic_obstacles.push_back({0.4, 0.3, 0.5, 0.8, 0.0, {{8.5, -3}, {8.5, 3}}, true});
  cfg.goal = Point2D{15, 0};
  cfg.require_goal = false;
  cfg.modes = {true, true, true};
  cfg.duration = 10.0;
  const auto r = run_scenario(cfg);
  const double grid = cfg.perception.window / cfg.perception.resolution;
  const double total = r.summary.mean_plan_ms + r.summary.mean_perception_ms;
  return {total < 100.0, fmt::format("{:.0f}x{:.0f} grid, 5 obstacles, {} ticks: plan {:.2f} ms + perception {:.2f} ms "
                                     "= {:.2f} ms per tick, run ended {}",
                                     grid, grid, r.summary.steps, r.summary.mean_plan_ms,
                                     r.summary.mean_perception_ms, total, to_string(r.summary.cause))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"clustering-equivalence", clustering_equivalence},
      {"clustering-scaling", clustering_scaling},
      {"cluster-metrics", cluster_metrics},
      {"rls-recovery", rls_recovery},
      {"compliance-arithmetic", compliance_arithmetic},
      {"cbf-invariance", cbf_invariance},
      {"qp-correctness", qp_correctness},
      {"degradation", degradation},
      {"safety-ordering", safety_ordering},
      {"tracking", tracking},
      {"determinism", determinism},
      {"throughput", throughput},
  };
  std::vector<std::string> filters(argv + 1, argv + argc);
  int failed = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!filters.empty() &&
        std::none_of(filters.begin(), filters.end(), [&](const std::string& f) { return c.name.find(f) != std::string::npos; })) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << fmt::format("{} {:<24} {} [{:.1f} s]", o.pass ? "PASS" : "FAIL", c.name, o.detail, secs) << std::endl;
    ++ran;
    failed += o.pass ? 0 : 1;
  }
  std::cout << fmt::format("{} of {} criteria passed", ran - failed, ran) << std::endl;
  return failed == 0 ? 0 : 1;
}
