#include "guidebot/batch.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace guidebot {

std::string_view to_string(CbfVariant v) {
  switch (v) {
    case CbfVariant::RobotOnlyHard: return "robot_only_hard";
    case CbfVariant::RobotUserHard: return "robot_user_hard";
    case CbfVariant::RobotOnlySoft: return "robot_only_soft";
    case CbfVariant::RobotUserSoft: return "robot_user_soft";
  }
  return "unknown";
}

std::optional<CbfVariant> parse_variant(std::string_view name) {
  for (const auto v : kAllVariants) {
    if (to_string(v) == name) return v;
  }
  return std::nullopt;
}

ScenarioConfig apply_variant(ScenarioConfig cfg, CbfVariant v) {
  const bool robot_only = v == CbfVariant::RobotOnlyHard || v == CbfVariant::RobotOnlySoft;
  const bool hard = v == CbfVariant::RobotOnlyHard || v == CbfVariant::RobotUserHard;
  if (robot_only) cfg.planner.kappa2 = 0.0;
  cfg.planner.hard_constraints = hard;
  cfg.name += std::string("/") + std::string(to_string(v));
  return cfg;
}

ScenarioConfig jitter_trial(ScenarioConfig cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> timing(-0.3, 0.3);
  std::uniform_real_distribution<double> offset(-0.1, 0.1);
  for (auto& d : cfg.dynamic_obstacles) d.start_time += timing(rng);
  cfg.robot_start.x += offset(rng);
  cfg.robot_start.y += offset(rng);
  cfg.seed = seed;
  return cfg;
}

std::vector<BatchRow> run_batch(const ScenarioConfig& tmpl, int n_trials, std::uint64_t seed_base,
                                std::span<const CbfVariant> variants, int workers) {
  if (n_trials < 1) throw std::invalid_argument("run_batch: n_trials must be >= 1");
  tmpl.validate();
  std::vector<BatchRow> rows(variants.size());
  for (std::size_t v = 0; v < variants.size(); ++v) {
    rows[v].variant = variants[v];
    rows[v].trials = n_trials;
    rows[v].outcomes.resize(static_cast<std::size_t>(n_trials));
  }
  const std::size_t jobs = variants.size() * static_cast<std::size_t>(n_trials);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto work = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      try {
        const std::size_t v = job / static_cast<std::size_t>(n_trials);
        const int trial = static_cast<int>(job % static_cast<std::size_t>(n_trials));
        const auto cfg = apply_variant(jitter_trial(tmpl, seed_base + static_cast<std::uint64_t>(trial)), variants[v]);
        auto result = run_scenario(cfg);
        spdlog::debug("batch {} trial {}: {} ({})", to_string(variants[v]), trial, result.summary.success,
                      to_string(result.summary.cause));
        rows[v].outcomes[static_cast<std::size_t>(trial)] = {trial, std::move(result.summary)};
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = jobs;
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_workers = std::min<std::size_t>(jobs, workers > 0 ? static_cast<std::size_t>(workers) : hw);
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n_workers; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  for (auto& row : rows) {
    for (const auto& o : row.outcomes) row.successes += o.summary.success ? 1 : 0;
    row.rate = static_cast<double>(row.successes) / row.trials;
  }
  return rows;
}

void write_batch_table(std::ostream& out, std::span<const BatchRow> rows) {
  out << "variant,trials,successes,rate\n";
  for (const auto& r : rows) out << fmt::format("{},{},{},{:.4f}\n", to_string(r.variant), r.trials, r.successes, r.rate);
}

}  // namespace guidebot
