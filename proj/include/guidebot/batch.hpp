#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "guidebot/scenario.hpp"
#include "guidebot/simulator.hpp"

namespace guidebot {

enum class CbfVariant { RobotOnlyHard, RobotUserHard, RobotOnlySoft, RobotUserSoft };

inline constexpr CbfVariant kAllVariants[] = {CbfVariant::RobotOnlyHard, CbfVariant::RobotUserHard,
                                              CbfVariant::RobotOnlySoft, CbfVariant::RobotUserSoft};

std::string_view to_string(CbfVariant v);
std::optional<CbfVariant> parse_variant(std::string_view name);

/// Robot-only sets kappa2 = 0 (no user rows); hard pins every slack at zero.
ScenarioConfig apply_variant(ScenarioConfig cfg, CbfVariant v);

/// Per-trial perturbation: dynamic obstacle start times shift uniformly in
/// [-0.3, 0.3] s and the start position in [-0.1, 0.1] m per axis. The run
/// seed becomes `seed`.
ScenarioConfig jitter_trial(ScenarioConfig cfg, std::uint64_t seed);

struct TrialOutcome {
  int trial{0};
  RunSummary summary;
};

struct BatchRow {
  CbfVariant variant{CbfVariant::RobotUserSoft};
  int trials{0};
  int successes{0};
  double rate{0.0};
  std::vector<TrialOutcome> outcomes;
};

/// Trial t of every variant uses seed seed_base + t, so variants see the same
/// perturbations. Runs on `workers` threads (0 = hardware concurrency);
/// results do not depend on the worker count.
std::vector<BatchRow> run_batch(const ScenarioConfig& tmpl, int n_trials, std::uint64_t seed_base,
                                std::span<const CbfVariant> variants, int workers = 0);

/// "variant,trials,successes,rate"
void write_batch_table(std::ostream& out, std::span<const BatchRow> rows);

}  // namespace guidebot
