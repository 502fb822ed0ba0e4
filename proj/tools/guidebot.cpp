#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "guidebot/batch.hpp"
#include "guidebot/cluster_bench.hpp"
#include "guidebot/log.hpp"
#include "guidebot/scenario.hpp"
#include "guidebot/service/server.hpp"
#include "guidebot/simulator.hpp"

namespace fs = std::filesystem;
using namespace guidebot;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitFailed = 2;

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

ScenarioConfig load_with_overrides(const std::string& path, const std::vector<std::string>& sets) {
  ScenarioConfig cfg = load_scenario(path);
  if (!sets.empty()) cfg = apply_overrides(cfg, sets);
  return cfg;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"guidebot: force-compliant guide robot simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = "out";
  std::vector<std::string> sets;
  std::int64_t seed = -1;

  auto* run = app.add_subcommand("run", "simulate one scenario");
  run->add_option("--scenario", scenario_path, "scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--set", sets, "override a field, e.g. --set planner.horizon=12")->take_all();

  int trials = 100;
  std::string variants_arg = "robot_only_hard,robot_user_hard,robot_only_soft,robot_user_soft";
  int workers = 0;
  auto* batch = app.add_subcommand("batch", "Monte Carlo success rates per barrier variant");
  batch->add_option("--scenario", scenario_path, "scenario JSON")->required()->check(CLI::ExistingFile);
  batch->add_option("--out", out_dir, "output directory");
  batch->add_option("--trials", trials, "trials per variant")->check(CLI::PositiveNumber);
  batch->add_option("--seed", seed, "seed base (default: scenario seed)");
  batch->add_option("--variants", variants_arg, "comma-separated variant names");
  batch->add_option("--workers", workers, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
  batch->add_option("--set", sets, "override a field")->take_all();

  std::string sizes_arg = "50,100,200,300";
  int bench_trials = 5;
  auto* bench = app.add_subcommand("bench-cluster", "grid versus naive DBSCAN timing and quality");
  bench->add_option("--sizes", sizes_arg, "comma-separated grid sizes (cells per side)");
  bench->add_option("--trials", bench_trials, "repetitions per size")->check(CLI::PositiveNumber);
  bench->add_option("--seed", seed, "scene seed");
  bench->add_option("--out", out_dir, "output directory");

  std::string bind = "127.0.0.1:8700";
  double tick_hz = 10.0;
  auto* serve = app.add_subcommand("serve", "live simulation over websocket");
  serve->add_option("--scenario", scenario_path, "scenario JSON")->required()->check(CLI::ExistingFile);
  serve->add_option("--bind", bind, "host:port");
  serve->add_option("--tick-hz", tick_hz, "simulation ticks per second")->check(CLI::PositiveNumber);
  serve->add_option("--set", sets, "override a field")->take_all();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) {
      ScenarioConfig cfg = load_with_overrides(scenario_path, sets);
      if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
      fs::create_directories(out_dir);
      const RunResult result = run_scenario(cfg);
      auto steps = open_out(fs::path(out_dir) / "steps.csv");
      write_step_log(steps, result.steps);
      const auto summary = summary_to_json(result.summary);
      open_out(fs::path(out_dir) / "summary.json") << summary.dump(2) << '\n';
      std::cout << summary.dump(2) << '\n';
      return result.summary.success ? kExitOk : kExitFailed;
    }
    if (*batch) {
      ScenarioConfig cfg = load_with_overrides(scenario_path, sets);
      std::vector<CbfVariant> variants;
      for (const auto& name : split_csv(variants_arg)) {
        const auto v = parse_variant(name);
        if (!v) throw ConfigError("unknown variant '" + name + "'");
        variants.push_back(*v);
      }
      if (variants.empty()) throw ConfigError("no variants selected");
      const auto seed_base = seed >= 0 ? static_cast<std::uint64_t>(seed) : cfg.seed;
      const auto rows = run_batch(cfg, trials, seed_base, variants, workers);
      fs::create_directories(out_dir);
      auto table = open_out(fs::path(out_dir) / "batch.csv");
      write_batch_table(table, rows);
      nlohmann::json detail = nlohmann::json::array();
      for (const auto& row : rows) {
        for (const auto& o : row.outcomes) {
          auto j = summary_to_json(o.summary);
          j["variant"] = std::string(to_string(row.variant));
          j["trial"] = o.trial;
          detail.push_back(std::move(j));
        }
      }
      open_out(fs::path(out_dir) / "trials.json") << detail.dump(1) << '\n';
      write_batch_table(std::cout, rows);
      return kExitOk;
    }
    if (*bench) {
      std::vector<int> sizes;
      for (const auto& s : split_csv(sizes_arg)) {
        std::size_t used = 0;
        int n = 0;
        try {
          n = std::stoi(s, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != s.size() || n < 8) throw ConfigError("invalid grid size '" + s + "' (need an integer >= 8)");
        sizes.push_back(n);
      }
      if (sizes.size() < 2) throw ConfigError("need at least two sizes to fit a scaling exponent");
      const auto result = run_cluster_bench(sizes, bench_trials, seed >= 0 ? static_cast<std::uint64_t>(seed) : 7);
      fs::create_directories(out_dir);
      auto csv = open_out(fs::path(out_dir) / "bench_cluster.csv");
      write_bench_csv(csv, result);
      auto summary = open_out(fs::path(out_dir) / "bench_cluster_summary.txt");
      write_bench_summary(summary, result);
      write_bench_summary(std::cout, result);
      return kExitOk;
    }
    if (*serve) {
      ScenarioConfig cfg = load_with_overrides(scenario_path, sets);
      ServerOptions options;
      parse_bind(bind, options);
      options.tick_hz = tick_hz;
      Server server(std::move(cfg), options);
      std::cout << "listening on ws://" << options.host << ':' << server.port() << "/ws" << std::endl;
      server.run(true);
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
