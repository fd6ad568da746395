#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "explore/experiments.hpp"
#include "explore/learner.hpp"
#include "explore/parallel.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

int do_run(const std::string& config_path, const std::string& out_dir,
           long long seed_override, unsigned threads) {
  explore::max_threads() = threads;
  try {
    explore::ExperimentConfig cfg = explore::load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed_override >= 0)
      cfg.seeds = {static_cast<std::uint64_t>(seed_override)};
    for (const std::string& w : explore::market_warnings(cfg.market))
      std::fprintf(stderr, "warning: %s\n", w.c_str());
    const explore::RunOutcome outcome = explore::run_experiment(cfg);
    for (const std::string& f : outcome.files)
      std::printf("wrote %s\n", f.c_str());
    std::printf("done in %.2fs\n", outcome.wall_seconds);
    return kExitOk;
  } catch (const explore::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const explore::TrainingDivergence& e) {
    std::fprintf(stderr, "runtime divergence: %s\n", e.what());
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
}

int do_check(const std::string& config_path) {
  try {
    explore::ExperimentConfig cfg = explore::load_config(config_path);
    std::printf("ok: experiment \"%s\", %zu seed(s), out_dir \"%s\"\n",
                cfg.experiment.c_str(), cfg.seeds.size(), cfg.out_dir.c_str());
    for (const std::string& w : explore::market_warnings(cfg.market))
      std::printf("warning: %s\n", w.c_str());
    return kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"explorer: entropy-regularized exploratory portfolio experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  long long seed_override = -1;
  unsigned threads = 0;

  CLI::App* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "JSON config file")->required();
  run->add_option("--out", out_dir, "output directory override");
  run->add_option("--seed", seed_override, "replace the seed list with one seed");
  run->add_option("--threads", threads, "worker thread cap (0 = all cores)");

  CLI::App* list = app.add_subcommand("list", "list known experiments");

  CLI::App* check = app.add_subcommand("check", "validate a config without running");
  check->add_option("config", config_path, "JSON config file")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return do_run(config_path, out_dir, seed_override, threads);
  if (list->parsed()) {
    for (const std::string& name : explore::known_experiments())
      std::printf("%s\n", name.c_str());
    return kExitOk;
  }
  if (check->parsed()) return do_check(config_path);
  return kExitConfig;
}
