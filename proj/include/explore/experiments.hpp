#pragma once

#include <string>
#include <vector>

#include "explore/config.hpp"

namespace explore {

inline constexpr const char* kVersion = "explore-0.1.0";

struct RunOutcome {
  std::vector<std::string> files;  // paths written, manifest last
  double wall_seconds = 0.0;
};

/// Executes the configured experiment deterministically and writes its CSV
/// artifacts plus manifest.json and summary.json under cfg.out_dir.
RunOutcome run_experiment(const ExperimentConfig& cfg);

}  // namespace explore
