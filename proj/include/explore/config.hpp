#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "explore/closed_form_log.hpp"
#include "explore/closed_form_quad.hpp"
#include "explore/learner.hpp"
#include "explore/market.hpp"

namespace explore {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parameters of the built-in factor-demo model family (constant-coefficient
/// degenerate model + OU factor with tanh-modulated market coefficients).
struct FactorDemoParams {
  double kappa = 1.0;
  double sigma_y = 0.5;
  double y0 = 0.0;
  double mu_slope = 0.02;
  double sigma_slope = 0.1;
};

/// One experiment description parsed from a JSON config file.
struct ExperimentConfig {
  std::string experiment;
  nlohmann::json raw;

  MarketParams market{0.03, 0.08, 0.3};
  SimGrid grid = SimGrid::make(1.0, 1.0 / 250.0);
  double m = 0.01;
  std::vector<double> m_values;
  struct MGrid {
    double lo = 0.001;
    double hi = 2.0;
    int points = 60;
  } m_grid;
  std::optional<IntervalBounds> bounds;
  std::optional<QuadUtilityParams> quad;
  double x0 = 1.0;
  int n_paths = 10000;
  std::vector<std::uint64_t> seeds{1};
  std::string out_dir = "out";
  LearnConfig learn;
  std::vector<double> lower_sweep;
  std::vector<double> upper_sweep;
  FactorDemoParams factor;
};

/// Parses and validates; throws ConfigError on malformed input or missing
/// fields for the chosen experiment.
ExperimentConfig load_config(const std::string& path);

/// Validation only (the `check` subcommand); throws ConfigError.
void check_config(const ExperimentConfig& cfg);

std::vector<std::string> known_experiments();

}  // namespace explore
