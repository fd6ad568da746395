#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "explore/policy.hpp"
#include "explore/rng.hpp"

namespace explore {

/// Black-Scholes market: risk-free rate r, risky drift mu, volatility sigma
/// (per year / per sqrt-year).
struct MarketParams {
  double r;
  double mu;
  double sigma;
};

/// Throws std::invalid_argument when sigma <= 0.
void validate(const MarketParams& mkt);

/// Standing-assumption checks (mu > r) that are advisory only.
std::vector<std::string> market_warnings(const MarketParams& mkt);

double merton_fraction(const MarketParams& mkt);
double sharpe_ratio(const MarketParams& mkt);

/// Uniform time grid over [0, T] with n_steps = round(T/dt); requires
/// n_steps*dt to reproduce T to 1e-12.
struct SimGrid {
  double horizon;
  double dt;
  int n_steps;

  static SimGrid make(double horizon, double dt);
  double time_at(int i) const { return i * dt; }
};

/// A simulated path: n_steps+1 (t, x) pairs; actions (one per step) present
/// only for action-sampled rollouts.
struct Trajectory {
  std::vector<double> times;
  std::vector<double> states;
  std::vector<double> actions;
};

enum class StepMode { ExactLognormal, Euler };

/// One simulation step of the exploratory dynamics.
/// ExactLognormal treats (drift_coef, vol2_coef) as relative (both multiply
/// the state): x * exp((drift - vol2/2)dt + sqrt(vol2*dt)z).
/// Euler treats them as absolute: x + drift*dt + sqrt(vol2*dt)z.
double step_exploratory(double x, double drift_coef, double vol2_coef,
                        double dt, double z, StepMode mode);

/// Feedback distribution map (t, x) -> policy.
using PolicyFn = std::function<TruncatedGaussianPolicy(double, double)>;

/// ExploratoryMoments steps with the policy's analytic first/second moments
/// (the distribution-averaged dynamics); ActionSampled draws an action per
/// step via the inverse-CDF sampler and records it.
enum class RolloutMode { ExploratoryMoments, ActionSampled };

/// FractionLognormal: actions are wealth fractions, exact-lognormal stepping
/// (positivity preserved).  AmountEuler: actions are amounts, Euler stepping
/// (wealth may go negative; quadratic-utility setting).
enum class Dynamics { FractionLognormal, AmountEuler };

/// Simulates one path on `grid` starting from x0.  Draw order per step:
/// one uniform for the action (ActionSampled only), then one for the shock.
Trajectory rollout(const PolicyFn& policy, const SimGrid& grid, double x0,
                   Rng& rng, RolloutMode mode, Dynamics dyn,
                   const MarketParams& mkt);

/// Path-parallel batch with per-path substreams derived from (seed, path);
/// results are identical for any thread count.
std::vector<Trajectory> rollout_batch(const PolicyFn& policy,
                                      const SimGrid& grid, double x0,
                                      std::uint64_t seed, int n_paths,
                                      RolloutMode mode, Dynamics dyn,
                                      const MarketParams& mkt);

/// CSV export, columns path,t,x[,action].
void trajectories_to_csv(const std::vector<Trajectory>& paths,
                         const std::string& out_path);

}  // namespace explore
