#include "explore/market.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "explore/parallel.hpp"

namespace explore {

void validate(const MarketParams& mkt) {
  if (!(mkt.sigma > 0.0)) throw std::invalid_argument("market volatility must be positive");
}

std::vector<std::string> market_warnings(const MarketParams& mkt) {
  std::vector<std::string> w;
  if (!(mkt.mu > mkt.r)) w.push_back("mu <= r: the standing assumption mu > r is violated");
  return w;
}

double merton_fraction(const MarketParams& mkt) {
  validate(mkt);
  return (mkt.mu - mkt.r) / (mkt.sigma * mkt.sigma);
}

double sharpe_ratio(const MarketParams& mkt) {
  validate(mkt);
  return (mkt.mu - mkt.r) / mkt.sigma;
}

SimGrid SimGrid::make(double horizon, double dt) {
  if (!(dt > 0.0) || !(horizon > 0.0))
    throw std::invalid_argument("SimGrid: horizon and dt must be positive");
  const int n = static_cast<int>(std::lround(horizon / dt));
  if (n < 1 || std::fabs(n * dt - horizon) > 1e-12)
    throw std::invalid_argument("SimGrid: dt does not divide the horizon");
  return {horizon, dt, n};
}

double step_exploratory(double x, double drift_coef, double vol2_coef,
                        double dt, double z, StepMode mode) {
  if (vol2_coef < 0.0) throw std::invalid_argument("step_exploratory: negative squared volatility");
  if (mode == StepMode::ExactLognormal) {
    return x * std::exp((drift_coef - 0.5 * vol2_coef) * dt +
                        std::sqrt(vol2_coef * dt) * z);
  }
  return x + drift_coef * dt + std::sqrt(vol2_coef * dt) * z;
}

Trajectory rollout(const PolicyFn& policy, const SimGrid& grid, double x0,
                   Rng& rng, RolloutMode mode, Dynamics dyn,
                   const MarketParams& mkt) {
  validate(mkt);
  if (dyn == Dynamics::FractionLognormal && !(x0 > 0.0))
    throw std::invalid_argument("rollout: fraction dynamics require x0 > 0");

  Trajectory traj;
  traj.times.resize(grid.n_steps + 1);
  traj.states.resize(grid.n_steps + 1);
  if (mode == RolloutMode::ActionSampled) traj.actions.resize(grid.n_steps);

  const double r = mkt.r, ex = mkt.mu - mkt.r, s2 = mkt.sigma * mkt.sigma;
  double x = x0;
  traj.times[0] = 0.0;
  traj.states[0] = x0;
  for (int i = 0; i < grid.n_steps; ++i) {
    const double t = grid.time_at(i);
    const TruncatedGaussianPolicy pol = policy(t, x);
    double drift, vol2;
    if (mode == RolloutMode::ActionSampled) {
      const double a = trunc_sample(pol, rng.uniform_open());
      traj.actions[i] = a;
      if (dyn == Dynamics::FractionLognormal) {
        drift = r + a * ex;
        vol2 = s2 * a * a;
      } else {
        drift = r * x + a * ex;
        vol2 = s2 * a * a;
      }
    } else {
      const double m1 = trunc_mean(pol);
      const double m2 = trunc_second_moment(pol);
      if (dyn == Dynamics::FractionLognormal) {
        drift = r + m1 * ex;
        vol2 = s2 * m2;
      } else {
        drift = r * x + m1 * ex;
        vol2 = s2 * m2;
      }
    }
    const double z = rng.normal();
    x = step_exploratory(x, drift, vol2, grid.dt, z,
                         dyn == Dynamics::FractionLognormal
                             ? StepMode::ExactLognormal
                             : StepMode::Euler);
    traj.times[i + 1] = grid.time_at(i + 1);
    traj.states[i + 1] = x;
  }
  return traj;
}

std::vector<Trajectory> rollout_batch(const PolicyFn& policy,
                                      const SimGrid& grid, double x0,
                                      std::uint64_t seed, int n_paths,
                                      RolloutMode mode, Dynamics dyn,
                                      const MarketParams& mkt) {
  std::vector<Trajectory> out(n_paths);
  parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t p) {
    Rng rng(seed, p);
    out[p] = rollout(policy, grid, x0, rng, mode, dyn, mkt);
  });
  return out;
}

void trajectories_to_csv(const std::vector<Trajectory>& paths,
                         const std::string& out_path) {
  std::FILE* f = std::fopen(out_path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open " + out_path + " for writing");
  const bool with_actions = !paths.empty() && !paths[0].actions.empty();
  std::fputs(with_actions ? "path,t,x,action\n" : "path,t,x\n", f);
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const Trajectory& tr = paths[p];
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      if (with_actions && i < tr.actions.size()) {
        std::fprintf(f, "%zu,%.12g,%.12g,%.12g\n", p, tr.times[i], tr.states[i],
                     tr.actions[i]);
      } else {
        std::fprintf(f, "%zu,%.12g,%.12g\n", p, tr.times[i], tr.states[i]);
      }
    }
  }
  std::fclose(f);
}

}  // namespace explore
