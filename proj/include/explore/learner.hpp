#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "explore/closed_form_log.hpp"
#include "explore/closed_form_quad.hpp"
#include "explore/market.hpp"
#include "explore/policy.hpp"

namespace explore {

using Vec = std::vector<double>;

struct LogUnconstrained {};
struct LogConstrained {
  IntervalBounds bounds;
};
struct QuadraticUnconstrained {
  QuadUtilityParams quad;
};

using ModelVariant =
    std::variant<LogUnconstrained, LogConstrained, QuadraticUnconstrained>;

/// A learnable model: variant structure + market + horizon.
struct LearnModel {
  ModelVariant variant;
  MarketParams mkt;
  double T;
};

int theta_dim(const LearnModel& model);
int phi_dim(const LearnModel& model);

/// Closed-form parameter targets implied by the market (used for
/// truth-plus-noise initialization and reporting).
Vec true_theta(const LearnModel& model, double m);
Vec true_phi(const LearnModel& model, double m);

/// Parametric value function J^theta.
/// log-unconstrained: ln x + theta1 (T-t) + (m/2) ln(2 pi m)(T-t)
/// log-constrained:   ln x + (theta1+theta2)(T-t) + (m/2) ln(2 pi m)(T-t)
/// quadratic:         -eps/2 (x e^{r(T-t)} - K/eps)^2 e^{-theta3(T-t)}
///                    + K^2/(2 eps) + theta2 (T-t)^2 + theta1 (T-t)
double j_theta(const LearnModel& model, double t, double x, const Vec& theta,
               double m);

/// Test functions h = dJ^theta/dtheta (exact partials).
Vec test_function(const LearnModel& model, double t, double x, const Vec& theta);

/// Parametric policy lambda^phi.
TruncatedGaussianPolicy policy_dist(const LearnModel& model, double t, double x,
                                    const Vec& phi, double m);

/// Closed-form entropy of policy_dist (x-independent in all variants).
double policy_entropy(const LearnModel& model, double t, const Vec& phi,
                      double m);

/// Exact gradient of ln lambda^phi(action | t, x) in phi, including the
/// truncation normalizer terms for the constrained variant.
Vec loglik_grad(const LearnModel& model, double action, double t, double x,
                const Vec& phi, double m);

/// Empirical policy-evaluation loss: squared norm of the batch-mean
/// martingale orthogonality vector
///   G = sum_i h(t_i) (J(t_{i+1},x_{i+1}) - J(t_i,x_i) + m H(t_i) dt).
double pe_loss(const LearnModel& model, const std::vector<Trajectory>& batch,
               const Vec& theta, const Vec& phi, double m);

/// Exact gradient of pe_loss in theta: 2 (dGbar/dtheta)^T Gbar.
Vec delta_theta(const LearnModel& model, const std::vector<Trajectory>& batch,
                const Vec& theta, const Vec& phi, double m);

/// Alternative offline PE objective (terminal L2):
///   mean over paths of sum_i (Y_T - Y_{t_i})^2 dt,  Y_s = J(s,X_s) + m int H.
double pe_loss_terminal_l2(const LearnModel& model,
                           const std::vector<Trajectory>& batch,
                           const Vec& theta, const Vec& phi, double m);
Vec delta_theta_terminal_l2(const LearnModel& model,
                            const std::vector<Trajectory>& batch,
                            const Vec& theta, const Vec& phi, double m);

/// Policy-gradient representation of dJ/dphi (batch mean over action-sampled
/// trajectories; one action sample per step):
///   sum_i [ dlnl(a_i) (dJ_i - m ln lambda(a_i) dt) - m dlnl(a_i) dt ].
Vec delta_phi(const LearnModel& model, const std::vector<Trajectory>& batch,
              const Vec& theta, const Vec& phi, double m);

struct ParamInit {
  enum class Mode { TruthPlusNoise, Explicit };
  Mode mode = Mode::TruthPlusNoise;
  double noise_std = 0.01;
  Vec values;  // Explicit mode
};

struct LearnConfig {
  double eta_theta = 0.01;
  double eta_phi = 0.001;
  double m = 0.01;
  int iterations = 1000;
  int paths_per_iter = 1000;
  SimGrid grid = SimGrid::make(1.0, 1.0 / 250.0);
  double decay = 0.51;  // step factor l(k) = k^-decay on the outer iteration
  std::uint64_t seed = 1;
  double x0 = 1.0;
  ParamInit theta_init{};
  ParamInit phi_init{ParamInit::Mode::Explicit, 0.0, {}};  // empty -> variant default
  /// Multiplies both gradient estimates before the learning-rate step;
  /// paths_per_iter reproduces an unnormalized dataset-sum aggregation.
  double grad_scale = 1.0;
  enum class PeLossKind { Orthogonality, TerminalL2 } pe_kind =
      PeLossKind::Orthogonality;
};

/// Variant default starting guess for phi (sigma guessed at 0.25).
Vec default_phi_init(const LearnModel& model);

struct TraceRow {
  int iter;
  Vec theta;
  Vec phi;
  double grad_norm_theta;
  double grad_norm_phi;
};

struct TrainResult {
  Vec theta;
  Vec phi;
  std::vector<TraceRow> trace;
  double wall_seconds;
  std::uint64_t seed;
};

struct TrainingDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Offline actor-critic loop: per iteration k roll out paths_per_iter
/// action-sampled trajectories under lambda^phi, then apply the verbatim
/// update signs
///   theta <- theta + l(k) eta_theta Dtheta,   phi <- phi - l(k) eta_phi Dphi
/// where Dtheta = -grad(PE loss) and Dphi = -delta_phi, i.e. both deltas are
/// oriented as descent directions of their losses so each update reduces
/// error.  Throws TrainingDivergence when any parameter exceeds 1e6.
TrainResult train(const LearnModel& model, const LearnConfig& cfg);

/// Batch generation used by train (exposed for tests): per-iteration seed is
/// derived from (cfg seed, iteration), per-path substreams from path index.
std::vector<Trajectory> make_training_batch(const LearnModel& model,
                                            const Vec& phi, double m,
                                            const SimGrid& grid, double x0,
                                            std::uint64_t seed, int iteration,
                                            int n_paths);

struct ResidualBucket {
  double t_lo;
  double t_hi;
  double mean;
  double stderr_;
  long n;
};

/// Bucketed means of the increments of Y_s = J(s, X_s) + m * accumulated
/// entropy, simulated under `policy` with exploratory-moments stepping.
/// With the exact value function every bucket mean is statistically zero.
std::vector<ResidualBucket> martingale_residuals(
    const std::function<double(double, double)>& value_fn,
    const PolicyFn& policy, const MarketParams& mkt, const SimGrid& grid,
    double m, int n_paths, std::uint64_t seed, int n_buckets,
    Dynamics dyn = Dynamics::FractionLognormal, double x0 = 1.0);

}  // namespace explore
