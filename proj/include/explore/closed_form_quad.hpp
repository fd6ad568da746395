#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "explore/market.hpp"
#include "explore/policy.hpp"

namespace explore {

/// Parameters of U(x) = K x - eps x^2 / 2; bliss point K/eps.
struct QuadUtilityParams {
  double K;
  double eps;
};

void validate(const QuadUtilityParams& q);

/// Piecewise-linear time curve given by breakpoints; a single entry is a
/// constant.  Evaluation clamps outside the breakpoint range.
struct TimeCurve {
  std::vector<std::pair<double, double>> points;

  static TimeCurve constant(double v) { return {{{0.0, v}}}; }
  double operator()(double t) const;
};

/// Amount-offset portfolio bounds a(t,x) = -piM x + a0(t), b(t,x) = -piM x + b0(t).
/// Absence (std::nullopt in the APIs below) means unconstrained.
struct AffineBounds {
  TimeCurve a0;
  TimeCurve b0;
};

void validate(const AffineBounds& bounds, double T);

/// Window mass f(t, m) = Phi(Qb(t)) - Phi(Qa(t)) of the constrained
/// quadratic optimal policy; 1 when unconstrained.
double quad_f(double t, double m, const MarketParams& mkt,
              const QuadUtilityParams& quad,
              const std::optional<AffineBounds>& affine, double T);

/// Constrained exploratory value; F(t,m) = int_t^T ln f(s,m) ds integrated
/// with composite Simpson over quadrature_n panels.
double quad_value_constrained(double t, double x, double m,
                              const MarketParams& mkt,
                              const QuadUtilityParams& quad,
                              const std::optional<AffineBounds>& affine,
                              double T, int quadrature_n = 200);

double quad_value_unconstrained(double t, double x, double m,
                                const MarketParams& mkt,
                                const QuadUtilityParams& quad, double T);

/// Classical value (no exploration).
double quad_value_classical(double t, double x, const MarketParams& mkt,
                            const QuadUtilityParams& quad, double T);

/// Optimal policy in amount units: mean ((K/eps)e^{-r(T-t)} - x) piM,
/// var (m/(eps sigma^2)) e^{(rho^2-2r)(T-t)}, truncated when bounds given.
TruncatedGaussianPolicy quad_policy(double t, double x, const MarketParams& mkt,
                                    const QuadUtilityParams& quad, double m,
                                    const std::optional<AffineBounds>& affine,
                                    double T);

/// Exploration cost; <= mT/2, equality when unconstrained.
double quad_exploration_cost(double m, double T, const MarketParams& mkt,
                             const QuadUtilityParams& quad,
                             const std::optional<AffineBounds>& affine,
                             int quadrature_n = 200);

/// E[X_T] under the unconstrained exploratory optimum:
/// K/eps + (x0 e^{rT} - K/eps) e^{-rho^2 T}.
double quad_mean_terminal_wealth(double x0, const MarketParams& mkt,
                                 const QuadUtilityParams& quad, double T);

/// Absolute drift and volatility of the exploratory wealth SDE under the
/// optimal policy at (t, x).
std::pair<double, double> quad_exploratory_sde_coeffs(
    double t, double x, const MarketParams& mkt, const QuadUtilityParams& quad,
    double m, const std::optional<AffineBounds>& affine, double T);

}  // namespace explore
