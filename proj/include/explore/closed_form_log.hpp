#pragma once

#include "explore/market.hpp"
#include "explore/policy.hpp"

namespace explore {

/// Portfolio-fraction bounds; +/-inf sentinels give one-sided or absent
/// constraints.  The exploration weight m (temperature, utility units per
/// nat) is passed as a plain nonnegative double throughout.
struct IntervalBounds {
  double a = kNegInf;
  double b = kPosInf;

  bool unbounded() const { return a == kNegInf && b == kPosInf; }
};

void validate(const IntervalBounds& bounds);

/// Optimal exploratory value for U(x) = ln x, no constraint:
/// ln x + (r + rho^2/2)(T-t) + (m/2) ln(2 pi m / sigma^2)(T-t).
/// m = 0 routes to the classical value.
double log_value_unconstrained(double t, double x, double m,
                               const MarketParams& mkt, double T);

/// Classical (no exploration) optimal value: ln x + (r + rho^2/2)(T-t).
double merton_value(double t, double x, const MarketParams& mkt, double T);

/// Optimal Gaussian policy N(pi_Merton, m/sigma^2); independent of (t,x).
GaussianPolicy log_policy_unconstrained(const MarketParams& mkt, double m);

/// Normalizing mass Z_{a,b}(m) = Phi((b-piM)sigma/sqrt(m)) - Phi((a-piM)sigma/sqrt(m)).
double z_ab(double m, const MarketParams& mkt, const IntervalBounds& bounds);

/// Constrained exploratory value: unconstrained + m ln Z_{a,b}(m) (T-t).
double log_value_constrained(double t, double x, double m,
                             const MarketParams& mkt, double T,
                             const IntervalBounds& bounds);

/// Optimal policy under the constraint: N(pi_Merton, m/sigma^2)|[a,b].
TruncatedGaussianPolicy log_policy_constrained(const MarketParams& mkt,
                                               double m,
                                               const IntervalBounds& bounds);

/// Merton fraction clipped to [a, b].
double constrained_merton(const MarketParams& mkt, const IntervalBounds& bounds);

/// Constrained classical value (no exploration), using the clipped fraction.
double constrained_value_no_exploration(double t, double x,
                                        const MarketParams& mkt, double T,
                                        const IntervalBounds& bounds);

/// Exploration premium psi: the exact gap between the constrained
/// exploratory and constrained classical values.
double exploration_premium_log(double t, double m, const MarketParams& mkt,
                               double T, const IntervalBounds& bounds);

/// m T / 2.
double exploration_cost_unconstrained(double m, double T);

/// mT/2 + mT (A phi(A) - B phi(B)) / (2 Z_{a,b}(m)).
double exploration_cost_constrained(double m, double T, const MarketParams& mkt,
                                    const IntervalBounds& bounds);

}  // namespace explore
