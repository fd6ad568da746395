#pragma once

#include <optional>
#include <vector>

#include "explore/closed_form_log.hpp"
#include "explore/market.hpp"
#include "explore/policy.hpp"

namespace explore {

/// First/second wealth derivatives of a candidate value function at a point.
/// The Gaussian improvement map needs strict concavity (vxx < 0).
struct ValueDerivatives {
  double vx;
  double vxx;
};

/// Boltzmann/Gaussian improvement map: from the derivatives of any value
/// function, the improved policy is
///   N(-(mu-r) x vx / (sigma^2 x^2 vxx), -m / (sigma^2 x^2 vxx)),
/// truncated to bounds when supplied.  Throws std::domain_error when vxx >= 0.
TruncatedGaussianPolicy improve(double x, const ValueDerivatives& d,
                                const MarketParams& mkt, double m,
                                const std::optional<IntervalBounds>& bounds);

/// Exact value of holding a constant Gaussian policy under log utility:
/// ln x + [r + (mu-r) mean - sigma^2 (mean^2+var)/2 + m (1/2 + ln sqrt(2 pi var))](T-t).
double gaussian_policy_value_log(const GaussianPolicy& pol, double t, double x,
                                 double m, const MarketParams& mkt, double T);

/// Iterates the improvement map from pol0 using the analytic derivatives
/// vx = 1/x, vxx = -1/x^2 (valid for every constant policy under log
/// utility).  Returns [pol0, iterate1, ...]; stops when consecutive
/// iterates agree to 1e-12 in (mean, var).
std::vector<TruncatedGaussianPolicy> improvement_iteration_log(
    const TruncatedGaussianPolicy& pol0, double m, const MarketParams& mkt,
    const std::optional<IntervalBounds>& bounds, int max_iters = 16);

}  // namespace explore
