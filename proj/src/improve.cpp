#include "explore/improve.hpp"

#include <cmath>
#include <stdexcept>

namespace explore {

TruncatedGaussianPolicy improve(double x, const ValueDerivatives& d,
                                const MarketParams& mkt, double m,
                                const std::optional<IntervalBounds>& bounds) {
  validate(mkt);
  if (!(m > 0.0)) throw std::domain_error("exploration weight must be positive");
  if (!(d.vxx < 0.0))
    throw std::domain_error("improvement map requires a concave value (vxx < 0)");
  const double s2x2v = mkt.sigma * mkt.sigma * x * x * d.vxx;
  const double mean = -(mkt.mu - mkt.r) * x * d.vx / s2x2v;
  const double var = -m / s2x2v;
  if (!bounds) return {mean, var, kNegInf, kPosInf};
  validate(*bounds);
  return {mean, var, bounds->a, bounds->b};
}

double gaussian_policy_value_log(const GaussianPolicy& pol, double t, double x,
                                 double m, const MarketParams& mkt, double T) {
  if (!(x > 0.0)) throw std::domain_error("log utility requires wealth x > 0");
  if (!(pol.var > 0.0)) throw std::invalid_argument("policy variance must be positive");
  const double s2 = mkt.sigma * mkt.sigma;
  const double drift = mkt.r + (mkt.mu - mkt.r) * pol.mean -
                       0.5 * s2 * (pol.mean * pol.mean + pol.var);
  return std::log(x) + (drift + m * gaussian_entropy(pol)) * (T - t);
}

std::vector<TruncatedGaussianPolicy> improvement_iteration_log(
    const TruncatedGaussianPolicy& pol0, double m, const MarketParams& mkt,
    const std::optional<IntervalBounds>& bounds, int max_iters) {
  validate(pol0);
  std::vector<TruncatedGaussianPolicy> iters{pol0};
  // Any constant policy has log value ln x + h(t); evaluate the map at x = 1
  // where x*vx = 1 and x^2*vxx = -1 exactly.
  const ValueDerivatives log_derivs{1.0, -1.0};
  for (int n = 0; n < max_iters; ++n) {
    const TruncatedGaussianPolicy next = improve(1.0, log_derivs, mkt, m, bounds);
    const TruncatedGaussianPolicy& prev = iters.back();
    iters.push_back(next);
    if (std::fabs(next.mean - prev.mean) < 1e-12 &&
        std::fabs(next.var - prev.var) < 1e-12)
      break;
  }
  return iters;
}

}  // namespace explore
