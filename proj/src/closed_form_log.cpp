#include "explore/closed_form_log.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "explore/normal.hpp"

namespace explore {

namespace {

void check_wealth(double x) {
  if (!(x > 0.0)) throw std::domain_error("log utility requires wealth x > 0");
}

void check_time(double t, double T) {
  if (!(t >= 0.0 && t <= T)) throw std::domain_error("time must satisfy 0 <= t <= T");
}

// Standardized window edges (a - piM) sigma / sqrt(m), (b - piM) sigma / sqrt(m).
struct Window {
  double A;
  double B;
  double Z;
};

Window window(double m, const MarketParams& mkt, const IntervalBounds& bounds) {
  const double piM = merton_fraction(mkt);
  const double scale = mkt.sigma / std::sqrt(m);
  Window w;
  w.A = (bounds.a == kNegInf) ? kNegInf : (bounds.a - piM) * scale;
  w.B = (bounds.b == kPosInf) ? kPosInf : (bounds.b - piM) * scale;
  w.Z = std_normal_mass(w.A, w.B);
  return w;
}

// f(y) = sigma^2 (y - piM)^2 / 2, the drift penalty of pinning the fraction at y.
double clip_penalty(double y, const MarketParams& mkt) {
  const double d = y - merton_fraction(mkt);
  return 0.5 * mkt.sigma * mkt.sigma * d * d;
}

}  // namespace

void validate(const IntervalBounds& bounds) {
  if (!(bounds.a < bounds.b)) throw std::invalid_argument("bounds require a < b");
}

double merton_value(double t, double x, const MarketParams& mkt, double T) {
  check_wealth(x);
  check_time(t, T);
  const double rho = sharpe_ratio(mkt);
  return std::log(x) + (mkt.r + 0.5 * rho * rho) * (T - t);
}

double log_value_unconstrained(double t, double x, double m,
                               const MarketParams& mkt, double T) {
  check_wealth(x);
  check_time(t, T);
  if (m < 0.0) throw std::domain_error("exploration weight must be nonnegative");
  if (m == 0.0) return merton_value(t, x, mkt, T);
  const double rho = sharpe_ratio(mkt);
  const double s2 = mkt.sigma * mkt.sigma;
  return std::log(x) + (mkt.r + 0.5 * rho * rho) * (T - t) +
         0.5 * m * std::log(2.0 * M_PI * m / s2) * (T - t);
}

GaussianPolicy log_policy_unconstrained(const MarketParams& mkt, double m) {
  if (!(m > 0.0)) throw std::domain_error("exploration weight must be positive");
  return {merton_fraction(mkt), m / (mkt.sigma * mkt.sigma)};
}

double z_ab(double m, const MarketParams& mkt, const IntervalBounds& bounds) {
  validate(bounds);
  if (!(m > 0.0)) throw std::domain_error("exploration weight must be positive");
  return window(m, mkt, bounds).Z;
}

double log_value_constrained(double t, double x, double m,
                             const MarketParams& mkt, double T,
                             const IntervalBounds& bounds) {
  validate(bounds);
  if (m == 0.0) return constrained_value_no_exploration(t, x, mkt, T, bounds);
  return log_value_unconstrained(t, x, m, mkt, T) +
         m * std::log(z_ab(m, mkt, bounds)) * (T - t);
}

TruncatedGaussianPolicy log_policy_constrained(const MarketParams& mkt,
                                               double m,
                                               const IntervalBounds& bounds) {
  validate(bounds);
  const GaussianPolicy g = log_policy_unconstrained(mkt, m);
  return {g.mean, g.var, bounds.a, bounds.b};
}

double constrained_merton(const MarketParams& mkt, const IntervalBounds& bounds) {
  validate(bounds);
  return std::clamp(merton_fraction(mkt), bounds.a, bounds.b);
}

double constrained_value_no_exploration(double t, double x,
                                        const MarketParams& mkt, double T,
                                        const IntervalBounds& bounds) {
  check_wealth(x);
  check_time(t, T);
  const double pi0 = constrained_merton(mkt, bounds);
  const double drift =
      mkt.r + (mkt.mu - mkt.r) * pi0 - 0.5 * pi0 * pi0 * mkt.sigma * mkt.sigma;
  return std::log(x) + drift * (T - t);
}

double exploration_premium_log(double t, double m, const MarketParams& mkt,
                               double T, const IntervalBounds& bounds) {
  validate(bounds);
  if (!(m > 0.0)) throw std::domain_error("exploration weight must be positive");
  check_time(t, T);
  const double s2 = mkt.sigma * mkt.sigma;
  const double piM = merton_fraction(mkt);
  double psi = 0.5 * m * std::log(2.0 * M_PI * m / s2);
  if (!bounds.unbounded()) psi += m * std::log(z_ab(m, mkt, bounds));
  if (piM < bounds.a) psi += clip_penalty(bounds.a, mkt);
  if (piM > bounds.b) psi += clip_penalty(bounds.b, mkt);
  return psi * (T - t);
}

double exploration_cost_unconstrained(double m, double T) {
  if (m < 0.0) throw std::domain_error("exploration weight must be nonnegative");
  return 0.5 * m * T;
}

double exploration_cost_constrained(double m, double T, const MarketParams& mkt,
                                    const IntervalBounds& bounds) {
  validate(bounds);
  if (!(m > 0.0)) throw std::domain_error("exploration weight must be positive");
  const Window w = window(m, mkt, bounds);
  if (!(w.Z >= 1e-300))
    throw std::domain_error("truncation window has negligible mass (degenerate support)");
  const double tilt = (std_normal_xpdf(w.A) - std_normal_xpdf(w.B)) / (2.0 * w.Z);
  return 0.5 * m * T + m * T * tilt;
}

}  // namespace explore
