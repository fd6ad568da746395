#include "explore/closed_form_quad.hpp"

#include <cmath>
#include <stdexcept>

#include "explore/normal.hpp"

namespace explore {

namespace {

struct QuadWindow {
  double Qa;
  double Qb;
  double f;
};

// Standardized bound offsets of Thm-style window: Q = (x0(t) - (K/eps)e^{-r tau} piM) / policy_sd(t).
QuadWindow quad_window(double t, double m, const MarketParams& mkt,
                       const QuadUtilityParams& quad, const AffineBounds& affine,
                       double T) {
  const double tau = T - t;
  const double rho = sharpe_ratio(mkt);
  const double piM = merton_fraction(mkt);
  const double center = quad.K / quad.eps * std::exp(-mkt.r * tau) * piM;
  const double inv_sd = std::sqrt(quad.eps * mkt.sigma * mkt.sigma / m *
                                  std::exp(-(rho * rho - 2.0 * mkt.r) * tau));
  QuadWindow w;
  w.Qa = (affine.a0(t) - center) * inv_sd;
  w.Qb = (affine.b0(t) - center) * inv_sd;
  w.f = std_normal_mass(w.Qa, w.Qb);
  return w;
}

void check_m(double m) {
  if (!(m > 0.0)) throw std::domain_error("exploration weight must be positive");
}

// Composite Simpson over [t, T] with n panels (n rounded up to even).
template <typename F>
double simpson(F&& f, double t, double T, int n) {
  if (T <= t) return 0.0;
  if (n < 2) n = 2;
  if (n % 2 != 0) ++n;
  const double h = (T - t) / n;
  double acc = f(t) + f(T);
  for (int i = 1; i < n; ++i) acc += f(t + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

void validate(const QuadUtilityParams& q) {
  if (!(q.K > 0.0) || !(q.eps > 0.0))
    throw std::invalid_argument("quadratic utility requires K > 0 and eps > 0");
}

double TimeCurve::operator()(double t) const {
  if (points.empty()) throw std::invalid_argument("TimeCurve has no breakpoints");
  if (t <= points.front().first) return points.front().second;
  if (t >= points.back().first) return points.back().second;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (t <= points[i].first) {
      const auto& [t0, v0] = points[i - 1];
      const auto& [t1, v1] = points[i];
      const double w = (t - t0) / (t1 - t0);
      return v0 + w * (v1 - v0);
    }
  }
  return points.back().second;
}

void validate(const AffineBounds& bounds, double T) {
  const int kScan = 64;
  for (int i = 0; i <= kScan; ++i) {
    const double t = T * i / kScan;
    if (!(bounds.a0(t) < bounds.b0(t)))
      throw std::invalid_argument("affine bounds require a0(t) < b0(t) on [0,T]");
    if (!std::isfinite(bounds.a0(t)) || !std::isfinite(bounds.b0(t)))
      throw std::invalid_argument("affine bounds must be finite");
  }
}

double quad_f(double t, double m, const MarketParams& mkt,
              const QuadUtilityParams& quad,
              const std::optional<AffineBounds>& affine, double T) {
  check_m(m);
  validate(quad);
  if (!affine) return 1.0;
  return quad_window(t, m, mkt, quad, *affine, T).f;
}

double quad_value_classical(double t, double x, const MarketParams& mkt,
                            const QuadUtilityParams& quad, double T) {
  validate(quad);
  const double tau = T - t;
  const double rho2 = sharpe_ratio(mkt) * sharpe_ratio(mkt);
  const double K = quad.K, eps = quad.eps;
  // -eps/2 (x e^{r tau} - K/eps)^2 e^{-rho^2 tau} + K^2/(2 eps); the
  // x-quadratic expansion of this form is what solves the HJB.
  const double dev = x * std::exp(mkt.r * tau) - K / eps;
  return -0.5 * eps * dev * dev * std::exp(-rho2 * tau) + K * K / (2.0 * eps);
}

double quad_value_unconstrained(double t, double x, double m,
                                const MarketParams& mkt,
                                const QuadUtilityParams& quad, double T) {
  if (m == 0.0) return quad_value_classical(t, x, mkt, quad, T);
  check_m(m);
  const double tau = T - t;
  const double rho2 = sharpe_ratio(mkt) * sharpe_ratio(mkt);
  return quad_value_classical(t, x, mkt, quad, T) +
         0.25 * m * (rho2 - 2.0 * mkt.r) * tau * tau +
         0.5 * m * std::log(2.0 * M_PI * m / (quad.eps * mkt.sigma * mkt.sigma)) * tau;
}

double quad_value_constrained(double t, double x, double m,
                              const MarketParams& mkt,
                              const QuadUtilityParams& quad,
                              const std::optional<AffineBounds>& affine,
                              double T, int quadrature_n) {
  double base = quad_value_unconstrained(t, x, m, mkt, quad, T);
  if (!affine || m == 0.0) return base;
  validate(*affine, T);
  const double F = simpson(
      [&](double s) {
        const double f = quad_window(s, m, mkt, quad, *affine, T).f;
        if (!(f >= 1e-300))
          throw std::domain_error("quadratic truncation window has negligible mass");
        return std::log(f);
      },
      t, T, quadrature_n);
  return base + m * F;
}

TruncatedGaussianPolicy quad_policy(double t, double x, const MarketParams& mkt,
                                    const QuadUtilityParams& quad, double m,
                                    const std::optional<AffineBounds>& affine,
                                    double T) {
  check_m(m);
  validate(quad);
  const double tau = T - t;
  const double rho2 = sharpe_ratio(mkt) * sharpe_ratio(mkt);
  const double piM = merton_fraction(mkt);
  const double mean = (quad.K / quad.eps * std::exp(-mkt.r * tau) - x) * piM;
  const double var = m / (quad.eps * mkt.sigma * mkt.sigma) *
                     std::exp((rho2 - 2.0 * mkt.r) * tau);
  if (!affine) return {mean, var, kNegInf, kPosInf};
  return {mean, var, -piM * x + affine->a0(t), -piM * x + affine->b0(t)};
}

double quad_exploration_cost(double m, double T, const MarketParams& mkt,
                             const QuadUtilityParams& quad,
                             const std::optional<AffineBounds>& affine,
                             int quadrature_n) {
  check_m(m);
  validate(quad);
  if (!affine) return 0.5 * m * T;
  validate(*affine, T);
  const double tilt = simpson(
      [&](double s) {
        const QuadWindow w = quad_window(s, m, mkt, quad, *affine, T);
        if (!(w.f >= 1e-300))
          throw std::domain_error("quadratic truncation window has negligible mass");
        return (std_normal_xpdf(w.Qa) - std_normal_xpdf(w.Qb)) / (2.0 * w.f);
      },
      0.0, T, quadrature_n);
  return 0.5 * m * T + m * tilt;
}

double quad_mean_terminal_wealth(double x0, const MarketParams& mkt,
                                 const QuadUtilityParams& quad, double T) {
  validate(quad);
  const double rho2 = sharpe_ratio(mkt) * sharpe_ratio(mkt);
  const double bliss = quad.K / quad.eps;
  return bliss + (x0 * std::exp(mkt.r * T) - bliss) * std::exp(-rho2 * T);
}

std::pair<double, double> quad_exploratory_sde_coeffs(
    double t, double x, const MarketParams& mkt, const QuadUtilityParams& quad,
    double m, const std::optional<AffineBounds>& affine, double T) {
  const TruncatedGaussianPolicy pol = quad_policy(t, x, mkt, quad, m, affine, T);
  double m1, m2;
  if (pol.untruncated()) {
    m1 = pol.mean;
    m2 = pol.mean * pol.mean + pol.var;
  } else {
    m1 = trunc_mean(pol);
    m2 = trunc_second_moment(pol);
  }
  const double drift = mkt.r * x + (mkt.mu - mkt.r) * m1;
  const double vol = mkt.sigma * std::sqrt(m2);
  return {drift, vol};
}

}  // namespace explore
