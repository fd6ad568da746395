#include "explore/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "explore/normal.hpp"
#include "explore/quadrature.hpp"

namespace explore {

namespace {

struct Standardized {
  double sd;      // sqrt(var)
  double a;       // (lower - mean)/sd, may be -inf
  double b;       // (upper - mean)/sd, may be +inf
  double mass;    // Phi(b) - Phi(a)
  double pdf_a;   // phi(a), 0 at -inf
  double pdf_b;   // phi(b), 0 at +inf
};

Standardized standardize(const TruncatedGaussianPolicy& p) {
  validate(p);
  Standardized s;
  s.sd = std::sqrt(p.var);
  s.a = (p.lower == kNegInf) ? kNegInf : (p.lower - p.mean) / s.sd;
  s.b = (p.upper == kPosInf) ? kPosInf : (p.upper - p.mean) / s.sd;
  s.mass = std_normal_mass(s.a, s.b);
  if (!(s.mass >= 1e-300))
    throw std::domain_error("truncation window has negligible mass (degenerate support)");
  s.pdf_a = std_normal_pdf(s.a);
  s.pdf_b = std_normal_pdf(s.b);
  return s;
}

}  // namespace

void validate(const TruncatedGaussianPolicy& p) {
  if (!(p.var > 0.0)) throw std::invalid_argument("policy variance must be positive");
  if (!(p.lower < p.upper)) throw std::invalid_argument("policy support requires lower < upper");
}

double trunc_mass(const TruncatedGaussianPolicy& p) { return standardize(p).mass; }

double trunc_pdf(const TruncatedGaussianPolicy& p, double x) {
  const Standardized s = standardize(p);
  if (x < p.lower || x > p.upper) return 0.0;
  return std_normal_pdf((x - p.mean) / s.sd) / (s.sd * s.mass);
}

double trunc_cdf(const TruncatedGaussianPolicy& p, double x) {
  const Standardized s = standardize(p);
  if (x <= p.lower) return 0.0;
  if (x >= p.upper) return 1.0;
  return (std_normal_cdf((x - p.mean) / s.sd) - std_normal_cdf(s.a)) / s.mass;
}

double trunc_mean(const TruncatedGaussianPolicy& p) {
  const Standardized s = standardize(p);
  return p.mean + s.sd * (s.pdf_a - s.pdf_b) / s.mass;
}

double trunc_variance(const TruncatedGaussianPolicy& p) {
  const Standardized s = standardize(p);
  const double tilt = (std_normal_xpdf(s.a) - std_normal_xpdf(s.b)) / s.mass;
  const double shift = (s.pdf_a - s.pdf_b) / s.mass;
  return p.var * (1.0 + tilt - shift * shift);
}

double trunc_second_moment(const TruncatedGaussianPolicy& p) {
  const double mu = trunc_mean(p);
  return mu * mu + trunc_variance(p);
}

double gaussian_entropy(const GaussianPolicy& p) {
  if (!(p.var > 0.0)) throw std::invalid_argument("policy variance must be positive");
  return 0.5 + 0.5 * std::log(2.0 * M_PI * p.var);
}

double trunc_entropy(const TruncatedGaussianPolicy& p) {
  const Standardized s = standardize(p);
  const double tilt = (std_normal_xpdf(s.a) - std_normal_xpdf(s.b)) / (2.0 * s.mass);
  return 0.5 * std::log(2.0 * M_PI * p.var) + 0.5 + std::log(s.mass) + tilt;
}

TruncSampler::TruncSampler(const TruncatedGaussianPolicy& p) {
  const Standardized s = standardize(p);
  mean_ = p.mean;
  sd_ = s.sd;
  lower_ = p.lower;
  upper_ = p.upper;
  // Window in the right tail: work with upper-tail probabilities to keep
  // precision (Phi(a) ~ 1 would swallow u*mass).
  right_tail_ = s.a >= 0.0;
  cdf_a_ = std_normal_cdf(s.a);
  tail_b_ = std_normal_cdf(-s.b);
  mass_ = s.mass;
}

double TruncSampler::operator()(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("trunc_sample: u must be in (0,1)");
  double z;
  if (right_tail_) {
    z = -std_normal_quantile(std::min(1.0 - 1e-16, tail_b_ + (1.0 - u) * mass_));
  } else {
    z = std_normal_quantile(std::min(1.0 - 1e-16, cdf_a_ + u * mass_));
  }
  return std::clamp(mean_ + sd_ * z, lower_, upper_);
}

double trunc_sample(const TruncatedGaussianPolicy& p, double u) {
  return TruncSampler(p)(u);
}

double kl_trunc(const TruncatedGaussianPolicy& p,
                const TruncatedGaussianPolicy& q) {
  const Standardized sp = standardize(p);
  const Standardized sq = standardize(q);
  if (p.lower < q.lower || p.upper > q.upper)
    throw std::invalid_argument("kl_trunc: support of p must be contained in support of q");
  if (p.mean == q.mean && p.var == q.var && p.lower == q.lower && p.upper == q.upper)
    return 0.0;

  // log(p/q) expanded analytically; integration limits clipped to where p
  // carries mass (12 sigma tails contribute < 1e-30).
  const double log_norm = std::log(sq.sd * sq.mass) - std::log(sp.sd * sp.mass);
  auto integrand = [&](double x) {
    const double zp = (x - p.mean) / sp.sd;
    const double zq = (x - q.mean) / sq.sd;
    const double dens = std_normal_pdf(zp) / (sp.sd * sp.mass);
    return dens * (log_norm + 0.5 * (zq * zq - zp * zp));
  };
  const double lo = std::max(p.lower, p.mean - 12.0 * sp.sd);
  const double hi = std::min(p.upper, p.mean + 12.0 * sp.sd);
  return std::max(0.0, integrate_gk(integrand, lo, hi, 1e-13));
}

}  // namespace explore
