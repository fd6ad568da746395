#pragma once

#include <limits>

namespace explore {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

/// Gaussian feedback policy: mean is a portfolio fraction (or amount),
/// var the squared scale in the same units.
struct GaussianPolicy {
  double mean;
  double var;
};

/// Gaussian with (untruncated) location `mean` and scale^2 `var`,
/// renormalized to [lower, upper].  Infinite bounds use the +/-inf
/// sentinels; with both infinite every quantity reduces to the Gaussian one.
struct TruncatedGaussianPolicy {
  double mean;
  double var;
  double lower = kNegInf;
  double upper = kPosInf;

  bool untruncated() const { return lower == kNegInf && upper == kPosInf; }
};

inline TruncatedGaussianPolicy as_truncated(const GaussianPolicy& g) {
  return {g.mean, g.var, kNegInf, kPosInf};
}

/// Throws std::invalid_argument unless var > 0 and lower < upper.
void validate(const TruncatedGaussianPolicy& p);

/// Density at x (0 outside the support).
double trunc_pdf(const TruncatedGaussianPolicy& p, double x);

/// CDF of the truncated law at x.
double trunc_cdf(const TruncatedGaussianPolicy& p, double x);

/// Normalizing mass Phi(B) - Phi(A) of the truncation window.
/// Throws std::domain_error when it falls below 1e-300 (window lost in a tail).
double trunc_mass(const TruncatedGaussianPolicy& p);

double trunc_mean(const TruncatedGaussianPolicy& p);
double trunc_variance(const TruncatedGaussianPolicy& p);
double trunc_second_moment(const TruncatedGaussianPolicy& p);

/// Differential entropy in nats.
double gaussian_entropy(const GaussianPolicy& p);
double trunc_entropy(const TruncatedGaussianPolicy& p);

/// Inverse-CDF sample: deterministic in the uniform variate u in (0,1).
double trunc_sample(const TruncatedGaussianPolicy& p, double u);

/// KL divergence of p from q in nats, by adaptive quadrature over p's
/// support.  Requires support(p) contained in support(q).
double kl_trunc(const TruncatedGaussianPolicy& p,
                const TruncatedGaussianPolicy& q);

/// Reusable inverse-CDF sampler: standardizes the policy once, then each
/// sample costs a single quantile evaluation.  Matches trunc_sample exactly.
class TruncSampler {
 public:
  explicit TruncSampler(const TruncatedGaussianPolicy& p);
  double operator()(double u) const;

 private:
  double mean_, sd_, lower_, upper_;
  double cdf_a_, tail_b_, mass_;
  bool right_tail_;
};

}  // namespace explore
