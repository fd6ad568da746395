#pragma once

namespace explore {

/// Standard normal density; returns 0 at +/-infinity.
double std_normal_pdf(double y);

/// Standard normal CDF via erfc, absolute error well below 1e-12.
/// Accepts +/-infinity (0 and 1 respectively).
double std_normal_cdf(double y);

/// Upper-tail probability 1 - Phi(y), accurate in the far right tail.
double std_normal_sf(double y);

/// Phi(b) - Phi(a) for a <= b, evaluated in whichever tail preserves
/// relative precision.
double std_normal_mass(double a, double b);

/// Inverse standard normal CDF (Wichura's AS 241, double precision).
/// Requires 0 < p < 1.
double std_normal_quantile(double p);

/// y * pdf(y) with the tail limit 0 at +/-infinity.
double std_normal_xpdf(double y);

}  // namespace explore
