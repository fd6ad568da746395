#pragma once

#include <functional>

namespace explore {

/// Adaptive Gauss-Kronrod 7-15 integration on a finite interval.
/// Splits until the Kronrod error estimate of every panel is below
/// tol (absolute), max_depth levels deep.
double integrate_gk(const std::function<double(double)>& f, double a, double b,
                    double tol = 1e-12, int max_depth = 40);

}  // namespace explore
