#pragma once

#include <cstdint>
#include <functional>
#include <utility>

#include "explore/policy.hpp"

namespace explore {

/// Random-coefficient market: drift/volatility of the risky asset driven by
/// a scalar state y with its own SDE dy = muY(y)dt + sigmaY(y)dW.
/// Boundedness assumptions are the caller's responsibility.
struct FactorModel {
  std::function<double(double)> mu;
  std::function<double(double)> sigma;
  std::function<double(double)> muY;
  std::function<double(double)> sigmaY;
  double r;
};

/// Running reward rate of the value component:
/// h(y) = r + (mu(y)-r)^2/(2 sigma^2(y)) + (m/2) ln(2 pi m / sigma^2(y)).
double h_of_y(double y, const FactorModel& model, double m);

struct McEstimate {
  double value;
  double stderr_;
};

/// Monte-Carlo Feynman-Kac estimate of f(t,y;m) = E[int_t^T h(y_s) ds]:
/// Euler-Maruyama factor paths, left-endpoint Riemann time integral.
McEstimate feynman_kac_f(double t, double y, double m, const FactorModel& model,
                         double T, int n_paths, int n_steps, std::uint64_t seed);

/// State-dependent optimal policy N((mu(y)-r)/sigma^2(y), m/sigma^2(y)).
GaussianPolicy factor_policy(double y, const FactorModel& model, double m);

/// v(t,x,y;m) = ln x + f(t,y;m), estimated by feynman_kac_f.
McEstimate factor_value(double t, double x, double y, double m,
                        const FactorModel& model, double T, int n_paths,
                        int n_steps, std::uint64_t seed);

}  // namespace explore
