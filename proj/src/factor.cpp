#include "explore/factor.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "explore/parallel.hpp"
#include "explore/rng.hpp"

namespace explore {

double h_of_y(double y, const FactorModel& model, double m) {
  const double s = model.sigma(y);
  if (!(s > 0.0)) throw std::domain_error("factor model: sigma(y) must be positive");
  const double excess = model.mu(y) - model.r;
  double h = model.r + 0.5 * excess * excess / (s * s);
  if (m > 0.0) h += 0.5 * m * std::log(2.0 * M_PI * m / (s * s));
  return h;
}

McEstimate feynman_kac_f(double t, double y, double m, const FactorModel& model,
                         double T, int n_paths, int n_steps, std::uint64_t seed) {
  if (!(t < T)) throw std::invalid_argument("feynman_kac_f requires t < T");
  if (n_paths < 1 || n_steps < 1)
    throw std::invalid_argument("feynman_kac_f: n_paths and n_steps must be >= 1");
  const double dt = (T - t) / n_steps;
  const double sqdt = std::sqrt(dt);
  std::vector<double> integrals(n_paths);
  parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t p) {
    Rng rng(seed, p);
    double ys = y;
    double acc = 0.0;
    for (int i = 0; i < n_steps; ++i) {
      acc += h_of_y(ys, model, m) * dt;
      ys += model.muY(ys) * dt + model.sigmaY(ys) * sqdt * rng.normal();
    }
    integrals[p] = acc;
  });
  const double mean = pairwise_sum(integrals) / n_paths;
  double varsum = 0.0;
  for (double v : integrals) {
    const double d = v - mean;
    varsum += d * d;
  }
  const double se = n_paths > 1 ? std::sqrt(varsum / (n_paths - 1) / n_paths) : 0.0;
  return {mean, se};
}

GaussianPolicy factor_policy(double y, const FactorModel& model, double m) {
  const double s = model.sigma(y);
  if (!(s > 0.0)) throw std::domain_error("factor model: sigma(y) must be positive");
  if (!(m > 0.0)) throw std::domain_error("exploration weight must be positive");
  return {(model.mu(y) - model.r) / (s * s), m / (s * s)};
}

McEstimate factor_value(double t, double x, double y, double m,
                        const FactorModel& model, double T, int n_paths,
                        int n_steps, std::uint64_t seed) {
  if (!(x > 0.0)) throw std::domain_error("log utility requires wealth x > 0");
  if (t == T) return {std::log(x), 0.0};
  const McEstimate f = feynman_kac_f(t, y, m, model, T, n_paths, n_steps, seed);
  return {std::log(x) + f.value, f.stderr_};
}

}  // namespace explore
