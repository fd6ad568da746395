#include <doctest.h>

#include <cmath>
#include <optional>

#include "explore/closed_form_quad.hpp"
#include "explore/market.hpp"
#include "explore/parallel.hpp"
#include "support/oracles.hpp"

using namespace explore;

namespace {
const MarketParams kSec63{0.02, 0.05, 0.3};
const QuadUtilityParams kQuad{1.0, 1.0};
constexpr double kM = 0.01;
constexpr double kT = 1.0;

AffineBounds window(double a0, double b0) {
  return {TimeCurve::constant(a0), TimeCurve::constant(b0)};
}
}  // namespace

TEST_CASE("time curve") {
  const TimeCurve c = TimeCurve::constant(0.4);
  CHECK(c(0.0) == 0.4);
  CHECK(c(2.0) == 0.4);
  const TimeCurve ramp{{{0.0, 1.0}, {1.0, 3.0}}};
  CHECK(ramp(0.5) == doctest::Approx(2.0));
  CHECK(ramp(-1.0) == 1.0);
  CHECK(ramp(2.0) == 3.0);
  CHECK_THROWS_AS(validate(window(1.0, 0.5), 1.0), std::invalid_argument);
}

TEST_CASE("quad_f") {
  CHECK(quad_f(0.3, kM, kSec63, kQuad, std::nullopt, kT) == 1.0);
  // Symmetric window about the policy-mean offset center.
  const double tau = kT - 0.3;
  const double center = kQuad.K / kQuad.eps * std::exp(-kSec63.r * tau) *
                        merton_fraction(kSec63);
  const double rho2 = std::pow(sharpe_ratio(kSec63), 2);
  const double inv_sd = std::sqrt(kQuad.eps * 0.09 / kM *
                                  std::exp(-(rho2 - 2.0 * kSec63.r) * tau));
  const double c = 0.25 * inv_sd;
  const double f = quad_f(0.3, kM, kSec63, kQuad,
                          window(center - 0.25, center + 0.25), kT);
  CHECK(f == doctest::Approx(std_normal_cdf(c) - std_normal_cdf(-c)).epsilon(1e-12));
  // Direct cdf arithmetic for an asymmetric window.
  const double qa = (0.0 - center) * inv_sd, qb = (0.3 - center) * inv_sd;
  CHECK(quad_f(0.3, kM, kSec63, kQuad, window(0.0, 0.3), kT) ==
        doctest::Approx(std_normal_cdf(qb) - std_normal_cdf(qa)).epsilon(1e-12));
}

TEST_CASE("quadratic values") {
  SUBCASE("terminal utility at t = T") {
    for (double x : {-0.5, 0.0, 0.5, 2.0}) {
      const double u = kQuad.K * x - 0.5 * kQuad.eps * x * x;
      CHECK(quad_value_classical(kT, x, kSec63, kQuad, kT) == doctest::Approx(u));
      CHECK(quad_value_unconstrained(kT, x, kM, kSec63, kQuad, kT) == doctest::Approx(u));
      CHECK(quad_value_constrained(kT, x, kM, kSec63, kQuad, window(-1.0, 1.0), kT) ==
            doctest::Approx(u));
    }
  }
  SUBCASE("theta-coefficient golden values at the running parameters") {
    // v_m(t,x) - v_0(t,x) = theta1 (T-t) + theta2 (T-t)^2 with
    // theta1 = (m/2) ln(2 pi m/(eps sigma^2)), theta2 = (m/4)(rho^2 - 2r).
    const double gap1 = quad_value_unconstrained(0.0, 0.7, kM, kSec63, kQuad, kT) -
                        quad_value_classical(0.0, 0.7, kSec63, kQuad, kT);
    CHECK(gap1 == doctest::Approx(-0.00179673755463437 + -0.000075).epsilon(1e-9));
    const double tau = 0.5;
    const double gap_half =
        quad_value_unconstrained(kT - tau, 0.7, kM, kSec63, kQuad, kT) -
        quad_value_classical(kT - tau, 0.7, kSec63, kQuad, kT);
    CHECK(gap_half ==
          doctest::Approx(-0.00179673755463437 * tau + -0.000075 * tau * tau)
              .epsilon(1e-9));
  }
  SUBCASE("classical value at the discounted bliss point") {
    // x = (K/eps) e^{-r(T-t)}: the deviation term vanishes and the value is
    // the bliss utility K^2/(2 eps) at every t (symbolic substitution).
    for (double t : {0.0, 0.4, 0.9}) {
      const double x = kQuad.K / kQuad.eps * std::exp(-kSec63.r * (kT - t));
      CHECK(quad_value_classical(t, x, kSec63, kQuad, kT) ==
            doctest::Approx(kQuad.K * kQuad.K / (2.0 * kQuad.eps)).epsilon(1e-12));
    }
  }
  SUBCASE("rho = 0 degenerate market: discounted deterministic growth") {
    const MarketParams flat{0.02, 0.02, 0.3};
    const double t = 0.25, x = 0.8, tau = kT - t;
    CHECK(quad_value_classical(t, x, flat, kQuad, kT) ==
          doctest::Approx(-0.5 * kQuad.eps * x * x * std::exp(2.0 * flat.r * tau) +
                          kQuad.K * x * std::exp(flat.r * tau))
              .epsilon(1e-12));
  }
  SUBCASE("m -> 0 recovers the classical value") {
    CHECK(quad_value_unconstrained(0.2, 0.6, 0.0, kSec63, kQuad, kT) ==
          quad_value_classical(0.2, 0.6, kSec63, kQuad, kT));
    const double gap =
        std::fabs(quad_value_unconstrained(0.2, 0.6, 1e-9, kSec63, kQuad, kT) -
                  quad_value_classical(0.2, 0.6, kSec63, kQuad, kT));
    CHECK(gap < 1e-7);
  }
  SUBCASE("unbounded window: constrained equals unconstrained") {
    CHECK(quad_value_constrained(0.3, 0.5, kM, kSec63, kQuad, std::nullopt, kT) ==
          quad_value_unconstrained(0.3, 0.5, kM, kSec63, kQuad, kT));
    // A very wide window behaves the same to quadrature accuracy.
    CHECK(quad_value_constrained(0.3, 0.5, kM, kSec63, kQuad, window(-50.0, 50.0), kT) ==
          doctest::Approx(quad_value_unconstrained(0.3, 0.5, kM, kSec63, kQuad, kT))
              .epsilon(1e-12));
  }
  SUBCASE("Simpson panel count convergence") {
    const auto w = window(0.0, 0.4);
    const double v200 =
        quad_value_constrained(0.0, 0.5, kM, kSec63, kQuad, w, kT, 200);
    const double v400 =
        quad_value_constrained(0.0, 0.5, kM, kSec63, kQuad, w, kT, 400);
    CHECK(std::fabs(v400 - v200) < 1e-8 * std::max(1.0, std::fabs(v400)));
    // Independent oracle for F(t, m).
    const double F = oracle::integrate(
        [&](double s) {
          return std::log(quad_f(s, kM, kSec63, kQuad, w, kT));
        },
        0.0, kT, 1e-12);
    CHECK(v200 == doctest::Approx(quad_value_unconstrained(0.0, 0.5, kM, kSec63,
                                                           kQuad, kT) +
                                  kM * F)
                      .epsilon(1e-9));
  }
}

TEST_CASE("quad policy") {
  SUBCASE("golden point t = 0.5, x = 0.5") {
    const auto pol = quad_policy(0.5, 0.5, kSec63, kQuad, kM, std::nullopt, kT);
    CHECK(pol.mean == doctest::Approx(0.163349944583056).epsilon(1e-12));
    CHECK(pol.var == doctest::Approx(0.109456882178118).epsilon(1e-12));
    CHECK(pol.untruncated());
  }
  SUBCASE("zero mean at the discounted bliss point") {
    const double x = kQuad.K / kQuad.eps * std::exp(-kSec63.r * 0.5);
    CHECK(quad_policy(0.5, x, kSec63, kQuad, kM, std::nullopt, kT).mean ==
          doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("variance scales as 1/eps") {
    const QuadUtilityParams scaled{1.0, 4.0};
    CHECK(quad_policy(0.5, 0.5, kSec63, scaled, kM, std::nullopt, kT).var ==
          doctest::Approx(quad_policy(0.5, 0.5, kSec63, kQuad, kM, std::nullopt, kT).var / 4.0)
              .epsilon(1e-14));
  }
  SUBCASE("support follows the affine window") {
    const auto pol = quad_policy(0.5, 0.5, kSec63, kQuad, kM, window(-0.2, 0.9), kT);
    const double piM = merton_fraction(kSec63);
    CHECK(pol.lower == doctest::Approx(-piM * 0.5 - 0.2));
    CHECK(pol.upper == doctest::Approx(-piM * 0.5 + 0.9));
  }
}

TEST_CASE("quad exploration cost") {
  CHECK(quad_exploration_cost(kM, kT, kSec63, kQuad, std::nullopt) ==
        doctest::Approx(0.5 * kM * kT).epsilon(1e-14));
  SUBCASE("interior window costs strictly less than mT/2") {
    const double c = quad_exploration_cost(kM, kT, kSec63, kQuad, window(0.0, 0.6));
    CHECK(c < 0.5 * kM * kT);
    CHECK(c > 0.0);
  }
  SUBCASE("cost vanishes as m -> 0") {
    double prev = kPosInf;
    for (double m : {1e-1, 1e-2, 1e-3, 1e-4}) {
      const double c = quad_exploration_cost(m, kT, kSec63, kQuad, window(0.0, 0.6));
      CHECK(c > 0.0);
      CHECK(c < prev);
      prev = c;
    }
    CHECK(prev < 1e-4);
  }
  SUBCASE("definition-based oracle on an interior window") {
    // The window offsets contain the unconstrained optimal amount offset
    // (K/eps) e^{-r tau} piM for all t, so the constrained classical value is
    // the unconstrained classical one and the cost definition reduces to
    // v(0,x;0) - v(0,x;m) + m int_0^T H(t) dt.
    const auto w = window(0.0, 0.6);
    const double x0 = 0.5;
    for (double m : {0.01, 0.1}) {
      const double v0 = quad_value_classical(0.0, x0, kSec63, kQuad, kT);
      const double vm =
          quad_value_constrained(0.0, x0, m, kSec63, kQuad, w, kT, 512);
      const double entropy_integral = oracle::integrate(
          [&](double t) {
            return trunc_entropy(quad_policy(t, x0, kSec63, kQuad, m, w, kT));
          },
          0.0, kT, 1e-12);
      const double direct = v0 - vm + m * entropy_integral;
      CHECK(quad_exploration_cost(m, kT, kSec63, kQuad, w, 512) ==
            doctest::Approx(direct).epsilon(1e-7));
    }
  }
  SUBCASE("widening the window never decreases the cost") {
    double prev = 0.0;
    for (double w : {0.1, 0.2, 0.4, 0.8, 1.6}) {
      const double c = quad_exploration_cost(kM, kT, kSec63, kQuad,
                                             window(0.3 - w, 0.3 + w));
      CHECK(c >= prev - 1e-15);
      prev = c;
    }
  }
}

TEST_CASE("quad mean terminal wealth") {
  CHECK(quad_mean_terminal_wealth(0.5, kSec63, kQuad, kT) ==
        doctest::Approx(0.514975249792916).epsilon(1e-12));
  // Fixed point x0 = (K/eps) e^{-rT}.
  const double x_fix = kQuad.K / kQuad.eps * std::exp(-kSec63.r * kT);
  CHECK(quad_mean_terminal_wealth(x_fix, kSec63, kQuad, kT) ==
        doctest::Approx(kQuad.K / kQuad.eps).epsilon(1e-14));
  // rho = 0: pure risk-free growth.
  const MarketParams flat{0.02, 0.02, 0.3};
  CHECK(quad_mean_terminal_wealth(0.5, flat, kQuad, kT) ==
        doctest::Approx(0.5 * std::exp(flat.r * kT)).epsilon(1e-14));
}

TEST_CASE("exploratory SDE coefficients") {
  SUBCASE("zero-mean policy point: pure risk-free drift") {
    const double x = kQuad.K / kQuad.eps * std::exp(-kSec63.r * 0.5);
    const auto [drift, vol] =
        quad_exploratory_sde_coeffs(0.5, x, kSec63, kQuad, kM, std::nullopt, kT);
    CHECK(drift == doctest::Approx(kSec63.r * x).epsilon(1e-14));
    const double rho2 = std::pow(sharpe_ratio(kSec63), 2);
    CHECK(vol == doctest::Approx(kSec63.sigma *
                                 std::sqrt(kM / (kQuad.eps * 0.09) *
                                           std::exp((rho2 - 2.0 * kSec63.r) * 0.5)))
                     .epsilon(1e-12));
  }
  SUBCASE("m -> 0 volatility collapses to sigma |mean|") {
    const auto [drift, vol] =
        quad_exploratory_sde_coeffs(0.5, 0.5, kSec63, kQuad, 1e-14, std::nullopt, kT);
    const auto pol = quad_policy(0.5, 0.5, kSec63, kQuad, 1e-14, std::nullopt, kT);
    CHECK(vol == doctest::Approx(kSec63.sigma * std::fabs(pol.mean)).epsilon(1e-9));
    (void)drift;
  }
  SUBCASE("Euler MC of the coefficients reproduces the terminal-mean ODE") {
    const SimGrid grid = SimGrid::make(kT, 1.0 / 250.0);
    PolicyFn moments = [&](double t, double x) {
      return quad_policy(t, x, kSec63, kQuad, kM, std::nullopt, kT);
    };
    const auto paths = rollout_batch(moments, grid, 0.5, 31, 10'000,
                                     RolloutMode::ExploratoryMoments,
                                     Dynamics::AmountEuler, kSec63);
    double s1 = 0.0, s2 = 0.0;
    for (const auto& tr : paths) {
      s1 += tr.states.back();
      s2 += tr.states.back() * tr.states.back();
    }
    const double n = static_cast<double>(paths.size());
    const double mean = s1 / n;
    const double sd = std::sqrt((s2 - n * mean * mean) / (n - 1.0));
    CHECK(std::fabs(mean - quad_mean_terminal_wealth(0.5, kSec63, kQuad, kT)) <
          3.0 * sd / std::sqrt(n));
  }
}

TEST_CASE("quadratic HJB residual with Z = 1") {
  // v_t + r x v_x - rho^2 v_x^2/(2 v_xx) + (m/2) ln(-2 pi m/(sigma^2 v_xx)) = 0,
  // with v = -eps/2 W^2 e^{-rho^2 tau} + K^2/(2 eps) + (m/4)(rho^2-2r) tau^2
  // + (m/2) ln(2 pi m/(eps sigma^2)) tau and W = x e^{r tau} - K/eps.
  const double rho2 = std::pow(sharpe_ratio(kSec63), 2);
  const double s2 = kSec63.sigma * kSec63.sigma;
  for (double m : {0.01, 0.25}) {
    for (double t : {0.0, 0.5, 0.95}) {
      for (double x : {-0.5, 0.2, 0.9, 2.0}) {
        const double tau = kT - t;
        const double er = std::exp(kSec63.r * tau);
        const double C = std::exp(-rho2 * tau);
        const double W = x * er - kQuad.K / kQuad.eps;
        const double vt = kQuad.eps * W * C * kSec63.r * x * er -
                          0.5 * kQuad.eps * rho2 * W * W * C -
                          0.5 * m * (rho2 - 2.0 * kSec63.r) * tau -
                          0.5 * m * std::log(2.0 * M_PI * m / (kQuad.eps * s2));
        const double vx = -kQuad.eps * W * C * er;
        const double vxx = -kQuad.eps * C * er * er;
        const double residual = vt + kSec63.r * x * vx -
                                0.5 * rho2 * vx * vx / vxx +
                                0.5 * m * std::log(-2.0 * M_PI * m / (s2 * vxx));
        CAPTURE(m);
        CAPTURE(t);
        CAPTURE(x);
        CHECK(std::fabs(residual) < 1e-9);
        // Cross-check the hand derivatives against central differences of the
        // implemented value.
        const double h = 1e-6;
        const double fd_vt = (quad_value_unconstrained(t + h, x, m, kSec63, kQuad, kT) -
                              quad_value_unconstrained(t - h, x, m, kSec63, kQuad, kT)) /
                             (2.0 * h);
        const double fd_vx = (quad_value_unconstrained(t, x + h, m, kSec63, kQuad, kT) -
                              quad_value_unconstrained(t, x - h, m, kSec63, kQuad, kT)) /
                             (2.0 * h);
        CHECK(vt == doctest::Approx(fd_vt).epsilon(1e-6));
        CHECK(vx == doctest::Approx(fd_vx).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("exploration enters the value only through x-free terms") {
  for (double t : {0.0, 0.3, 0.8}) {
    const double gap_a =
        quad_value_unconstrained(t, 0.4, kM, kSec63, kQuad, kT) -
        quad_value_classical(t, 0.4, kSec63, kQuad, kT);
    const double gap_b =
        quad_value_unconstrained(t, 1.7, kM, kSec63, kQuad, kT) -
        quad_value_classical(t, 1.7, kSec63, kQuad, kT);
    CHECK(gap_a == doctest::Approx(gap_b).epsilon(1e-13));
  }
}

TEST_CASE("MC terminal mean under the constrained policy is below the unconstrained one") {
  const SimGrid grid = SimGrid::make(kT, 1.0 / 250.0);
  const auto w = window(-0.3, 0.5);
  PolicyFn constrained = [&](double t, double x) {
    return quad_policy(t, x, kSec63, kQuad, kM, w, kT);
  };
  PolicyFn unconstrained = [&](double t, double x) {
    return quad_policy(t, x, kSec63, kQuad, kM, std::nullopt, kT);
  };
  auto mean_of = [&](const PolicyFn& pol) {
    const auto paths = rollout_batch(pol, grid, 0.5, 47, 20'000,
                                     RolloutMode::ExploratoryMoments,
                                     Dynamics::AmountEuler, kSec63);
    double s1 = 0.0, s2 = 0.0;
    for (const auto& tr : paths) {
      s1 += tr.states.back();
      s2 += tr.states.back() * tr.states.back();
    }
    const double n = static_cast<double>(paths.size());
    const double mean = s1 / n;
    return std::pair{mean, std::sqrt((s2 - n * mean * mean) / (n - 1.0) / n)};
  };
  const auto [mc, se_c] = mean_of(constrained);
  const auto [mu, se_u] = mean_of(unconstrained);
  CHECK(mc <= mu + 3.0 * std::hypot(se_c, se_u));
  CHECK(mu <= kQuad.K / kQuad.eps);  // x0 <= (K/eps)e^{-rT} keeps the mean below bliss
}
