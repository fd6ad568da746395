#include "explore/learner.hpp"

#include <chrono>
#include <cmath>
#include <cstring>

#include "explore/normal.hpp"
#include "explore/parallel.hpp"

namespace explore {

namespace {

constexpr int kMaxDim = 3;
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_dim(const Vec& v, int dim, const char* name) {
  if (static_cast<int>(v.size()) != dim)
    throw std::invalid_argument(std::string(name) + ": parameter dimension mismatch");
}

std::uint64_t iter_seed(std::uint64_t seed, int iteration) {
  std::uint64_t s = seed ^ (0xd1b54a32d192ed03ULL * (static_cast<std::uint64_t>(iteration) + 1));
  return splitmix64(s);
}

const LogConstrained* as_log_constrained(const ModelVariant& v) {
  return std::get_if<LogConstrained>(&v);
}
const QuadraticUnconstrained* as_quad(const ModelVariant& v) {
  return std::get_if<QuadraticUnconstrained>(&v);
}
bool is_log(const ModelVariant& v) { return !std::holds_alternative<QuadraticUnconstrained>(v); }

// Normalizer constants of the truncated log-variant policy, hoisted out of
// step loops.
struct LogPolicyCtx {
  double var;     // e^{phi2} m
  double sd;
  double inv_var; // e^{-phi2} / m
  double lower = kNegInf, upper = kPosInf;
  double A = kNegInf, B = kPosInf;
  double Z = 1.0, pdf_A = 0.0, pdf_B = 0.0;
  double log_Z = 0.0;
  double score1_corr = 0.0;  // (phi(B)-phi(A)) / (Z sd)
  double score2_corr = 0.0;  // (B phi(B)-A phi(A)) / (2Z)
  double entropy;
};

LogPolicyCtx make_log_policy_ctx(const LearnModel& model, const Vec& phi, double m) {
  LogPolicyCtx c;
  c.var = std::exp(phi[1]) * m;
  c.sd = std::sqrt(c.var);
  c.inv_var = 1.0 / c.var;
  if (const auto* lc = as_log_constrained(model.variant)) {
    c.lower = lc->bounds.a;
    c.upper = lc->bounds.b;
    c.A = (c.lower == kNegInf) ? kNegInf : (c.lower - phi[0]) / c.sd;
    c.B = (c.upper == kPosInf) ? kPosInf : (c.upper - phi[0]) / c.sd;
    c.Z = std_normal_mass(c.A, c.B);
    if (!(c.Z >= 1e-300))
      throw std::domain_error("policy truncation window has negligible mass");
    c.pdf_A = std_normal_pdf(c.A);
    c.pdf_B = std_normal_pdf(c.B);
    c.log_Z = std::log(c.Z);
    c.score1_corr = (c.pdf_B - c.pdf_A) / (c.Z * c.sd);
    c.score2_corr =
        (std_normal_xpdf(c.B) - std_normal_xpdf(c.A)) / (2.0 * c.Z);
  }
  c.entropy = 0.5 * std::log(2.0 * M_PI * m) + 0.5 * phi[1] + 0.5 + c.log_Z +
              (std_normal_xpdf(c.A) - std_normal_xpdf(c.B)) / (2.0 * c.Z);
  return c;
}

// J-coefficient of (T-t) in the log variants: theta-sum + (m/2) ln(2 pi m).
double log_j_coef(const LearnModel& model, const Vec& theta, double m) {
  double s = theta[0];
  if (as_log_constrained(model.variant)) s += theta[1];
  return s + 0.5 * m * std::log(2.0 * M_PI * m);
}

struct QuadCtx {
  double r, K, eps, bliss, T;
};

QuadCtx make_quad_ctx(const LearnModel& model) {
  const auto* q = as_quad(model.variant);
  return {model.mkt.r, q->quad.K, q->quad.eps, q->quad.K / q->quad.eps, model.T};
}

double quad_j(const QuadCtx& c, double t, double x, const Vec& th) {
  const double tau = c.T - t;
  const double dev = x * std::exp(c.r * tau) - c.bliss;
  return -0.5 * c.eps * dev * dev * std::exp(-th[2] * tau) +
         0.5 * c.K * c.K / c.eps + th[1] * tau * tau + th[0] * tau;
}

void quad_h(const QuadCtx& c, double t, double x, const Vec& th, double* h) {
  const double tau = c.T - t;
  const double dev = x * std::exp(c.r * tau) - c.bliss;
  h[0] = tau;
  h[1] = tau * tau;
  h[2] = 0.5 * c.eps * dev * dev * std::exp(-th[2] * tau) * tau;
}

double quad_entropy(double tau, const Vec& phi) {
  return 0.5 * (kLog2Pi + 1.0 + phi[1] + phi[2] * tau);
}

}  // namespace

int theta_dim(const LearnModel& model) {
  if (std::holds_alternative<LogUnconstrained>(model.variant)) return 1;
  if (std::holds_alternative<LogConstrained>(model.variant)) return 2;
  return 3;
}

int phi_dim(const LearnModel& model) { return is_log(model.variant) ? 2 : 3; }

Vec true_theta(const LearnModel& model, double m) {
  const MarketParams& mkt = model.mkt;
  const double rho = sharpe_ratio(mkt);
  if (std::holds_alternative<LogUnconstrained>(model.variant))
    return {mkt.r + 0.5 * rho * rho - m * std::log(mkt.sigma)};
  if (const auto* lc = as_log_constrained(model.variant)) {
    const double t1 = mkt.r + 0.5 * rho * rho - m * std::log(mkt.sigma);
    return {t1, m * std::log(z_ab(m, mkt, lc->bounds))};
  }
  const auto* q = as_quad(model.variant);
  const double s2 = mkt.sigma * mkt.sigma;
  return {0.5 * m * std::log(2.0 * M_PI * m / (q->quad.eps * s2)),
          0.25 * m * (rho * rho - 2.0 * mkt.r), rho * rho};
}

Vec true_phi(const LearnModel& model, double m) {
  const MarketParams& mkt = model.mkt;
  const double s2 = mkt.sigma * mkt.sigma;
  if (is_log(model.variant))
    return {merton_fraction(mkt), -std::log(s2)};
  const auto* q = as_quad(model.variant);
  const double rho = sharpe_ratio(mkt);
  return {merton_fraction(mkt), std::log(m / (q->quad.eps * s2)),
          rho * rho - 2.0 * mkt.r};
}

Vec default_phi_init(const LearnModel& model) {
  const double sigma_guess = 0.25;
  if (is_log(model.variant)) return {0.5, std::log(1.0 / (sigma_guess * sigma_guess))};
  return {0.5, std::log(sigma_guess * sigma_guess), 0.0};
}

double j_theta(const LearnModel& model, double t, double x, const Vec& theta,
               double m) {
  check_dim(theta, theta_dim(model), "j_theta");
  if (is_log(model.variant)) {
    if (!(x > 0.0)) throw std::domain_error("log utility requires wealth x > 0");
    return std::log(x) + log_j_coef(model, theta, m) * (model.T - t);
  }
  return quad_j(make_quad_ctx(model), t, x, theta);
}

Vec test_function(const LearnModel& model, double t, double x, const Vec& theta) {
  check_dim(theta, theta_dim(model), "test_function");
  const double tau = model.T - t;
  if (std::holds_alternative<LogUnconstrained>(model.variant)) return {tau};
  if (as_log_constrained(model.variant)) return {tau, tau};
  double h[kMaxDim];
  quad_h(make_quad_ctx(model), t, x, theta, h);
  return {h[0], h[1], h[2]};
}

TruncatedGaussianPolicy policy_dist(const LearnModel& model, double t, double x,
                                    const Vec& phi, double m) {
  check_dim(phi, phi_dim(model), "policy_dist");
  if (!(m > 0.0)) throw std::domain_error("exploration weight must be positive");
  if (is_log(model.variant)) {
    const double var = std::exp(phi[1]) * m;
    if (const auto* lc = as_log_constrained(model.variant))
      return {phi[0], var, lc->bounds.a, lc->bounds.b};
    return {phi[0], var, kNegInf, kPosInf};
  }
  const QuadCtx c = make_quad_ctx(model);
  const double tau = model.T - t;
  const double mean = (c.bliss * std::exp(-c.r * tau) - x) * phi[0];
  return {mean, std::exp(phi[1] + phi[2] * tau), kNegInf, kPosInf};
}

double policy_entropy(const LearnModel& model, double t, const Vec& phi,
                      double m) {
  check_dim(phi, phi_dim(model), "policy_entropy");
  if (is_log(model.variant)) return make_log_policy_ctx(model, phi, m).entropy;
  return quad_entropy(model.T - t, phi);
}

Vec loglik_grad(const LearnModel& model, double action, double t, double x,
                const Vec& phi, double m) {
  check_dim(phi, phi_dim(model), "loglik_grad");
  if (is_log(model.variant)) {
    const LogPolicyCtx c = make_log_policy_ctx(model, phi, m);
    if (action < c.lower || action > c.upper)
      throw std::domain_error("loglik_grad: action outside the policy support");
    const double d = action - phi[0];
    return {d * c.inv_var + c.score1_corr,
            -0.5 + 0.5 * d * d * c.inv_var + c.score2_corr};
  }
  const QuadCtx c = make_quad_ctx(model);
  const double tau = model.T - t;
  const double base = c.bliss * std::exp(-c.r * tau) - x;
  const double w2 = std::exp(-phi[1] - phi[2] * tau);
  const double d = action - phi[0] * base;
  const double s2 = -0.5 + 0.5 * d * d * w2;
  return {d * w2 * base, s2, tau * s2};
}

namespace {

// Per-path accumulation of the orthogonality vector G and its theta-Jacobian.
struct PeAccum {
  double G[kMaxDim] = {};
  double D[kMaxDim * kMaxDim] = {};
};

void pe_path_log(const LearnModel& model, const Trajectory& tr, double j_coef,
                 double m_entropy, int dim, PeAccum& out) {
  const double T = model.T;
  double G = 0.0, S = 0.0;
  const std::size_t n = tr.times.size() - 1;
  double log_prev = std::log(tr.states[0]);
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = tr.times[i + 1] - tr.times[i];
    const double tau = T - tr.times[i];
    const double log_next = std::log(tr.states[i + 1]);
    const double dJ = log_next - log_prev - j_coef * dt;
    G += tau * (dJ + m_entropy * dt);
    S += tau * dt;
    log_prev = log_next;
  }
  for (int k = 0; k < dim; ++k) {
    out.G[k] = G;
    for (int j = 0; j < dim; ++j) out.D[k * dim + j] = -S;
  }
}

void pe_path_quad(const QuadCtx& c, const Trajectory& tr, const Vec& theta,
                  const Vec& phi, double m, PeAccum& out) {
  const int dim = 3;
  const std::size_t n = tr.times.size() - 1;
  double h_prev[kMaxDim], h_next[kMaxDim];
  quad_h(c, tr.times[0], tr.states[0], theta, h_prev);
  double J_prev = quad_j(c, tr.times[0], tr.states[0], theta);
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = tr.times[i + 1] - tr.times[i];
    const double tau = c.T - tr.times[i];
    quad_h(c, tr.times[i + 1], tr.states[i + 1], theta, h_next);
    const double J_next = quad_j(c, tr.times[i + 1], tr.states[i + 1], theta);
    const double resid = J_next - J_prev + m * quad_entropy(tau, phi) * dt;
    for (int k = 0; k < dim; ++k) {
      out.G[k] += h_prev[k] * resid;
      for (int j = 0; j < dim; ++j)
        out.D[k * dim + j] += h_prev[k] * (h_next[j] - h_prev[j]);
    }
    // dh3/dtheta3 = -tau h3 is the only nonzero test-function derivative.
    out.D[2 * dim + 2] += (-tau * h_prev[2]) * resid;
    std::memcpy(h_prev, h_next, sizeof(h_prev));
    J_prev = J_next;
  }
}

// Batch-mean G and dG/dtheta with a path-order-deterministic reduction.
void pe_batch(const LearnModel& model, const std::vector<Trajectory>& batch,
              const Vec& theta, const Vec& phi, double m, double* G_bar,
              double* D_bar) {
  const int dim = theta_dim(model);
  check_dim(theta, dim, "pe_batch");
  check_dim(phi, phi_dim(model), "pe_batch");
  if (batch.empty()) throw std::invalid_argument("pe_batch: empty batch");
  const std::size_t n = batch.size();
  std::vector<PeAccum> acc(n);
  if (is_log(model.variant)) {
    const double j_coef = log_j_coef(model, theta, m);
    const double mH = m * make_log_policy_ctx(model, phi, m).entropy;
    parallel_for(n, [&](std::size_t p) {
      pe_path_log(model, batch[p], j_coef, mH, dim, acc[p]);
    });
  } else {
    const QuadCtx c = make_quad_ctx(model);
    parallel_for(n, [&](std::size_t p) {
      pe_path_quad(c, batch[p], theta, phi, m, acc[p]);
    });
  }
  std::vector<double> buf(n);
  for (int k = 0; k < dim; ++k) {
    for (std::size_t p = 0; p < n; ++p) buf[p] = acc[p].G[k];
    G_bar[k] = pairwise_sum(buf) / static_cast<double>(n);
  }
  for (int kj = 0; kj < dim * dim; ++kj) {
    for (std::size_t p = 0; p < n; ++p) buf[p] = acc[p].D[kj];
    D_bar[kj] = pairwise_sum(buf) / static_cast<double>(n);
  }
}

}  // namespace

double pe_loss(const LearnModel& model, const std::vector<Trajectory>& batch,
               const Vec& theta, const Vec& phi, double m) {
  double G[kMaxDim], D[kMaxDim * kMaxDim];
  pe_batch(model, batch, theta, phi, m, G, D);
  double s = 0.0;
  for (int k = 0; k < theta_dim(model); ++k) s += G[k] * G[k];
  return s;
}

Vec delta_theta(const LearnModel& model, const std::vector<Trajectory>& batch,
                const Vec& theta, const Vec& phi, double m) {
  const int dim = theta_dim(model);
  double G[kMaxDim], D[kMaxDim * kMaxDim];
  pe_batch(model, batch, theta, phi, m, G, D);
  Vec grad(dim, 0.0);
  for (int j = 0; j < dim; ++j)
    for (int k = 0; k < dim; ++k) grad[j] += 2.0 * G[k] * D[k * dim + j];
  return grad;
}

namespace {

// Terminal utility consistent with j_theta at t = T.
double terminal_utility(const LearnModel& model, double x) {
  if (is_log(model.variant)) return std::log(x);
  const QuadCtx c = make_quad_ctx(model);
  return c.K * x - 0.5 * c.eps * x * x;
}

void terminal_l2_batch(const LearnModel& model,
                       const std::vector<Trajectory>& batch, const Vec& theta,
                       const Vec& phi, double m, double* loss_out, Vec* grad_out) {
  const int dim = theta_dim(model);
  check_dim(theta, dim, "terminal_l2");
  if (batch.empty()) throw std::invalid_argument("terminal_l2: empty batch");
  const std::size_t n = batch.size();
  // Entropy depends on t only; suffix sums shared across paths.
  const Trajectory& t0 = batch[0];
  const std::size_t steps = t0.times.size() - 1;
  std::vector<double> ent_suffix(steps + 1, 0.0);
  for (std::size_t i = steps; i-- > 0;) {
    const double dt = t0.times[i + 1] - t0.times[i];
    const double H = is_log(model.variant)
                         ? make_log_policy_ctx(model, phi, m).entropy
                         : quad_entropy(model.T - t0.times[i], phi);
    ent_suffix[i] = ent_suffix[i + 1] + H * dt;
  }
  struct Slot {
    double loss;
    double g[kMaxDim];
  };
  std::vector<Slot> slots(n);
  parallel_for(n, [&](std::size_t p) {
    const Trajectory& tr = batch[p];
    Slot s{0.0, {}};
    const double U = terminal_utility(model, tr.states.back());
    double h[kMaxDim];
    for (std::size_t i = 0; i < steps; ++i) {
      const double dt = tr.times[i + 1] - tr.times[i];
      const double R = U - j_theta(model, tr.times[i], tr.states[i], theta, m) +
                       m * ent_suffix[i];
      s.loss += R * R * dt;
      if (grad_out) {
        const Vec hv = test_function(model, tr.times[i], tr.states[i], theta);
        for (int k = 0; k < dim; ++k) h[k] = hv[k];
        for (int k = 0; k < dim; ++k) s.g[k] += -2.0 * R * h[k] * dt;
      }
    }
    slots[p] = s;
  });
  std::vector<double> buf(n);
  if (loss_out) {
    for (std::size_t p = 0; p < n; ++p) buf[p] = slots[p].loss;
    *loss_out = pairwise_sum(buf) / static_cast<double>(n);
  }
  if (grad_out) {
    grad_out->assign(dim, 0.0);
    for (int k = 0; k < dim; ++k) {
      for (std::size_t p = 0; p < n; ++p) buf[p] = slots[p].g[k];
      (*grad_out)[k] = pairwise_sum(buf) / static_cast<double>(n);
    }
  }
}

}  // namespace

double pe_loss_terminal_l2(const LearnModel& model,
                           const std::vector<Trajectory>& batch,
                           const Vec& theta, const Vec& phi, double m) {
  double loss = 0.0;
  terminal_l2_batch(model, batch, theta, phi, m, &loss, nullptr);
  return loss;
}

Vec delta_theta_terminal_l2(const LearnModel& model,
                            const std::vector<Trajectory>& batch,
                            const Vec& theta, const Vec& phi, double m) {
  Vec grad;
  terminal_l2_batch(model, batch, theta, phi, m, nullptr, &grad);
  return grad;
}

Vec delta_phi(const LearnModel& model, const std::vector<Trajectory>& batch,
              const Vec& theta, const Vec& phi, double m) {
  const int tdim = theta_dim(model);
  const int pdim = phi_dim(model);
  check_dim(theta, tdim, "delta_phi");
  check_dim(phi, pdim, "delta_phi");
  if (batch.empty()) throw std::invalid_argument("delta_phi: empty batch");
  if (batch[0].actions.empty())
    throw std::invalid_argument("delta_phi: batch must carry sampled actions");
  const std::size_t n = batch.size();

  struct Slot {
    double g[kMaxDim];
  };
  std::vector<Slot> slots(n);

  if (is_log(model.variant)) {
    const LogPolicyCtx c = make_log_policy_ctx(model, phi, m);
    const double j_coef = log_j_coef(model, theta, m);
    const double lnl_const =
        -0.5 * phi[1] - 0.5 * std::log(2.0 * M_PI * m) - c.log_Z;
    const double mu = phi[0];
    parallel_for(n, [&](std::size_t p) {
      const Trajectory& tr = batch[p];
      const std::size_t steps = tr.actions.size();
      double g1 = 0.0, g2 = 0.0;
      double log_prev = std::log(tr.states[0]);
      for (std::size_t i = 0; i < steps; ++i) {
        const double dt = tr.times[i + 1] - tr.times[i];
        const double a = tr.actions[i];
        const double log_next = std::log(tr.states[i + 1]);
        const double dJ = log_next - log_prev - j_coef * dt;
        const double d = a - mu;
        const double q = d * d * c.inv_var;
        const double s1 = d * c.inv_var + c.score1_corr;
        const double s2 = -0.5 + 0.5 * q + c.score2_corr;
        const double lnl = lnl_const - 0.5 * q;
        const double w = dJ - m * lnl * dt;
        g1 += s1 * w - m * s1 * dt;
        g2 += s2 * w - m * s2 * dt;
        log_prev = log_next;
      }
      slots[p] = {{g1, g2, 0.0}};
    });
  } else {
    const QuadCtx c = make_quad_ctx(model);
    parallel_for(n, [&](std::size_t p) {
      const Trajectory& tr = batch[p];
      const std::size_t steps = tr.actions.size();
      double g[kMaxDim] = {};
      double J_prev = quad_j(c, tr.times[0], tr.states[0], theta);
      for (std::size_t i = 0; i < steps; ++i) {
        const double dt = tr.times[i + 1] - tr.times[i];
        const double tau = c.T - tr.times[i];
        const double J_next =
            quad_j(c, tr.times[i + 1], tr.states[i + 1], theta);
        const double dJ = J_next - J_prev;
        const double base = c.bliss * std::exp(-c.r * tau) - tr.states[i];
        const double w2 = std::exp(-phi[1] - phi[2] * tau);
        const double d = tr.actions[i] - phi[0] * base;
        const double s2 = -0.5 + 0.5 * d * d * w2;
        const double s[kMaxDim] = {d * w2 * base, s2, tau * s2};
        const double lnl =
            -0.5 * kLog2Pi - 0.5 * (phi[1] + phi[2] * tau) - 0.5 * d * d * w2;
        const double w = dJ - m * lnl * dt;
        for (int k = 0; k < kMaxDim; ++k) g[k] += s[k] * w - m * s[k] * dt;
        J_prev = J_next;
      }
      slots[p] = {{g[0], g[1], g[2]}};
    });
  }

  std::vector<double> buf(n);
  Vec grad(pdim, 0.0);
  for (int k = 0; k < pdim; ++k) {
    for (std::size_t p = 0; p < n; ++p) buf[p] = slots[p].g[k];
    grad[k] = pairwise_sum(buf) / static_cast<double>(n);
  }
  return grad;
}

namespace {

void fill_training_batch(const LearnModel& model, const Vec& phi, double m,
                         const SimGrid& grid, double x0, std::uint64_t seed,
                         int iteration, int n_paths,
                         std::vector<Trajectory>& batch) {
  batch.resize(n_paths);
  const std::uint64_t sk = iter_seed(seed, iteration);
  const MarketParams& mkt = model.mkt;
  const double r = mkt.r, ex = mkt.mu - mkt.r, s2 = mkt.sigma * mkt.sigma;
  const double dt = grid.dt;
  const int steps = grid.n_steps;

  if (is_log(model.variant)) {
    if (!(x0 > 0.0))
      throw std::invalid_argument("log-variant training requires x0 > 0");
    const TruncSampler sampler(policy_dist(model, 0.0, x0, phi, m));
    parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t p) {
      Rng rng(sk, p);
      Trajectory& tr = batch[p];
      tr.times.resize(steps + 1);
      tr.states.resize(steps + 1);
      tr.actions.resize(steps);
      double x = x0;
      tr.times[0] = 0.0;
      tr.states[0] = x;
      for (int i = 0; i < steps; ++i) {
        const double a = sampler(rng.uniform_open());
        const double z = rng.normal();
        const double vol2 = s2 * a * a;
        x *= std::exp((r + a * ex - 0.5 * vol2) * dt + std::sqrt(vol2 * dt) * z);
        tr.actions[i] = a;
        tr.times[i + 1] = grid.time_at(i + 1);
        tr.states[i + 1] = x;
      }
    });
    return;
  }

  const QuadCtx c = make_quad_ctx(model);
  std::vector<double> mean_base(steps), sd(steps);
  for (int i = 0; i < steps; ++i) {
    const double tau = model.T - grid.time_at(i);
    mean_base[i] = c.bliss * std::exp(-c.r * tau);
    sd[i] = std::sqrt(std::exp(phi[1] + phi[2] * tau));
  }
  parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t p) {
    Rng rng(sk, p);
    Trajectory& tr = batch[p];
    tr.times.resize(steps + 1);
    tr.states.resize(steps + 1);
    tr.actions.resize(steps);
    double x = x0;
    tr.times[0] = 0.0;
    tr.states[0] = x;
    for (int i = 0; i < steps; ++i) {
      const double u = rng.uniform_open();
      const double a = (mean_base[i] - x) * phi[0] +
                       sd[i] * std_normal_quantile(std::min(1.0 - 1e-16, u));
      const double z = rng.normal();
      const double vol2 = s2 * a * a;
      x = x + (r * x + a * ex) * dt + std::sqrt(vol2 * dt) * z;
      tr.actions[i] = a;
      tr.times[i + 1] = grid.time_at(i + 1);
      tr.states[i + 1] = x;
    }
  });
}

Vec init_params(const ParamInit& init, const Vec& truth, int dim,
                const Vec& fallback, Rng& rng) {
  if (init.mode == ParamInit::Mode::Explicit) {
    Vec v = init.values.empty() ? fallback : init.values;
    if (static_cast<int>(v.size()) != dim)
      throw std::invalid_argument("explicit parameter init has wrong dimension");
    return v;
  }
  Vec v = truth;
  for (double& c : v) c += init.noise_std * rng.normal();
  return v;
}

double norm2(const Vec& v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

}  // namespace

std::vector<Trajectory> make_training_batch(const LearnModel& model,
                                            const Vec& phi, double m,
                                            const SimGrid& grid, double x0,
                                            std::uint64_t seed, int iteration,
                                            int n_paths) {
  std::vector<Trajectory> batch;
  fill_training_batch(model, phi, m, grid, x0, seed, iteration, n_paths, batch);
  return batch;
}

TrainResult train(const LearnModel& model, const LearnConfig& cfg) {
  validate(model.mkt);
  if (!(cfg.m > 0.0)) throw std::domain_error("exploration weight must be positive");
  if (cfg.iterations < 1 || cfg.paths_per_iter < 1)
    throw std::invalid_argument("train: iterations and paths_per_iter must be >= 1");
  const int tdim = theta_dim(model);
  const int pdim = phi_dim(model);

  Rng init_rng(cfg.seed, 0x494e4954ULL);
  Vec theta = init_params(cfg.theta_init, true_theta(model, cfg.m), tdim,
                          true_theta(model, cfg.m), init_rng);
  Vec phi = init_params(cfg.phi_init, true_phi(model, cfg.m), pdim,
                        default_phi_init(model), init_rng);

  const auto t_start = std::chrono::steady_clock::now();
  std::vector<Trajectory> batch;
  TrainResult result;
  result.seed = cfg.seed;
  result.trace.reserve(cfg.iterations);

  for (int k = 1; k <= cfg.iterations; ++k) {
    fill_training_batch(model, phi, cfg.m, cfg.grid, cfg.x0, cfg.seed, k,
                        cfg.paths_per_iter, batch);
    const Vec g_pe = cfg.pe_kind == LearnConfig::PeLossKind::Orthogonality
                         ? delta_theta(model, batch, theta, phi, cfg.m)
                         : delta_theta_terminal_l2(model, batch, theta, phi, cfg.m);
    const Vec g_pg = delta_phi(model, batch, theta, phi, cfg.m);

    // Delta quantities fed to the verbatim-sign updates below: the PE delta
    // is minus the martingale-loss gradient, the PG delta is minus the value
    // gradient, so the theta plus-update and phi minus-update both reduce
    // their respective errors.
    Vec d_theta(tdim), d_phi(pdim);
    for (int i = 0; i < tdim; ++i) d_theta[i] = -cfg.grad_scale * g_pe[i];
    for (int i = 0; i < pdim; ++i) d_phi[i] = -cfg.grad_scale * g_pg[i];

    const double l = std::pow(static_cast<double>(k), -cfg.decay);
    for (int i = 0; i < tdim; ++i) theta[i] += l * cfg.eta_theta * d_theta[i];
    for (int i = 0; i < pdim; ++i) phi[i] -= l * cfg.eta_phi * d_phi[i];

    for (double c : theta)
      if (!(std::fabs(c) <= 1e6)) throw TrainingDivergence("theta diverged");
    for (double c : phi)
      if (!(std::fabs(c) <= 1e6)) throw TrainingDivergence("phi diverged");

    result.trace.push_back({k, theta, phi, norm2(d_theta), norm2(d_phi)});
  }

  result.theta = theta;
  result.phi = phi;
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return result;
}

std::vector<ResidualBucket> martingale_residuals(
    const std::function<double(double, double)>& value_fn,
    const PolicyFn& policy, const MarketParams& mkt, const SimGrid& grid,
    double m, int n_paths, std::uint64_t seed, int n_buckets, Dynamics dyn,
    double x0) {
  if (n_buckets < 1) throw std::invalid_argument("martingale_residuals: n_buckets >= 1");
  struct Slot {
    std::vector<double> sum, sumsq;
    std::vector<long> n;
  };
  std::vector<Slot> slots(n_paths);
  parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t p) {
    Rng rng(seed, p);
    const Trajectory tr =
        rollout(policy, grid, x0, rng, RolloutMode::ExploratoryMoments, dyn, mkt);
    Slot s{std::vector<double>(n_buckets, 0.0),
           std::vector<double>(n_buckets, 0.0), std::vector<long>(n_buckets, 0)};
    double J_prev = value_fn(tr.times[0], tr.states[0]);
    for (int i = 0; i < grid.n_steps; ++i) {
      const double dt = tr.times[i + 1] - tr.times[i];
      const double H = trunc_entropy(policy(tr.times[i], tr.states[i]));
      const double J_next = value_fn(tr.times[i + 1], tr.states[i + 1]);
      const double dY = J_next - J_prev + m * H * dt;
      int b = static_cast<int>(tr.times[i] / grid.horizon * n_buckets);
      if (b >= n_buckets) b = n_buckets - 1;
      s.sum[b] += dY;
      s.sumsq[b] += dY * dY;
      s.n[b] += 1;
      J_prev = J_next;
    }
    slots[p] = std::move(s);
  });

  std::vector<ResidualBucket> out(n_buckets);
  for (int b = 0; b < n_buckets; ++b) {
    double sum = 0.0, sumsq = 0.0;
    long n = 0;
    for (const Slot& s : slots) {
      sum += s.sum[b];
      sumsq += s.sumsq[b];
      n += s.n[b];
    }
    const double mean = n > 0 ? sum / n : 0.0;
    const double var = n > 1 ? (sumsq - n * mean * mean) / (n - 1) : 0.0;
    out[b] = {grid.horizon * b / n_buckets, grid.horizon * (b + 1) / n_buckets,
              mean, n > 0 ? std::sqrt(std::max(0.0, var) / n) : 0.0, n};
  }
  return out;
}

}  // namespace explore
