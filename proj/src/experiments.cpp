#include "explore/experiments.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "explore/csv.hpp"
#include "explore/factor.hpp"
#include "explore/improve.hpp"
#include "explore/learner.hpp"

namespace explore {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> v(n);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < n; ++i)
    v[i] = std::exp(llo + (lhi - llo) * i / (n - 1));
  v.front() = lo;
  v.back() = hi;
  return v;
}

std::string bounds_label(const IntervalBounds& b) {
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return std::string(buf);
  };
  return "a" + fmt(b.a) + "_b" + fmt(b.b);
}

json bounds_json(const IntervalBounds& b) {
  return {{"lower", b.a}, {"upper", b.b}};
}

// ---------------------------------------------------------------------------
// cost-curve: exploration cost versus exploration rate, unconstrained and for
// a family of bound windows.
json run_cost_curve(const ExperimentConfig& cfg, std::vector<std::string>& files) {
  const double T = cfg.grid.horizon;
  const IntervalBounds base = cfg.bounds.value_or(IntervalBounds{0.0, 1.0});
  std::vector<IntervalBounds> variants{base};
  std::vector<double> lows = cfg.lower_sweep.empty()
                                 ? std::vector<double>{-1.0, -0.5}
                                 : cfg.lower_sweep;
  std::vector<double> ups =
      cfg.upper_sweep.empty() ? std::vector<double>{1.5, 2.0} : cfg.upper_sweep;
  for (double a : lows)
    if (a != base.a) variants.push_back({a, base.b});
  for (double b : ups)
    if (b != base.b) variants.push_back({base.a, b});

  std::vector<std::string> header{"m", "L_unconstrained"};
  for (const auto& v : variants) header.push_back("L_" + bounds_label(v));

  const std::vector<double> ms =
      log_spaced(cfg.m_grid.lo, cfg.m_grid.hi, cfg.m_grid.points);
  std::vector<CsvRow> rows;
  for (double m : ms) {
    CsvRow row{m, exploration_cost_unconstrained(m, T)};
    for (const auto& v : variants)
      row.push_back(exploration_cost_constrained(m, T, cfg.market, v));
    rows.push_back(std::move(row));
  }
  const std::string path = join(cfg.out_dir, "cost_vs_m.csv");
  emit_csv(header, rows, path);
  files.push_back(path);

  json summary;
  summary["horizon"] = T;
  summary["m_grid"] = ms;
  summary["unconstrained_law"] = "m*T/2";
  json windows = json::array();
  for (const auto& v : variants) windows.push_back(bounds_json(v));
  summary["windows"] = windows;
  return summary;
}

// ---------------------------------------------------------------------------
// value-gap: |v^{[a,b]}(t,x;m) - v^{[a,b]}(t,x;0)| on a (t,x) grid for each m.
json run_value_gap(const ExperimentConfig& cfg, std::vector<std::string>& files) {
  const double T = cfg.grid.horizon;
  const IntervalBounds bounds = *cfg.bounds;
  std::vector<double> ms = cfg.m_values.empty()
                               ? std::vector<double>{2.0, 0.001}
                               : cfg.m_values;
  std::vector<std::string> header{"t", "x"};
  for (double m : ms) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "gap_m%g", m);
    header.push_back(buf);
  }
  std::vector<CsvRow> rows;
  const int nt = 11, nx = 7;
  for (int it = 0; it < nt; ++it) {
    const double t = T * it / (nt - 1);
    for (int ix = 0; ix < nx; ++ix) {
      const double x = 0.5 + 1.5 * ix / (nx - 1);
      CsvRow row{t, x};
      for (double m : ms) {
        const double gap =
            std::fabs(log_value_constrained(t, x, m, cfg.market, T, bounds) -
                      constrained_value_no_exploration(t, x, cfg.market, T, bounds));
        row.push_back(gap);
      }
      rows.push_back(std::move(row));
    }
  }
  const std::string path = join(cfg.out_dir, "value_gap.csv");
  emit_csv(header, rows, path);
  files.push_back(path);

  json summary;
  summary["m_values"] = ms;
  summary["bounds"] = bounds_json(bounds);
  return summary;
}

// ---------------------------------------------------------------------------
// wealth-density: ln-wealth samples at T/2 and T under the constrained
// optimal policy for each m (m = 0 is the Dirac/no-exploration baseline).
json run_wealth_density(const ExperimentConfig& cfg,
                        std::vector<std::string>& files) {
  const double T = cfg.grid.horizon;
  const IntervalBounds bounds = *cfg.bounds;
  std::vector<double> ms = cfg.m_values.empty()
                               ? std::vector<double>{0.5, 0.1, 0.001}
                               : cfg.m_values;
  if (std::find(ms.begin(), ms.end(), 0.0) == ms.end()) ms.push_back(0.0);

  const int half = cfg.grid.n_steps / 2;
  std::vector<CsvRow> rows;
  json variances = json::array();
  for (double m : ms) {
    TruncatedGaussianPolicy pol =
        m > 0.0 ? log_policy_constrained(cfg.market, m, bounds)
                : TruncatedGaussianPolicy{constrained_merton(cfg.market, bounds),
                                          1e-18, kNegInf, kPosInf};
    PolicyFn policy = [pol](double, double) { return pol; };
    const auto paths =
        rollout_batch(policy, cfg.grid, cfg.x0, cfg.seeds[0], cfg.n_paths,
                      RolloutMode::ExploratoryMoments,
                      Dynamics::FractionLognormal, cfg.market);
    double s_half = 0.0, s2_half = 0.0, s_T = 0.0, s2_T = 0.0;
    for (std::size_t p = 0; p < paths.size(); ++p) {
      const double lh = std::log(paths[p].states[half]);
      const double lT = std::log(paths[p].states.back());
      rows.push_back(CsvRow{m, paths[p].times[half], static_cast<long long>(p), lh});
      rows.push_back(CsvRow{m, T, static_cast<long long>(p), lT});
      s_half += lh;
      s2_half += lh * lh;
      s_T += lT;
      s2_T += lT * lT;
    }
    const double n = static_cast<double>(paths.size());
    // Closed-form variance of ln X_t under a constant-moment policy:
    // sigma^2 E[pi^2] t.
    const double q2 = m > 0.0 ? trunc_second_moment(pol)
                              : pol.mean * pol.mean + pol.var;
    const double s2m = cfg.market.sigma * cfg.market.sigma * q2;
    variances.push_back({{"m", m},
                         {"var_ln_x_half", (s2_half - s_half * s_half / n) / (n - 1)},
                         {"var_ln_x_T", (s2_T - s_T * s_T / n) / (n - 1)},
                         {"true_var_ln_x_half", s2m * paths[0].times[half]},
                         {"true_var_ln_x_T", s2m * T}});
  }
  const std::string path = join(cfg.out_dir, "wealth_density.csv");
  emit_csv({"m", "t", "path", "ln_x"}, rows, path);
  files.push_back(path);

  json summary;
  summary["m_values"] = ms;
  summary["sample_variances"] = variances;
  summary["bounds"] = bounds_json(bounds);
  return summary;
}

// ---------------------------------------------------------------------------
// Shared by the two training experiments.
json train_summary_common(const LearnModel& model, double m,
                          const std::vector<TrainResult>& runs) {
  const int tdim = theta_dim(model), pdim = phi_dim(model);
  Vec avg_theta(tdim, 0.0), avg_phi(pdim, 0.0);
  json per_seed = json::array();
  for (const auto& r : runs) {
    for (int i = 0; i < tdim; ++i) avg_theta[i] += r.theta[i] / runs.size();
    for (int i = 0; i < pdim; ++i) avg_phi[i] += r.phi[i] / runs.size();
    per_seed.push_back({{"seed", r.seed},
                        {"theta", r.theta},
                        {"phi", r.phi},
                        {"wall_seconds", r.wall_seconds}});
  }
  json summary;
  summary["true_theta"] = true_theta(model, m);
  summary["true_phi"] = true_phi(model, m);
  summary["learned_theta_avg"] = avg_theta;
  summary["learned_phi_avg"] = avg_phi;
  summary["runs"] = per_seed;
  return summary;
}

void write_trace_csv(const TrainResult& r, int tdim, int pdim,
                     const std::string& path) {
  std::vector<std::string> header{"iter"};
  for (int i = 1; i <= tdim; ++i) header.push_back("theta" + std::to_string(i));
  for (int i = 1; i <= pdim; ++i) header.push_back("phi" + std::to_string(i));
  header.push_back("grad_norm_theta");
  header.push_back("grad_norm_phi");
  std::vector<CsvRow> rows;
  rows.reserve(r.trace.size());
  for (const auto& row : r.trace) {
    CsvRow out{static_cast<long long>(row.iter)};
    for (double v : row.theta) out.push_back(v);
    for (double v : row.phi) out.push_back(v);
    out.push_back(row.grad_norm_theta);
    out.push_back(row.grad_norm_phi);
    rows.push_back(std::move(out));
  }
  emit_csv(header, rows, path);
}

json run_train_log_constrained(const ExperimentConfig& cfg,
                               std::vector<std::string>& files) {
  const IntervalBounds bounds = *cfg.bounds;
  const LearnModel model{LogConstrained{bounds}, cfg.market, cfg.grid.horizon};
  const double m = cfg.m;

  std::vector<TrainResult> runs;
  for (std::uint64_t seed : cfg.seeds) {
    LearnConfig lc = cfg.learn;
    lc.m = m;
    lc.grid = cfg.grid;
    lc.seed = seed;
    lc.x0 = cfg.x0;
    runs.push_back(train(model, lc));
  }
  const int tdim = theta_dim(model), pdim = phi_dim(model);
  for (const auto& r : runs) {
    const std::string path =
        join(cfg.out_dir, "trace_seed" + std::to_string(r.seed) + ".csv");
    write_trace_csv(r, tdim, pdim, path);
    files.push_back(path);
  }

  // |v - J^theta| at (t,x) = (0.5, 0.5) averaged over seeds, per iteration.
  {
    const double t_probe = 0.5, x_probe = 0.5;
    const double v_true = log_value_constrained(t_probe, x_probe, m, cfg.market,
                                                cfg.grid.horizon, bounds);
    std::vector<CsvRow> rows;
    const std::size_t iters = runs[0].trace.size();
    for (std::size_t k = 0; k < iters; ++k) {
      double acc = 0.0;
      for (const auto& r : runs)
        acc += std::fabs(v_true - j_theta(model, t_probe, x_probe,
                                          r.trace[k].theta, m));
      rows.push_back(CsvRow{static_cast<long long>(runs[0].trace[k].iter),
                            acc / runs.size()});
    }
    const std::string path = join(cfg.out_dir, "error_vs_iter.csv");
    emit_csv({"iter", "mean_abs_value_error"}, rows, path);
    files.push_back(path);
  }

  json summary = train_summary_common(model, m, runs);

  // Learned-vs-true policy density and Table-1-style row.
  Vec avg_phi = summary["learned_phi_avg"].get<Vec>();
  const TruncatedGaussianPolicy learned = policy_dist(model, 0.0, cfg.x0, avg_phi, m);
  const TruncatedGaussianPolicy truth = log_policy_constrained(cfg.market, m, bounds);
  {
    std::vector<CsvRow> rows;
    const int n = 201;
    for (int i = 0; i < n; ++i) {
      const double pi = bounds.a + (bounds.b - bounds.a) * i / (n - 1);
      rows.push_back(CsvRow{pi, trunc_pdf(truth, pi), trunc_pdf(learned, pi)});
    }
    const std::string path = join(cfg.out_dir, "policy_density.csv");
    emit_csv({"pi", "true_density", "learned_density"}, rows, path);
    files.push_back(path);
  }
  double mean_sum = 0.0, mean_sq = 0.0;
  for (const auto& r : runs) {
    const double mu = trunc_mean(policy_dist(model, 0.0, cfg.x0, r.phi, m));
    mean_sum += mu;
    mean_sq += mu * mu;
  }
  const double n_runs = static_cast<double>(runs.size());
  const double learned_mean = mean_sum / n_runs;
  summary["table1"] = {
      {"m", m},
      {"true_mean", trunc_mean(truth)},
      {"learned_mean", learned_mean},
      {"std", n_runs > 1 ? std::sqrt(std::max(
                               0.0, (mean_sq - n_runs * learned_mean * learned_mean) /
                                        (n_runs - 1)))
                         : 0.0},
      {"kl_learned_true", kl_trunc(learned, truth)}};
  summary["bounds"] = bounds_json(bounds);
  summary["m"] = m;
  return summary;
}

json run_policy_dirac_limit(const ExperimentConfig& cfg,
                            std::vector<std::string>& files) {
  const IntervalBounds bounds = *cfg.bounds;
  std::vector<double> ms = cfg.m_values.empty()
                               ? std::vector<double>{1e-4, 1e-5}
                               : cfg.m_values;
  std::vector<CsvRow> rows;
  for (double m : ms) {
    const TruncatedGaussianPolicy pol = log_policy_constrained(cfg.market, m, bounds);
    const int n = 401;
    for (int i = 0; i < n; ++i) {
      const double pi = bounds.a + (bounds.b - bounds.a) * i / (n - 1);
      rows.push_back(CsvRow{m, pi, trunc_pdf(pol, pi)});
    }
  }
  const std::string path = join(cfg.out_dir, "policy_dirac_limit.csv");
  emit_csv({"m", "pi", "density"}, rows, path);
  files.push_back(path);

  json summary;
  summary["m_values"] = ms;
  summary["constrained_merton"] = constrained_merton(cfg.market, bounds);
  json means = json::array();
  for (double m : ms)
    means.push_back(trunc_mean(log_policy_constrained(cfg.market, m, bounds)));
  summary["policy_means"] = means;
  return summary;
}

json run_train_quadratic(const ExperimentConfig& cfg,
                         std::vector<std::string>& files) {
  const QuadUtilityParams quad = *cfg.quad;
  std::vector<double> ms = cfg.m_values.empty() ? std::vector<double>{cfg.m}
                                                : cfg.m_values;
  json summary;
  summary["m_values"] = ms;
  json by_m = json::array();
  std::vector<CsvRow> density_rows;
  const double t_probe = 0.5, x_probe = 0.5;

  for (double m : ms) {
    const LearnModel model{QuadraticUnconstrained{quad}, cfg.market,
                           cfg.grid.horizon};
    std::vector<TrainResult> runs;
    for (std::uint64_t seed : cfg.seeds) {
      LearnConfig lc = cfg.learn;
      lc.m = m;
      lc.grid = cfg.grid;
      lc.seed = seed;
      lc.x0 = cfg.x0;
      runs.push_back(train(model, lc));
    }
    const int tdim = theta_dim(model), pdim = phi_dim(model);
    for (const auto& r : runs) {
      char name[64];
      std::snprintf(name, sizeof(name), "trace_m%g_seed%llu.csv", m,
                    static_cast<unsigned long long>(r.seed));
      const std::string path = join(cfg.out_dir, name);
      write_trace_csv(r, tdim, pdim, path);
      files.push_back(path);
    }
    json block = train_summary_common(model, m, runs);

    // Fig-8-style density comparison at (t, x) = (0.5, 0.5).
    Vec avg_phi = block["learned_phi_avg"].get<Vec>();
    const TruncatedGaussianPolicy learned =
        policy_dist(model, t_probe, x_probe, avg_phi, m);
    const TruncatedGaussianPolicy truth = quad_policy(
        t_probe, x_probe, cfg.market, quad, m, std::nullopt, cfg.grid.horizon);
    const double lo = truth.mean - 4.0 * std::sqrt(truth.var);
    const double hi = truth.mean + 4.0 * std::sqrt(truth.var);
    const int n = 201;
    for (int i = 0; i < n; ++i) {
      const double a = lo + (hi - lo) * i / (n - 1);
      density_rows.push_back(
          CsvRow{m, a, trunc_pdf(truth, a), trunc_pdf(learned, a)});
    }
    block["m"] = m;
    by_m.push_back(block);
  }
  const std::string dpath = join(cfg.out_dir, "quad_policy_density.csv");
  emit_csv({"m", "theta_amount", "true_density", "learned_density"},
           density_rows, dpath);
  files.push_back(dpath);
  summary["by_m"] = by_m;
  return summary;
}

json run_factor_demo(const ExperimentConfig& cfg,
                     std::vector<std::string>& files) {
  const MarketParams& mkt = cfg.market;
  const double T = cfg.grid.horizon;
  const double m = cfg.m;
  const FactorDemoParams& fp = cfg.factor;

  // Degenerate model: constant coefficients, frozen factor.
  const FactorModel degenerate{[&](double) { return mkt.mu; },
                               [&](double) { return mkt.sigma; },
                               [](double) { return 0.0; },
                               [](double) { return 0.0; },
                               mkt.r};
  std::vector<CsvRow> rows;
  for (double t : {0.0, 0.25, 0.5, 0.75}) {
    const McEstimate f =
        feynman_kac_f(t, fp.y0, m, degenerate, T, 64, cfg.grid.n_steps,
                      cfg.seeds[0]);
    const double closed =
        log_value_unconstrained(t, 1.0, m, mkt, T);  // ln(1) + rate (T-t)
    rows.push_back(CsvRow{std::string("degenerate"), t, f.value, f.stderr_,
                          closed, std::fabs(f.value - closed)});
  }

  // OU factor with tanh-modulated coefficients.
  const double ybar = fp.y0;
  const FactorModel ou{
      [&](double y) { return mkt.mu + fp.mu_slope * std::tanh(y - ybar); },
      [&](double y) { return mkt.sigma + fp.sigma_slope * std::tanh(y - ybar); },
      [&](double y) { return fp.kappa * (ybar - y); },
      [&](double) { return fp.sigma_y; },
      mkt.r};
  json ou_block = json::array();
  for (int n_paths : {cfg.n_paths, 4 * cfg.n_paths}) {
    const McEstimate f =
        feynman_kac_f(0.0, fp.y0, m, ou, T, n_paths, cfg.grid.n_steps,
                      cfg.seeds[0] + n_paths);
    rows.push_back(CsvRow{std::string("ou_n" + std::to_string(n_paths)), 0.0,
                          f.value, f.stderr_, 0.0, 0.0});
    ou_block.push_back(
        {{"n_paths", n_paths}, {"estimate", f.value}, {"stderr", f.stderr_}});
  }
  const std::string path = join(cfg.out_dir, "factor_demo.csv");
  emit_csv({"model", "t", "f_estimate", "stderr", "closed_form", "abs_err"},
           rows, path);
  files.push_back(path);

  json summary;
  summary["ou"] = ou_block;
  summary["m"] = m;
  return summary;
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  check_config(cfg);
  fs::create_directories(cfg.out_dir);
  const auto t0 = std::chrono::steady_clock::now();

  RunOutcome outcome;
  json summary;
  if (cfg.experiment == "cost-curve")
    summary = run_cost_curve(cfg, outcome.files);
  else if (cfg.experiment == "value-gap")
    summary = run_value_gap(cfg, outcome.files);
  else if (cfg.experiment == "wealth-density")
    summary = run_wealth_density(cfg, outcome.files);
  else if (cfg.experiment == "train-log-constrained")
    summary = run_train_log_constrained(cfg, outcome.files);
  else if (cfg.experiment == "policy-dirac-limit")
    summary = run_policy_dirac_limit(cfg, outcome.files);
  else if (cfg.experiment == "train-quadratic")
    summary = run_train_quadratic(cfg, outcome.files);
  else if (cfg.experiment == "factor-demo")
    summary = run_factor_demo(cfg, outcome.files);
  else
    throw ConfigError("unknown experiment tag: " + cfg.experiment);

  outcome.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  summary["experiment"] = cfg.experiment;
  summary["seeds"] = cfg.seeds;
  const std::string spath = join(cfg.out_dir, "summary.json");
  write_json(summary, spath);
  outcome.files.push_back(spath);

  const std::string mpath = join(cfg.out_dir, "manifest.json");
  outcome.files.push_back(mpath);
  json manifest;
  manifest["experiment"] = cfg.experiment;
  manifest["version"] = kVersion;
  manifest["seeds"] = cfg.seeds;
  manifest["wall_seconds"] = outcome.wall_seconds;
  manifest["files"] = outcome.files;
  manifest["config"] = cfg.raw;
  write_json(manifest, mpath);
  return outcome;
}

}  // namespace explore
