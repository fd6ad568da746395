#include "explore/config.hpp"

#include <algorithm>
#include <fstream>

namespace explore {

namespace {

using nlohmann::json;

double get_num(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string(key) + " must be a number");
  return j.at(key).get<double>();
}

ParamInit parse_init(const json& j, const char* key) {
  ParamInit init;
  if (!j.contains(key)) return init;
  const json& v = j.at(key);
  const std::string mode = v.value("mode", "truth-plus-noise");
  if (mode == "truth-plus-noise") {
    init.mode = ParamInit::Mode::TruthPlusNoise;
    init.noise_std = get_num(v, "noise_std", 0.01);
  } else if (mode == "explicit") {
    init.mode = ParamInit::Mode::Explicit;
    if (v.contains("values")) init.values = v.at("values").get<std::vector<double>>();
  } else {
    throw ConfigError(std::string(key) + ".mode must be truth-plus-noise or explicit");
  }
  return init;
}

}  // namespace

std::vector<std::string> known_experiments() {
  return {"cost-curve",        "value-gap",       "wealth-density",
          "train-log-constrained", "policy-dirac-limit", "train-quadratic",
          "factor-demo"};
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }

  ExperimentConfig cfg;
  cfg.raw = j;
  if (!j.contains("experiment") || !j.at("experiment").is_string())
    throw ConfigError("config must name an \"experiment\"");
  cfg.experiment = j.at("experiment").get<std::string>();

  try {
    if (j.contains("market")) {
      const json& mj = j.at("market");
      cfg.market = {get_num(mj, "r", 0.03), get_num(mj, "mu", 0.08),
                    get_num(mj, "sigma", 0.3)};
    }
    if (j.contains("grid")) {
      const json& gj = j.at("grid");
      cfg.grid = SimGrid::make(get_num(gj, "horizon", 1.0),
                               get_num(gj, "dt", 1.0 / 250.0));
    }
    cfg.m = get_num(j, "m", 0.01);
    if (j.contains("m_values"))
      cfg.m_values = j.at("m_values").get<std::vector<double>>();
    if (j.contains("m_grid")) {
      const json& mg = j.at("m_grid");
      cfg.m_grid.lo = get_num(mg, "lo", 0.001);
      cfg.m_grid.hi = get_num(mg, "hi", 2.0);
      cfg.m_grid.points = static_cast<int>(get_num(mg, "points", 60));
    }
    if (j.contains("bounds")) {
      const json& bj = j.at("bounds");
      IntervalBounds b;
      b.a = bj.contains("lower") ? bj.at("lower").get<double>() : kNegInf;
      b.b = bj.contains("upper") ? bj.at("upper").get<double>() : kPosInf;
      cfg.bounds = b;
    }
    if (j.contains("quad")) {
      const json& qj = j.at("quad");
      cfg.quad = QuadUtilityParams{get_num(qj, "K", 1.0), get_num(qj, "eps", 1.0)};
    }
    cfg.x0 = get_num(j, "x0", 1.0);
    cfg.n_paths = static_cast<int>(get_num(j, "n_paths", 10000));
    if (j.contains("seeds")) {
      cfg.seeds.clear();
      for (const auto& s : j.at("seeds"))
        cfg.seeds.push_back(s.get<std::uint64_t>());
    }
    cfg.out_dir = j.value("out_dir", std::string("out"));
    if (j.contains("sweeps")) {
      const json& sj = j.at("sweeps");
      if (sj.contains("lower"))
        cfg.lower_sweep = sj.at("lower").get<std::vector<double>>();
      if (sj.contains("upper"))
        cfg.upper_sweep = sj.at("upper").get<std::vector<double>>();
    }
    if (j.contains("factor")) {
      const json& fj = j.at("factor");
      cfg.factor.kappa = get_num(fj, "kappa", 1.0);
      cfg.factor.sigma_y = get_num(fj, "sigma_y", 0.5);
      cfg.factor.y0 = get_num(fj, "y0", 0.0);
      cfg.factor.mu_slope = get_num(fj, "mu_slope", 0.02);
      cfg.factor.sigma_slope = get_num(fj, "sigma_slope", 0.1);
    }
    if (j.contains("learn")) {
      const json& lj = j.at("learn");
      cfg.learn.eta_theta = get_num(lj, "eta_theta", 0.01);
      cfg.learn.eta_phi = get_num(lj, "eta_phi", 0.001);
      cfg.learn.iterations = static_cast<int>(get_num(lj, "iterations", 1000));
      cfg.learn.paths_per_iter =
          static_cast<int>(get_num(lj, "paths_per_iteration", 1000));
      cfg.learn.decay = get_num(lj, "decay", 0.51);
      cfg.learn.grad_scale = get_num(lj, "grad_scale", 1.0);
      cfg.learn.theta_init = parse_init(lj, "theta_init");
      cfg.learn.phi_init = parse_init(lj, "phi_init");
      if (!lj.contains("phi_init"))
        cfg.learn.phi_init = ParamInit{ParamInit::Mode::Explicit, 0.0, {}};
      const std::string pe = lj.value("pe_loss", "orthogonality");
      if (pe == "orthogonality")
        cfg.learn.pe_kind = LearnConfig::PeLossKind::Orthogonality;
      else if (pe == "terminal-l2")
        cfg.learn.pe_kind = LearnConfig::PeLossKind::TerminalL2;
      else
        throw ConfigError("learn.pe_loss must be orthogonality or terminal-l2");
    }
    cfg.learn.m = cfg.m;
    cfg.learn.grid = cfg.grid;
    cfg.learn.x0 = cfg.x0;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("config error in " + path + ": " + e.what());
  }

  check_config(cfg);
  return cfg;
}

void check_config(const ExperimentConfig& cfg) {
  const auto known = known_experiments();
  if (std::find(known.begin(), known.end(), cfg.experiment) == known.end())
    throw ConfigError("unknown experiment tag: " + cfg.experiment);
  try {
    validate(cfg.market);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid market: ") + e.what());
  }
  if (cfg.seeds.empty()) throw ConfigError("seeds must be nonempty");
  if (cfg.bounds) {
    try {
      validate(*cfg.bounds);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("invalid bounds: ") + e.what());
    }
  }
  const bool needs_bounds = cfg.experiment == "train-log-constrained" ||
                            cfg.experiment == "policy-dirac-limit" ||
                            cfg.experiment == "value-gap" ||
                            cfg.experiment == "wealth-density";
  if (needs_bounds && !cfg.bounds)
    throw ConfigError(cfg.experiment + " requires \"bounds\"");
  if (cfg.experiment == "train-quadratic" && !cfg.quad)
    throw ConfigError("train-quadratic requires \"quad\"");
  if (cfg.m_grid.points < 2) throw ConfigError("m_grid.points must be >= 2");
  if (!(cfg.m_grid.lo > 0.0) || !(cfg.m_grid.hi > cfg.m_grid.lo))
    throw ConfigError("m_grid requires 0 < lo < hi");
  if (cfg.n_paths < 1) throw ConfigError("n_paths must be >= 1");
  if (!(cfg.m > 0.0)) throw ConfigError("m must be positive");
  for (double mv : cfg.m_values)
    if (mv < 0.0) throw ConfigError("m_values must be nonnegative");
}

}  // namespace explore
