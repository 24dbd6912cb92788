#include "stmix/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "stmix/euler2d.hpp"
#include "stmix/format.hpp"
#include "stmix/orbits.hpp"
#include "stmix/rng.hpp"
#include "stmix/spde.hpp"
#include "stmix/spectrum.hpp"

namespace stmix {

using nlohmann::json;

namespace {
constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

json config_to_json_obj(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["dimension"] = c.dimension;
  j["radius"] = c.radius;
  json th;
  th["family"] = c.theta.family;
  if (c.theta.family == "shells") th["radius"] = c.theta.radius;
  if (c.theta.family == "powerlaw") {
    th["alpha"] = c.theta.alpha;
    th["cutoff"] = c.theta.cutoff;
  }
  if (c.theta.family == "explicit") {
    json vals = json::array();
    for (const auto& [k, v] : c.theta.explicit_values) vals.push_back({{"k", k}, {"value", v}});
    th["values"] = vals;
  }
  j["theta"] = th;
  j["kappa"] = c.kappa;
  j["lambda"] = c.lambda;
  j["nu"] = c.nu;
  j["alpha"] = c.alpha;
  j["p_list"] = c.p_list;
  j["beta_list"] = c.beta_list;
  j["T"] = c.T;
  j["dt"] = c.dt;
  j["safety"] = c.safety;
  j["sample_every"] = c.sample_every;
  j["paths"] = c.paths;
  j["base_seed"] = c.base_seed;
  j["tau"] = c.tau;
  j["truncation"] = c.truncation;
  j["boundary_margin"] = c.boundary_margin;
  j["leakage_gate"] = c.leakage_gate;
  j["init_shell"] = c.init_shell_norm2;
  j["bound_beta"] = c.bound_beta;
  j["bound_epsilon"] = c.bound_epsilon;
  j["lambda_target"] = c.lambda_target;
  j["l"] = c.l;
  if (!c.l2.empty()) j["l2"] = c.l2;
  j["box"] = c.box;
  j["margin"] = c.margin;
  j["grid"] = c.grid;
  j["noise_cutoff"] = c.noise_cutoff;
  j["R"] = c.energy_R;
  j["kappa_auto"] = c.kappa_auto;
  j["cases"] = c.cases;
  j["support_limit"] = c.support_limit;
  j["inputs"] = c.inputs;
  j["out_dir"] = c.out_dir;
  return j;
}

const std::vector<std::string> kKnownKeys = {
    "command", "dimension", "radius", "theta", "kappa", "lambda", "nu", "alpha",
    "p_list", "beta_list", "T", "dt", "safety", "sample_every", "paths", "base_seed",
    "tau", "truncation", "boundary_margin", "leakage_gate", "init_shell", "bound_beta",
    "bound_epsilon", "lambda_target", "l", "l2", "box", "margin", "grid", "noise_cutoff",
    "R", "kappa_auto", "cases", "support_limit", "inputs", "out_dir"};

}  // namespace

std::string RunConfig::to_json() const { return config_to_json_obj(*this).dump(2) + "\n"; }

ParseResult parse_config(const std::string& json_text) {
  ParseResult res;
  RunConfig& c = res.config;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    res.errors.push_back(std::string("invalid JSON: ") + e.what());
    return res;
  }
  if (!j.is_object()) {
    res.errors.push_back("config must be a JSON object");
    return res;
  }
  for (const auto& [key, val] : j.items())
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end())
      res.errors.push_back("unknown key '" + key + "'");

  auto get = [&](const char* key, auto& out) {
    if (!j.contains(key)) return;
    try {
      out = j.at(key).get<std::decay_t<decltype(out)>>();
    } catch (const std::exception&) {
      res.errors.push_back(std::string("type mismatch for '") + key + "'");
    }
  };
  get("command", c.command);
  get("dimension", c.dimension);
  get("radius", c.radius);
  get("kappa", c.kappa);
  get("lambda", c.lambda);
  get("nu", c.nu);
  get("alpha", c.alpha);
  get("p_list", c.p_list);
  get("beta_list", c.beta_list);
  get("T", c.T);
  get("dt", c.dt);
  get("safety", c.safety);
  get("sample_every", c.sample_every);
  get("paths", c.paths);
  get("base_seed", c.base_seed);
  get("tau", c.tau);
  get("truncation", c.truncation);
  get("boundary_margin", c.boundary_margin);
  get("leakage_gate", c.leakage_gate);
  get("init_shell", c.init_shell_norm2);
  get("bound_beta", c.bound_beta);
  get("bound_epsilon", c.bound_epsilon);
  get("lambda_target", c.lambda_target);
  get("l", c.l);
  get("l2", c.l2);
  get("box", c.box);
  get("margin", c.margin);
  get("grid", c.grid);
  get("noise_cutoff", c.noise_cutoff);
  get("R", c.energy_R);
  get("kappa_auto", c.kappa_auto);
  get("cases", c.cases);
  get("support_limit", c.support_limit);
  get("inputs", c.inputs);
  get("out_dir", c.out_dir);

  if (j.contains("theta")) {
    const json& th = j.at("theta");
    if (!th.is_object()) {
      res.errors.push_back("'theta' must be an object");
    } else {
      for (const auto& [key, val] : th.items())
        if (key != "family" && key != "radius" && key != "alpha" && key != "cutoff" &&
            key != "values")
          res.errors.push_back("unknown theta key '" + key + "'");
      if (th.contains("family")) c.theta.family = th.at("family").get<std::string>();
      if (th.contains("radius")) c.theta.radius = th.at("radius").get<double>();
      if (th.contains("alpha")) c.theta.alpha = th.at("alpha").get<double>();
      if (th.contains("cutoff")) c.theta.cutoff = th.at("cutoff").get<int>();
      if (th.contains("values")) {
        for (const auto& item : th.at("values")) {
          IVec k = item.at("k").get<IVec>();
          double v = item.at("value").get<double>();
          c.theta.explicit_values.emplace_back(std::move(k), v);
        }
      }
    }
  }

  static const std::vector<std::string> commands = {
      "spectrum", "heat", "transport-mc", "heat-mc", "euler", "poincare", "orbits", "report"};
  if (std::find(commands.begin(), commands.end(), c.command) == commands.end())
    res.errors.push_back("unknown command '" + c.command + "'");

  if (c.dimension < 2) res.errors.push_back("dimension must be >= 2");
  if (c.radius < 1) res.errors.push_back("radius must be >= 1");
  if (c.kappa <= 0 && c.command != "orbits" && c.command != "poincare" && c.command != "report" &&
      !(c.command == "euler"))
    res.errors.push_back("kappa must be positive");
  if (c.command == "heat" || c.command == "heat-mc") {
    if (c.nu <= 0) res.errors.push_back("heat: nu must be positive (stochastic heat equation)");
    if (c.lambda < 0) res.errors.push_back("heat: lambda must be >= 0");
  }
  if (c.truncation != "conservative" && c.truncation != "absorbing")
    res.errors.push_back("truncation must be 'conservative' or 'absorbing'");
  for (double p : c.p_list)
    if (p < 1) res.errors.push_back("p_list entries must be >= 1");

  // Theorem hypothesis gates.
  if (c.bound_epsilon >= 0) {
    double d = double(c.dimension);
    double gap = c.bound_beta * (d - 2.0 * c.bound_beta) / (d * d);
    if (!(c.bound_beta > 0 && c.bound_beta <= d / 4.0))
      res.errors.push_back("averaged-mixing hypothesis: requires 0 < beta <= d/4");
    else if (!(c.bound_epsilon > 0 && c.bound_epsilon < gap))
      res.errors.push_back("averaged-mixing hypothesis: epsilon must lie in (0, beta(d-2beta)/d^2)");
  }
  if ((c.command == "transport-mc" || c.command == "heat-mc") && c.lambda_target > 0) {
    try {
      LatticeBox box(c.dimension, std::max(c.radius, 2));
      ThetaCoefficients theta = make_theta(c.theta, box);
      MixingConstants mc = mixing_constants(theta, c.dimension, c.kappa);
      if (c.lambda_target >= mc.d_theta_d * c.kappa)
        res.warnings.push_back("lambda_target >= D(theta,d) kappa: outside the a.s. mixing hypothesis");
    } catch (const std::exception& e) {
      res.errors.push_back(e.what());
    }
  }
  return res;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string());
    os << content;
    os.flush();
    if (!os) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

json criterion_json(const CriterionRecord& r) {
  return json{{"name", r.name},   {"observed", r.observed}, {"bound", r.bound},
              {"margin", r.margin}, {"gated", r.gated},       {"pass", r.pass}};
}

void finish_report(RunReport& rep, std::chrono::steady_clock::time_point start) {
  rep.build_id = std::string(__DATE__) + " " + __TIME__;
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  bool any_gated = false, all_pass = true;
  for (const auto& cr : rep.criteria) {
    if (!cr.gated) continue;
    any_gated = true;
    all_pass = all_pass && cr.pass;
  }
  if (!rep.criteria.empty() && !any_gated)
    rep.exit_code = 3;
  else
    rep.exit_code = all_pass ? 0 : 1;
}

std::filesystem::path out_root(const RunConfig& c) {
  const char* env = std::getenv("STMIX_OUTPUT_ROOT");
  std::filesystem::path root = env ? std::filesystem::path(env) : std::filesystem::path(".");
  return root / c.out_dir;
}

// ----- spectrum / heat -------------------------------------------------------

void run_spectrum(const RunConfig& c, RunReport& rep, bool heat) {
  LatticeBox box(c.dimension, c.radius);
  ThetaCoefficients theta = make_theta(c.theta, box);
  MixingConstants mc = mixing_constants(theta, c.dimension, c.kappa);
  TruncationPolicy policy{c.truncation == "absorbing" ? Truncation::absorbing
                                                      : Truncation::conservative,
                          c.boundary_margin};
  double lambda = heat ? c.lambda : 0.0;
  double nu = heat ? c.nu : 0.0;
  SpectrumOperator op(box, theta, c.kappa, lambda, nu, policy);

  SpectrumState y0(box);
  y0.init_shell(c.init_shell_norm2, 1.0);

  IntegrateOptions opt;
  opt.T = c.T;
  opt.safety = c.safety;
  opt.sample_every = c.sample_every;
  opt.p_list = {1.0, 2.0};  // l1 and l2 always lead the trajectory columns
  for (double p : c.p_list)
    if (std::find(opt.p_list.begin(), opt.p_list.end(), p) == opt.p_list.end())
      opt.p_list.push_back(p);
  opt.beta_list = c.beta_list;
  Trajectory traj = integrate(y0, op, opt);

  auto out = out_root(c);
  write_file_atomic(out / "trajectory.csv", traj.to_csv());
  rep.artifact_files.push_back((out / "trajectory.csv").string());
  write_file_atomic(out / "theta.csv", theta_to_csv(theta));
  rep.artifact_files.push_back((out / "theta.csv").string());

  std::size_t ip2 = 0;
  for (std::size_t i = 0; i < opt.p_list.size(); ++i)
    if (opt.p_list[i] == 2.0) ip2 = i;
  std::size_t ih1 = opt.beta_list.size();
  for (std::size_t i = 0; i < opt.beta_list.size(); ++i)
    if (opt.beta_list[i] == 1.0) ih1 = i;

  const auto& ss = traj.samples;
  double gate = c.leakage_gate;
  auto gated = [&](const SampleRecord& r) { return r.boundary_mass < gate; };
  long n_gated = std::count_if(ss.begin(), ss.end(), gated);

  if (!heat && policy.mode == Truncation::conservative) {
    double worst = 0;
    for (const auto& r : ss) worst = std::max(worst, std::abs(r.sum - ss.front().sum));
    CriterionRecord cr{"mass_conservation", worst / ss.front().sum, 1e-10, 0, true, false};
    cr.pass = cr.observed <= cr.bound;
    cr.margin = cr.bound - cr.observed;
    rep.criteria.push_back(cr);
  }

  if (!heat) {
    for (std::size_t pi = 0; pi < opt.p_list.size(); ++pi) {
      if (opt.p_list[pi] <= 1.0) continue;
      double worst = 0;
      for (std::size_t i = 1; i < ss.size(); ++i)
        worst = std::max(worst, ss[i].lp[pi] / ss[i - 1].lp[pi] - 1.0);
      CriterionRecord cr{"lp_monotone_p=" + format_full(opt.p_list[pi]), worst, 1e-9, 0, true,
                         false};
      cr.pass = cr.observed <= cr.bound;
      cr.margin = cr.bound - cr.observed;
      rep.criteria.push_back(cr);
    }

    BoundDescriptor l2b = theoretical_bounds(mc, BoundVariant::lp_decay, {.p = 2.0});
    double worst_ratio = 0;
    for (const auto& r : ss) {
      if (!gated(r)) continue;
      double bound = std::exp(-l2b.rate * r.t) * ss.front().lp[ip2] * (1.0 + 1e-6);
      worst_ratio = std::max(worst_ratio, r.lp[ip2] / bound);
    }
    CriterionRecord cr{"l2_decay_theorem", worst_ratio, 1.0, 0, n_gated > 0, false};
    cr.pass = cr.observed <= cr.bound;
    cr.margin = cr.bound - cr.observed;
    rep.criteria.push_back(cr);

    if (ih1 < opt.beta_list.size() && n_gated >= 8) {
      std::vector<std::pair<double, double>> h1;
      double t_hi = 0;
      for (const auto& r : ss)
        if (gated(r)) {
          h1.emplace_back(r.t, r.hbeta[ih1]);
          t_hi = r.t;
        }
      RateFit fit = fit_decay_rate(h1, -1.0, t_hi + 1.0);
      double growth = -fit.fitted_rate;
      double target = 8.0 * kPi2 * c.kappa * mc.h_plus1;
      CriterionRecord cr2{"h1_growth_rate", growth, target,
                          std::abs(growth - target) / target, true, false};
      cr2.pass = std::abs(growth - target) / target <= 1e-4;
      rep.criteria.push_back(cr2);
    }
  } else {
    BoundDescriptor hb = theoretical_bounds(mc, BoundVariant::heat_energy,
                                            {.lambda = c.lambda, .nu = c.nu});
    double worst_ratio = 0;
    for (const auto& r : ss) {
      if (!gated(r)) continue;
      worst_ratio = std::max(worst_ratio, r.sum / hb.eval(r.t, ss.front().sum));
    }
    CriterionRecord cr{"heat_energy_theorem", worst_ratio, 1.0, 0, n_gated > 0, false};
    cr.pass = cr.observed <= cr.bound;
    cr.margin = cr.bound - cr.observed;
    rep.criteria.push_back(cr);
  }

  json extra;
  extra["leakage_gate"] = gate;
  extra["gated_samples"] = n_gated;
  extra["total_samples"] = ss.size();
  extra["final_boundary_mass"] = ss.back().boundary_mass;
  extra["C_theta_d"] = mc.c_theta_d;
  extra["D_theta_d"] = mc.d_theta_d;
  extra["t0"] = mc.t0;
  if (n_gated >= 8) {
    std::vector<std::pair<double, double>> l2series;
    double t_hi = 0;
    for (const auto& r : ss)
      if (gated(r) && r.lp[ip2] > 0) {
        l2series.emplace_back(r.t, r.lp[ip2]);
        t_hi = r.t;
      }
    try {
      RateFit l2fit = fit_decay_rate(l2series, -1.0, t_hi + 1.0);
      extra["fitted_l2_rate"] = l2fit.fitted_rate;
      double lp2 = mc.c_theta_d * c.kappa / 4.0;  // the p = 2 spectral rate
      extra["theoretical_l2_rate"] =
          heat ? -2.0 * c.lambda + 8.0 * kPi2 * c.nu + lp2 : lp2;
    } catch (const std::exception& e) {
      rep.warnings.push_back(e.what());
    }
  }
  json summary;
  summary["command"] = c.command;
  summary["config"] = config_to_json_obj(c);
  summary["details"] = extra;
  json crits = json::array();
  for (const auto& r : rep.criteria) crits.push_back(criterion_json(r));
  summary["criteria"] = crits;
  write_file_atomic(out_root(c) / "summary.json", summary.dump(2) + "\n");
  rep.artifact_files.push_back((out_root(c) / "summary.json").string());
}

// ----- monte carlo -----------------------------------------------------------

void run_mc(const RunConfig& c, RunReport& rep, bool heat) {
  EnsembleConfig ec;
  ec.dimension = c.dimension;
  ec.radius = c.radius;
  ec.theta = c.theta;
  ec.kappa = c.kappa;
  ec.lambda = heat ? c.lambda : 0.0;
  ec.nu = heat ? c.nu : 0.0;
  ec.dt = c.dt > 0 ? c.dt : 1e-5;
  ec.T = c.T;
  ec.paths = c.paths;
  ec.base_seed = c.base_seed;
  ec.tau = c.tau;
  ec.sample_every = c.sample_every;
  ec.init_shell_norm2 = c.init_shell_norm2;
  EnsembleStats st = simulate_ensemble(ec);

  auto out = out_root(c);
  std::ostringstream os;
  os << "t,mean_l2,se_l2,mean_hm1,se_hm1\n";
  for (std::size_t i = 0; i < st.times.size(); ++i)
    os << format_full(st.times[i]) << "," << format_full(st.mean_l2[i]) << ","
       << format_full(st.se_l2[i]) << "," << format_full(st.mean_hm1[i]) << ","
       << format_full(st.se_hm1[i]) << "\n";
  write_file_atomic(out / "norms.csv", os.str());
  rep.artifact_files.push_back((out / "norms.csv").string());

  LatticeBox box(c.dimension, c.radius);
  std::ostringstream ms;
  ms << "t,";
  for (int j = 1; j <= c.dimension; ++j) ms << "k_" << j << ",";
  ms << "mean_power,se\n";
  for (std::size_t cp = 0; cp < st.checkpoint_times.size(); ++cp)
    for (int id = 0; id < box.size(); ++id) {
      ms << format_full(st.checkpoint_times[cp]) << ",";
      for (int v : box.point(id)) ms << v << ",";
      ms << format_full(st.checkpoint_mode_mean[cp][std::size_t(id)]) << ","
         << format_full(st.checkpoint_mode_se[cp][std::size_t(id)]) << "\n";
    }
  write_file_atomic(out / "modes.csv", ms.str());
  rep.artifact_files.push_back((out / "modes.csv").string());

  // factor-2 bound on E sup over the first window [0, t0]
  double mean_sup = 0, var_sup = 0;
  for (const auto& path : st.interval_sup) mean_sup += path.front();
  mean_sup /= double(st.paths);
  for (const auto& path : st.interval_sup) {
    double d = path.front() - mean_sup;
    var_sup += d * d;
  }
  double se_sup = std::sqrt(var_sup / double(st.paths - 1)) / std::sqrt(double(st.paths));
  CriterionRecord cr{"interval_sup_factor2", mean_sup, 2.0 * st.initial_hm1 + 3.0 * se_sup, 0,
                     true, false};
  cr.pass = cr.observed <= cr.bound;
  cr.margin = cr.bound - cr.observed;
  rep.criteria.push_back(cr);

  double lam = c.lambda_target > 0 ? c.lambda_target : 0.5 * st.d_theta_kappa;
  json extra;
  try {
    IntervalSupReport isr = interval_sup_stats(st, lam);
    extra["interval_sup_fitted_rate"] = isr.fitted_rate;
    extra["envelope_quantiles"] = isr.envelope_quantiles;
    extra["lambda_target"] = lam;
    extra["outside_hypothesis"] = isr.outside_hypothesis;
    if (isr.outside_hypothesis)
      rep.warnings.push_back("lambda_target >= D(theta,d) kappa: outside the a.s. mixing hypothesis");
  } catch (const std::exception& e) {
    rep.warnings.push_back(e.what());
  }
  extra["tau"] = st.tau;
  extra["initial_l2"] = st.initial_l2;
  extra["initial_hm1"] = st.initial_hm1;
  extra["D_theta_kappa"] = st.d_theta_kappa;

  json summary;
  summary["command"] = c.command;
  summary["config"] = config_to_json_obj(c);
  summary["details"] = extra;
  json crits = json::array();
  for (const auto& r : rep.criteria) crits.push_back(criterion_json(r));
  summary["criteria"] = crits;
  write_file_atomic(out / "summary.json", summary.dump(2) + "\n");
  rep.artifact_files.push_back((out / "summary.json").string());
}

// ----- euler -----------------------------------------------------------------

void run_euler(const RunConfig& c, RunReport& rep) {
  EulerEnsembleConfig ec;
  ec.solver.grid = c.grid;
  ec.solver.alpha = c.alpha;
  ec.solver.noise_cutoff = c.noise_cutoff;
  double lam = c.lambda_target > 0 ? c.lambda_target : 1.0;
  ec.solver.kappa =
      c.kappa_auto ? kappa_for_target_rate(lam, c.energy_R, c.alpha, c.noise_cutoff) : c.kappa;
  ec.dt = c.dt > 0 ? c.dt : 1e-5;
  ec.T = c.T;
  ec.paths = c.paths;
  ec.base_seed = c.base_seed;
  ec.sample_every = c.sample_every;
  ec.initial_l2_sq = c.energy_R;
  EulerEnsembleStats st = simulate_euler_ensemble(ec);

  auto out = out_root(c);
  std::ostringstream os;
  os << "t,mean_l2,mean_hm1,mean_quadvar\n";
  for (std::size_t i = 0; i < st.times.size(); ++i)
    os << format_full(st.times[i]) << "," << format_full(st.mean_l2[i]) << ","
       << format_full(st.mean_hm1[i]) << "," << format_full(st.mean_quadvar[i]) << "\n";
  write_file_atomic(out / "euler.csv", os.str());
  rep.artifact_files.push_back((out / "euler.csv").string());

  EulerSolver solver(ec.solver);
  double budget = kPi2 * ec.solver.kappa * solver.theta_hm1() / 8.0 -
                  solver.kalpha_sq() * c.energy_R / (8.0 * kPi2 * ec.solver.kappa);
  if (c.kappa_auto) {
    CriterionRecord cr{"kappa_sizing_budget", budget, lam, budget - lam, true, budget >= lam - 1e-12};
    rep.criteria.push_back(cr);
  }
  CriterionRecord g{"girsanov_ceiling", st.girsanov_ceiling_ok ? 1.0 : 0.0, 1.0, st.girsanov_slack,
                    true, st.girsanov_ceiling_ok};
  rep.criteria.push_back(g);
  CriterionRecord slope{"hm1_slope_negative", st.fitted_hm1_rate, 0.0, st.fitted_hm1_rate, true,
                        st.fitted_hm1_rate > 0.0};
  rep.criteria.push_back(slope);

  json extra;
  extra["kappa"] = ec.solver.kappa;
  extra["kappa_auto"] = c.kappa_auto;
  extra["K_alpha_sq"] = solver.kalpha_sq();
  extra["theta_hm1"] = solver.theta_hm1();
  extra["decay_budget"] = budget;
  extra["fitted_hm1_rate"] = st.fitted_hm1_rate;
  extra["max_path_energy_ratio"] = st.max_path_l2;
  json summary;
  summary["command"] = c.command;
  summary["config"] = config_to_json_obj(c);
  summary["details"] = extra;
  json crits = json::array();
  for (const auto& r : rep.criteria) crits.push_back(criterion_json(r));
  summary["criteria"] = crits;
  write_file_atomic(out / "summary.json", summary.dump(2) + "\n");
  rep.artifact_files.push_back((out / "summary.json").string());
}

// ----- poincare / orbits -----------------------------------------------------

void run_poincare(const RunConfig& c, RunReport& rep) {
  RngStream rng(c.base_seed);
  std::vector<double> ps{1.5, 2.0, 3.0, 5.0};
  long violations = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  for (int t = 0; t < c.cases; ++t) {
    int len = 1 + int(rng.raw() % std::uint64_t(c.support_limit));
    std::vector<double> a(static_cast<std::size_t>(len));
    for (auto& v : a) v = std::abs(rng.gauss());
    for (double p : ps) {
      PoincareGap g = poincare_gap(a, p);
      if (g.lhs > g.rhs * (1.0 + 1e-12)) ++violations;
      if (g.lhs > 0) min_margin = std::min(min_margin, g.rhs / g.lhs);
    }
  }
  PoincareGap h1 = poincare_gap({1.0}, 2.0);
  PoincareGap h2 = poincare_gap({1.0, 1.0}, 2.0);
  bool hand = std::abs(h1.lhs - 1) < 1e-12 && std::abs(h1.rhs - 8) < 1e-12 &&
              std::abs(h2.lhs - 2) < 1e-12 && std::abs(h2.rhs - 32) < 1e-12;

  CriterionRecord cr{"poincare_inequality", double(violations), 0.0, min_margin, true,
                     violations == 0 && hand};
  rep.criteria.push_back(cr);

  json summary;
  summary["command"] = c.command;
  summary["config"] = config_to_json_obj(c);
  summary["details"] = {{"cases", c.cases},
                        {"violations", violations},
                        {"min_rhs_over_lhs", min_margin},
                        {"hand_cases_ok", hand}};
  summary["criteria"] = json::array({criterion_json(cr)});
  write_file_atomic(out_root(c) / "summary.json", summary.dump(2) + "\n");
  rep.artifact_files.push_back((out_root(c) / "summary.json").string());
}

void run_orbits(const RunConfig& c, RunReport& rep) {
  LatticeBox box(c.dimension, c.box);
  std::vector<OrbitFamily> fams;
  if (c.dimension == 2 && c.l2.empty()) {
    fams.push_back(build_orbits_2d(c.l, box));
  } else {
    if (int(c.l.size()) != c.dimension || int(c.l2.size()) != c.dimension)
      throw std::invalid_argument("orbits: need l and l2 of matching dimension");
    fams = build_orbits_hd(c.l, c.l2, box);
  }
  CoverReport cover = cover_multiplicity(fams, box, c.margin);
  double min_ratio = std::numeric_limits<double>::infinity();
  for (const auto& fam : fams)
    for (const auto& o : fam.orbits)
      if (!o.points.empty()) min_ratio = std::min(min_ratio, projection_bound_margin(o));

  auto out = out_root(c);
  write_file_atomic(out / "orbits.csv", orbits_to_csv(fams));
  write_file_atomic(out / "cover.json", cover.to_json());
  rep.artifact_files.push_back((out / "orbits.csv").string());
  rep.artifact_files.push_back((out / "cover.json").string());

  CriterionRecord c1{"cover_multiplicity_2", double(cover.violations.size()), 0.0,
                     double(cover.certified_points), cover.certified_points > 0,
                     cover.violations.empty()};
  rep.criteria.push_back(c1);
  CriterionRecord c2{"projection_ratio", min_ratio, 1.0, min_ratio - 1.0, true,
                     min_ratio >= 1.0};
  rep.criteria.push_back(c2);

  json summary;
  summary["command"] = c.command;
  summary["config"] = config_to_json_obj(c);
  summary["details"] = {{"families", fams.size()},
                        {"certified_points", cover.certified_points},
                        {"certified_radius", cover.certified_radius},
                        {"min_projection_ratio", min_ratio}};
  summary["criteria"] = json::array({criterion_json(c1), criterion_json(c2)});
  write_file_atomic(out / "summary.json", summary.dump(2) + "\n");
  rep.artifact_files.push_back((out / "summary.json").string());
}

}  // namespace

RunReport run_command(const RunConfig& config) {
  auto start = std::chrono::steady_clock::now();
  RunReport rep;
  rep.config = config;
  rep.seed = config.base_seed;
  try {
    if (config.command == "spectrum")
      run_spectrum(config, rep, false);
    else if (config.command == "heat")
      run_spectrum(config, rep, true);
    else if (config.command == "transport-mc")
      run_mc(config, rep, false);
    else if (config.command == "heat-mc")
      run_mc(config, rep, true);
    else if (config.command == "euler")
      run_euler(config, rep);
    else if (config.command == "poincare")
      run_poincare(config, rep);
    else if (config.command == "orbits")
      run_orbits(config, rep);
    else if (config.command == "report") {
      CompareResult cmp = compare_bounds(config.inputs);
      rep.criteria = cmp.rows;
      finish_report(rep, start);
      rep.exit_code = cmp.exit_code;
      return rep;
    } else {
      throw std::invalid_argument("unknown command '" + config.command + "'");
    }
  } catch (const std::exception& e) {
    rep.warnings.push_back(e.what());
    rep.exit_code = 2;
    return rep;
  }
  finish_report(rep, start);
  return rep;
}

std::string RunReport::to_json() const {
  json j;
  j["config"] = config_to_json_obj(config);
  json crits = json::array();
  for (const auto& r : criteria) crits.push_back(criterion_json(r));
  j["criteria"] = crits;
  j["artifacts"] = artifact_files;
  j["warnings"] = warnings;
  j["provenance"] = {{"build", build_id}, {"seed", seed}, {"wall_seconds", wall_seconds}};
  j["exit_code"] = exit_code;
  return j.dump(2) + "\n";
}

CompareResult compare_bounds(const std::vector<std::string>& summary_files) {
  CompareResult out;
  bool any_fail = false, any_gated = false;
  for (const auto& file : summary_files) {
    std::ifstream is(file);
    if (!is) throw std::invalid_argument("report: cannot open " + file);
    json j = json::parse(is);
    for (const auto& cj : j.at("criteria")) {
      CriterionRecord r;
      r.name = cj.at("name").get<std::string>();
      r.observed = cj.at("observed").get<double>();
      r.bound = cj.at("bound").get<double>();
      r.margin = cj.at("margin").get<double>();
      r.gated = cj.at("gated").get<bool>();
      r.pass = cj.at("pass").get<bool>();
      out.rows.push_back(r);
      if (r.gated) {
        any_gated = true;
        any_fail = any_fail || !r.pass;
      }
    }
  }
  out.exit_code = !any_gated ? 3 : (any_fail ? 1 : 0);
  return out;
}

std::string CompareResult::to_text() const {
  std::ostringstream os;
  for (const auto& r : rows)
    os << (r.gated ? (r.pass ? "[PASS] " : "[FAIL] ") : "[SKIP] ") << r.name
       << " observed=" << format_full(r.observed) << " bound=" << format_full(r.bound) << "\n";
  return os.str();
}

}  // namespace stmix
