#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "stmix/runner.hpp"

namespace {

int execute(stmix::RunConfig cfg) {
  stmix::RunReport rep = stmix::run_command(cfg);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& r : rep.criteria)
    std::cout << (r.gated ? (r.pass ? "[PASS] " : "[FAIL] ") : "[SKIP] ") << r.name
              << " observed=" << r.observed << " bound=" << r.bound << "\n";
  auto report_path = std::filesystem::path(cfg.out_dir) / "report.json";
  const char* env = std::getenv("STMIX_OUTPUT_ROOT");
  if (env) report_path = std::filesystem::path(env) / report_path;
  try {
    stmix::write_file_atomic(report_path, rep.to_json());
  } catch (const std::exception& e) {
    std::cerr << "warning: could not write report: " << e.what() << "\n";
  }
  return rep.exit_code;
}

int run_from_json(const std::string& text, const std::string& command_override) {
  stmix::ParseResult pr = stmix::parse_config(text);
  if (!command_override.empty()) pr.config.command = command_override;
  for (const auto& w : pr.warnings) std::cerr << "warning: " << w << "\n";
  if (!pr.ok()) {
    for (const auto& e : pr.errors) std::cerr << "config error: " << e << "\n";
    return 2;
  }
  return execute(pr.config);
}

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral mixing toolkit for divergence-free transport noise"};
  app.require_subcommand(1);

  std::string config_path;
  stmix::RunConfig cfg;
  std::string theta_family = "unit_shell";
  double theta_alpha = 1.0, theta_radius = 1.0;
  int theta_cutoff = 1;
  std::string l_str = "1,0", l2_str;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file; flags override nothing when set");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--seed", cfg.base_seed, "base seed");
    sub->add_option("--d", cfg.dimension, "dimension");
    sub->add_option("--N", cfg.radius, "lattice radius");
    sub->add_option("--kappa", cfg.kappa, "noise intensity");
    sub->add_option("--lambda", cfg.lambda, "linear growth coefficient");
    sub->add_option("--nu", cfg.nu, "viscosity");
    sub->add_option("--T", cfg.T, "horizon");
    sub->add_option("--dt", cfg.dt, "time step (0: stability-derived)");
    sub->add_option("--paths", cfg.paths, "Monte Carlo paths");
    sub->add_option("--tau", cfg.tau, "interval length for sup records (0: t0)");
    sub->add_option("--theta", theta_family, "theta family: unit_shell|shells|powerlaw|explicit");
    sub->add_option("--theta-alpha", theta_alpha, "powerlaw exponent");
    sub->add_option("--theta-cutoff", theta_cutoff, "powerlaw cutoff");
    sub->add_option("--theta-radius", theta_radius, "shells radius");
    sub->add_option("--truncation", cfg.truncation, "conservative|absorbing");
    sub->add_option("--init-shell", cfg.init_shell_norm2, "initial shell |k|^2 cutoff");
    sub->add_option("--sample-every", cfg.sample_every, "sampling stride");
    sub->add_option("--lambda-target", cfg.lambda_target, "target decay rate");
  };

  auto* spectrum = app.add_subcommand("spectrum", "transport master-equation run");
  auto* heat = app.add_subcommand("heat", "stochastic heat master-equation run");
  auto* tmc = app.add_subcommand("transport-mc", "transport Monte Carlo ensemble");
  auto* hmc = app.add_subcommand("heat-mc", "heat Monte Carlo ensemble");
  auto* euler = app.add_subcommand("euler", "regularized stochastic 2D Euler ensemble");
  auto* poincare = app.add_subcommand("poincare", "discrete Poincare inequality sweep");
  auto* orbits = app.add_subcommand("orbits", "orbit cover and projection bounds");
  auto* report = app.add_subcommand("report", "consolidate summaries into a pass/fail table");
  for (auto* sub : {spectrum, heat, tmc, hmc, euler, poincare, orbits}) add_common(sub);

  euler->add_option("--grid", cfg.grid, "physical resolution N_e");
  euler->add_option("--alpha", cfg.alpha, "regularization exponent");
  euler->add_option("--R", cfg.energy_R, "initial energy ||w_0||^2");
  euler->add_flag("--kappa-auto", cfg.kappa_auto, "size kappa from the target rate");
  euler->add_option("--noise-cutoff", cfg.noise_cutoff, "powerlaw noise cutoff M");
  orbits->add_option("--l", l_str, "step vector, comma separated");
  orbits->add_option("--l2", l2_str, "second step vector (d >= 3)");
  orbits->add_option("--box", cfg.box, "orbit box radius");
  orbits->add_option("--margin", cfg.margin, "certification margin");
  poincare->add_option("--cases", cfg.cases, "number of random sequences");
  poincare->add_option("--support", cfg.support_limit, "max support length");
  std::vector<std::string> inputs;
  report->add_option("inputs", inputs, "summary.json files");

  CLI11_PARSE(app, argc, argv);

  auto parse_vec = [](const std::string& s) {
    stmix::IVec v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) v.push_back(std::stoi(item));
    return v;
  };

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!config_path.empty()) return run_from_json(slurp(config_path), sub->get_name());
    cfg.command = sub->get_name();
    cfg.theta.family = theta_family;
    cfg.theta.alpha = theta_alpha;
    cfg.theta.cutoff = theta_cutoff;
    cfg.theta.radius = theta_radius;
    cfg.l = parse_vec(l_str);
    if (!l2_str.empty()) cfg.l2 = parse_vec(l2_str);
    cfg.inputs = inputs;
    // validate through the same gate as file configs
    stmix::ParseResult pr = stmix::parse_config(cfg.to_json());
    for (const auto& w : pr.warnings) std::cerr << "warning: " << w << "\n";
    if (!pr.ok()) {
      for (const auto& e : pr.errors) std::cerr << "config error: " << e << "\n";
      return 2;
    }
    return execute(pr.config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
