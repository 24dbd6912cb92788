#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stmix/runner.hpp"

using namespace stmix;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("stmix_test_" + std::to_string(std::rand()) + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
};

}  // namespace

TEST_CASE("minimal spectrum config parses") {
  ParseResult r = parse_config(
      R"({"command":"spectrum","dimension":2,"radius":24,"theta":{"family":"unit_shell"},"kappa":1,"T":0.5})");
  CHECK(r.ok());
  CHECK(r.config.radius == 24);
  CHECK(r.config.theta.family == "unit_shell");
}

TEST_CASE("unknown keys, bad types and bad commands are collected") {
  ParseResult r = parse_config(R"({"command":"spectrum","radiu":3,"kappa":"big"})");
  REQUIRE_FALSE(r.ok());
  bool unknown = false, mismatch = false;
  for (const auto& e : r.errors) {
    if (e.find("unknown key") != std::string::npos) unknown = true;
    if (e.find("type mismatch") != std::string::npos) mismatch = true;
  }
  CHECK(unknown);
  CHECK(mismatch);

  CHECK_FALSE(parse_config(R"({"command":"fly"})").ok());
  CHECK_FALSE(parse_config("not json at all").ok());
}

TEST_CASE("epsilon outside the averaged-mixing hypothesis is rejected") {
  // beta = 1, d = 2: gap = 1*(2-2)/4 = 0 -> no admissible epsilon
  ParseResult r = parse_config(
      R"({"command":"spectrum","bound_beta":0.5,"bound_epsilon":0.2})");
  REQUIRE_FALSE(r.ok());
  CHECK(r.errors.front().find("epsilon") != std::string::npos);
  ParseResult ok = parse_config(
      R"({"command":"spectrum","bound_beta":0.5,"bound_epsilon":0.05})");
  CHECK(ok.ok());
}

TEST_CASE("envelope targets beyond D kappa warn per the a.s. theorem") {
  ParseResult r = parse_config(
      R"({"command":"transport-mc","radius":4,"lambda_target":5.0})");
  CHECK(r.ok());
  REQUIRE_FALSE(r.warnings.empty());
  CHECK(r.warnings.front().find("D(theta,d)") != std::string::npos);
}

TEST_CASE("config round-trips through its JSON form") {
  ParseResult r = parse_config(
      R"({"command":"heat","dimension":2,"radius":10,"kappa":2.5,"lambda":1,"nu":0.01,"T":0.25,"p_list":[1.5,2],"theta":{"family":"powerlaw","alpha":0.5,"cutoff":2}})");
  REQUIRE(r.ok());
  ParseResult r2 = parse_config(r.config.to_json());
  REQUIRE(r2.ok());
  CHECK(r.config.to_json() == r2.config.to_json());
}

TEST_CASE("spectrum run writes artifacts and reruns byte-identically") {
  TempDir tmp;
  RunConfig cfg;
  cfg.command = "spectrum";
  cfg.dimension = 2;
  cfg.radius = 6;
  cfg.T = 0.004;
  cfg.sample_every = 20;
  cfg.out_dir = (tmp.path / "run1").string();
  RunReport rep = run_command(cfg);
  CHECK(rep.exit_code == 0);
  REQUIRE_FALSE(rep.criteria.empty());
  for (const auto& c : rep.criteria) CHECK(c.pass);
  std::string csv1 = slurp(tmp.path / "run1" / "trajectory.csv");
  CHECK(csv1.rfind("t,sum_Y", 0) == 0);

  cfg.out_dir = (tmp.path / "run2").string();
  run_command(cfg);
  std::string csv2 = slurp(tmp.path / "run2" / "trajectory.csv");
  CHECK(csv1 == csv2);
}

TEST_CASE("heat run checks the enhancement bound and reports rates") {
  TempDir tmp;
  RunConfig cfg;
  cfg.command = "heat";
  cfg.radius = 8;
  cfg.lambda = 1.0;
  cfg.nu = 0.01;
  cfg.T = 0.01;
  cfg.sample_every = 5;
  cfg.out_dir = (tmp.path / "heat").string();
  RunReport rep = run_command(cfg);
  CHECK(rep.exit_code == 0);
  REQUIRE_FALSE(rep.criteria.empty());
  CHECK(rep.criteria.front().name == "heat_energy_theorem");
  CHECK(rep.criteria.front().pass);
  std::string sj = slurp(tmp.path / "heat" / "summary.json");
  CHECK(sj.find("fitted_l2_rate") != std::string::npos);
  CHECK(sj.find("theoretical_l2_rate") != std::string::npos);
}

TEST_CASE("orbits run emits cover artifacts and passes") {
  TempDir tmp;
  RunConfig cfg;
  cfg.command = "orbits";
  cfg.dimension = 2;
  cfg.l = {2, 1};
  cfg.box = 12;
  cfg.out_dir = (tmp.path / "orb").string();
  RunReport rep = run_command(cfg);
  CHECK(rep.exit_code == 0);
  CHECK(fs::exists(tmp.path / "orb" / "orbits.csv"));
  CHECK(fs::exists(tmp.path / "orb" / "cover.json"));
  CHECK(fs::exists(tmp.path / "orb" / "summary.json"));
}

TEST_CASE("report consolidates summaries with the exit-code contract") {
  TempDir tmp;
  RunConfig cfg;
  cfg.command = "poincare";
  cfg.cases = 50;
  cfg.out_dir = (tmp.path / "poi").string();
  RunReport rep = run_command(cfg);
  REQUIRE(rep.exit_code == 0);

  RunConfig rc;
  rc.command = "report";
  rc.inputs = {(tmp.path / "poi" / "summary.json").string()};
  RunReport r2 = run_command(rc);
  CHECK(r2.exit_code == 0);

  // an all-ungated summary is inconclusive: exit code 3
  std::ofstream os(tmp.path / "ungated.json");
  os << R"({"criteria":[{"name":"x","observed":0,"bound":1,"margin":1,"gated":false,"pass":false}]})";
  os.close();
  rc.inputs = {(tmp.path / "ungated.json").string()};
  CHECK(run_command(rc).exit_code == 3);

  rc.inputs = {(tmp.path / "missing.json").string()};
  CHECK(run_command(rc).exit_code == 2);
}

TEST_CASE("atomic writes leave no temp file behind") {
  TempDir tmp;
  fs::path target = tmp.path / "x" / "data.csv";
  write_file_atomic(target, "a,b\n1,2\n");
  CHECK(fs::exists(target));
  CHECK_FALSE(fs::exists(target.string() + ".tmp"));
  CHECK(slurp(target) == "a,b\n1,2\n");
}
