#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stmix/theta.hpp"

namespace stmix {

struct RunConfig {
  std::string command;  // spectrum | heat | transport-mc | heat-mc | euler | poincare | orbits | report
  int dimension = 2;
  int radius = 24;
  ThetaSpec theta{"unit_shell"};
  double kappa = 1.0;
  double lambda = 0.0;
  double nu = 0.0;
  double alpha = 0.5;
  std::vector<double> p_list{1.5, 2.0, 3.0};
  std::vector<double> beta_list{-1.0, 1.0};
  double T = 0.01;
  double dt = 0.0;  // 0: stability-derived
  double safety = 0.5;
  int sample_every = 10;
  int paths = 16;
  std::uint64_t base_seed = 1;
  double tau = 0.0;
  std::string truncation = "conservative";
  int boundary_margin = 0;
  double leakage_gate = 1e-3;
  std::int64_t init_shell_norm2 = 2;
  double bound_beta = 1.0;
  double bound_epsilon = -1.0;
  double lambda_target = 0.0;
  // orbits
  IVec l{1, 0};
  IVec l2;
  int box = 40;
  int margin = 3;
  // euler
  int grid = 64;
  int noise_cutoff = 10;
  double energy_R = 1.0;
  bool kappa_auto = false;
  // poincare
  int cases = 1000;
  int support_limit = 64;
  // report
  std::vector<std::string> inputs;
  std::string out_dir = "out";

  std::string to_json() const;
};

struct ParseResult {
  RunConfig config;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
};

ParseResult parse_config(const std::string& json_text);

struct CriterionRecord {
  std::string name;
  double observed = 0;
  double bound = 0;
  double margin = 0;
  bool gated = true;   // false: excluded by the leakage gate
  bool pass = false;
};

struct RunReport {
  RunConfig config;
  std::vector<CriterionRecord> criteria;
  std::vector<std::string> artifact_files;
  std::vector<std::string> warnings;
  std::string build_id;
  std::uint64_t seed = 0;
  double wall_seconds = 0;
  int exit_code = 0;  // 0 pass, 1 criterion failure, 2 config error, 3 inconclusive
  std::string to_json() const;
};

// Dispatches to the owning module, writes CSV/JSON atomically (temp then
// rename), exit status 0 iff all enabled criteria pass.
RunReport run_command(const RunConfig& config);

// Consolidated pass/fail over summary JSON files produced by run_command.
struct CompareResult {
  std::vector<CriterionRecord> rows;
  int exit_code = 0;
  std::string to_text() const;
};
CompareResult compare_bounds(const std::vector<std::string>& summary_files);

void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace stmix
