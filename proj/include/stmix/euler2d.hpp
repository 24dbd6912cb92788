#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

#include "stmix/rng.hpp"
#include "stmix/theta.hpp"

namespace stmix {

// Spectral vorticity on the unit torus, modes |k|_inf <= grid/2, zero mean,
// Hermitian (real field), dealiased band |k|_inf <= grid/3.
struct VorticityState {
  int grid = 0;
  double alpha = 0.5;
  double time = 0.0;
  std::vector<std::complex<double>> what;  // row-major [k1][k2], FFT index order

  VorticityState(int grid_size, double alpha_reg);
  std::size_t idx(int k1, int k2) const;
  void set_mode(int k1, int k2, std::complex<double> v);  // also sets the mirror
  double l2_sq() const;
  double hm1_sq() const;
  double hermitian_defect() const;
};

// Deterministic default initial data: a handful of low modes scaled so that
// ||w_0||_{L^2}^2 equals the target.
void default_vorticity(VorticityState& state, double target_l2_sq);

struct GirsanovLedger {
  double kalpha_sq = 0;  // K_alpha^2 on the truncated noise support
  double kappa = 0;
  std::vector<double> times;
  std::vector<double> quad_variation;  // [M,M]_t = K^2/(4 pi^2 kappa) int ||w||^2
  double ceiling_rate = 0;             // K^2/(4 pi^2 kappa) ||w_0||^2
  bool under_ceiling(double slack = 0.0) const;
};

GirsanovLedger girsanov_diagnostics(const std::vector<double>& times,
                                    const std::vector<double>& l2_sq_series, double kappa,
                                    double kalpha_sq);

// Smallest kappa with (pi^2 kappa / 8) ||theta||^2_{h^-1} >= K_alpha^2 R/(8 pi^2 kappa) + lambda,
// i.e. the positive root of (pi^2 h/8) k^2 - lambda k - K^2 R/(8 pi^2) = 0.
double kappa_for_target_rate(double lambda, double R, double alpha, int cutoff);

// Pseudo-spectral regularized stochastic 2D Euler:
//   d w = -u.grad w dt + kappa Lap w dt + sqrt(2 kappa) sum_l theta_l sigma_l . grad w dW^l,
//   u = (i/2pi) k^perp |k|^{-(2+alpha)} w_hat.
// Euler-Maruyama with the exact exponential on kappa Lap; RK4 for noise-free runs.
class EulerSolver {
 public:
  struct Params {
    int grid = 64;
    double alpha = 0.5;
    double kappa = 0.0;
    int noise_cutoff = 10;  // powerlaw theta^(alpha) truncated at |l| <= cutoff
  };

  explicit EulerSolver(const Params& p);
  ~EulerSolver();
  EulerSolver(const EulerSolver&) = delete;
  EulerSolver& operator=(const EulerSolver&) = delete;

  const Params& params() const { return params_; }
  double kalpha_sq() const { return kalpha_sq_; }
  double theta_hm1() const { return theta_hm1_; }
  int dealias_limit() const { return band_; }

  // Per-worker transform workspace; create one per thread.
  struct Scratch;
  struct ScratchDeleter {
    void operator()(Scratch* s) const;
  };
  std::unique_ptr<Scratch, ScratchDeleter> make_scratch() const;

  struct Velocity {
    std::vector<std::complex<double>> u1, u2;
  };
  Velocity velocity_from_vorticity(const VorticityState& w) const;

  struct NonlinearResult {
    std::vector<std::complex<double>> tendency;  // -(u . grad w), dealiased
    double advection_inner = 0;  // <u.grad w, w>, should vanish
    double max_velocity = 0;
  };
  NonlinearResult nonlinear_term(const VorticityState& w, Scratch& scratch) const;

  // dt budgets: advective CFL |u|_max dt 2 pi grid/3 <= 0.5 and the noise
  // budget dt <= 0.5/(4 pi^2 kappa |k|^2_max).
  double noise_dt_budget() const;

  void step_em(VorticityState& w, double dt, RngStream& rng, Scratch& scratch) const;
  void step_deterministic_rk4(VorticityState& w, double dt, Scratch& scratch) const;

 private:
  Params params_;
  int band_;
  double kalpha_sq_ = 0, theta_hm1_ = 0;
  struct Tables;
  std::unique_ptr<Tables> t_;
  void apply_mask(std::vector<std::complex<double>>& spec) const;
};

struct EulerEnsembleConfig {
  EulerSolver::Params solver;
  double dt = 1e-5;
  double T = 0.05;
  int paths = 4;
  std::uint64_t base_seed = 1;
  int sample_every = 50;
  int threads = 0;
  double initial_l2_sq = 1.0;
};

struct EulerEnsembleStats {
  std::vector<double> times;
  std::vector<double> mean_l2, mean_hm1, mean_quadvar;
  std::vector<double> path_max_l2;  // per path: max_t ||w||^2/||w_0||^2
  double max_path_l2 = 0;        // max over paths and times of ||w||^2/||w_0||^2
  bool girsanov_ceiling_ok = true;
  double girsanov_slack = 0;
  double initial_l2 = 0, initial_hm1 = 0;
  double fitted_hm1_rate = 0;  // decay rate of the ensemble mean H^{-1}
};

EulerEnsembleStats simulate_euler_ensemble(const EulerEnsembleConfig& config);

}  // namespace stmix
