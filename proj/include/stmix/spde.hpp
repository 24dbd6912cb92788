#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "stmix/lattice.hpp"
#include "stmix/rng.hpp"
#include "stmix/theta.hpp"

namespace stmix {

using Complex = std::complex<double>;

// Fourier amplitudes u_hat on a LatticeBox with the reality constraint
// u_hat_{-k} = conj(u_hat_k); only representatives are evolved, mirrors derived.
struct ModeState {
  const LatticeBox* box = nullptr;
  std::vector<Complex> amp;
  double time = 0.0;

  explicit ModeState(const LatticeBox& b) : box(&b), amp(std::size_t(b.size()), Complex{}) {}
  void set_mode(std::span<const int> k, Complex v);  // also sets the conjugate mirror
  double l2_sq() const;                              // sum |u_hat_k|^2
  double hm1_sq() const;                             // sum |u_hat_k|^2 / |2 pi k|^2
};

// max_k |u_hat_{-k} - conj(u_hat_k)|; zero by construction for evolved states.
double realness_defect(const ModeState& state);

// Complex increments dW = dB1 + i dB2 with independent N(0, dt) parts, stored
// for support representatives only; mirrors are conjugates (noise.1 covariance:
// E[dW conj(dW)] = 2 dt, E[dW^2] = 0).
struct NoiseDraw {
  double dt = 0;
  std::vector<Complex> dw;  // [rep_index * (d-1) + i], support reps in lex order
};

NoiseDraw noise_increments(const ThetaCoefficients& theta, double dt, RngStream& rng);

// Euler-Maruyama on the mode SDE
//   d u_hat_k = (lambda - 4 pi^2 (kappa+nu) |k|^2) u_hat_k dt
//               + 2 pi i sqrt(C_d kappa) sum_{l,i} theta_l (a_{l,i}.k) u_hat_{k-l} dW^{l,i},
// diagonal integrated by its exact exponential factor, absorbing truncation.
class ModeEvolver {
 public:
  ModeEvolver(const LatticeBox& box, const ThetaCoefficients& theta, double kappa, double lambda,
              double nu);

  void prepare_dt(double dt);
  void step(ModeState& state, const NoiseDraw& draw, std::vector<Complex>& scratch) const;
  NoiseDraw draw(double dt, RngStream& rng) const;
  double stability_budget() const;  // 0.5 / (4 pi^2 (kappa+nu) |k|^2_max + lambda)
  int support_reps() const { return n_supp_reps_; }
  const LatticeBox& box() const { return *box_; }

 private:
  const LatticeBox* box_;
  const ThetaCoefficients* theta_;
  double kappa_, lambda_, nu_;
  int dirs_;
  int n_supp_reps_ = 0;
  double dt_ = -1;
  Complex noise_scale_;  // 2 pi i sqrt(C_d kappa)
  std::vector<double> expfac_;
  struct Term {
    int source;      // box id of k-l, -1 when outside (absorbing)
    int noise;       // index into NoiseDraw::dw
    float conj;      // +1 draw as stored, -1 take conjugate
    double coeff;    // theta_l (a_{l,i} . k)
  };
  std::vector<Term> terms_;          // grouped per representative
  std::vector<int> term_offset_;     // per representative position
  std::vector<int> rep_ids_;
};

struct EnsembleConfig {
  int dimension = 2;
  int radius = 8;
  ThetaSpec theta{"unit_shell"};
  double kappa = 1.0;
  double lambda = 0.0;
  double nu = 0.0;
  double dt = 1e-5;
  double T = 0.01;
  int paths = 16;
  std::uint64_t base_seed = 1;
  double tau = 0.0;  // interval length for sup records; 0 selects t0
  int sample_every = 10;
  int threads = 0;  // 0: hardware concurrency
  std::int64_t init_shell_norm2 = 1;  // unit amplitude on reps with |k|^2 <= this
};

struct EnsembleStats {
  std::vector<double> times;
  std::vector<double> mean_l2, se_l2;
  std::vector<double> mean_hm1, se_hm1;
  std::vector<double> mode_mean, mode_se;  // per box id, at the final time
  std::vector<double> checkpoint_times;    // mid-run and final per-mode checkpoints
  std::vector<std::vector<double>> checkpoint_mode_mean, checkpoint_mode_se;
  std::vector<std::vector<double>> interval_sup;  // [path][interval], sup of H^{-1}
  std::vector<std::uint64_t> path_seeds;   // per-path stream seeds
  double tau = 0;
  int paths = 0;
  std::uint64_t base_seed = 0;
  double initial_l2 = 0, initial_hm1 = 0;
  double final_time = 0;
  double d_theta_kappa = 0;  // D(theta,d) * kappa, hypothesis gate for a.s. decay
};

// Independent per-path streams seeded by stream_seed(base_seed, path); partials
// merged in ascending path order, so results do not depend on the worker count.
EnsembleStats simulate_ensemble(const EnsembleConfig& config);

struct IntervalSupReport {
  double fitted_rate = 0;       // decay rate of the interval-sup means
  int intervals = 0;
  std::vector<double> envelope_quantiles;  // q = 0.5, 0.9, 0.99, 1.0
  double lambda_target = 0;
  bool outside_hypothesis = false;  // lambda_target >= D(theta,d) kappa
  double mean_sup_first = 0;        // E sup_{[0,tau]} ||u||^2_{H^-1}
};

IntervalSupReport interval_sup_stats(const EnsembleStats& stats, double lambda_target);

}  // namespace stmix
