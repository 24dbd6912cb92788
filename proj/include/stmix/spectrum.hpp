#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stmix/lattice.hpp"
#include "stmix/theta.hpp"

namespace stmix {

// Second moments Y_k = E|u_hat_k|^2 on a LatticeBox.
struct SpectrumState {
  const LatticeBox* box = nullptr;
  std::vector<double> values;
  double time = 0.0;

  explicit SpectrumState(const LatticeBox& b) : box(&b), values(std::size_t(b.size()), 0.0) {}

  // Sets Y at k and at -k (reality of u).
  void set_pair(std::span<const int> k, double v);
  // Uniform mass on the shells 0 < |k|^2 <= max_norm2, mirrored by construction.
  void init_shell(std::int64_t max_norm2, double total_mass);
  double sum() const;
  double min_value() const;
  // max |Y_k - Y_{-k}|
  double symmetry_defect() const;
};

enum class Truncation { conservative, absorbing };

struct TruncationPolicy {
  Truncation mode = Truncation::conservative;
  int boundary_margin = 0;  // 0: use ceil(support radius of theta)
};

// Master-equation generator on the box, stencils precomputed.
//   dY_k/dt = 2 lambda Y_k - 8 pi^2 (nu + kappa) |k|^2 Y_k
//             + 8 pi^2 C_d kappa sum_l theta_l^2 |P_l^perp k|^2 Y_{k-l}
// conservative: the kappa part as pairwise fluxes, both endpoints in the box;
// absorbing: full diagonal loss, gains only from in-box sources.
class SpectrumOperator {
 public:
  SpectrumOperator(const LatticeBox& box, const ThetaCoefficients& theta, double kappa,
                   double lambda, double nu, TruncationPolicy policy);

  void rhs(const std::vector<double>& y, std::vector<double>& dy) const;
  const LatticeBox& box() const { return *box_; }
  double max_rate() const { return max_rate_; }
  int boundary_margin() const { return margin_; }
  double boundary_mass_fraction(const std::vector<double>& y) const;

 private:
  const LatticeBox* box_;
  double kappa_, lambda_, nu_;
  TruncationPolicy policy_;
  int margin_;
  double max_rate_;
  struct Flux {
    int a, b;
    double rate;  // 8 pi^2 C_d kappa theta_l^2 |P_l^perp a|^2
  };
  std::vector<Flux> fluxes_;             // conservative stencil
  std::vector<double> diag_;             // per-id diagonal coefficient
  struct Gain {
    int target, source;
    double rate;
  };
  std::vector<Gain> gains_;              // absorbing stencil
  std::vector<char> boundary_band_;
};

void transport_rhs(const SpectrumState& y, const ThetaCoefficients& theta, double kappa,
                   const TruncationPolicy& policy, std::vector<double>& dy);
void heat_rhs(const SpectrumState& y, const ThetaCoefficients& theta, double kappa, double lambda,
              double nu, const TruncationPolicy& policy, std::vector<double>& dy);

struct SampleRecord {
  double t = 0;
  double sum = 0;
  std::vector<double> lp;     // one per requested p
  std::vector<double> hbeta;  // one per requested beta: sum |2 pi k|^{2 beta} Y_k
  double boundary_mass = 0;   // fraction of the total
  double min_value = 0;
};

struct Trajectory {
  std::vector<double> p_list;
  std::vector<double> beta_list;
  std::vector<SampleRecord> samples;
  SpectrumState final_state;
  double dt = 0;
  std::string to_csv() const;
};

struct IntegrateOptions {
  double T = 0;
  double safety = 0.5;
  int sample_every = 10;  // record every n-th RK4 step (and the last)
  std::vector<double> p_list{1.0, 2.0};
  std::vector<double> beta_list{-1.0, 1.0};
};

// Classical RK4 with dt = safety * 2.5 / max_rate.
Trajectory integrate(const SpectrumState& y0, const SpectrumOperator& op,
                     const IntegrateOptions& opt);

double lp_norm(const std::vector<double>& y, double p);
double hbeta_moment(const SpectrumState& y, double beta);

struct SpectrumNorms {
  std::vector<double> lp;
  std::vector<double> hbeta;
};
SpectrumNorms spectrum_norms(const SpectrumState& y, const std::vector<double>& p_list,
                             const std::vector<double>& beta_list);

struct DriftResult {
  double value = 0;
  bool boundary_warning = false;
};
// d/dt sum_k Y_k / |2 pi k|^2 under the transport master equation.
DriftResult h_minus1_drift(const SpectrumState& y, const ThetaCoefficients& theta, double kappa);

struct RateFit {
  double t_a = 0, t_b = 0;
  double fitted_rate = 0;  // decay rate: -slope of log(value)
  double intercept = 0;    // log value at t = 0
  double residual_rms = 0;
  double leakage_max = 0;
  int n_samples = 0;
};

RateFit fit_decay_rate(const std::vector<std::pair<double, double>>& series, double t_a,
                       double t_b, double leakage_max = 0.0);

enum class BoundVariant {
  mixing_averaged_small_beta,  // Thm getting 2 kappa C (beta(d-2beta)/d^2 - eps)
  mixing_averaged_large_beta,  // kappa C / 4
  lp_decay,                    // kappa C (1/p)(1-1/p), prefactor 1 on ||Y||_lp
  heat_energy,                 // -2 lambda + 8 pi^2 nu + D kappa, explicit prefactor
  h1_growth,                   // exact growth 8 pi^2 kappa ||theta||^2_{h^1}
  interval_sup_decay,          // kappa C/4 (d=2,3), 2 kappa (d-3) C / d^2 (d>=4)
};

struct BoundParams {
  double beta = 1.0;
  double epsilon = -1.0;  // <0: midpoint default beta(d-2beta)/(2 d^2)
  double p = 2.0;
  double lambda = 0.0;
  double nu = 0.0;
};

struct BoundDescriptor {
  std::string name;
  double rate = 0.0;        // decay rate (negative means growth)
  double prefactor = 1.0;   // NaN when no explicit constant exists (rate-only check)
  bool growth = false;
  double eval(double t, double initial) const;
};

BoundDescriptor theoretical_bounds(const MixingConstants& mc, BoundVariant variant,
                                   const BoundParams& params);

}  // namespace stmix
