#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stmix/lattice.hpp"

namespace stmix {

// Radially symmetric, l2-normalized noise coefficients with finite support.
// Shell membership is keyed on the exact integer |k|^2.
class ThetaCoefficients {
 public:
  struct Entry {
    IVec k;
    double value;
  };

  ThetaCoefficients(int dimension, std::map<std::int64_t, double> shell_values);

  int dim() const { return dim_; }
  const std::vector<Entry>& entries() const { return entries_; }  // lexicographic
  const std::map<std::int64_t, double>& shells() const { return shell_values_; }
  double value_at_norm2(std::int64_t k2) const;
  double support_radius() const { return support_radius_; }  // Euclidean max |k|
  double l2_norm() const { return 1.0; }

  // ||theta||_{h^beta}^2 = sum_k theta_k^2 |k|^{2 beta}
  double hnorm_sq(double beta) const;

 private:
  int dim_;
  std::map<std::int64_t, double> shell_values_;  // |k|^2 -> theta value
  std::vector<Entry> entries_;
  double support_radius_ = 0.0;
  std::map<std::int64_t, std::size_t> shell_counts_;
  double h_minus1_ = 0.0, h_plus1_ = 0.0;
};

struct ThetaSpec {
  ThetaSpec() = default;
  explicit ThetaSpec(std::string fam) : family(std::move(fam)) {}

  std::string family = "unit_shell";  // unit_shell | shells | powerlaw | explicit
  double radius = 1.0;        // shells
  double alpha = 1.0;         // powerlaw exponent
  int cutoff = 1;             // powerlaw cutoff M (Euclidean)
  std::vector<std::pair<IVec, double>> explicit_values;
};

ThetaCoefficients make_theta(const ThetaSpec& spec, const LatticeBox& lattice);
double theta_hnorm(const ThetaCoefficients& theta, double beta);

// Normalizer K_alpha^2 = sum_{0<|k|<=M} |k|^{-(2+2alpha)} over the truncated support.
double powerlaw_normalizer_sq(int dimension, double alpha, int cutoff);

struct MixingConstants {
  int dim = 0;
  double kappa = 0.0;
  double c_d = 0.0;        // d/(d-1)
  double h_minus1 = 0.0;   // ||theta||^2_{h^-1}
  double h_plus1 = 0.0;    // ||theta||^2_{h^1}
  double c_theta_d = 0.0;  // C(theta,d)
  double d_theta_d = 0.0;  // D(theta,d)
  double t0 = 0.0;         // ((sqrt(11)-3)/16)^2 / (pi^2 d kappa ||theta||^2_{h^1})
};

MixingConstants mixing_constants(const ThetaCoefficients& theta, int dimension, double kappa);

// CSV rows (k_1,...,k_d,theta_k) in lexicographic order, with header.
std::string theta_to_csv(const ThetaCoefficients& theta);

}  // namespace stmix
