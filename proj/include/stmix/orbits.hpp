#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stmix/lattice.hpp"
#include "stmix/spectrum.hpp"

namespace stmix {

// Discrete Poincare inequality on N:
//   sum a_n^p <= (2 p^2 / (p-1)) sum (n+1)^2 (a_{n+1}^{p-1} - a_n^{p-1})(a_{n+1} - a_n).
// Negative entries are allowed only for p = 2.
struct PoincareGap {
  double lhs = 0;
  double rhs = 0;
};
PoincareGap poincare_gap(const std::vector<double>& a, double p);

// Alternating-step orbit truncated at the box. Steps alternate between
// step_first (applied at n = 0) and step_second.
struct Orbit {
  IVec start;
  IVec step_first;
  IVec step_second;
  int klass = 1;     // 1: base-vector step first, 2: the other one first
  int quadrant = 1;  // 1..4
  bool special_h = false;
  std::vector<IVec> points;

  IVec step_at(int n) const;  // step taken from points[n]
};

struct QuadrantDecomposition {
  IVec base1, base2;                    // l, l^perp (d = 2) or l1, l2
  std::int64_t gram11 = 0, gram12 = 0, gram22 = 0, det = 0;
};

struct OrbitFamily {
  QuadrantDecomposition frame;
  // Offset of the plane: h = (h_num / h_den); empty for d = 2.
  IVec h_num;
  std::int64_t h_den = 1;
  bool h_is_lattice = false;
  std::vector<Orbit> orbits;
};

// Orbits from the four quadrants' starting sets, maximal per the backward
// partial order, truncated at the box.
OrbitFamily build_orbits_2d(const IVec& l, const LatticeBox& box);

// Per-offset orbit families on the planes h + span(l1, l2); when h itself is a
// nonzero lattice point, the two orbits through h replace their tails.
std::vector<OrbitFamily> build_orbits_hd(const IVec& l1, const IVec& l2, const LatticeBox& box);

struct CoverReport {
  int box_radius = 0;
  double certified_radius = 0;  // Euclidean
  std::vector<int> multiplicity;  // per box id
  std::vector<IVec> violations;
  long certified_points = 0;
  long frontier_points = 0;
  std::string to_json() const;
};

CoverReport cover_multiplicity(const std::vector<OrbitFamily>& families, const LatticeBox& box,
                               int margin = 3);

// min over n of |P^perp_{dO(n)} O(n)|^2 * denom / (n+1)^2 with
// denom = 4|l|^2 (ordinary) or 5|l1|^2 (special); >= 1 certifies the bound.
double projection_bound_margin(const Orbit& orbit);

struct DirichletRatio {
  double dirichlet = 0;
  double sum_p = 0;
  double ratio = 0;  // sum_p / dirichlet, NaN when dirichlet = 0
  bool undefined = false;
};

// D(Y) = sum_l sum_k theta_l^2 |P_l^perp k|^2 (Y_{k+l}^{p-1} - Y_k^{p-1})(Y_{k+l} - Y_k),
// with the certified ceiling sum Y^p <= 8 p^2/((p-1)||theta||^2_{h^-1}) D(Y) in d = 2
// (10 p^2 / ... for d >= 3).
DirichletRatio dirichlet_ratio(const SpectrumState& y, const ThetaCoefficients& theta, double p);

double dirichlet_bound_constant(int dimension, double p, const ThetaCoefficients& theta);

std::string orbits_to_csv(const std::vector<OrbitFamily>& families);

}  // namespace stmix
