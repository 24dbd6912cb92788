#include "stmix/theta.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "stmix/format.hpp"

namespace stmix {

ThetaCoefficients::ThetaCoefficients(int dimension, std::map<std::int64_t, double> shell_values)
    : dim_(dimension), shell_values_(std::move(shell_values)) {
  if (shell_values_.empty()) throw std::invalid_argument("theta: empty support");
  for (auto& [k2, v] : shell_values_) {
    if (k2 <= 0) throw std::invalid_argument("theta: shell |k|^2 must be positive");
    if (v < 0) throw std::invalid_argument("theta: values must be nonnegative");
  }
  // Enumerate the support points shell by shell, then normalize to ||theta||_2 = 1.
  std::int64_t max_k2 = shell_values_.rbegin()->first;
  int reach = int(std::floor(std::sqrt(double(max_k2)))) + 1;
  while (std::int64_t(reach) * reach > max_k2) --reach;

  std::vector<int> k(dimension, -reach);
  for (;;) {
    std::int64_t k2 = norm2(k);
    if (k2 > 0 && k2 <= max_k2) {
      auto it = shell_values_.find(k2);
      if (it != shell_values_.end() && it->second > 0) {
        entries_.push_back({k, it->second});
        shell_counts_[k2]++;
      }
    }
    int j = dimension - 1;
    while (j >= 0 && k[j] == reach) k[j--] = -reach;
    if (j < 0) break;
    ++k[j];
  }
  double sum_sq = 0.0;
  for (const auto& e : entries_) sum_sq += e.value * e.value;
  if (sum_sq <= 0) throw std::invalid_argument("theta: empty support");
  double inv = 1.0 / std::sqrt(sum_sq);
  for (auto& e : entries_) e.value *= inv;
  for (auto& [k2, v] : shell_values_) v = (shell_counts_.count(k2) ? v * inv : 0.0);

  support_radius_ = std::sqrt(double(entries_.empty() ? 0 : norm2(entries_.front().k)));
  for (const auto& e : entries_)
    support_radius_ = std::max(support_radius_, std::sqrt(double(norm2(e.k))));
  h_minus1_ = hnorm_sq(-1.0);
  h_plus1_ = hnorm_sq(1.0);
}

double ThetaCoefficients::value_at_norm2(std::int64_t k2) const {
  auto it = shell_values_.find(k2);
  return it == shell_values_.end() ? 0.0 : it->second;
}

double ThetaCoefficients::hnorm_sq(double beta) const {
  double s = 0.0;
  for (const auto& [k2, count] : shell_counts_) {
    double v = shell_values_.at(k2);
    s += double(count) * v * v * std::pow(double(k2), beta);
  }
  return s;
}

double theta_hnorm(const ThetaCoefficients& theta, double beta) { return theta.hnorm_sq(beta); }

namespace {

// All shells with 0 < |k| <= r, with their point counts, by cube sweep.
std::map<std::int64_t, std::size_t> shells_within(int dimension, double r) {
  std::map<std::int64_t, std::size_t> out;
  int reach = int(std::floor(r));
  if (reach < 1) return out;
  std::int64_t r2 = std::int64_t(std::floor(r * r + 1e-9));
  std::vector<int> k(dimension, -reach);
  for (;;) {
    std::int64_t k2 = norm2(k);
    if (k2 > 0 && k2 <= r2) out[k2]++;
    int j = dimension - 1;
    while (j >= 0 && k[j] == reach) k[j--] = -reach;
    if (j < 0) break;
    ++k[j];
  }
  return out;
}

}  // namespace

double powerlaw_normalizer_sq(int dimension, double alpha, int cutoff) {
  double s = 0.0;
  for (const auto& [k2, count] : shells_within(dimension, double(cutoff)))
    s += double(count) * std::pow(double(k2), -(1.0 + alpha));
  return s;
}

ThetaCoefficients make_theta(const ThetaSpec& spec, const LatticeBox& lattice) {
  const int d = lattice.dim();
  std::map<std::int64_t, double> shells;

  if (spec.family == "unit_shell") {
    shells[1] = 1.0;
  } else if (spec.family == "shells") {
    if (spec.radius < 1.0) throw std::invalid_argument("make_theta: shells radius must be >= 1");
    for (const auto& [k2, count] : shells_within(d, spec.radius)) shells[k2] = 1.0;
  } else if (spec.family == "powerlaw") {
    if (spec.alpha < 0 || spec.cutoff < 1)
      throw std::invalid_argument("make_theta: powerlaw requires alpha >= 0 and cutoff >= 1");
    for (const auto& [k2, count] : shells_within(d, double(spec.cutoff)))
      shells[k2] = std::pow(double(k2), -(1.0 + spec.alpha) / 2.0);
  } else if (spec.family == "explicit") {
    if (spec.explicit_values.empty()) throw std::invalid_argument("make_theta: empty support");
    // Each shell must be fully and consistently specified; anything else is
    // a symmetry violation.
    std::map<std::int64_t, double> seen;
    std::map<std::int64_t, std::size_t> count;
    for (const auto& [k, v] : spec.explicit_values) {
      if (int(k.size()) != d) throw std::invalid_argument("make_theta: vector dimension mismatch");
      std::int64_t k2 = norm2(k);
      if (k2 == 0) throw std::invalid_argument("make_theta: zero vector in support");
      if (v < 0) throw std::invalid_argument("make_theta: negative value");
      auto it = seen.find(k2);
      if (it != seen.end() && it->second != v)
        throw std::invalid_argument("make_theta: explicit input is not radially symmetric");
      seen[k2] = v;
      count[k2]++;
    }
    auto full = shells_within(d, std::sqrt(double(seen.rbegin()->first)) + 1e-9);
    for (const auto& [k2, v] : seen) {
      if (v == 0) continue;
      if (count[k2] != full.at(k2))
        throw std::invalid_argument("make_theta: explicit input is not radially symmetric");
      shells[k2] = v;
    }
    if (shells.empty()) throw std::invalid_argument("make_theta: empty support");
  } else {
    throw std::invalid_argument("make_theta: unknown family '" + spec.family + "'");
  }

  ThetaCoefficients theta(d, std::move(shells));
  for (const auto& e : theta.entries())
    if (lattice.find(e.k) < 0) throw std::invalid_argument("make_theta: support exceeds the lattice box");
  return theta;
}

MixingConstants mixing_constants(const ThetaCoefficients& theta, int dimension, double kappa) {
  if (kappa <= 0) throw std::invalid_argument("mixing_constants: kappa must be positive");
  const double pi2 = std::numbers::pi * std::numbers::pi;
  MixingConstants mc;
  mc.dim = dimension;
  mc.kappa = kappa;
  mc.c_d = double(dimension) / double(dimension - 1);
  mc.h_minus1 = theta.hnorm_sq(-1.0);
  mc.h_plus1 = theta.hnorm_sq(1.0);
  mc.c_theta_d = (dimension == 2) ? pi2 * mc.h_minus1
                                  : (2.0 * pi2 / 5.0) * mc.c_d * mc.h_minus1;
  double branch;
  if (dimension == 2)
    branch = 1.0 / 4.0;
  else if (dimension == 3)
    branch = 3.0 / 20.0;
  else
    branch = (4.0 / 5.0) * double(dimension - 3) / (double(dimension) * double(dimension - 1));
  mc.d_theta_d = pi2 * mc.h_minus1 * branch;
  double c = (std::sqrt(11.0) - 3.0) / 16.0;
  mc.t0 = c * c / (pi2 * double(dimension) * kappa * mc.h_plus1);
  return mc;
}

std::string theta_to_csv(const ThetaCoefficients& theta) {
  std::ostringstream os;
  for (int j = 1; j <= theta.dim(); ++j) os << "k_" << j << ",";
  os << "theta_k\n";
  for (const auto& e : theta.entries()) {
    for (int c : e.k) os << c << ",";
    os << format_full(e.value) << "\n";
  }
  return os.str();
}

}  // namespace stmix
