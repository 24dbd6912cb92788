#include "stmix/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "stmix/format.hpp"

namespace stmix {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kPi2 = std::numbers::pi * std::numbers::pi;
}  // namespace

void SpectrumState::set_pair(std::span<const int> k, double v) {
  int id = box->find(k);
  if (id < 0) throw std::invalid_argument("SpectrumState: point outside the box");
  values[id] = v;
  values[box->mirror(id)] = v;
}

void SpectrumState::init_shell(std::int64_t max_norm2, double total_mass) {
  std::size_t n = 0;
  for (int id = 0; id < box->size(); ++id)
    if (box->point_norm2(id) <= max_norm2) ++n;
  if (n == 0) throw std::invalid_argument("SpectrumState: empty shell");
  double v = total_mass / double(n);
  for (int id = 0; id < box->size(); ++id)
    if (box->point_norm2(id) <= max_norm2) values[id] = v;
}

double SpectrumState::sum() const {
  double s = 0;
  for (double v : values) s += v;
  return s;
}

double SpectrumState::min_value() const {
  double m = std::numeric_limits<double>::infinity();
  for (double v : values) m = std::min(m, v);
  return m;
}

double SpectrumState::symmetry_defect() const {
  double m = 0;
  for (int id = 0; id < box->size(); ++id)
    m = std::max(m, std::abs(values[id] - values[box->mirror(id)]));
  return m;
}

SpectrumOperator::SpectrumOperator(const LatticeBox& box, const ThetaCoefficients& theta,
                                   double kappa, double lambda, double nu,
                                   TruncationPolicy policy)
    : box_(&box), kappa_(kappa), lambda_(lambda), nu_(nu), policy_(policy) {
  if (kappa < 0) throw std::invalid_argument("SpectrumOperator: kappa must be >= 0");
  const int d = box.dim();
  const double c_d = double(d) / double(d - 1);

  std::vector<const ThetaCoefficients::Entry*> supp;
  for (const auto& e : theta.entries()) {
    if (box.find(e.k) < 0)
      throw std::invalid_argument("SpectrumOperator: theta support exceeds the lattice");
    supp.push_back(&e);
  }

  margin_ = policy.boundary_margin > 0 ? policy.boundary_margin
                                       : int(std::ceil(theta.support_radius()));
  boundary_band_.assign(std::size_t(box.size()), 0);
  for (int id = 0; id < box.size(); ++id)
    if (box.point_sup(id) > box.radius() - margin_) boundary_band_[id] = 1;

  diag_.assign(std::size_t(box.size()), 0.0);
  std::int64_t k2max = 0;
  for (int id = 0; id < box.size(); ++id) {
    std::int64_t k2 = box.point_norm2(id);
    k2max = std::max(k2max, k2);
    diag_[id] = 2.0 * lambda - 8.0 * kPi2 * nu * double(k2);
    if (policy.mode == Truncation::absorbing) diag_[id] -= 8.0 * kPi2 * kappa * double(k2);
  }
  max_rate_ = 8.0 * kPi2 * (nu + kappa) * double(k2max) + 2.0 * std::abs(lambda);

  std::vector<int> shifted(d);
  if (policy.mode == Truncation::conservative) {
    // One flux per unordered pair {j, j+l}; the rate is symmetric because
    // |P_l^perp j| is invariant under shifts along l.
    for (const auto* e : supp) {
      if (!lex_positive(e->k)) continue;
      double w = 8.0 * kPi2 * c_d * kappa * e->value * e->value;
      for (int a = 0; a < box.size(); ++a) {
        auto p = box.point(a);
        for (int j = 0; j < d; ++j) shifted[j] = p[j] + e->k[j];
        int b = box.find(shifted);
        if (b < 0) continue;
        double rate = w * perp_proj_sq(p, e->k);
        if (rate != 0.0) fluxes_.push_back({a, b, rate});
      }
    }
  } else {
    for (const auto* e : supp) {
      double w = 8.0 * kPi2 * c_d * kappa * e->value * e->value;
      for (int target = 0; target < box.size(); ++target) {
        auto p = box.point(target);
        for (int j = 0; j < d; ++j) shifted[j] = p[j] - e->k[j];
        int source = box.find(shifted);
        if (source < 0) continue;
        double rate = w * perp_proj_sq(p, e->k);
        if (rate != 0.0) gains_.push_back({target, source, rate});
      }
    }
  }
}

void SpectrumOperator::rhs(const std::vector<double>& y, std::vector<double>& dy) const {
  dy.assign(y.size(), 0.0);
  if (policy_.mode == Truncation::conservative) {
    for (const auto& f : fluxes_) {
      double q = f.rate * (y[std::size_t(f.a)] - y[std::size_t(f.b)]);
      dy[std::size_t(f.b)] += q;
      dy[std::size_t(f.a)] -= q;
    }
    if (lambda_ != 0.0 || nu_ != 0.0)
      for (std::size_t i = 0; i < y.size(); ++i) dy[i] += diag_[i] * y[i];
  } else {
    for (std::size_t i = 0; i < y.size(); ++i) dy[i] = diag_[i] * y[i];
    for (const auto& g : gains_)
      dy[std::size_t(g.target)] += g.rate * y[std::size_t(g.source)];
  }
}

double SpectrumOperator::boundary_mass_fraction(const std::vector<double>& y) const {
  double band = 0, total = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    total += y[i];
    if (boundary_band_[i]) band += y[i];
  }
  return total > 0 ? band / total : 0.0;
}

void transport_rhs(const SpectrumState& y, const ThetaCoefficients& theta, double kappa,
                   const TruncationPolicy& policy, std::vector<double>& dy) {
  if (kappa <= 0) throw std::invalid_argument("transport_rhs: kappa must be positive");
  SpectrumOperator op(*y.box, theta, kappa, 0.0, 0.0, policy);
  op.rhs(y.values, dy);
}

void heat_rhs(const SpectrumState& y, const ThetaCoefficients& theta, double kappa, double lambda,
              double nu, const TruncationPolicy& policy, std::vector<double>& dy) {
  if (nu <= 0) throw std::invalid_argument("heat_rhs: nu must be positive");
  if (lambda < 0) throw std::invalid_argument("heat_rhs: lambda must be >= 0");
  SpectrumOperator op(*y.box, theta, kappa, lambda, nu, policy);
  op.rhs(y.values, dy);
}

double lp_norm(const std::vector<double>& y, double p) {
  double s = 0;
  for (double v : y) s += std::pow(std::abs(v), p);
  return std::pow(s, 1.0 / p);
}

double hbeta_moment(const SpectrumState& y, double beta) {
  double s = 0;
  for (int id = 0; id < y.box->size(); ++id)
    s += std::pow(4.0 * kPi2 * double(y.box->point_norm2(id)), beta) * y.values[std::size_t(id)];
  return s;
}

SpectrumNorms spectrum_norms(const SpectrumState& y, const std::vector<double>& p_list,
                             const std::vector<double>& beta_list) {
  SpectrumNorms out;
  for (double p : p_list) {
    if (p < 1) throw std::invalid_argument("spectrum_norms: p must be >= 1");
    out.lp.push_back(lp_norm(y.values, p));
  }
  for (double b : beta_list) out.hbeta.push_back(hbeta_moment(y, b));
  return out;
}

Trajectory integrate(const SpectrumState& y0, const SpectrumOperator& op,
                     const IntegrateOptions& opt) {
  if (opt.T <= 0) throw std::invalid_argument("integrate: T must be positive");
  const double dt = opt.safety * 2.5 / op.max_rate();
  const long nsteps = std::max(1L, long(std::ceil(opt.T / dt)));
  const double h = opt.T / double(nsteps);

  Trajectory traj{opt.p_list, opt.beta_list, {}, y0, h};
  SpectrumState& y = traj.final_state;
  std::vector<double> k1, k2, k3, k4, tmp(y.values.size());

  auto record = [&](const SpectrumState& s) {
    SampleRecord r;
    r.t = s.time;
    r.sum = s.sum();
    for (double p : opt.p_list) r.lp.push_back(lp_norm(s.values, p));
    for (double b : opt.beta_list) r.hbeta.push_back(hbeta_moment(s, b));
    r.boundary_mass = op.boundary_mass_fraction(s.values);
    r.min_value = s.min_value();
    traj.samples.push_back(std::move(r));
  };
  record(y);

  for (long step = 0; step < nsteps; ++step) {
    op.rhs(y.values, k1);
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = y.values[i] + 0.5 * h * k1[i];
    op.rhs(tmp, k2);
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = y.values[i] + 0.5 * h * k2[i];
    op.rhs(tmp, k3);
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = y.values[i] + h * k3[i];
    op.rhs(tmp, k4);
    for (std::size_t i = 0; i < tmp.size(); ++i)
      y.values[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    y.time += h;

    double sum = 0, mn = 0;
    for (double v : y.values) {
      sum += v;
      mn = std::min(mn, v);
      if (!std::isfinite(v))
        throw std::runtime_error("integrate: non-finite state at step " + std::to_string(step + 1));
    }
    if (mn < -1e-14 * sum)
      throw std::runtime_error("integrate: negativity beyond tolerance at step " +
                               std::to_string(step + 1));
    if ((step + 1) % opt.sample_every == 0 || step + 1 == nsteps) record(y);
  }
  return traj;
}

std::string Trajectory::to_csv() const {
  std::ostringstream os;
  os << "t,sum_Y";
  for (double p : p_list) {
    if (p == 1.0)
      os << ",l1";
    else if (p == 2.0)
      os << ",l2";
    else
      os << ",lp" << format_full(p);
  }
  for (double b : beta_list) os << ",H" << format_full(b);
  os << ",boundary_mass\n";
  for (const auto& r : samples) {
    os << format_full(r.t) << "," << format_full(r.sum);
    for (double v : r.lp) os << "," << format_full(v);
    for (double v : r.hbeta) os << "," << format_full(v);
    os << "," << format_full(r.boundary_mass) << "\n";
  }
  return os.str();
}

DriftResult h_minus1_drift(const SpectrumState& y, const ThetaCoefficients& theta, double kappa) {
  DriftResult res;
  SpectrumOperator op(*y.box, theta, kappa, 0.0, 0.0,
                      TruncationPolicy{Truncation::conservative, 0});
  std::vector<double> dy;
  op.rhs(y.values, dy);
  for (int id = 0; id < y.box->size(); ++id)
    res.value += dy[std::size_t(id)] / (4.0 * kPi2 * double(y.box->point_norm2(id)));
  int margin = op.boundary_margin();
  for (int id = 0; id < y.box->size(); ++id)
    if (y.values[std::size_t(id)] != 0.0 && y.box->point_sup(id) > y.box->radius() - margin)
      res.boundary_warning = true;
  return res;
}

RateFit fit_decay_rate(const std::vector<std::pair<double, double>>& series, double t_a,
                       double t_b, double leakage_max) {
  if (!(t_a < t_b)) throw std::invalid_argument("fit_decay_rate: window must satisfy t_a < t_b");
  std::vector<std::pair<double, double>> pts;
  for (const auto& [t, v] : series) {
    if (t < t_a || t > t_b) continue;
    if (v <= 0) throw std::invalid_argument("fit_decay_rate: nonpositive value in window");
    pts.emplace_back(t, std::log(v));
  }
  if (pts.size() < 8) throw std::invalid_argument("fit_decay_rate: need at least 8 samples");

  double st = 0, sy = 0, stt = 0, sty = 0;
  for (const auto& [t, ly] : pts) {
    st += t;
    sy += ly;
    stt += t * t;
    sty += t * ly;
  }
  double n = double(pts.size());
  double slope = (n * sty - st * sy) / (n * stt - st * st);
  double icept = (sy - slope * st) / n;

  RateFit fit;
  fit.t_a = t_a;
  fit.t_b = t_b;
  fit.fitted_rate = -slope;
  fit.intercept = icept;
  fit.n_samples = int(pts.size());
  fit.leakage_max = leakage_max;
  double ss = 0;
  for (const auto& [t, ly] : pts) {
    double r = ly - (icept + slope * t);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n);
  return fit;
}

double BoundDescriptor::eval(double t, double initial) const {
  double pf = std::isnan(prefactor) ? 1.0 : prefactor;
  return pf * std::exp(-rate * t) * initial;
}

BoundDescriptor theoretical_bounds(const MixingConstants& mc, BoundVariant variant,
                                   const BoundParams& params) {
  BoundDescriptor b;
  const double d = double(mc.dim);
  switch (variant) {
    case BoundVariant::mixing_averaged_small_beta: {
      double beta = params.beta;
      if (!(beta > 0 && beta <= d / 4.0))
        throw std::invalid_argument("mixing bound (small beta): requires 0 < beta <= d/4");
      double gap = beta * (d - 2.0 * beta) / (d * d);
      double eps = params.epsilon < 0 ? gap / 2.0 : params.epsilon;
      if (!(eps > 0 && eps < gap))
        throw std::invalid_argument(
            "mixing bound (small beta): requires 0 < epsilon < beta(d-2 beta)/d^2");
      b.name = "mixing_averaged_small_beta";
      b.rate = 2.0 * mc.kappa * mc.c_theta_d * (gap - eps);
      b.prefactor = std::numeric_limits<double>::quiet_NaN();
      break;
    }
    case BoundVariant::mixing_averaged_large_beta: {
      if (!(params.beta > d / 4.0))
        throw std::invalid_argument("mixing bound (large beta): requires beta > d/4");
      b.name = "mixing_averaged_large_beta";
      b.rate = mc.kappa * mc.c_theta_d / 4.0;
      b.prefactor = std::numeric_limits<double>::quiet_NaN();
      break;
    }
    case BoundVariant::lp_decay: {
      if (!(params.p > 1)) throw std::invalid_argument("lp decay bound: requires p > 1");
      b.name = "lp_decay";
      b.rate = mc.kappa * mc.c_theta_d * (1.0 / params.p) * (1.0 - 1.0 / params.p);
      b.prefactor = 1.0;
      break;
    }
    case BoundVariant::heat_energy: {
      if (!(params.nu > 0)) throw std::invalid_argument("heat bound: requires nu > 0");
      if (params.lambda < 0) throw std::invalid_argument("heat bound: requires lambda >= 0");
      b.name = "heat_energy";
      b.rate = -2.0 * params.lambda + 8.0 * kPi2 * params.nu + mc.d_theta_d * mc.kappa;
      double c0 = 1.0 / (4.0 * kPi2);
      b.prefactor = c0 * (8.0 * kPi2 * params.nu + mc.d_theta_d * mc.kappa) / (2.0 * params.nu);
      break;
    }
    case BoundVariant::h1_growth: {
      b.name = "h1_growth";
      b.rate = -8.0 * kPi2 * mc.kappa * mc.h_plus1;
      b.prefactor = 1.0;
      b.growth = true;
      break;
    }
    case BoundVariant::interval_sup_decay: {
      b.name = "interval_sup_decay";
      b.rate = (mc.dim <= 3) ? mc.kappa * mc.c_theta_d / 4.0
                             : 2.0 * mc.kappa * (d - 3.0) * mc.c_theta_d / (d * d);
      b.prefactor = std::numeric_limits<double>::quiet_NaN();
      break;
    }
  }
  return b;
}

}  // namespace stmix
