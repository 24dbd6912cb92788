#include "stmix/euler2d.hpp"

#include <fftw3.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "stmix/lattice.hpp"
#include "stmix/spectrum.hpp"

namespace stmix {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kPi2 = std::numbers::pi * std::numbers::pi;
std::mutex g_planner_mutex;  // the FFTW planner is not thread-safe

int wrap(int k, int n) { return (k % n + n) % n; }

// FFT rounding can break u_hat(-k) = conj(u_hat(k)) at the 1e-16 level; pin it.
void symmetrize(VorticityState& w) {
  int n = w.grid;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      std::size_t i = std::size_t(a) * n + b;
      std::size_t j = std::size_t(wrap(-a, n)) * n + wrap(-b, n);
      if (i < j) {
        auto v = 0.5 * (w.what[i] + std::conj(w.what[j]));
        w.what[i] = v;
        w.what[j] = std::conj(v);
      } else if (i == j) {
        w.what[i] = {w.what[i].real(), 0.0};
      }
    }
}
}  // namespace

VorticityState::VorticityState(int grid_size, double alpha_reg)
    : grid(grid_size), alpha(alpha_reg), what(std::size_t(grid_size) * grid_size, {0.0, 0.0}) {
  if (grid_size < 12 || grid_size % 2 != 0)
    throw std::invalid_argument("VorticityState: grid must be even and >= 12");
  if (!(alpha_reg > 0)) throw std::invalid_argument("VorticityState: alpha must be positive");
}

std::size_t VorticityState::idx(int k1, int k2) const {
  return std::size_t(wrap(k1, grid)) * std::size_t(grid) + std::size_t(wrap(k2, grid));
}

void VorticityState::set_mode(int k1, int k2, std::complex<double> v) {
  if (k1 == 0 && k2 == 0) throw std::invalid_argument("VorticityState: zero mean required");
  what[idx(k1, k2)] = v;
  what[idx(-k1, -k2)] = std::conj(v);
}

double VorticityState::l2_sq() const {
  double s = 0;
  for (const auto& c : what) s += std::norm(c);
  return s;
}

double VorticityState::hm1_sq() const {
  double s = 0;
  int n = grid;
  for (int a = 0; a < n; ++a) {
    int k1 = a <= n / 2 ? a : a - n;
    for (int b = 0; b < n; ++b) {
      int k2 = b <= n / 2 ? b : b - n;
      if (k1 == 0 && k2 == 0) continue;
      double k2norm = double(k1) * k1 + double(k2) * k2;
      s += std::norm(what[std::size_t(a) * n + b]) / (4.0 * kPi2 * k2norm);
    }
  }
  return s;
}

double VorticityState::hermitian_defect() const {
  double m = 0;
  int n = grid;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      int k1 = a <= n / 2 ? a : a - n;
      int k2 = b <= n / 2 ? b : b - n;
      m = std::max(m, std::abs(what[idx(k1, k2)] - std::conj(what[idx(-k1, -k2)])));
    }
  return m;
}

void default_vorticity(VorticityState& state, double target_l2_sq) {
  using C = std::complex<double>;
  state.what.assign(state.what.size(), C{0.0, 0.0});
  state.set_mode(1, 0, C{1.0, 0.0});
  state.set_mode(0, 1, std::polar(0.8, 1.0 * kPi / 3.0));
  state.set_mode(1, 1, std::polar(0.5, 1.1));
  state.set_mode(2, -1, std::polar(0.35, 2.2));
  state.set_mode(1, 2, C{0.25, 0.0});
  double scale = std::sqrt(target_l2_sq / state.l2_sq());
  for (auto& c : state.what) c *= scale;
}

GirsanovLedger girsanov_diagnostics(const std::vector<double>& times,
                                    const std::vector<double>& l2_sq_series, double kappa,
                                    double kalpha_sq) {
  if (times.size() != l2_sq_series.size() || times.size() < 2)
    throw std::invalid_argument("girsanov_diagnostics: need matching sample series");
  GirsanovLedger led;
  led.kalpha_sq = kalpha_sq;
  led.kappa = kappa;
  led.times = times;
  led.ceiling_rate = kalpha_sq / (4.0 * kPi2 * kappa) * l2_sq_series.front();
  double integral = 0;
  led.quad_variation.push_back(0.0);
  for (std::size_t i = 1; i < times.size(); ++i) {
    integral += 0.5 * (l2_sq_series[i] + l2_sq_series[i - 1]) * (times[i] - times[i - 1]);
    led.quad_variation.push_back(kalpha_sq / (4.0 * kPi2 * kappa) * integral);
  }
  return led;
}

bool GirsanovLedger::under_ceiling(double slack) const {
  for (std::size_t i = 0; i < times.size(); ++i) {
    double cap = ceiling_rate * (times[i] - times.front()) * (1.0 + slack) + 1e-15;
    if (quad_variation[i] > cap) return false;
  }
  return true;
}

double kappa_for_target_rate(double lambda, double R, double alpha, int cutoff) {
  if (!(lambda > 0) || !(R > 0) || !(alpha > 0) || cutoff < 1)
    throw std::invalid_argument("kappa_for_target_rate: positive inputs required");
  double kal2 = powerlaw_normalizer_sq(2, alpha, cutoff);
  // ||theta^(alpha)||^2_{h^-1} on the truncated support
  double hm1 = 0;
  {
    LatticeBox box(2, cutoff);
    ThetaSpec spec{"powerlaw"};
    spec.alpha = alpha;
    spec.cutoff = cutoff;
    hm1 = make_theta(spec, box).hnorm_sq(-1.0);
  }
  double a = kPi2 * hm1 / 8.0;
  double b = kal2 * R / (8.0 * kPi2);
  return (lambda + std::sqrt(lambda * lambda + 4.0 * a * b)) / (2.0 * a);
}

// ---- solver internals ------------------------------------------------------

struct EulerSolver::Tables {
  int n = 0;
  std::vector<double> kx, ky;          // integer wavenumber per index
  std::vector<char> mask;              // dealias band
  std::vector<double> vel1, vel2;      // u_hat = i (vel1, vel2) w_hat
  struct NoisePoint {
    int k1, k2;
    double theta;
    double a1, a2;  // frame vector of l (unit, perpendicular)
    int rep;        // index into the per-step draws
    double conj;    // -1: conjugate the stored draw
  };
  std::vector<NoisePoint> noise;
  int noise_reps = 0;
  double k2max_band = 0;
};

struct EulerSolver::Scratch {
  int n = 0;
  fftw_complex *a = nullptr, *b = nullptr;
  fftw_plan fwd{}, bwd{};
  std::vector<std::complex<double>> g1, g2, u1s, u2s, tmp;  // spectral
  std::vector<double> u1, u2, w1, w2, prod;                 // physical
  std::vector<std::complex<double>> k1v, k2v, k3v, k4v;

  explicit Scratch(int grid) : n(grid) {
    std::scoped_lock lock(g_planner_mutex);
    a = fftw_alloc_complex(std::size_t(n) * n);
    b = fftw_alloc_complex(std::size_t(n) * n);
    fwd = fftw_plan_dft_2d(n, n, a, b, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_2d(n, n, a, b, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Scratch() {
    std::scoped_lock lock(g_planner_mutex);
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(a);
    fftw_free(b);
  }

  // physical = sum_k spec_k exp(2 pi i k.x) on the grid
  void to_physical(const std::vector<std::complex<double>>& spec, std::vector<double>& phys) {
    std::size_t m = std::size_t(n) * n;
    for (std::size_t i = 0; i < m; ++i) {
      a[i][0] = spec[i].real();
      a[i][1] = spec[i].imag();
    }
    fftw_execute(bwd);
    phys.resize(m);
    for (std::size_t i = 0; i < m; ++i) phys[i] = b[i][0];
  }

  void to_spectral(const std::vector<double>& phys, std::vector<std::complex<double>>& spec) {
    std::size_t m = std::size_t(n) * n;
    double inv = 1.0 / double(m);
    for (std::size_t i = 0; i < m; ++i) {
      a[i][0] = phys[i];
      a[i][1] = 0.0;
    }
    fftw_execute(fwd);
    spec.resize(m);
    for (std::size_t i = 0; i < m; ++i) spec[i] = std::complex<double>(b[i][0], b[i][1]) * inv;
  }
};

void EulerSolver::ScratchDeleter::operator()(Scratch* s) const { delete s; }

std::unique_ptr<EulerSolver::Scratch, EulerSolver::ScratchDeleter> EulerSolver::make_scratch()
    const {
  return std::unique_ptr<Scratch, ScratchDeleter>(new Scratch(params_.grid));
}

EulerSolver::EulerSolver(const Params& p) : params_(p), band_(p.grid / 3) {
  if (p.grid < 12 || p.grid % 2 != 0)
    throw std::invalid_argument("EulerSolver: grid must be even and >= 12");
  if (!(p.alpha > 0)) throw std::invalid_argument("EulerSolver: alpha must be positive");
  if (p.noise_cutoff > band_)
    throw std::invalid_argument("EulerSolver: noise cutoff exceeds the dealiased band");

  t_ = std::make_unique<Tables>();
  Tables& t = *t_;
  t.n = p.grid;
  const int n = p.grid;
  t.kx.resize(std::size_t(n) * n);
  t.ky.resize(std::size_t(n) * n);
  t.mask.assign(std::size_t(n) * n, 0);
  t.vel1.assign(std::size_t(n) * n, 0.0);
  t.vel2.assign(std::size_t(n) * n, 0.0);
  for (int a = 0; a < n; ++a) {
    int k1 = a <= n / 2 ? a : a - n;
    for (int b = 0; b < n; ++b) {
      int k2 = b <= n / 2 ? b : b - n;
      std::size_t i = std::size_t(a) * n + b;
      t.kx[i] = k1;
      t.ky[i] = k2;
      bool in_band = std::max(std::abs(k1), std::abs(k2)) <= band_ && !(k1 == 0 && k2 == 0);
      t.mask[i] = in_band ? 1 : 0;
      if (in_band) {
        double kn = std::sqrt(double(k1) * k1 + double(k2) * k2);
        double fac = 1.0 / (2.0 * kPi * std::pow(kn, 2.0 + p.alpha));
        t.vel1[i] = -double(k2) * fac;  // k_perp = (-k2, k1)
        t.vel2[i] = double(k1) * fac;
        t.k2max_band = std::max(t.k2max_band, double(k1) * k1 + double(k2) * k2);
      }
    }
  }

  if (p.kappa > 0) {
    LatticeBox box(2, p.noise_cutoff);
    ThetaSpec spec{"powerlaw"};
    spec.alpha = p.alpha;
    spec.cutoff = p.noise_cutoff;
    ThetaCoefficients theta = make_theta(spec, box);
    kalpha_sq_ = powerlaw_normalizer_sq(2, p.alpha, p.noise_cutoff);
    theta_hm1_ = theta.hnorm_sq(-1.0);
    for (const auto& e : theta.entries()) {
      bool is_rep = lex_positive(e.k);
      Tables::NoisePoint np;
      np.k1 = e.k[0];
      np.k2 = e.k[1];
      np.theta = e.value;
      auto frame = basis_vectors(e.k, 2);
      np.a1 = frame[0][0];
      np.a2 = frame[0][1];
      np.conj = is_rep ? 1.0 : -1.0;
      np.rep = -1;
      t.noise.push_back(np);
    }
    // representative index assignment in lexicographic entry order
    std::vector<std::pair<int, int>> reps;
    for (auto& npt : t.noise) {
      std::pair<int, int> key =
          npt.conj > 0 ? std::make_pair(npt.k1, npt.k2) : std::make_pair(-npt.k1, -npt.k2);
      auto it = std::find(reps.begin(), reps.end(), key);
      if (it == reps.end()) {
        if (npt.conj > 0) {
          reps.push_back(key);
          npt.rep = int(reps.size()) - 1;
        }
      } else {
        npt.rep = int(it - reps.begin());
      }
    }
    // mirrors may precede their representative in entry order; resolve the rest
    for (auto& npt : t.noise) {
      if (npt.rep >= 0) continue;
      std::pair<int, int> key =
          npt.conj > 0 ? std::make_pair(npt.k1, npt.k2) : std::make_pair(-npt.k1, -npt.k2);
      auto it = std::find(reps.begin(), reps.end(), key);
      npt.rep = int(it - reps.begin());
    }
    t.noise_reps = int(reps.size());
  }
}

EulerSolver::~EulerSolver() = default;

void EulerSolver::apply_mask(std::vector<std::complex<double>>& spec) const {
  const Tables& t = *t_;
  for (std::size_t i = 0; i < spec.size(); ++i)
    if (!t.mask[i]) spec[i] = {0.0, 0.0};
}

EulerSolver::Velocity EulerSolver::velocity_from_vorticity(const VorticityState& w) const {
  const Tables& t = *t_;
  Velocity v;
  v.u1.resize(w.what.size());
  v.u2.resize(w.what.size());
  for (std::size_t i = 0; i < w.what.size(); ++i) {
    std::complex<double> iw{-w.what[i].imag(), w.what[i].real()};  // i * w_hat
    v.u1[i] = t.vel1[i] * iw;
    v.u2[i] = t.vel2[i] * iw;
  }
  return v;
}

EulerSolver::NonlinearResult EulerSolver::nonlinear_term(const VorticityState& w,
                                                         Scratch& s) const {
  const Tables& t = *t_;
  std::size_t m = w.what.size();
  Velocity vel = velocity_from_vorticity(w);
  s.g1.resize(m);
  s.g2.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::complex<double> iw{-w.what[i].imag(), w.what[i].real()};
    s.g1[i] = 2.0 * kPi * t.kx[i] * iw;
    s.g2[i] = 2.0 * kPi * t.ky[i] * iw;
  }
  s.to_physical(vel.u1, s.u1);
  s.to_physical(vel.u2, s.u2);
  s.to_physical(s.g1, s.w1);
  s.to_physical(s.g2, s.w2);

  NonlinearResult res;
  s.prod.resize(m);
  double vmax = 0;
  for (std::size_t i = 0; i < m; ++i) {
    s.prod[i] = s.u1[i] * s.w1[i] + s.u2[i] * s.w2[i];
    vmax = std::max(vmax, std::sqrt(s.u1[i] * s.u1[i] + s.u2[i] * s.u2[i]));
  }
  res.max_velocity = vmax;
  s.to_spectral(s.prod, res.tendency);
  apply_mask(res.tendency);
  double inner = 0;
  for (std::size_t i = 0; i < m; ++i)
    inner += res.tendency[i].real() * w.what[i].real() + res.tendency[i].imag() * w.what[i].imag();
  res.advection_inner = inner;
  for (auto& c : res.tendency) c = -c;
  return res;
}

double EulerSolver::noise_dt_budget() const {
  if (params_.kappa <= 0) return std::numeric_limits<double>::infinity();
  return 0.5 / (4.0 * kPi2 * params_.kappa * t_->k2max_band);
}

void EulerSolver::step_em(VorticityState& w, double dt, RngStream& rng, Scratch& s) const {
  const Tables& t = *t_;
  std::size_t m = w.what.size();
  if (params_.kappa > 0 && dt > noise_dt_budget())
    throw std::invalid_argument("step_em: dt exceeds the noise stability budget");

  NonlinearResult nl = nonlinear_term(w, s);
  double cfl = nl.max_velocity * dt * 2.0 * kPi * double(params_.grid) / 3.0;
  if (cfl > 0.5) throw std::runtime_error("step_em: advective CFL violated");

  s.tmp.assign(m, {0.0, 0.0});
  if (params_.kappa > 0) {
    // V = sum_l theta_l a_l e_l dW^l is real; the noise term is sqrt(2 kappa) V.grad w.
    std::vector<std::complex<double>> draws(std::size_t(t.noise_reps));
    double sd = std::sqrt(dt);
    for (int r = 0; r < t.noise_reps; ++r) {
      double re, im;
      rng.gauss_pair(re, im);
      draws[std::size_t(r)] = std::complex<double>(re * sd, im * sd);
    }
    s.u1s.assign(m, {0.0, 0.0});
    s.u2s.assign(m, {0.0, 0.0});
    for (const auto& np : t.noise) {
      std::complex<double> dw = draws[std::size_t(np.rep)];
      if (np.conj < 0) dw = std::conj(dw);
      std::size_t i = w.idx(np.k1, np.k2);
      s.u1s[i] += np.theta * np.a1 * dw;
      s.u2s[i] += np.theta * np.a2 * dw;
    }
    s.to_physical(s.u1s, s.u1);
    s.to_physical(s.u2s, s.u2);
    // grad w is still in s.w1, s.w2 from the nonlinear evaluation
    for (std::size_t i = 0; i < m; ++i) s.prod[i] = s.u1[i] * s.w1[i] + s.u2[i] * s.w2[i];
    s.to_spectral(s.prod, s.tmp);
    apply_mask(s.tmp);
  }

  // Damped Duhamel step: the whole left-endpoint increment rides the exact
  // diffusion factor, which keeps the top of the band stable
  // (e^{-2x}(1+2x) <= 1, unlike e^{-2x}+2x).
  double scale = std::sqrt(2.0 * params_.kappa);
  for (std::size_t i = 0; i < m; ++i) {
    if (!t.mask[i]) {
      w.what[i] = {0.0, 0.0};
      continue;
    }
    double k2 = t.kx[i] * t.kx[i] + t.ky[i] * t.ky[i];
    double expfac = std::exp(-4.0 * kPi2 * params_.kappa * k2 * dt);
    w.what[i] = expfac * (w.what[i] + dt * nl.tendency[i] + scale * s.tmp[i]);
  }
  symmetrize(w);
  w.time += dt;
  for (const auto& c : w.what)
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      throw std::runtime_error("step_em: non-finite field");
}

void EulerSolver::step_deterministic_rk4(VorticityState& w, double dt, Scratch& s) const {
  const Tables& t = *t_;
  std::size_t m = w.what.size();
  VorticityState stage = w;
  auto rhs = [&](const VorticityState& y, std::vector<std::complex<double>>& out) {
    NonlinearResult nl = nonlinear_term(y, s);
    double cfl = nl.max_velocity * dt * 2.0 * kPi * double(params_.grid) / 3.0;
    if (cfl > 0.5) throw std::runtime_error("step_deterministic_rk4: advective CFL violated");
    out = std::move(nl.tendency);
    if (params_.kappa > 0)
      for (std::size_t i = 0; i < m; ++i) {
        double k2 = t.kx[i] * t.kx[i] + t.ky[i] * t.ky[i];
        out[i] -= 4.0 * kPi2 * params_.kappa * k2 * y.what[i];
      }
  };
  rhs(w, s.k1v);
  for (std::size_t i = 0; i < m; ++i) stage.what[i] = w.what[i] + 0.5 * dt * s.k1v[i];
  rhs(stage, s.k2v);
  for (std::size_t i = 0; i < m; ++i) stage.what[i] = w.what[i] + 0.5 * dt * s.k2v[i];
  rhs(stage, s.k3v);
  for (std::size_t i = 0; i < m; ++i) stage.what[i] = w.what[i] + dt * s.k3v[i];
  rhs(stage, s.k4v);
  for (std::size_t i = 0; i < m; ++i)
    w.what[i] += dt / 6.0 * (s.k1v[i] + 2.0 * s.k2v[i] + 2.0 * s.k3v[i] + s.k4v[i]);
  apply_mask(w.what);
  symmetrize(w);
  w.time += dt;
}

EulerEnsembleStats simulate_euler_ensemble(const EulerEnsembleConfig& cfg) {
  EulerSolver solver(cfg.solver);
  long nsteps = std::lround(cfg.T / cfg.dt);
  std::vector<long> sample_steps;
  for (long s = 0; s <= nsteps; s += cfg.sample_every) sample_steps.push_back(s);
  if (sample_steps.back() != nsteps) sample_steps.push_back(nsteps);
  std::size_t ns = sample_steps.size();

  struct PathOut {
    std::vector<double> l2, hm1, mm;
    double max_rel = 0;
    bool ceiling_ok = true;
  };
  std::vector<PathOut> outs(std::size_t(cfg.paths));

  int nthreads = cfg.threads > 0 ? cfg.threads
                                 : std::max(1u, std::thread::hardware_concurrency());
  nthreads = std::min<int>(nthreads, cfg.paths);
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nthreads));
  std::vector<std::thread> pool;
  for (int wkr = 0; wkr < nthreads; ++wkr) {
    pool.emplace_back([&, wkr] {
      try {
        auto scratch = solver.make_scratch();
        for (;;) {
          int p = next.fetch_add(1);
          if (p >= cfg.paths) break;
          VorticityState w(cfg.solver.grid, cfg.solver.alpha);
          default_vorticity(w, cfg.initial_l2_sq);
          RngStream rng(stream_seed(cfg.base_seed, std::uint64_t(p)));
          PathOut& out = outs[std::size_t(p)];
          double e0 = w.l2_sq();
          std::vector<double> all_t{0.0}, all_e{e0};
          std::size_t nexts = 0;
          auto record = [&](long step) {
            if (nexts < ns && sample_steps[nexts] == step) {
              out.l2.push_back(w.l2_sq());
              out.hm1.push_back(w.hm1_sq());
              ++nexts;
            }
          };
          record(0);
          for (long s = 1; s <= nsteps; ++s) {
            solver.step_em(w, cfg.dt, rng, *scratch);
            double e = w.l2_sq();
            all_t.push_back(w.time);
            all_e.push_back(e);
            out.max_rel = std::max(out.max_rel, e / e0);
            record(s);
          }
          GirsanovLedger led =
              girsanov_diagnostics(all_t, all_e, cfg.solver.kappa, solver.kalpha_sq());
          out.ceiling_ok = led.under_ceiling(std::max(0.0, out.max_rel - 1.0) + 1e-9);
          out.mm.resize(ns);
          for (std::size_t i = 0; i < ns; ++i)
            out.mm[i] = led.quad_variation[std::size_t(sample_steps[i])];
        }
      } catch (...) {
        errors[std::size_t(wkr)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  EulerEnsembleStats st;
  for (long s : sample_steps) st.times.push_back(double(s) * cfg.dt);
  st.mean_l2.assign(ns, 0);
  st.mean_hm1.assign(ns, 0);
  st.mean_quadvar.assign(ns, 0);
  for (int p = 0; p < cfg.paths; ++p) {
    for (std::size_t i = 0; i < ns; ++i) {
      st.mean_l2[i] += outs[std::size_t(p)].l2[i];
      st.mean_hm1[i] += outs[std::size_t(p)].hm1[i];
      st.mean_quadvar[i] += outs[std::size_t(p)].mm[i];
    }
    st.path_max_l2.push_back(outs[std::size_t(p)].max_rel);
    st.max_path_l2 = std::max(st.max_path_l2, outs[std::size_t(p)].max_rel);
  }
  for (std::size_t i = 0; i < ns; ++i) {
    st.mean_l2[i] /= cfg.paths;
    st.mean_hm1[i] /= cfg.paths;
    st.mean_quadvar[i] /= cfg.paths;
  }
  st.initial_l2 = st.mean_l2.front();
  st.initial_hm1 = st.mean_hm1.front();

  double tol = std::max(0.0, st.max_path_l2 - 1.0);
  GirsanovLedger mean_led;
  mean_led.kalpha_sq = solver.kalpha_sq();
  mean_led.kappa = cfg.solver.kappa;
  mean_led.times = st.times;
  mean_led.quad_variation = st.mean_quadvar;
  mean_led.ceiling_rate =
      solver.kalpha_sq() / (4.0 * kPi2 * cfg.solver.kappa) * st.initial_l2;
  st.girsanov_ceiling_ok = mean_led.under_ceiling(2.0 * tol + 1e-12);
  for (const auto& o : outs) st.girsanov_ceiling_ok = st.girsanov_ceiling_ok && o.ceiling_ok;
  st.girsanov_slack = 2.0 * tol;

  if (ns >= 8) {
    std::vector<std::pair<double, double>> series;
    for (std::size_t i = 0; i < ns; ++i) series.emplace_back(st.times[i], st.mean_hm1[i]);
    RateFit fit = fit_decay_rate(series, -1.0, st.times.back() + 1.0);
    st.fitted_hm1_rate = fit.fitted_rate;
  } else {
    st.fitted_hm1_rate = std::log(st.mean_hm1.front() / st.mean_hm1.back()) / st.times.back();
  }
  return st;
}

}  // namespace stmix
