#include "stmix/spde.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "stmix/spectrum.hpp"

namespace stmix {

namespace {
constexpr double kPi2 = std::numbers::pi * std::numbers::pi;
}

void ModeState::set_mode(std::span<const int> k, Complex v) {
  int id = box->find(k);
  if (id < 0) throw std::invalid_argument("ModeState: point outside the box");
  amp[std::size_t(id)] = box->is_representative(id) ? v : std::conj(v);
  amp[std::size_t(box->mirror(id))] = std::conj(amp[std::size_t(id)]);
}

double ModeState::l2_sq() const {
  double s = 0;
  for (const auto& a : amp) s += std::norm(a);
  return s;
}

double ModeState::hm1_sq() const {
  double s = 0;
  for (int id = 0; id < box->size(); ++id)
    s += std::norm(amp[std::size_t(id)]) / (4.0 * kPi2 * double(box->point_norm2(id)));
  return s;
}

double realness_defect(const ModeState& state) {
  double m = 0;
  for (int id = 0; id < state.box->size(); ++id) {
    int mid = state.box->mirror(id);
    m = std::max(m, std::abs(state.amp[std::size_t(mid)] - std::conj(state.amp[std::size_t(id)])));
  }
  return m;
}

NoiseDraw noise_increments(const ThetaCoefficients& theta, double dt, RngStream& rng) {
  if (!(dt > 0)) throw std::invalid_argument("noise_increments: dt must be positive");
  int dirs = theta.dim() - 1;
  NoiseDraw draw;
  draw.dt = dt;
  double sd = std::sqrt(dt);
  for (const auto& e : theta.entries()) {
    if (!lex_positive(e.k)) continue;
    for (int i = 0; i < dirs; ++i) {
      double re, im;
      rng.gauss_pair(re, im);
      draw.dw.push_back(Complex{re * sd, im * sd});
    }
  }
  return draw;
}

ModeEvolver::ModeEvolver(const LatticeBox& box, const ThetaCoefficients& theta, double kappa,
                         double lambda, double nu)
    : box_(&box), theta_(&theta), kappa_(kappa), lambda_(lambda), nu_(nu), dirs_(box.dim() - 1) {
  if (kappa < 0 || nu < 0) throw std::invalid_argument("ModeEvolver: negative coefficient");
  const int d = box.dim();
  const double c_d = double(d) / double(d - 1);
  noise_scale_ = Complex{0.0, 2.0 * std::numbers::pi * std::sqrt(c_d * kappa)};

  // Noise index of each support point: representatives in lexicographic order,
  // mirrors reference the representative with a conjugation flag.
  struct SuppPoint {
    IVec k;
    double theta;
    int noise_base;
    float conj;
    std::vector<std::vector<double>> frame;
  };
  std::vector<SuppPoint> supp;
  std::vector<const ThetaCoefficients::Entry*> reps;
  for (const auto& e : theta.entries())
    if (lex_positive(e.k)) reps.push_back(&e);
  n_supp_reps_ = int(reps.size());
  for (const auto& e : theta.entries()) {
    if (box.find(e.k) < 0) throw std::invalid_argument("ModeEvolver: theta support outside box");
    IVec rep = e.k;
    float cj = 1.0f;
    if (!lex_positive(rep)) {
      for (auto& c : rep) c = -c;
      cj = -1.0f;
    }
    int base = -1;
    for (int r = 0; r < n_supp_reps_; ++r)
      if (reps[std::size_t(r)]->k == rep) base = r * dirs_;
    supp.push_back({e.k, e.value, base, cj, basis_vectors(e.k, d)});
  }

  rep_ids_ = box.representatives();
  term_offset_.assign(rep_ids_.size() + 1, 0);
  std::vector<int> shifted(d);
  for (std::size_t r = 0; r < rep_ids_.size(); ++r) {
    auto k = box.point(rep_ids_[r]);
    for (const auto& sp : supp) {
      for (int j = 0; j < d; ++j) shifted[j] = k[j] - sp.k[j];
      int src = box.find(shifted);
      if (src < 0) continue;  // absorbing truncation
      for (int i = 0; i < dirs_; ++i) {
        double adotk = 0;
        for (int j = 0; j < d; ++j) adotk += sp.frame[std::size_t(i)][std::size_t(j)] * k[j];
        double coeff = sp.theta * adotk;
        if (coeff != 0.0) terms_.push_back({src, sp.noise_base + i, sp.conj, coeff});
      }
    }
    term_offset_[r + 1] = int(terms_.size());
  }
}

void ModeEvolver::prepare_dt(double dt) {
  if (!(dt > 0)) throw std::invalid_argument("ModeEvolver: dt must be positive");
  dt_ = dt;
  expfac_.assign(rep_ids_.size(), 0.0);
  for (std::size_t r = 0; r < rep_ids_.size(); ++r) {
    double k2 = double(box_->point_norm2(rep_ids_[r]));
    expfac_[r] = std::exp((lambda_ - 4.0 * kPi2 * (kappa_ + nu_) * k2) * dt);
  }
}

double ModeEvolver::stability_budget() const {
  std::int64_t k2max = 0;
  for (int id = 0; id < box_->size(); ++id) k2max = std::max(k2max, box_->point_norm2(id));
  return 0.5 / (4.0 * kPi2 * (kappa_ + nu_) * double(k2max) + std::abs(lambda_));
}

NoiseDraw ModeEvolver::draw(double dt, RngStream& rng) const {
  return noise_increments(*theta_, dt, rng);
}

void ModeEvolver::step(ModeState& state, const NoiseDraw& draw, std::vector<Complex>& out) const {
  if (dt_ != draw.dt) throw std::invalid_argument("ModeEvolver: call prepare_dt first");
  out.resize(state.amp.size());
  for (std::size_t r = 0; r < rep_ids_.size(); ++r) {
    int id = rep_ids_[r];
    Complex acc{0.0, 0.0};
    for (int t = term_offset_[r]; t < term_offset_[r + 1]; ++t) {
      const Term& tm = terms_[std::size_t(t)];
      Complex dw = draw.dw[std::size_t(tm.noise)];
      if (tm.conj < 0) dw = std::conj(dw);
      acc += tm.coeff * state.amp[std::size_t(tm.source)] * dw;
    }
    out[std::size_t(id)] = expfac_[r] * state.amp[std::size_t(id)] + noise_scale_ * acc;
  }
  for (std::size_t r = 0; r < rep_ids_.size(); ++r) {
    int id = rep_ids_[r];
    out[std::size_t(box_->mirror(id))] = std::conj(out[std::size_t(id)]);
  }
  state.amp.swap(out);
  state.time += draw.dt;
}

namespace {

struct PathResult {
  std::vector<double> l2, hm1;       // per sample
  std::vector<double> sup;           // per interval
  std::vector<double> final_modes;   // |u_hat|^2 per box id
  std::vector<std::vector<double>> checkpoint_modes;
};

void run_path(const ModeEvolver& ev, const EnsembleConfig& cfg, long nsteps,
              const std::vector<long>& sample_steps, const std::vector<long>& checkpoint_steps,
              double tau, std::uint64_t seed, PathResult& out) {
  const LatticeBox& box = ev.box();
  ModeState state(box);
  for (int id = 0; id < box.size(); ++id)
    if (box.is_representative(id) && box.point_norm2(id) <= cfg.init_shell_norm2)
      state.amp[std::size_t(id)] = Complex{1.0, 0.0};
  for (int id = 0; id < box.size(); ++id)
    if (!box.is_representative(id))
      state.amp[std::size_t(id)] = std::conj(state.amp[std::size_t(box.mirror(id))]);

  RngStream rng(seed);
  std::vector<Complex> scratch;
  long n_intervals = long(std::floor(cfg.T / tau)) + 1;
  out.sup.assign(std::size_t(n_intervals), 0.0);

  std::size_t next_sample = 0;
  long last_iv = 0;
  double last_h = 0;
  auto record = [&](long step) {
    double h = state.hm1_sq();
    long iv = std::min(n_intervals - 1, long(std::floor(state.time / tau + 1e-12)));
    // intervals skipped between samples are spanned by this path segment
    for (long j = last_iv + 1; j < iv; ++j)
      out.sup[std::size_t(j)] = std::max(out.sup[std::size_t(j)], std::max(last_h, h));
    out.sup[std::size_t(iv)] = std::max(out.sup[std::size_t(iv)], h);
    last_iv = iv;
    last_h = h;
    if (next_sample < sample_steps.size() && sample_steps[next_sample] == step) {
      out.l2.push_back(state.l2_sq());
      out.hm1.push_back(h);
      ++next_sample;
    }
  };
  auto checkpoint = [&](long step) {
    for (std::size_t c = 0; c < checkpoint_steps.size(); ++c)
      if (checkpoint_steps[c] == step) {
        auto& dst = out.checkpoint_modes[c];
        dst.resize(state.amp.size());
        for (std::size_t i = 0; i < state.amp.size(); ++i) dst[i] = std::norm(state.amp[i]);
      }
  };
  out.checkpoint_modes.resize(checkpoint_steps.size());
  record(0);
  checkpoint(0);
  for (long s = 1; s <= nsteps; ++s) {
    NoiseDraw draw = ev.draw(cfg.dt, rng);
    ev.step(state, draw, scratch);
    for (const auto& a : state.amp)
      if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
        throw std::runtime_error("simulate_ensemble: non-finite amplitude");
    record(s);
    checkpoint(s);
  }
  out.final_modes.resize(state.amp.size());
  for (std::size_t i = 0; i < state.amp.size(); ++i) out.final_modes[i] = std::norm(state.amp[i]);
}

}  // namespace

EnsembleStats simulate_ensemble(const EnsembleConfig& cfg) {
  if (cfg.paths < 2) throw std::invalid_argument("simulate_ensemble: need at least 2 paths");
  LatticeBox box(cfg.dimension, cfg.radius);
  ThetaCoefficients theta = make_theta(cfg.theta, box);
  ModeEvolver ev(box, theta, cfg.kappa, cfg.lambda, cfg.nu);
  double budget = ev.stability_budget();
  if (cfg.dt > budget)
    throw std::invalid_argument("simulate_ensemble: dt exceeds the stability budget " +
                                std::to_string(budget));
  ev.prepare_dt(cfg.dt);

  MixingConstants mc = mixing_constants(theta, cfg.dimension, cfg.kappa);
  double tau = cfg.tau > 0 ? cfg.tau : mc.t0;

  long nsteps = std::lround(cfg.T / cfg.dt);
  std::vector<long> sample_steps;
  for (long s = 0; s <= nsteps; s += cfg.sample_every) sample_steps.push_back(s);
  if (sample_steps.back() != nsteps) sample_steps.push_back(nsteps);
  std::vector<long> checkpoint_steps{nsteps / 2, nsteps};
  if (checkpoint_steps[0] == checkpoint_steps[1]) checkpoint_steps.erase(checkpoint_steps.begin());

  std::vector<PathResult> results(std::size_t(cfg.paths));
  int nthreads = cfg.threads > 0 ? cfg.threads
                                 : std::max(1u, std::thread::hardware_concurrency());
  nthreads = std::min<int>(nthreads, cfg.paths);
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nthreads));
  for (int w = 0; w < nthreads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (;;) {
          int p = next.fetch_add(1);
          if (p >= cfg.paths) break;
          run_path(ev, cfg, nsteps, sample_steps, checkpoint_steps, tau,
                   stream_seed(cfg.base_seed, std::uint64_t(p)), results[std::size_t(p)]);
        }
      } catch (...) {
        errors[std::size_t(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  EnsembleStats st;
  st.paths = cfg.paths;
  st.base_seed = cfg.base_seed;
  st.tau = tau;
  st.final_time = double(nsteps) * cfg.dt;
  st.d_theta_kappa = mc.d_theta_d * cfg.kappa;
  for (long s : sample_steps) st.times.push_back(double(s) * cfg.dt);

  // Welford over paths in ascending order: bit-reproducible for a fixed build.
  std::size_t ns = sample_steps.size();
  std::size_t nc = checkpoint_steps.size();
  std::vector<double> m_l2(ns, 0), s_l2(ns, 0), m_h(ns, 0), s_h(ns, 0);
  std::size_t nm = results.front().final_modes.size();
  std::vector<double> m_mode(nm, 0), s_mode(nm, 0);
  std::vector<std::vector<double>> m_cp(nc, std::vector<double>(nm, 0));
  std::vector<std::vector<double>> s_cp(nc, std::vector<double>(nm, 0));
  for (int p = 0; p < cfg.paths; ++p) {
    const auto& r = results[std::size_t(p)];
    double n = double(p + 1);
    for (std::size_t i = 0; i < ns; ++i) {
      double d1 = r.l2[i] - m_l2[i];
      m_l2[i] += d1 / n;
      s_l2[i] += d1 * (r.l2[i] - m_l2[i]);
      double d2 = r.hm1[i] - m_h[i];
      m_h[i] += d2 / n;
      s_h[i] += d2 * (r.hm1[i] - m_h[i]);
    }
    for (std::size_t i = 0; i < nm; ++i) {
      double d = r.final_modes[i] - m_mode[i];
      m_mode[i] += d / n;
      s_mode[i] += d * (r.final_modes[i] - m_mode[i]);
    }
    for (std::size_t c = 0; c < nc; ++c)
      for (std::size_t i = 0; i < nm; ++i) {
        double v = r.checkpoint_modes[c][i];
        double d = v - m_cp[c][i];
        m_cp[c][i] += d / n;
        s_cp[c][i] += d * (v - m_cp[c][i]);
      }
    st.interval_sup.push_back(r.sup);
    st.path_seeds.push_back(stream_seed(cfg.base_seed, std::uint64_t(p)));
  }
  auto se = [&](double s2) { return std::sqrt(std::max(0.0, s2) / double(cfg.paths - 1)) /
                                    std::sqrt(double(cfg.paths)); };
  for (std::size_t i = 0; i < ns; ++i) {
    st.mean_l2.push_back(m_l2[i]);
    st.se_l2.push_back(se(s_l2[i]));
    st.mean_hm1.push_back(m_h[i]);
    st.se_hm1.push_back(se(s_h[i]));
  }
  for (std::size_t i = 0; i < nm; ++i) {
    st.mode_mean.push_back(m_mode[i]);
    st.mode_se.push_back(se(s_mode[i]));
  }
  for (std::size_t c = 0; c < nc; ++c) {
    st.checkpoint_times.push_back(double(checkpoint_steps[c]) * cfg.dt);
    std::vector<double> mm(nm), ss(nm);
    for (std::size_t i = 0; i < nm; ++i) {
      mm[i] = m_cp[c][i];
      ss[i] = se(s_cp[c][i]);
    }
    st.checkpoint_mode_mean.push_back(std::move(mm));
    st.checkpoint_mode_se.push_back(std::move(ss));
  }
  st.initial_l2 = results.front().l2.front();
  st.initial_hm1 = results.front().hm1.front();
  return st;
}

IntervalSupReport interval_sup_stats(const EnsembleStats& stats, double lambda_target) {
  IntervalSupReport rep;
  rep.lambda_target = lambda_target;
  rep.outside_hypothesis = lambda_target >= stats.d_theta_kappa;
  std::size_t n_iv = stats.interval_sup.empty() ? 0 : stats.interval_sup.front().size();
  if (n_iv < 3) throw std::invalid_argument("interval_sup_stats: need at least 3 intervals");
  rep.intervals = int(n_iv);

  std::vector<std::pair<double, double>> means;
  for (std::size_t i = 0; i < n_iv; ++i) {
    double m = 0;
    for (const auto& path : stats.interval_sup) m += path[i];
    means.emplace_back(double(i) * stats.tau, m / double(stats.interval_sup.size()));
  }
  rep.mean_sup_first = means.front().second;
  if (n_iv >= 8) {
    RateFit fit = fit_decay_rate(means, -stats.tau, means.back().first + stats.tau);
    rep.fitted_rate = fit.fitted_rate;
  } else {
    rep.fitted_rate = std::log(means.front().second / means.back().second) /
                      (means.back().first - means.front().first);
  }

  std::vector<double> env;
  for (const auto& path : stats.interval_sup) {
    double c = 0;
    for (std::size_t i = 0; i < n_iv; ++i)
      c = std::max(c, path[i] * std::exp(lambda_target * double(i) * stats.tau));
    env.push_back(c / stats.initial_l2);
  }
  std::sort(env.begin(), env.end());
  for (double q : {0.5, 0.9, 0.99, 1.0}) {
    std::size_t idx = std::min(env.size() - 1, std::size_t(q * double(env.size())));
    rep.envelope_quantiles.push_back(env[idx]);
  }
  return rep;
}

}  // namespace stmix
