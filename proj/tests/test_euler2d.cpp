#include <doctest.h>

#include <cmath>
#include <numbers>

#include "stmix/euler2d.hpp"

using namespace stmix;

namespace {
const double kPi = std::numbers::pi;
const double kPi2 = std::numbers::pi * std::numbers::pi;
}

TEST_CASE("vorticity state preconditions") {
  CHECK_THROWS_AS(VorticityState(10, 0.5), std::invalid_argument);   // too small
  CHECK_THROWS_AS(VorticityState(15, 0.5), std::invalid_argument);   // odd
  CHECK_THROWS_AS(VorticityState(24, 0.0), std::invalid_argument);   // alpha
  VorticityState w(24, 0.5);
  CHECK_THROWS_AS(w.set_mode(0, 0, {1.0, 0.0}), std::invalid_argument);  // zero mean
  CHECK_THROWS_AS((EulerSolver({.grid = 24, .alpha = 0.5, .kappa = 1.0, .noise_cutoff = 9})),
                  std::invalid_argument);  // cutoff beyond the dealias band
}

TEST_CASE("velocity law: single mode and exact incompressibility") {
  EulerSolver solver({.grid = 24, .alpha = 0.5, .kappa = 0.0, .noise_cutoff = 1});
  VorticityState w(24, 0.5);
  w.set_mode(1, 0, {1.0, 0.0});
  auto v = solver.velocity_from_vorticity(w);
  // u_hat = (i/2pi) k_perp |k|^{-2-alpha} w_hat with k_perp = (0,1)
  auto u1 = v.u1[w.idx(1, 0)];
  auto u2 = v.u2[w.idx(1, 0)];
  CHECK(std::abs(u1) == 0.0);
  CHECK(u2.real() == doctest::Approx(0.0));
  CHECK(u2.imag() == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-14));

  RngStream rng(3);
  VorticityState r(24, 0.5);
  for (int k1 = -7; k1 <= 7; ++k1)
    for (int k2 = -7; k2 <= 7; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      r.set_mode(k1, k2, {rng.gauss(), rng.gauss()});
    }
  auto vr = solver.velocity_from_vorticity(r);
  for (int k1 = -8; k1 <= 8; ++k1)
    for (int k2 = -8; k2 <= 8; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      auto div = double(k1) * vr.u1[r.idx(k1, k2)] + double(k2) * vr.u2[r.idx(k1, k2)];
      // k . k_perp = 0 in exact integers; the float products leave ulp dust
      CHECK(std::abs(div) <= 1e-15 * (1.0 + std::abs(r.what[r.idx(k1, k2)])));
    }
}

TEST_CASE("velocity damping grows with alpha") {
  VorticityState w(24, 0.5);
  w.set_mode(5, 0, {1.0, 0.0});
  EulerSolver weak({.grid = 24, .alpha = 0.5, .kappa = 0.0, .noise_cutoff = 1});
  EulerSolver strong({.grid = 24, .alpha = 3.0, .kappa = 0.0, .noise_cutoff = 1});
  VorticityState w2 = w;
  w2.alpha = 3.0;
  double a = std::abs(weak.velocity_from_vorticity(w).u2[w.idx(5, 0)]);
  double b = std::abs(strong.velocity_from_vorticity(w2).u2[w.idx(5, 0)]);
  CHECK(b < a);
  CHECK(a / b == doctest::Approx(std::pow(5.0, 2.5)).epsilon(1e-12));
}

TEST_CASE("single-harmonic self-advection vanishes") {
  EulerSolver solver({.grid = 24, .alpha = 0.5, .kappa = 0.0, .noise_cutoff = 1});
  auto scratch = solver.make_scratch();
  VorticityState w(24, 0.5);
  w.set_mode(2, 1, {0.7, -0.3});
  auto nl = solver.nonlinear_term(w, *scratch);
  double m = 0;
  for (const auto& c : nl.tendency) m = std::max(m, std::abs(c));
  CHECK(m <= 1e-14);
}

TEST_CASE("advection is orthogonal to the vorticity and dealiased") {
  EulerSolver solver({.grid = 32, .alpha = 0.5, .kappa = 0.0, .noise_cutoff = 1});
  auto scratch = solver.make_scratch();
  VorticityState w(32, 0.5);
  RngStream rng(17);
  for (int k1 = -10; k1 <= 10; ++k1)
    for (int k2 = -10; k2 <= 10; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      w.set_mode(k1, k2, {0.3 * rng.gauss(), 0.3 * rng.gauss()});
    }
  auto nl = solver.nonlinear_term(w, *scratch);
  double wnorm = std::sqrt(w.l2_sq());
  double gnorm = 0;
  for (int k1 = -10; k1 <= 10; ++k1)
    for (int k2 = -10; k2 <= 10; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      gnorm += 4.0 * kPi2 * double(k1 * k1 + k2 * k2) * std::norm(w.what[w.idx(k1, k2)]);
    }
  gnorm = std::sqrt(gnorm);
  CHECK(std::abs(nl.advection_inner) <= 1e-10 * wnorm * gnorm);
  // band limit: everything above grid/3 must vanish
  for (int k1 = -16; k1 < 16; ++k1)
    for (int k2 = -16; k2 < 16; ++k2)
      if (std::max(std::abs(k1), std::abs(k2)) > solver.dealias_limit())
        CHECK(std::abs(nl.tendency[w.idx(k1, k2)]) == 0.0);
}

TEST_CASE("deterministic RK4 conserves energy without dissipation") {
  EulerSolver solver({.grid = 32, .alpha = 0.5, .kappa = 0.0, .noise_cutoff = 1});
  auto scratch = solver.make_scratch();
  VorticityState w(32, 0.5);
  default_vorticity(w, 1.0);
  double e0 = w.l2_sq();
  CHECK(e0 == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < 100; ++i) solver.step_deterministic_rk4(w, 2e-3, *scratch);
  CHECK(std::abs(w.l2_sq() - e0) <= 1e-8 * e0);
  CHECK(w.hermitian_defect() <= 1e-13);
}

TEST_CASE("diffusion decays the energy monotonically when the noise is off") {
  EulerSolver solver({.grid = 24, .alpha = 0.5, .kappa = 0.05, .noise_cutoff = 1});
  auto scratch = solver.make_scratch();
  VorticityState w(24, 0.5);
  default_vorticity(w, 1.0);
  double prev = w.l2_sq();
  for (int i = 0; i < 20; ++i) {
    solver.step_deterministic_rk4(w, 1e-3, *scratch);
    double e = w.l2_sq();
    CHECK(e < prev);
    prev = e;
  }
}

TEST_CASE("girsanov ledger: constant integrand, ceiling, kappa scaling") {
  std::vector<double> t{0.0, 0.1, 0.2, 0.3};
  std::vector<double> e{2.0, 2.0, 2.0, 2.0};
  GirsanovLedger led = girsanov_diagnostics(t, e, 1.0, 5.0);
  for (std::size_t i = 0; i < t.size(); ++i)
    CHECK(led.quad_variation[i] ==
          doctest::Approx(5.0 / (4.0 * kPi2) * 2.0 * t[i]).epsilon(1e-13));
  CHECK(led.under_ceiling(1e-12));

  std::vector<double> dec{2.0, 1.5, 1.0, 0.8};
  GirsanovLedger led2 = girsanov_diagnostics(t, dec, 1.0, 5.0);
  CHECK(led2.under_ceiling(0.0));

  GirsanovLedger led3 = girsanov_diagnostics(t, e, 2.0, 5.0);
  for (std::size_t i = 1; i < t.size(); ++i)
    CHECK(led3.quad_variation[i] == doctest::Approx(led.quad_variation[i] / 2.0).epsilon(1e-13));
}

TEST_CASE("kappa sizing solves its defining inequality with equality") {
  double lambda = 1.0, R = 1.0, alpha = 1.0;
  int M = 10;
  double kappa = kappa_for_target_rate(lambda, R, alpha, M);
  CHECK(kappa > 0);
  LatticeBox box(2, M);
  ThetaSpec spec{"powerlaw"};
  spec.alpha = alpha;
  spec.cutoff = M;
  double hm1 = make_theta(spec, box).hnorm_sq(-1.0);
  double kal2 = powerlaw_normalizer_sq(2, alpha, M);
  double lhs = kPi2 * kappa * hm1 / 8.0;
  double rhs = kal2 * R / (8.0 * kPi2 * kappa) + lambda;
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

  // R -> 0: kappa -> 8 lambda / (pi^2 ||theta||^2_{h^-1}); doubling lambda doubles kappa
  double k0 = kappa_for_target_rate(lambda, 1e-14, alpha, M);
  CHECK(k0 == doctest::Approx(8.0 * lambda / (kPi2 * hm1)).epsilon(1e-6));
  double k1 = kappa_for_target_rate(2.0 * lambda, 1e-14, alpha, M);
  CHECK(k1 == doctest::Approx(2.0 * k0).epsilon(1e-6));
  CHECK_THROWS_AS(kappa_for_target_rate(-1.0, R, alpha, M), std::invalid_argument);
}

TEST_CASE("stochastic steps keep the field real-valued and finite") {
  EulerSolver solver({.grid = 24, .alpha = 0.5, .kappa = 0.2, .noise_cutoff = 3});
  auto scratch = solver.make_scratch();
  VorticityState w(24, 0.5);
  default_vorticity(w, 1.0);
  RngStream rng(23);
  double dt = std::min(1e-4, solver.noise_dt_budget());
  for (int i = 0; i < 50; ++i) solver.step_em(w, dt, rng, *scratch);
  CHECK(w.hermitian_defect() == 0.0);
  CHECK(std::isfinite(w.l2_sq()));
  CHECK(w.what[w.idx(0, 0)] == std::complex<double>{0.0, 0.0});
}

TEST_CASE("small euler ensemble is deterministic for a fixed seed") {
  EulerEnsembleConfig cfg;
  cfg.solver = {.grid = 24, .alpha = 0.5, .kappa = 0.2, .noise_cutoff = 3};
  cfg.dt = 1e-4;
  cfg.T = 2e-3;
  cfg.paths = 3;
  cfg.base_seed = 7;
  cfg.sample_every = 2;
  cfg.threads = 1;
  EulerEnsembleStats a = simulate_euler_ensemble(cfg);
  cfg.threads = 2;
  EulerEnsembleStats b = simulate_euler_ensemble(cfg);
  REQUIRE(a.mean_l2.size() == b.mean_l2.size());
  for (std::size_t i = 0; i < a.mean_l2.size(); ++i) {
    CHECK(a.mean_l2[i] == b.mean_l2[i]);
    CHECK(a.mean_hm1[i] == b.mean_hm1[i]);
  }
}
