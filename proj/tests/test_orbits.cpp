#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "stmix/orbits.hpp"

using namespace stmix;

TEST_CASE("poincare gap hand cases") {
  PoincareGap g1 = poincare_gap({1.0}, 2.0);
  CHECK(g1.lhs == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g1.rhs == doctest::Approx(8.0).epsilon(1e-15));

  PoincareGap g2 = poincare_gap({1.0, 1.0}, 2.0);
  CHECK(g2.lhs == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(g2.rhs == doctest::Approx(32.0).epsilon(1e-15));

  PoincareGap g0 = poincare_gap({0.0, 0.0}, 3.0);
  CHECK(g0.lhs == 0.0);
  CHECK(g0.rhs == 0.0);

  CHECK_THROWS_AS(poincare_gap({1.0, -1.0}, 3.0), std::invalid_argument);
  CHECK_THROWS_AS(poincare_gap({1.0}, 1.0), std::invalid_argument);
  // p = 2 admits signed sequences
  PoincareGap gs = poincare_gap({1.0, -1.0, 0.5}, 2.0);
  CHECK(gs.lhs <= gs.rhs);
}

TEST_CASE("poincare inequality on random nonnegative sequences") {
  std::mt19937 gen(41);
  std::uniform_int_distribution<int> len(1, 64);
  std::uniform_real_distribution<double> val(0.0, 2.0);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> a(static_cast<std::size_t>(len(gen)));
    for (auto& v : a) v = val(gen);
    for (double p : {1.5, 2.0, 3.0, 5.0}) {
      PoincareGap g = poincare_gap(a, p);
      CHECK(g.lhs <= g.rhs * (1.0 + 1e-12));
      if (g.lhs > 1e-12) CHECK(g.rhs > g.lhs);  // equality only at zero
    }
  }
}

TEST_CASE("2-D orbits: hand-checked points for l=(2,1)") {
  LatticeBox box(2, 8);
  OrbitFamily fam = build_orbits_2d(IVec{2, 1}, box);
  const Orbit* found = nullptr;
  for (const auto& o : fam.orbits)
    if (o.start == IVec{-1, 2} && o.klass == 1 && o.quadrant == 1) found = &o;
  REQUIRE(found != nullptr);
  REQUIRE(found->points.size() >= 4);
  CHECK(found->points[0] == IVec{-1, 2});
  CHECK(found->points[1] == IVec{1, 3});
  CHECK(found->points[2] == IVec{0, 5});
  CHECK(found->points[3] == IVec{2, 6});
  CHECK(projection_bound_margin(*found) >= 1.0);
  // first step projects with |P_l^perp z|^2 = 5: ratio 4*5*5/(5*1) = 100/(1*1)
  IVec d0 = found->step_at(0);
  CHECK(d0 == IVec{2, 1});
  double num = double(norm2(found->points[0])) * norm2(d0) -
               double(dot(found->points[0], d0)) * dot(found->points[0], d0);
  CHECK(4.0 * num / 1.0 == doctest::Approx(100.0));
}

TEST_CASE("2-D orbits: axis case class-2 orbit from (1,0)") {
  LatticeBox box(2, 6);
  OrbitFamily fam = build_orbits_2d(IVec{1, 0}, box);
  const Orbit* found = nullptr;
  for (const auto& o : fam.orbits)
    if (o.start == IVec{1, 0} && o.klass == 2 && o.quadrant == 1) found = &o;
  REQUIRE(found != nullptr);
  REQUIRE(found->points.size() >= 4);
  CHECK(found->points[1] == IVec{1, 1});
  CHECK(found->points[2] == IVec{2, 1});
  CHECK(found->points[3] == IVec{2, 2});
}

TEST_CASE("orbit construction invariants: alternation, interiority, maximality") {
  LatticeBox box(2, 10);
  for (IVec l : {IVec{1, 0}, IVec{2, 1}, IVec{1, 1}, IVec{3, -1}}) {
    OrbitFamily fam = build_orbits_2d(l, box);
    IVec lp{-l[1], l[0]};
    // local coordinates scaled by |l|^2 (the bases are orthogonal in d = 2)
    auto coords = [&](const IVec& z, const IVec& e1, const IVec& e2) {
      return std::pair<std::int64_t, std::int64_t>{dot(z, e1), dot(z, e2)};
    };
    for (const auto& o : fam.orbits) {
      CHECK(o.step_first != o.step_second);  // strict alternation
      // points past the start stay in the open quadrant
      const IVec& e1 = o.klass == 1 ? o.step_first : o.step_second;
      const IVec& e2 = o.klass == 1 ? o.step_second : o.step_first;
      for (std::size_t n = 1; n < o.points.size(); ++n) {
        auto [a, b] = coords(o.points[n], e1, e2);
        CHECK(a > 0);
        CHECK(b > 0);
      }
      // backward extension leaves the allowed orbit set (Step 3 maximality)
      auto [a0, b0] = coords(o.start, e1, e2);
      std::int64_t g = norm2(e1);
      if (o.klass == 1) {
        if (a0 > 0 && b0 > 0) CHECK(b0 < g);  // z - l^perp below the quadrant
        else CHECK((a0 == 0 && b0 > 0));
      } else {
        if (a0 > 0 && b0 > 0) CHECK(a0 < g);
        else CHECK((b0 == 0 && a0 > 0));
      }
    }
  }
}

TEST_CASE("orbit projection weights match a direct frame computation") {
  LatticeBox box(2, 10);
  OrbitFamily fam = build_orbits_2d(IVec{2, 1}, box);
  for (const auto& o : fam.orbits) {
    for (std::size_t n = 0; n < std::min<std::size_t>(o.points.size(), 6); ++n) {
      IVec step = o.step_at(int(n));
      auto frame = basis_vectors(step, 2);
      double adot = 0;
      for (int j = 0; j < 2; ++j) adot += frame[0][std::size_t(j)] * o.points[n][std::size_t(j)];
      CHECK(adot * adot == doctest::Approx(perp_proj_sq(o.points[n], step)).epsilon(1e-12));
    }
  }
}

TEST_CASE("cover multiplicity is exactly 2 on certified interiors (d=2)") {
  for (IVec l : {IVec{1, 0}, IVec{2, 1}, IVec{1, 1}}) {
    LatticeBox box(2, 12);
    OrbitFamily fam = build_orbits_2d(l, box);
    std::vector<OrbitFamily> fams{fam};
    CoverReport rep = cover_multiplicity(fams, box, 3);
    CHECK(rep.certified_points > 0);
    CHECK(rep.violations.empty());
    // exhaustive recount as the oracle
    for (int id = 0; id < box.size(); ++id) {
      if (double(box.point_norm2(id)) > rep.certified_radius * rep.certified_radius) continue;
      long count = 0;
      auto p = box.point(id);
      IVec pv(p.begin(), p.end());
      for (const auto& o : fam.orbits)
        count += std::count(o.points.begin(), o.points.end(), pv);
      CHECK(count == 2);
    }
  }
}

TEST_CASE("d>=3 plane orbits: special orbits through nonzero lattice offsets") {
  LatticeBox box(3, 6);
  auto fams = build_orbits_hd(IVec{1, 0, 0}, IVec{0, 1, 0}, box);
  bool found_plane = false;
  for (const auto& fam : fams) {
    if (fam.h_num == IVec{0, 0, int(fam.h_den)}) {
      found_plane = true;
      CHECK(fam.h_is_lattice);
      const Orbit* special = nullptr;
      for (const auto& o : fam.orbits)
        if (o.special_h && o.klass == 2) special = &o;
      REQUIRE(special != nullptr);
      REQUIRE(special->points.size() >= 3);
      CHECK(special->points[0] == IVec{0, 0, 1});
      CHECK(special->points[1] == IVec{0, 1, 1});
      CHECK(special->points[2] == IVec{1, 1, 1});
      CHECK(projection_bound_margin(*special) >= 1.0);
      // the tails that the special orbits replace must not be emitted twice
      long starts_at_hl2 = 0;
      for (const auto& o : fam.orbits)
        if (!o.special_h && o.quadrant == 1 && o.klass == 1 && o.start == IVec{0, 1, 1})
          ++starts_at_hl2;
      CHECK(starts_at_hl2 == 0);
    }
    if (fam.h_num == IVec{0, 0, 0})
      for (const auto& o : fam.orbits) CHECK_FALSE(o.special_h);
  }
  CHECK(found_plane);

  CHECK_THROWS_AS(build_orbits_hd(IVec{1, 0, 0}, IVec{2, 0, 0}, box), std::invalid_argument);
  CHECK_THROWS_AS(build_orbits_hd(IVec{1, 0, 0}, IVec{0, 1, 1}, box), std::invalid_argument);
  CHECK_NOTHROW(build_orbits_hd(IVec{1, 1, 0}, IVec{1, -1, 0}, box));
}

TEST_CASE("d=3 cover multiplicity on certified region") {
  LatticeBox box(3, 6);
  for (auto [l1, l2] : {std::pair{IVec{1, 0, 0}, IVec{0, 1, 0}},
                        std::pair{IVec{1, 1, 0}, IVec{1, -1, 0}}}) {
    auto fams = build_orbits_hd(l1, l2, box);
    CoverReport rep = cover_multiplicity(fams, box, 2);
    CHECK(rep.certified_points > 0);
    CHECK(rep.violations.empty());
  }
}

TEST_CASE("special-orbit projection ratio hand value") {
  // O_{h,1} with h=(0,0,1), l1=(1,0,0), l2=(0,1,0): n=0 gives |P^perp|^2 = 1,
  // certified against (n+1)^2/(5 |l1|^2): ratio 5.
  Orbit o;
  o.start = IVec{0, 0, 1};
  o.step_first = IVec{0, 1, 0};
  o.step_second = IVec{1, 0, 0};
  o.klass = 2;
  o.special_h = true;
  o.points = {IVec{0, 0, 1}};
  CHECK(projection_bound_margin(o) == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("dirichlet ratio: single mode, zero state, certified ceiling") {
  LatticeBox box(2, 6);
  ThetaCoefficients th = make_theta(ThetaSpec{"unit_shell"}, box);
  SpectrumState y(box);
  y.set_pair(IVec{1, 0}, 1.0);
  DirichletRatio r = dirichlet_ratio(y, th, 2.0);
  CHECK(r.sum_p == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(r.dirichlet == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(r.ratio == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(r.ratio <= dirichlet_bound_constant(2, 2.0, th));
  CHECK(dirichlet_bound_constant(2, 2.0, th) == doctest::Approx(32.0).epsilon(1e-13));

  SpectrumState z(box);
  DirichletRatio rz = dirichlet_ratio(z, th, 2.0);
  CHECK(rz.undefined);
  CHECK(std::isnan(rz.ratio));

  SpectrumState edge(box);
  edge.set_pair(IVec{6, 0}, 1.0);
  CHECK_THROWS_AS(dirichlet_ratio(edge, th, 2.0), std::invalid_argument);
}

TEST_CASE("dirichlet ceiling holds on random compact spectra") {
  LatticeBox box(2, 10);
  ThetaCoefficients th = make_theta(ThetaSpec{"unit_shell"}, box);
  std::mt19937 gen(59);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double c32 = dirichlet_bound_constant(2, 2.0, th);
  for (int t = 0; t < 50; ++t) {
    SpectrumState y(box);
    for (int id = 0; id < box.size(); ++id)
      if (box.point_sup(id) <= 7 && u(gen) < 0.4) y.values[std::size_t(id)] = u(gen);
    DirichletRatio r = dirichlet_ratio(y, th, 2.0);
    if (!r.undefined) CHECK(r.ratio <= c32);
  }
}

TEST_CASE("orbit CSV and cover JSON are well formed") {
  LatticeBox box(2, 6);
  std::vector<OrbitFamily> fams{build_orbits_2d(IVec{1, 0}, box)};
  std::string csv = orbits_to_csv(fams);
  CHECK(csv.rfind("orbit_id,class,quadrant,n,x1,x2\n", 0) == 0);
  CoverReport rep = cover_multiplicity(fams, box, 3);
  std::string js = rep.to_json();
  CHECK(js.find("\"violations\": []") != std::string::npos);
}
