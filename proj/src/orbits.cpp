#include "stmix/orbits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include "stmix/format.hpp"

namespace stmix {

PoincareGap poincare_gap(const std::vector<double>& a, double p) {
  if (!(p > 1)) throw std::invalid_argument("poincare_gap: p must be > 1");
  if (p != 2.0)
    for (double v : a)
      if (v < 0) throw std::invalid_argument("poincare_gap: negative entries need p = 2");
  PoincareGap g;
  auto at = [&](std::size_t n) { return n < a.size() ? a[n] : 0.0; };
  auto pw = [&](double x, double e) {
    return x >= 0 ? std::pow(x, e) : -std::pow(-x, e);  // odd extension, reachable only for p=2
  };
  for (std::size_t n = 0; n < a.size(); ++n) {
    g.lhs += std::pow(std::abs(a[n]), p);
    double d1 = pw(at(n + 1), p - 1.0) - pw(at(n), p - 1.0);
    double d0 = at(n + 1) - at(n);
    g.rhs += double((n + 1) * (n + 1)) * d1 * d0;
  }
  g.rhs *= 2.0 * p * p / (p - 1.0);
  return g;
}

IVec Orbit::step_at(int n) const { return (n % 2 == 0) ? step_first : step_second; }

namespace {

struct LocalCoords {
  std::int64_t na, nb, det;  // a = na/det, b = nb/det
};

// Coordinates of z in the (f1, f2) basis (orthogonal component of z drops out
// because f1, f2 span the plane and h is orthogonal to it).
LocalCoords local_coords(std::span<const int> z, const IVec& f1, const IVec& f2) {
  std::int64_t g11 = norm2(f1), g22 = norm2(f2), g12 = dot(f1, f2);
  std::int64_t det = g11 * g22 - g12 * g12;
  std::int64_t z1 = dot(z, f1), z2 = dot(z, f2);
  return {g22 * z1 - g12 * z2, g11 * z2 - g12 * z1, det};
}

IVec negate(const IVec& v) {
  IVec r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = -v[i];
  return r;
}

IVec add(std::span<const int> a, const IVec& b) {
  IVec r(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

Orbit make_orbit(const IVec& start, const IVec& f1, const IVec& f2, int klass, int quadrant,
                 bool special, const LatticeBox& box) {
  Orbit o;
  o.start = start;
  o.step_first = (klass == 1) ? f1 : f2;
  o.step_second = (klass == 1) ? f2 : f1;
  o.klass = klass;
  o.quadrant = quadrant;
  o.special_h = special;
  IVec p = start;
  int n = 0;
  while (sup_norm(p) <= box.radius()) {
    o.points.push_back(p);
    p = add(p, o.step_at(n++));
  }
  return o;
}

// Generates the maximal orbits of one plane: quadrant starting sets I_{i,1},
// I_{i,2}, plus the two special orbits through h when h is a nonzero lattice
// point (replacing their tails from h+l2 and h+l1).
void plane_orbits(const std::vector<IVec>& pts, const IVec& e1, const IVec& e2,
                  const IVec* h_lattice, const LatticeBox& box, std::vector<Orbit>& out) {
  const IVec ne1 = negate(e1), ne2 = negate(e2);
  const IVec bases[4][2] = {{e1, e2}, {e2, ne1}, {ne1, ne2}, {ne2, e1}};

  IVec skip1, skip2;  // class-1 start at h+l2 and class-2 start at h+l1 in quadrant 1
  if (h_lattice) {
    skip1 = add(*h_lattice, e2);
    skip2 = add(*h_lattice, e1);
  }

  for (int q = 0; q < 4; ++q) {
    const IVec& f1 = bases[q][0];
    const IVec& f2 = bases[q][1];
    for (const IVec& z : pts) {
      LocalCoords c = local_coords(z, f1, f2);
      bool interior = c.na > 0 && c.nb > 0;
      bool on_ray2 = c.na == 0 && c.nb > 0;  // ray along f2
      bool on_ray1 = c.nb == 0 && c.na > 0;  // ray along f1
      // class 1: first step f1, allowed from interior U ray2
      if (on_ray2 || (interior && c.nb < c.det)) {
        if (!(h_lattice && q == 0 && z == skip1))
          out.push_back(make_orbit(z, f1, f2, 1, q + 1, false, box));
      }
      // class 2: first step f2, allowed from interior U ray1
      if (on_ray1 || (interior && c.na < c.det)) {
        if (!(h_lattice && q == 0 && z == skip2))
          out.push_back(make_orbit(z, f1, f2, 2, q + 1, false, box));
      }
    }
    if (h_lattice && q == 0) {
      // O_{h,1} steps l2 first, O_{h,2} steps l1 first.
      out.push_back(make_orbit(*h_lattice, f1, f2, 2, 1, true, box));
      out.push_back(make_orbit(*h_lattice, f1, f2, 1, 1, true, box));
    }
  }
}

}  // namespace

OrbitFamily build_orbits_2d(const IVec& l, const LatticeBox& box) {
  if (box.dim() != 2) throw std::invalid_argument("build_orbits_2d: box must be 2-D");
  if (norm2(l) == 0) throw std::invalid_argument("build_orbits_2d: l must be nonzero");
  IVec lp{-l[1], l[0]};

  OrbitFamily fam;
  fam.frame.base1 = l;
  fam.frame.base2 = lp;
  fam.frame.gram11 = norm2(l);
  fam.frame.gram22 = norm2(lp);
  fam.frame.gram12 = 0;
  fam.frame.det = fam.frame.gram11 * fam.frame.gram22;
  fam.h_den = 1;

  std::vector<IVec> pts;
  pts.reserve(std::size_t(box.size()));
  for (int id = 0; id < box.size(); ++id) {
    auto p = box.point(id);
    pts.emplace_back(p.begin(), p.end());
  }
  plane_orbits(pts, l, lp, nullptr, box, fam.orbits);
  return fam;
}

std::vector<OrbitFamily> build_orbits_hd(const IVec& l1, const IVec& l2, const LatticeBox& box) {
  std::int64_t g11 = norm2(l1), g22 = norm2(l2), g12 = dot(l1, l2);
  if (g11 == 0 || g22 == 0) throw std::invalid_argument("build_orbits_hd: zero step vector");
  if (g11 != g22) throw std::invalid_argument("build_orbits_hd: steps must have equal norms");
  std::int64_t det = g11 * g22 - g12 * g12;
  if (det == 0) throw std::invalid_argument("build_orbits_hd: steps must be linearly independent");
  const int d = box.dim();

  // Group box points by the exact plane key det*h = det*z - na*l1 - nb*l2.
  std::map<IVec, std::vector<IVec>> planes;
  for (int id = 0; id < box.size(); ++id) {
    auto z = box.point(id);
    LocalCoords c = local_coords(z, l1, l2);
    IVec key(d);
    for (int j = 0; j < d; ++j)
      key[j] = int(det * z[j] - c.na * l1[j] - c.nb * l2[j]);
    planes[key].emplace_back(z.begin(), z.end());
  }

  std::vector<OrbitFamily> out;
  for (auto& [key, pts] : planes) {
    OrbitFamily fam;
    fam.frame.base1 = l1;
    fam.frame.base2 = l2;
    fam.frame.gram11 = g11;
    fam.frame.gram22 = g22;
    fam.frame.gram12 = g12;
    fam.frame.det = det;
    fam.h_num = key;
    fam.h_den = det;

    bool lattice_h = true, zero_h = true;
    IVec h(d);
    for (int j = 0; j < d; ++j) {
      if (key[j] % det != 0) lattice_h = false;
      if (key[j] != 0) zero_h = false;
    }
    const IVec* hp = nullptr;
    if (lattice_h && !zero_h) {
      for (int j = 0; j < d; ++j) h[j] = int(key[j] / det);
      fam.h_is_lattice = true;
      if (sup_norm(h) <= box.radius()) hp = &h;
    }
    std::sort(pts.begin(), pts.end());
    plane_orbits(pts, l1, l2, hp, box, fam.orbits);
    out.push_back(std::move(fam));
  }
  return out;
}

CoverReport cover_multiplicity(const std::vector<OrbitFamily>& families, const LatticeBox& box,
                               int margin) {
  CoverReport rep;
  rep.box_radius = box.radius();
  rep.multiplicity.assign(std::size_t(box.size()), 0);

  double step = 0.0, skew = 1.0;
  for (const auto& fam : families) {
    step = std::max(step, std::sqrt(double(std::max(fam.frame.gram11, fam.frame.gram22))));
    if (fam.frame.gram12 != 0) {
      double c = double(std::abs(fam.frame.gram12));
      double g = double(fam.frame.gram11);
      skew = std::min(skew, std::sqrt((g - c) / (g + c)));
    }
    for (const auto& o : fam.orbits)
      for (const auto& p : o.points) {
        int id = box.find(p);
        if (id >= 0) rep.multiplicity[std::size_t(id)]++;
      }
  }
  rep.certified_radius = (double(box.radius()) - margin * step) * skew;
  if (rep.certified_radius < 0) rep.certified_radius = 0;

  double r2 = rep.certified_radius * rep.certified_radius;
  for (int id = 0; id < box.size(); ++id) {
    if (double(box.point_norm2(id)) <= r2) {
      rep.certified_points++;
      if (rep.multiplicity[std::size_t(id)] != 2) {
        auto p = box.point(id);
        rep.violations.emplace_back(p.begin(), p.end());
      }
    } else {
      rep.frontier_points++;
    }
  }
  return rep;
}

double projection_bound_margin(const Orbit& orbit) {
  if (orbit.points.empty()) throw std::invalid_argument("projection_bound_margin: empty orbit");
  std::int64_t denom_factor = orbit.special_h ? 5 : 4;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < orbit.points.size(); ++n) {
    IVec d = orbit.step_at(int(n));
    const IVec& p = orbit.points[n];
    std::int64_t num = norm2(p) * norm2(d) - dot(p, d) * dot(p, d);
    // |P^perp_d p|^2 * (4|l|^2) / (n+1)^2 with |d|^2 = |l|^2
    double ratio = double(denom_factor * num) / double((n + 1) * (n + 1));
    best = std::min(best, ratio);
  }
  return best;
}

DirichletRatio dirichlet_ratio(const SpectrumState& y, const ThetaCoefficients& theta, double p) {
  if (!(p > 1)) throw std::invalid_argument("dirichlet_ratio: p must be > 1");
  const LatticeBox& box = *y.box;
  int reach = int(std::ceil(theta.support_radius()));
  for (int id = 0; id < box.size(); ++id)
    if (y.values[std::size_t(id)] != 0.0 && box.point_sup(id) > box.radius() - reach)
      throw std::invalid_argument("dirichlet_ratio: support too close to the box boundary");

  DirichletRatio r;
  std::vector<int> shifted(box.dim());
  for (const auto& e : theta.entries()) {
    double w = e.value * e.value;
    for (int id = 0; id < box.size(); ++id) {
      auto k = box.point(id);
      for (int j = 0; j < box.dim(); ++j) shifted[j] = k[j] + e.k[j];
      int nb = box.find(shifted);
      double yk = y.values[std::size_t(id)];
      double yl = nb >= 0 ? y.values[std::size_t(nb)] : 0.0;
      double proj = perp_proj_sq(k, e.k);
      r.dirichlet += w * proj * (std::pow(yl, p - 1.0) - std::pow(yk, p - 1.0)) * (yl - yk);
    }
  }
  for (double v : y.values) r.sum_p += std::pow(v, p);
  if (r.dirichlet == 0.0) {
    r.undefined = true;
    r.ratio = std::numeric_limits<double>::quiet_NaN();
  } else {
    r.ratio = r.sum_p / r.dirichlet;
  }
  return r;
}

double dirichlet_bound_constant(int dimension, double p, const ThetaCoefficients& theta) {
  double factor = dimension == 2 ? 8.0 : 10.0;
  return factor * p * p / ((p - 1.0) * theta.hnorm_sq(-1.0));
}

std::string orbits_to_csv(const std::vector<OrbitFamily>& families) {
  std::ostringstream os;
  os << "orbit_id,class,quadrant,n";
  if (!families.empty())
    for (std::size_t j = 1; j <= families.front().frame.base1.size(); ++j) os << ",x" << j;
  os << "\n";
  long oid = 0;
  for (const auto& fam : families)
    for (const auto& o : fam.orbits) {
      for (std::size_t n = 0; n < o.points.size(); ++n) {
        os << oid << "," << o.klass << "," << o.quadrant << "," << n;
        for (int c : o.points[n]) os << "," << c;
        os << "\n";
      }
      ++oid;
    }
  return os.str();
}

std::string CoverReport::to_json() const {
  std::ostringstream os;
  os << "{\n  \"box_radius\": " << box_radius
     << ",\n  \"certified_radius\": " << format_full(certified_radius)
     << ",\n  \"certified_points\": " << certified_points
     << ",\n  \"frontier_points\": " << frontier_points << ",\n  \"violations\": [";
  for (std::size_t i = 0; i < violations.size(); ++i) {
    os << (i ? "," : "") << "[";
    for (std::size_t j = 0; j < violations[i].size(); ++j)
      os << (j ? "," : "") << violations[i][j];
    os << "]";
  }
  os << "]\n}\n";
  return os.str();
}

}  // namespace stmix
