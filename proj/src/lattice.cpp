#include "stmix/lattice.hpp"

#include <algorithm>
#include <cmath>

namespace stmix {

LatticeBox::LatticeBox(int dimension, int radius) : dim_(dimension), radius_(radius) {
  if (dimension < 2) throw std::invalid_argument("LatticeBox: dimension must be >= 2");
  if (radius < 1) throw std::invalid_argument("LatticeBox: radius must be >= 1");

  const int side = 2 * radius + 1;
  std::size_t cube = 1;
  for (int j = 0; j < dimension; ++j) cube *= side;
  cube_to_id_.assign(cube, -1);

  std::vector<int> k(dimension, -radius);
  const std::size_t npts = cube - 1;
  coords_.reserve(npts * dimension);
  norm2_.reserve(npts);
  sup_.reserve(npts);
  int id = 0;
  // Lexicographic sweep; the origin is skipped.
  for (;;) {
    bool zero = std::all_of(k.begin(), k.end(), [](int c) { return c == 0; });
    if (!zero) {
      std::size_t ci = 0;
      for (int j = 0; j < dimension; ++j) ci = ci * side + std::size_t(k[j] + radius);
      cube_to_id_[ci] = id++;
      coords_.insert(coords_.end(), k.begin(), k.end());
      norm2_.push_back(norm2(k));
      sup_.push_back(sup_norm(k));
    }
    int j = dimension - 1;
    while (j >= 0 && k[j] == radius) k[j--] = -radius;
    if (j < 0) break;
    ++k[j];
  }

  pair_.resize(id);
  rep_mask_.assign(id, 0);
  std::vector<int> neg(dimension);
  for (int i = 0; i < id; ++i) {
    auto p = point(i);
    for (int j = 0; j < dimension; ++j) neg[j] = -p[j];
    pair_[i] = find(neg);
    if (lex_positive(p)) {
      rep_mask_[i] = 1;
      reps_.push_back(i);
    }
  }
}

int LatticeBox::find(std::span<const int> k) const {
  const int side = 2 * radius_ + 1;
  std::size_t ci = 0;
  bool zero = true;
  for (int j = 0; j < dim_; ++j) {
    int c = k[j];
    if (c < -radius_ || c > radius_) return -1;
    if (c != 0) zero = false;
    ci = ci * side + std::size_t(c + radius_);
  }
  return zero ? -1 : cube_to_id_[ci];
}

LatticeBox build_lattice(int dimension, int radius) { return LatticeBox(dimension, radius); }

std::vector<std::vector<double>> basis_vectors(std::span<const int> k, int dimension) {
  if (int(k.size()) != dimension) throw std::invalid_argument("basis_vectors: size mismatch");
  if (norm2(k) == 0) throw std::invalid_argument("basis_vectors: k must be nonzero");

  std::vector<int> rep(k.begin(), k.end());
  if (!lex_positive(rep))
    for (auto& c : rep) c = -c;

  std::vector<std::vector<double>> frame;
  std::vector<double> r(rep.begin(), rep.end());
  const double r2 = double(norm2(rep));
  for (int j = 0; j < dimension && int(frame.size()) < dimension - 1; ++j) {
    std::vector<double> v(dimension, 0.0);
    v[j] = 1.0;
    double proj = r[j] / r2;
    for (int t = 0; t < dimension; ++t) v[t] -= proj * r[t];
    for (const auto& u : frame) {
      double c = 0;
      for (int t = 0; t < dimension; ++t) c += v[t] * u[t];
      for (int t = 0; t < dimension; ++t) v[t] -= c * u[t];
    }
    double n2 = 0;
    for (double c : v) n2 += c * c;
    if (n2 <= 1e-20) continue;  // canonical vector already in the accepted span
    double inv = 1.0 / std::sqrt(n2);
    for (auto& c : v) c *= inv;
    frame.push_back(std::move(v));
  }
  return frame;
}

}  // namespace stmix
