#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace stmix {

using IVec = std::vector<int>;

inline std::int64_t dot(std::span<const int> a, std::span<const int> b) {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::int64_t(a[i]) * b[i];
  return s;
}

inline std::int64_t norm2(std::span<const int> a) { return dot(a, a); }

inline int sup_norm(std::span<const int> a) {
  int m = 0;
  for (int c : a) m = std::max(m, std::abs(c));
  return m;
}

// First nonzero coordinate positive.
inline bool lex_positive(std::span<const int> a) {
  for (int c : a) {
    if (c > 0) return true;
    if (c < 0) return false;
  }
  return false;
}

// |k - (k.l/|l|^2) l|^2 = |k|^2 - (k.l)^2/|l|^2, exact up to one division.
inline double perp_proj_sq(std::span<const int> k, std::span<const int> l) {
  std::int64_t l2 = norm2(l);
  if (l2 == 0) throw std::invalid_argument("perp_proj_sq: l must be nonzero");
  std::int64_t num = norm2(k) * l2 - dot(k, l) * dot(k, l);
  return double(num) / double(l2);
}

// Truncated nonzero integer lattice {k : 0 < |k|_inf <= N}, lexicographic order,
// with dense ids, the k <-> -k pairing and the lex-positive representatives.
class LatticeBox {
 public:
  LatticeBox(int dimension, int radius);

  int dim() const { return dim_; }
  int radius() const { return radius_; }
  int size() const { return int(pair_.size()); }

  std::span<const int> point(int id) const {
    return {coords_.data() + std::size_t(id) * dim_, std::size_t(dim_)};
  }
  // Dense id, or -1 if k is zero or outside the box.
  int find(std::span<const int> k) const;
  int mirror(int id) const { return pair_[id]; }
  bool is_representative(int id) const { return rep_mask_[id]; }
  const std::vector<int>& representatives() const { return reps_; }
  std::int64_t point_norm2(int id) const { return norm2_[id]; }
  int point_sup(int id) const { return sup_[id]; }

 private:
  int dim_;
  int radius_;
  std::vector<int> coords_;
  std::vector<int> pair_;
  std::vector<int> reps_;
  std::vector<char> rep_mask_;
  std::vector<std::int64_t> norm2_;
  std::vector<int> sup_;
  std::vector<int> cube_to_id_;  // (2N+1)^d lookup, -1 at the origin
};

LatticeBox build_lattice(int dimension, int radius);

// d-1 orthonormal vectors spanning k^perp, identical for k and -k.
// Gram-Schmidt of the canonical basis against the lex-positive representative,
// in fixed order with first-nonzero-pivot tie breaking.
std::vector<std::vector<double>> basis_vectors(std::span<const int> k, int dimension);

}  // namespace stmix
