#pragma once

#include <vector>

#include "freespec/matcore.hpp"
#include "freespec/pencil.hpp"
#include "freespec/random.hpp"

namespace freespec::testing {

inline MatrixTuple random_tuple(int g, int n, Rng& rng) {
  std::vector<SymMatrix> items;
  for (int i = 0; i < g; ++i) items.push_back(random_symmetric(n, rng));
  return MatrixTuple(std::move(items));
}

/// Largest t with t * dir in D_A, by bisection. D_A must be bounded.
inline double boundary_scale(const LinearPencil& p, const MatrixTuple& dir) {
  double lo = 0.0;
  double hi = 1.0;
  while (is_member(p, dir * hi, 0.0)) hi *= 2.0;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (is_member(p, dir * mid, 0.0) ? lo : hi) = mid;
  }
  return lo;
}

/// A random member strictly inside D_A(n): a random ray scaled to a fraction
/// of its exit point.
inline MatrixTuple interior_point(const LinearPencil& p, int n, Rng& rng) {
  const MatrixTuple dir = random_tuple(p.g(), n, rng);
  return dir * (boundary_scale(p, dir) * rng.uniform(0.1, 0.9));
}

inline double max_abs_diff(const MatrixTuple& a, const MatrixTuple& b) {
  double out = 0.0;
  for (int i = 0; i < a.count(); ++i) out = std::max(out, (a[i].matrix() - b[i].matrix()).cwiseAbs().maxCoeff());
  return out;
}

}  // namespace freespec::testing
