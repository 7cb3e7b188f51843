#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "fixpoint/finite.hpp"
#include "fixpoint/norms.hpp"
#include "fixpoint/types.hpp"

namespace testutil {

struct GridCenter {
  fixpoint::Vector center;
  double radius = std::numeric_limits<double>::infinity();
};

// Brute-force 2-D minimax search: the best enclosing-ball center among
// all grid nodes of [lo, hi] at the given step.
inline GridCenter minimax_grid(const std::vector<fixpoint::Vector>& pts,
                               fixpoint::NormKind kind, const fixpoint::Vector& lo,
                               const fixpoint::Vector& hi, double step) {
  GridCenter best;
  fixpoint::Vector c(2);
  for (double x = lo[0]; x <= hi[0] + step / 2.0; x += step) {
    for (double y = lo[1]; y <= hi[1] + step / 2.0; y += step) {
      c << x, y;
      double r = 0.0;
      for (const auto& p : pts) r = std::max(r, fixpoint::norm_of(kind, c - p));
      if (r < best.radius) {
        best.radius = r;
        best.center = c;
      }
    }
  }
  return best;
}

inline fixpoint::IndexMap map_power(const fixpoint::IndexMap& t, int k) {
  fixpoint::IndexMap out(t.size());
  std::iota(out.begin(), out.end(), 0);
  for (int rep = 0; rep < k; ++rep)
    for (auto& v : out) v = t[static_cast<std::size_t>(v)];
  return out;
}

// Seeded random instance: an integer shortest-path metric on 2..7 points
// and two powers of one random self-map (powers of a map always commute).
inline fixpoint::FiniteSystem random_power_system(unsigned seed) {
  std::mt19937 rng(seed);
  const int n = 2 + static_cast<int>(rng() % 6);
  fixpoint::Matrix w(n, n);
  for (int i = 0; i < n; ++i) {
    w(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) w(i, j) = w(j, i) = 1.0 + static_cast<double>(rng() % 9);
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) w(i, j) = std::min(w(i, j), w(i, k) + w(k, j));

  fixpoint::IndexMap t(static_cast<std::size_t>(n));
  for (auto& v : t) v = static_cast<int>(rng() % static_cast<unsigned>(n));
  const int a = 1 + static_cast<int>(rng() % 3);
  const int b = 1 + static_cast<int>(rng() % 3);
  return fixpoint::FiniteSystem::create(
      w, {{"A", map_power(t, a)}, {"B", map_power(t, b)}});
}

}  // namespace testutil
