#pragma once

#include <random>

#include "fixpoint/types.hpp"

namespace testutil {

inline fixpoint::Vector vec1(double a) {
  fixpoint::Vector v(1);
  v << a;
  return v;
}

inline fixpoint::Vector vec2(double a, double b) {
  fixpoint::Vector v(2);
  v << a, b;
  return v;
}

inline fixpoint::Vector vec3(double a, double b, double c) {
  fixpoint::Vector v(3);
  v << a, b, c;
  return v;
}

inline fixpoint::Vector random_vec(std::mt19937& rng, fixpoint::Index dim,
                                   double lo = -10.0, double hi = 10.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  fixpoint::Vector v(dim);
  for (fixpoint::Index i = 0; i < dim; ++i) v[i] = dist(rng);
  return v;
}

}  // namespace testutil
