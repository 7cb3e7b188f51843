#pragma once

#include <Eigen/Core>
#include <string>

#include "fixpoint/errors.hpp"
#include "fixpoint/types.hpp"

namespace fixpoint {

enum class NormKind { Euclidean, Sum, Max };

std::string to_string(NormKind kind);
NormKind norm_kind_from_string(const std::string& name);

/// Which norm structures the ambient space. Every certificate measures
/// distances with it.
struct NormSpec {
  NormKind kind = NormKind::Euclidean;
  Index dimension = 0;

  NormSpec() = default;
  NormSpec(NormKind k, Index dim);

  bool euclidean() const { return kind == NormKind::Euclidean; }
};

/// Norm of an Eigen expression under `kind`. No dimension check.
template <typename Derived>
double norm_of(NormKind kind, const Eigen::MatrixBase<Derived>& x) {
  switch (kind) {
    case NormKind::Euclidean:
      return x.template lpNorm<2>();
    case NormKind::Sum:
      return x.template lpNorm<1>();
    case NormKind::Max:
      return x.template lpNorm<Eigen::Infinity>();
  }
  return 0.0;
}

/// Dimension-checked norm of a point.
double norm(const NormSpec& space, const Vector& x);

double distance(const NormSpec& space, const Vector& x, const Vector& y);

/// Rejects NaN/infinity coordinates. Used at the API boundaries where
/// points enter the system.
void require_finite(const Vector& x, const char* what);

}  // namespace fixpoint
