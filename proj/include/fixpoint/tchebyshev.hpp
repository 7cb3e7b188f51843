#pragma once

#include <string>
#include <vector>

#include "fixpoint/certify.hpp"
#include "fixpoint/map_expr.hpp"
#include "fixpoint/norms.hpp"

namespace fixpoint {

/// Smallest enclosing ball of a finite point set. For the max norm the
/// whole center set is an axis-aligned box, reported as [boxLo, boxHi]
/// with the midpoint as the canonical center; the box degenerates to the
/// center itself for the other norms.
struct CenterResult {
  double radius = 0.0;
  Vector center;
  Vector boxLo, boxHi;
  double enclosureResidual = 0.0;  // max_a |center - a| minus radius
  double optimalityGap = 0.0;      // certified upper bound on radius - optimum
  bool exact = false;
  std::string method;
  NormKind norm = NormKind::Euclidean;
};

/// Euclidean: exact recursion over <= d+1 support points at dimension <= 3,
/// farthest-point descent with a dual gap certificate above. Max norm:
/// exact per-coordinate closed form. Sum norm: subgradient descent with
/// restarts; the gap is reported, no exactness claimed.
CenterResult chebyshev_center(const std::vector<Vector>& points, const NormSpec& space,
                              double tol = 1e-9);

/// A nonexpansive map sending the set onto itself sends its center to a
/// center: max_a |T(c) - a| <= r + tol. Refuses (input error) when the
/// nonexpansivity or preservation hypothesis certificates FAIL.
PropertyCertificate invariance_check(const MapExpr& t, const std::vector<Vector>& points,
                                     const NormSpec& space, double tol = 1e-9);

struct CommonFixedPointResult {
  Vector point;
  CenterResult center;
  PropertyCertificate certificate;
};

/// Common fixed point of a commuting nonexpansive family preserving the
/// set, located inside the center set. Euclidean: the center is unique,
/// so it must itself be fixed. Max norm: a retraction of the center box
/// onto the family's common fixed set is built and applied to the box
/// midpoint. Hypothesis certificate failures refuse with input errors;
/// retraction failures propagate.
CommonFixedPointResult fixed_point_in_center(const std::vector<MapExpr>& family,
                                             const std::vector<Vector>& points,
                                             const NormSpec& space, double tol = 1e-9);

}  // namespace fixpoint
