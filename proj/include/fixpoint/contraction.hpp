#pragma once

#include <functional>
#include <vector>

#include "fixpoint/body.hpp"
#include "fixpoint/certify.hpp"
#include "fixpoint/map_expr.hpp"
#include "fixpoint/types.hpp"

namespace fixpoint {

/// Any evaluable self-map: a MapExpr, a retraction stage, or a composite.
using MapFn = std::function<Vector(const Vector&)>;

struct ContractionSolveReport {
  Vector fixedPoint;
  long long iterations = 0;
  double contractionFactor = 0.0;  // q
  double aPrioriBound = 0.0;       // q^k/(1-q) * |x1 - x0|
  double aPosterioriResidual = 0.0;
  /// True when the run stopped at the machine-precision floor rather than
  /// the analytic threshold (the threshold can sit below representable
  /// step sizes when q is close to 1); aPosterioriResidual still reports
  /// the verified residual.
  bool hitNumericalFloor = false;
};

/// A-priori iteration budget: the Banach estimate plus slack.
long long default_max_iterations(double q, double tol, double diam);

/// Fixed-point iteration with contraction-rate control. Stops when the
/// successive difference guarantees distance <= tol to the unique fixed
/// point; aborts when the empirical ratio contradicts the claimed q
/// (three consecutive violations of q + 1e-6).
ContractionSolveReport banach_solve(const MapFn& map, const Vector& x0, double q,
                                    double tol, long long maxIter);

/// F_s x: unique fixed point of z -> (1/s) x + (1 - 1/s) T(R(z)),
/// computed by banach_solve with q = 1 - 1/s started at x.
Vector resolvent(const MapExpr& t, const MapFn& r, long long s, const Vector& x,
                 const ConvexBody& body, double tol,
                 ContractionSolveReport* report = nullptr);

/// Same, for an already-composed self-map tr = T(R(.)).
Vector resolvent(const MapFn& tr, long long s, const Vector& x, const ConvexBody& body,
                 double tol, ContractionSolveReport* report = nullptr);

/// Samples pairs and verifies |F_s x - F_s y| <= |x - y| + tol.
PropertyCertificate resolvent_nonexpansive_check(const MapExpr& t, const MapFn& r,
                                                 long long s, const ConvexBody& body,
                                                 const NormSpec& space, int samplePairs,
                                                 double tol, unsigned seed = 0);

struct ApfsCertificate {
  std::vector<long long> sValues;
  std::vector<double> residuals;   // |T R F_s x - F_s x|
  std::vector<double> bounds;      // diam(C) / s
  std::vector<double> identityGaps;  // | residual - (1/s)|T R F_s x - x| |
  double diameter = 0.0;
  bool diameterExact = true;
  double tolerance = 0.0;
  bool pass = false;
  std::vector<long long> failures;  // violating s values
};

std::vector<long long> default_s_schedule();

/// Approximate-fixed-point certificate: residual <= diam(C)/s at every s
/// of the schedule, plus the exact averaging identity
/// residual = (1/s) |T R F_s x - x|.
ApfsCertificate apfs_certify(const MapExpr& t, const MapFn& r, const Vector& x,
                             const ConvexBody& body, const NormSpec& space,
                             std::vector<long long> sSchedule = {}, double tol = 1e-9);

}  // namespace fixpoint
