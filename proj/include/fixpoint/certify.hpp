#pragma once

#include <string>
#include <vector>

#include "fixpoint/body.hpp"
#include "fixpoint/map_expr.hpp"
#include "fixpoint/norms.hpp"

namespace fixpoint {

enum class Property {
  SelfMap,
  Nonexpansive,
  FirmlyNonexpansive,
  Commuting,
  PreservesSet,
  ApfsTransfer,
  CenterInvariance,
  FixedPoint,
  Isometry
};
enum class Verdict { CertifiedAnalytic, PassSampled, Fail };

std::string to_string(Property p);
std::string to_string(Verdict v);

/// A violating input with the measured quantities that condemned it.
struct Witness {
  std::vector<Vector> points;  // x (and y when the check is pairwise)
  double a = -1.0;             // firm-nonexpansivity parameter; -1 when n/a
  int mapI = -1, mapJ = -1;    // commuting pair indices; -1 when n/a
  double measured = 0.0;
  double bound = 0.0;
};

struct PropertyCertificate {
  Property property = Property::SelfMap;
  Verdict verdict = Verdict::Fail;
  std::vector<Witness> witnesses;
  int sampleCount = 0;       // probe points drawn
  long checksPerformed = 0;  // individual inequalities evaluated
  double tolerance = 0.0;
  std::string note;

  bool passed() const { return verdict != Verdict::Fail; }
};

/// Induced operator norm of a matrix: spectral norm via power iteration
/// (tolerance 1e-10) for euclidean, max column / row absolute sum for
/// sum / max.
double operator_norm(const Matrix& a, NormKind kind);

PropertyCertificate certify_self_map(const MapExpr& map, const ConvexBody& body,
                                     int sampleCount = 200, double tol = 1e-9,
                                     unsigned seed = 0);

/// Nonexpansivity in the space norm. Structural closure rules first
/// (affine operator norm, projections/rotations under euclidean,
/// constants, compositions and convex combinations of certified maps);
/// sampled over all pairs of probe points otherwise. `forceSampled`
/// skips the structural path.
PropertyCertificate certify_nonexpansive(const MapExpr& map, const ConvexBody& body,
                                         const NormSpec& space, int sampleCount = 200,
                                         double tol = 1e-9, unsigned seed = 0,
                                         bool forceSampled = false);

std::vector<double> default_firm_a_grid();

/// Firm nonexpansivity |Tx-Ty| <= |a(x-y)+(1-a)(Tx-Ty)| for every a in
/// the grid, on all sampled pairs; for affine-structured maps the worst
/// a is additionally located by golden-section search. Euclidean only.
PropertyCertificate certify_firmly_nonexpansive(const MapExpr& map, const ConvexBody& body,
                                                int sampleCount = 200,
                                                std::vector<double> aGrid = {},
                                                double tol = 1e-9, unsigned seed = 0);

PropertyCertificate certify_commuting(const std::vector<MapExpr>& maps,
                                      const ConvexBody& body, const NormSpec& space,
                                      int sampleCount = 200, double tol = 1e-9,
                                      unsigned seed = 0);

/// TA = A as a set: every image within tol of a member and vice versa.
PropertyCertificate certify_preserves_set(const MapExpr& map,
                                          const std::vector<Vector>& points,
                                          const NormSpec& space, double tol = 1e-9);

}  // namespace fixpoint
