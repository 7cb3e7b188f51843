#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fixpoint/body.hpp"
#include "fixpoint/certify.hpp"
#include "fixpoint/contraction.hpp"
#include "fixpoint/map_expr.hpp"

namespace fixpoint {

/// Probe history of one induction stage: which s values were tried and
/// the sup over probe points of |F_{2s} p - F_s p| at each.
struct StabilizationRecord {
  int stage = 0;
  std::vector<long long> sTried;
  std::vector<double> maxProbeDelta;
  long long sStar = 0;
  bool stabilized = false;
};

struct FinderInput {
  MapFn eval;
  std::optional<MapExpr> expr;  // present when the composite has exact structure
};

struct FoundRetraction {
  MapFn eval;
  std::optional<MapExpr> expr;
  std::string method;
};

/// Maps a self-map to a nonexpansive retraction onto its fixed set, or
/// throws when it cannot.
using RetractionFinder = std::function<FoundRetraction(const FinderInput&, const ConvexBody&)>;

/// Retraction onto the common fixed-point set of a finite commuting
/// family, built stage by stage: R_0 = identity, R_{k+1} x = F_{s*} x for
/// the resolvent of T_{k+1} composed with R_k. Immutable after build;
/// evaluations memoize per stage and are safe to run concurrently.
class RetractionModel {
 public:
  static RetractionModel identityOn(ConvexBody body, NormSpec space);

  int stage() const { return static_cast<int>(stages_.size()); }
  const std::vector<MapExpr>& family() const { return family_; }
  const ConvexBody& body() const { return body_; }
  const NormSpec& space() const { return space_; }
  std::vector<StabilizationRecord> stabilization() const;
  /// Certified residual level of the construction:
  /// diam / min(s*) + 2 * max inner solver tolerance.
  double rangeBound() const;

  /// Rejects points outside the body.
  Vector evaluate(const Vector& x) const;
  Vector operator()(const Vector& x) const { return evaluate(x); }
  MapFn asFn() const;

  /// Fix-set equality certificates recorded per stage by staged_compose.
  std::vector<PropertyCertificate> stageChecks() const;

 private:
  struct Stage;
  RetractionModel() = default;
  Vector evalStage(std::size_t k, const Vector& x) const;

  ConvexBody body_ = ConvexBody::box(Vector::Zero(1), Vector::Ones(1));
  NormSpec space_ = NormSpec(NormKind::Euclidean, 1);
  std::vector<MapExpr> family_;
  std::vector<std::shared_ptr<Stage>> stages_;

  friend RetractionModel build_retraction(const std::vector<MapExpr>&, const ConvexBody&,
                                          const NormSpec&, std::vector<long long>, double,
                                          int);
  friend RetractionModel staged_compose(const std::vector<MapExpr>&, const RetractionFinder&,
                                       const ConvexBody&, const NormSpec&, double, double);
};

/// Theorem-8 style construction. Refuses to build when the hypothesis
/// certificates (nonexpansive self-maps, pairwise commuting) FAIL; a
/// stage whose probe deltas never reach stabilizationTol raises a solver
/// error carrying the probe trace.
RetractionModel build_retraction(const std::vector<MapExpr>& family, const ConvexBody& body,
                                 const NormSpec& space, std::vector<long long> sSchedule = {},
                                 double stabilizationTol = 1e-6, int probeCount = 32);

struct RetractionCertificate {
  std::vector<double> rangeInFix;  // per family member: max |T_i(Rx) - Rx|
  double idempotenceResidual = 0.0;
  double nonexpansiveSlack = 0.0;  // max over pairs of |Rx-Ry| - |x-y|
  bool checkedFirm = false;
  double firmWorstViolation = 0.0;
  double firmWorstA = -1.0;
  std::vector<StabilizationRecord> stabilization;
  bool rangePass = false;
  bool idempotencePass = false;
  bool nonexpansivePass = false;
  bool firmPass = true;
  double tolerance = 0.0;
  int sampleCount = 0;

  bool pass() const {
    return rangePass && idempotencePass && nonexpansivePass && (!checkedFirm || firmPass);
  }
};

RetractionCertificate certify_retraction(const RetractionModel& r,
                                         const std::vector<MapExpr>& family,
                                         const ConvexBody& body, const NormSpec& space,
                                         int sampleCount, double tol, bool checkFirm);

/// Brute-force common-fixed-set oracle on a grid (dimension <= 3): all
/// grid points of the body moved by every family member by at most
/// gridResolution/2.
std::vector<Vector> fix_set_probe(const std::vector<MapExpr>& family, const ConvexBody& body,
                                  const NormSpec& space, double gridResolution);
std::vector<Vector> fix_set_probe_fn(const std::vector<MapFn>& family, const ConvexBody& body,
                                     const NormSpec& space, double gridResolution);

/// Grid points of the body at the given spacing (dimension <= 3).
std::vector<Vector> body_grid(const ConvexBody& body, double gridResolution);

/// Fix(T.R) = FixT intersect Fix(family), checked two-sided on the grid
/// (sampled fallback above dimension 3). tol < 0 means gridResolution/2.
PropertyCertificate commute_retract_check(const MapExpr& t, const std::vector<MapExpr>& family,
                                          const MapFn& r, const ConvexBody& body,
                                          const NormSpec& space, double gridResolution,
                                          double tol = -1.0);
PropertyCertificate commute_retract_check(const MapExpr& t, const std::vector<MapExpr>& family,
                                          const RetractionModel& r, const ConvexBody& body,
                                          const NormSpec& space, double gridResolution,
                                          double tol = -1.0);

struct ApfsTransferData {
  std::vector<long long> sValues;
  std::vector<std::vector<double>> familyResiduals;  // [member][schedule index]
  std::vector<double> retractionResiduals;
  std::vector<double> mapResiduals;
  double fittedC = 0.0;  // max over all sequences of residual * s
  double diameter = 0.0;
};

/// Approximate fixed points of T.R are approximate fixed points of every
/// family member, of R, and of T: final residuals <= tol and every
/// sequence dominated by c/s with c <= 3 * diam(C).
PropertyCertificate apfs_transfer_check(const MapExpr& t, const std::vector<MapExpr>& family,
                                        const RetractionModel& r, const ConvexBody& body,
                                        const NormSpec& space, const Vector& x,
                                        std::vector<long long> sSchedule = {},
                                        double tol = 1e-6, ApfsTransferData* data = nullptr);

/// Single-map stabilized-resolvent mechanism as a finder.
RetractionFinder resolvent_limit_finder(std::vector<long long> sSchedule = {},
                                        double stabilizationTol = 1e-6, int probeCount = 32);

/// Exact finder for affine-structured maps whose fixed set is an affine
/// subspace: orthogonal projection onto it. Verifies the result retracts
/// the body onto the fixed set and throws otherwise.
RetractionFinder affine_subspace_finder();

/// Composition induction: R_1 = finder(T_1), R_{k+1} = finder(T_{k+1}.R_k),
/// with a fix-set equality certificate recorded at every stage. Finder
/// failure raises a solver error naming the stage.
RetractionModel staged_compose(const std::vector<MapExpr>& family, const RetractionFinder& finder,
                              const ConvexBody& body, const NormSpec& space,
                              double gridResolution, double tol = -1.0);

}  // namespace fixpoint
