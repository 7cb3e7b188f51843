#include "fixpoint/contraction.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "fixpoint/errors.hpp"

namespace fixpoint {

long long default_max_iterations(double q, double tol, double diam) {
  if (q <= 0.0) return 51;
  if (diam <= 0.0) return 51;
  double target = tol * (1.0 - q) / diam;
  if (target >= 1.0) return 51;
  double k = std::ceil(std::log(target) / std::log(q));
  if (!std::isfinite(k) || k < 0) k = 0;
  if (k > 9e17) k = 9e17;
  return static_cast<long long>(k) + 50;
}

ContractionSolveReport banach_solve(const MapFn& map, const Vector& x0, double q,
                                    double tol, long long maxIter) {
  if (!(q >= 0.0 && q < 1.0))
    throw InputError("banach_solve: contraction factor q must lie in [0,1)");
  if (!(tol > 0.0)) throw InputError("banach_solve: tolerance must be positive");
  require_finite(x0, "banach_solve start");

  const double threshold =
      q > 0.0 ? tol * (1.0 - q) / q : std::numeric_limits<double>::infinity();
  const double eps = std::numeric_limits<double>::epsilon();

  Vector x = x0;
  double firstDiff = 0.0, prevDiff = -1.0;
  int ratioStrikes = 0;
  std::deque<std::pair<long long, double>> trace;

  for (long long k = 1; k <= maxIter; ++k) {
    Vector xn = map(x);
    double diff = (xn - x).norm();
    if (k == 1) firstDiff = diff;
    trace.emplace_back(k, diff);
    if (trace.size() > 32) trace.pop_front();
    x = std::move(xn);

    const double floor = 16.0 * eps * (1.0 + x.lpNorm<Eigen::Infinity>());
    if (diff <= threshold || diff <= floor) {
      ContractionSolveReport report;
      report.fixedPoint = x;
      report.iterations = k;
      report.contractionFactor = q;
      report.aPrioriBound =
          q > 0.0 ? std::pow(q, static_cast<double>(k)) / (1.0 - q) * firstDiff : 0.0;
      report.aPosterioriResidual = (map(x) - x).norm();
      report.hitNumericalFloor = diff > threshold;
      return report;
    }
    // ratio accounting only above the roundoff regime: near the floor the
    // empirical ratio is dominated by cancellation noise, not by q
    if (prevDiff > 1000.0 * floor) {
      if (diff / prevDiff > q + 1e-6) {
        if (++ratioStrikes >= 3) {
          std::ostringstream msg;
          msg << "banach_solve: empirical contraction ratio " << (diff / prevDiff)
              << " exceeds claimed q=" << q << " for 3 consecutive steps";
          std::ostringstream tr;
          tr << "iteration,difference\n";
          for (const auto& [it, d] : trace) tr << it << "," << d << "\n";
          throw SolverError(msg.str(), tr.str());
        }
      } else {
        ratioStrikes = 0;
      }
    }
    prevDiff = diff;
  }
  std::ostringstream msg;
  msg << "banach_solve: no convergence within " << maxIter
      << " iterations (last step " << (trace.empty() ? 0.0 : trace.back().second)
      << ", threshold " << threshold << ")";
  std::ostringstream tr;
  tr << "iteration,difference\n";
  for (const auto& [it, d] : trace) tr << it << "," << d << "\n";
  throw SolverError(msg.str(), tr.str());
}

Vector resolvent(const MapFn& tr, long long s, const Vector& x, const ConvexBody& body,
                 double tol, ContractionSolveReport* report) {
  if (s < 1) throw InputError("resolvent: s must be >= 1");
  if (!body.contains(x, 1e-9)) throw InputError("resolvent: anchor x must lie in the body");
  const double q = 1.0 - 1.0 / static_cast<double>(s);
  const double sd = static_cast<double>(s);
  MapFn contraction = [&](const Vector& z) {
    return Vector(x / sd + (1.0 - 1.0 / sd) * tr(z));
  };
  NormSpec eucl(NormKind::Euclidean, body.dim());
  long long budget = default_max_iterations(q, tol, body.diameter(eucl).value);
  auto solved = banach_solve(contraction, x, q, tol, budget);
  if (!body.contains(solved.fixedPoint, 1e-6))
    throw SolverError("resolvent: computed fixed point left the body");
  if (report) *report = solved;
  return solved.fixedPoint;
}

Vector resolvent(const MapExpr& t, const MapFn& r, long long s, const Vector& x,
                 const ConvexBody& body, double tol, ContractionSolveReport* report) {
  MapFn tr = [&](const Vector& z) { return t(r(z)); };
  return resolvent(tr, s, x, body, tol, report);
}

PropertyCertificate resolvent_nonexpansive_check(const MapExpr& t, const MapFn& r,
                                                 long long s, const ConvexBody& body,
                                                 const NormSpec& space, int samplePairs,
                                                 double tol, unsigned seed) {
  PropertyCertificate cert;
  cert.property = Property::Nonexpansive;
  cert.tolerance = tol;
  cert.note = "resolvent with s=" + std::to_string(s);
  int n = 2;
  while (static_cast<long>(n) * (n - 1) / 2 < samplePairs) ++n;
  auto pts = body.sample(n, seed);
  cert.sampleCount = static_cast<int>(pts.size());
  std::vector<Vector> images;
  images.reserve(pts.size());
  const double solveTol = std::min(tol * 1e-2, 1e-10);
  for (const auto& p : pts) images.push_back(resolvent(t, r, s, p, body, solveTol));
  cert.verdict = Verdict::PassSampled;
  for (std::size_t i = 0; i < pts.size() && cert.checksPerformed < samplePairs; ++i) {
    for (std::size_t j = i + 1; j < pts.size() && cert.checksPerformed < samplePairs; ++j) {
      ++cert.checksPerformed;
      double dxy = norm_of(space.kind, pts[i] - pts[j]);
      double dF = norm_of(space.kind, images[i] - images[j]);
      if (dF > dxy + tol) {
        cert.witnesses.push_back(Witness{{pts[i], pts[j]}, -1.0, -1, -1, dF, dxy});
        cert.verdict = Verdict::Fail;
      }
    }
  }
  return cert;
}

std::vector<long long> default_s_schedule() {
  std::vector<long long> s;
  for (int k = 1; k <= 12; ++k) s.push_back(1LL << k);
  return s;
}

ApfsCertificate apfs_certify(const MapExpr& t, const MapFn& r, const Vector& x,
                             const ConvexBody& body, const NormSpec& space,
                             std::vector<long long> sSchedule, double tol) {
  if (sSchedule.empty()) sSchedule = default_s_schedule();
  for (std::size_t i = 1; i < sSchedule.size(); ++i)
    if (sSchedule[i] <= sSchedule[i - 1])
      throw InputError("apfs_certify: s schedule must be strictly increasing");
  if (sSchedule.front() < 1) throw InputError("apfs_certify: s values must be >= 1");

  ApfsCertificate cert;
  cert.tolerance = tol;
  auto diam = body.diameter(space);
  cert.diameter = diam.value;
  cert.diameterExact = diam.exact;
  const double solveTol = std::max(1e-12, tol * 1e-2);

  cert.pass = true;
  for (long long s : sSchedule) {
    Vector f = resolvent(t, r, s, x, body, solveTol);
    Vector w = t(r(f));
    double residual = norm_of(space.kind, w - f);
    double bound = diam.value / static_cast<double>(s);
    double identity = norm_of(space.kind, w - x) / static_cast<double>(s);
    double gap = std::abs(residual - identity);
    cert.sValues.push_back(s);
    cert.residuals.push_back(residual);
    cert.bounds.push_back(bound);
    cert.identityGaps.push_back(gap);
    if (residual > bound + tol || gap > tol) {
      cert.pass = false;
      cert.failures.push_back(s);
    }
  }
  return cert;
}

}  // namespace fixpoint
