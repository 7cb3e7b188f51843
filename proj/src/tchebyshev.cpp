#include "fixpoint/tchebyshev.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "fixpoint/body.hpp"
#include "fixpoint/errors.hpp"
#include "fixpoint/retraction.hpp"

namespace fixpoint {

namespace {

void validate_points(const std::vector<Vector>& points) {
  if (points.empty()) throw InputError("chebyshev_center: the point set is empty");
  for (const auto& p : points) {
    if (p.size() != points.front().size())
      throw InputError("chebyshev_center: points of mixed dimension");
    require_finite(p, "center point set");
  }
}

double farthest(const std::vector<Vector>& points, const Vector& c, NormKind kind,
                std::size_t* argmax = nullptr) {
  double best = -1.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double d = norm_of(kind, c - points[i]);
    if (d > best) {
      best = d;
      if (argmax) *argmax = i;
    }
  }
  return best;
}

double half_max_pairwise(const std::vector<Vector>& points, NormKind kind) {
  double best = 0.0;
  if (points.size() <= 2000) {
    for (std::size_t i = 0; i < points.size(); ++i)
      for (std::size_t j = i + 1; j < points.size(); ++j)
        best = std::max(best, norm_of(kind, points[i] - points[j]));
  } else {
    for (std::size_t j = 1; j < points.size(); ++j)
      best = std::max(best, norm_of(kind, points[0] - points[j]));
  }
  return best / 2.0;
}

struct BallCand {
  Vector c;
  double r2 = -1.0;  // negative marks the empty ball
};

bool ball_contains(const BallCand& b, const Vector& p) {
  if (b.r2 < 0.0) return false;
  return (p - b.c).squaredNorm() <= b.r2 + 1e-12 * (1.0 + b.r2);
}

// Smallest ball with every support point on its boundary. Degenerate
// supports (duplicates, collinear) reduce to the minimum-norm solution.
BallCand ball_of(const std::vector<Vector>& support, Index dim) {
  if (support.empty()) return {Vector::Zero(dim), -1.0};
  if (support.size() == 1) return {support[0], 0.0};
  const Vector& p0 = support[0];
  const Index k = static_cast<Index>(support.size()) - 1;
  Matrix v(dim, k);
  Vector rhs(k);
  for (Index i = 0; i < k; ++i) {
    v.col(i) = support[static_cast<std::size_t>(i) + 1] - p0;
    rhs[i] = v.col(i).squaredNorm();
  }
  Matrix m = 2.0 * (v.transpose() * v);
  Vector y = m.completeOrthogonalDecomposition().solve(rhs);
  BallCand b;
  b.c = p0 + v * y;
  b.r2 = 0.0;
  for (const auto& p : support) b.r2 = std::max(b.r2, (b.c - p).squaredNorm());
  return b;
}

BallCand welzl(const std::vector<Vector>& pts, std::size_t n, std::vector<Vector> support,
               Index dim) {
  if (n == 0 || support.size() == static_cast<std::size_t>(dim) + 1)
    return ball_of(support, dim);
  BallCand b = welzl(pts, n - 1, support, dim);
  if (ball_contains(b, pts[n - 1])) return b;
  support.push_back(pts[n - 1]);
  return welzl(pts, n - 1, std::move(support), dim);
}

CenterResult euclidean_exact(const std::vector<Vector>& points, Index dim) {
  std::vector<Vector> shuffled = points;
  std::mt19937 gen(987654321u);
  std::shuffle(shuffled.begin(), shuffled.end(), gen);
  BallCand b = welzl(shuffled, shuffled.size(), {}, dim);
  CenterResult res;
  res.center = b.c;
  res.radius = std::sqrt(std::max(0.0, b.r2));
  res.exact = true;
  res.method = "support-set recursion";
  return res;
}

// Farthest-point descent; a uniform dual combination over the active set
// lower-bounds the optimal radius, certifying the reported gap.
CenterResult euclidean_descent(const std::vector<Vector>& points, Index dim, double tol) {
  Vector c = Vector::Zero(dim);
  for (const auto& p : points) c += p;
  c /= static_cast<double>(points.size());

  double lower = half_max_pairwise(points, NormKind::Euclidean);
  Vector bestC = c;
  double bestR = farthest(points, c, NormKind::Euclidean);
  double gap = bestR - lower;

  auto dual_bound = [&](const Vector& at, double r) {
    const double eps = std::max(1e-9, 1e-6 * r);
    Vector mean = Vector::Zero(dim);
    double meanSq = 0.0;
    long active = 0;
    for (const auto& p : points) {
      if ((at - p).norm() >= r - eps) {
        mean += p;
        meanSq += p.squaredNorm();
        ++active;
      }
    }
    if (active == 0) return 0.0;
    mean /= static_cast<double>(active);
    meanSq /= static_cast<double>(active);
    return std::sqrt(std::max(0.0, meanSq - mean.squaredNorm()));
  };

  const double goal = std::max(tol, 1e-12);
  for (long k = 0; k < 200000; ++k) {
    std::size_t far = 0;
    double r = farthest(points, c, NormKind::Euclidean, &far);
    if (r < bestR) {
      bestR = r;
      bestC = c;
    }
    if (k % 64 == 0) {
      lower = std::max(lower, dual_bound(bestC, bestR));
      gap = bestR - lower;
      if (gap <= goal) break;
    }
    c += (points[far] - c) / static_cast<double>(k + 2);
  }
  lower = std::max(lower, dual_bound(bestC, bestR));

  CenterResult res;
  res.center = bestC;
  res.radius = bestR;
  res.optimalityGap = std::max(0.0, bestR - lower);
  res.method = "farthest-point descent, dual gap";
  return res;
}

CenterResult max_norm_exact(const std::vector<Vector>& points) {
  Vector lo = points.front(), hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  CenterResult res;
  res.radius = ((hi - lo) / 2.0).maxCoeff();
  res.center = (lo + hi) / 2.0;
  res.boxLo = (hi.array() - res.radius).matrix();
  res.boxHi = (lo.array() + res.radius).matrix();
  res.exact = true;
  res.method = "coordinate closed form";
  return res;
}

CenterResult sum_norm_descent(const std::vector<Vector>& points, Index dim, double tol) {
  const double lower = half_max_pairwise(points, NormKind::Sum);
  Vector lo = points.front(), hi = points.front();
  Vector mean = Vector::Zero(dim);
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
    mean += p;
  }
  mean /= static_cast<double>(points.size());

  Vector median(dim);
  std::vector<double> coord(points.size());
  for (Index i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < points.size(); ++j) coord[j] = points[j][i];
    std::nth_element(coord.begin(), coord.begin() + static_cast<long>(coord.size() / 2),
                     coord.end());
    median[i] = coord[coord.size() / 2];
  }

  Vector bestC = median;
  double bestF = farthest(points, median, NormKind::Sum);
  const double goal = std::max(tol, 1e-12);
  for (const Vector& start : {median, mean, Vector((lo + hi) / 2.0)}) {
    Vector c = start;
    for (long k = 0; k < 4000; ++k) {
      std::size_t far = 0;
      double f = farthest(points, c, NormKind::Sum, &far);
      if (f < bestF) {
        bestF = f;
        bestC = c;
      }
      if (bestF - lower <= goal) break;
      Vector g = (c - points[far]).array().sign().matrix();
      double gsq = g.squaredNorm();
      if (gsq == 0.0) break;
      c -= ((f - lower) / gsq) * g;
    }
    if (bestF - lower <= goal) break;
  }

  CenterResult res;
  res.center = bestC;
  res.radius = bestF;
  res.optimalityGap = std::max(0.0, bestF - lower);
  res.method = "subgradient descent, 3 restarts";
  return res;
}

ConvexBody ambient_hull(const std::vector<Vector>& points) {
  return ConvexBody::hull(points);
}

void require_family_hypotheses(const std::vector<MapExpr>& family,
                               const std::vector<Vector>& points, const NormSpec& space,
                               double tol, const char* caller) {
  auto body = ambient_hull(points);
  for (std::size_t i = 0; i < family.size(); ++i) {
    auto ne = certify_nonexpansive(family[i], body, space);
    if (!ne.passed())
      throw InputError(std::string(caller) + ": hypothesis certificate FAIL - member " +
                       std::to_string(i) + " is not nonexpansive on the hull");
    auto pres = certify_preserves_set(family[i], points, space, tol);
    if (!pres.passed())
      throw InputError(std::string(caller) + ": hypothesis certificate FAIL - member " +
                       std::to_string(i) + " does not preserve the set");
  }
  if (family.size() >= 2) {
    auto comm = certify_commuting(family, body, space);
    if (!comm.passed())
      throw InputError(std::string(caller) +
                       ": hypothesis certificate FAIL - family does not commute");
  }
}

}  // namespace

CenterResult chebyshev_center(const std::vector<Vector>& points, const NormSpec& space,
                              double tol) {
  validate_points(points);
  const Index dim = points.front().size();
  if (space.dimension != dim)
    throw InputError("chebyshev_center: space and point dimensions differ");

  CenterResult res;
  switch (space.kind) {
    case NormKind::Euclidean:
      res = dim <= 3 ? euclidean_exact(points, dim) : euclidean_descent(points, dim, tol);
      break;
    case NormKind::Max:
      res = max_norm_exact(points);
      break;
    case NormKind::Sum:
      res = sum_norm_descent(points, dim, tol);
      break;
  }
  res.norm = space.kind;
  if (res.boxLo.size() == 0) {
    res.boxLo = res.center;
    res.boxHi = res.center;
  }
  res.enclosureResidual = farthest(points, res.center, space.kind) - res.radius;
  return res;
}

PropertyCertificate invariance_check(const MapExpr& t, const std::vector<Vector>& points,
                                     const NormSpec& space, double tol) {
  validate_points(points);
  auto body = ambient_hull(points);
  auto ne = certify_nonexpansive(t, body, space);
  if (!ne.passed())
    throw InputError("invariance_check: hypothesis certificate FAIL - map is not "
                     "nonexpansive on the hull");
  auto pres = certify_preserves_set(t, points, space, tol);
  if (!pres.passed())
    throw InputError("invariance_check: hypothesis certificate FAIL - map does not "
                     "preserve the set");

  auto center = chebyshev_center(points, space, tol);
  Vector tc = t(center.center);
  double reach = farthest(points, tc, space.kind);

  PropertyCertificate cert;
  cert.property = Property::CenterInvariance;
  cert.tolerance = tol;
  cert.sampleCount = static_cast<int>(points.size());
  cert.checksPerformed = static_cast<long>(points.size());
  cert.note = "radius " + std::to_string(center.radius) + ", image center reach " +
              std::to_string(reach);
  if (reach <= center.radius + tol) {
    cert.verdict = Verdict::PassSampled;
  } else {
    cert.verdict = Verdict::Fail;
    cert.witnesses.push_back(Witness{{center.center, tc}, -1.0, -1, -1, reach,
                                     center.radius + tol});
  }
  return cert;
}

CommonFixedPointResult fixed_point_in_center(const std::vector<MapExpr>& family,
                                             const std::vector<Vector>& points,
                                             const NormSpec& space, double tol) {
  validate_points(points);
  require_family_hypotheses(family, points, space, tol, "fixed_point_in_center");

  CommonFixedPointResult out;
  out.center = chebyshev_center(points, space, tol);

  if (space.kind == NormKind::Max &&
      (out.center.boxHi - out.center.boxLo).maxCoeff() > tol) {
    auto box = ConvexBody::box(out.center.boxLo, out.center.boxHi);
    auto model = build_retraction(family, box, space, {}, std::max(tol, 1e-7));
    out.point = model((out.center.boxLo + out.center.boxHi) / 2.0);
  } else {
    out.point = out.center.center;
  }

  PropertyCertificate cert;
  cert.property = Property::FixedPoint;
  cert.tolerance = tol;
  cert.sampleCount = 1;
  cert.verdict = Verdict::PassSampled;
  double worst = 0.0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    double res = norm_of(space.kind, family[i](out.point) - out.point);
    worst = std::max(worst, res);
    ++cert.checksPerformed;
    if (res > tol) {
      cert.verdict = Verdict::Fail;
      cert.witnesses.push_back(Witness{{out.point}, -1.0, static_cast<int>(i), -1, res, tol});
    }
  }
  cert.note = "worst family residual at the returned point: " + std::to_string(worst);
  out.certificate = cert;
  return out;
}

}  // namespace fixpoint
