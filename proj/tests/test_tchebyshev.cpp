#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "fixpoint/errors.hpp"
#include "fixpoint/tchebyshev.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace fixpoint;
using testutil::vec2;
using testutil::vec3;

namespace {

const double kPi = std::acos(-1.0);

NormSpec euclid2() { return NormSpec(NormKind::Euclidean, 2); }

std::vector<Vector> regular_polygon(int n, double phase = 0.0) {
  std::vector<Vector> pts;
  for (int k = 0; k < n; ++k) {
    double a = phase + 2.0 * kPi * k / n;
    pts.push_back(vec2(std::cos(a), std::sin(a)));
  }
  return pts;
}

}  // namespace

TEST_CASE("two points: midpoint center") {
  auto res = chebyshev_center({vec2(0, 0), vec2(2, 0)}, euclid2());
  CHECK(res.exact);
  CHECK(res.radius == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((res.center - vec2(1, 0)).norm() <= 1e-12);
  CHECK(res.enclosureResidual <= 1e-12);
  CHECK(res.optimalityGap == 0.0);
  CHECK(res.boxLo == res.center);
}

TEST_CASE("right triangle: hypotenuse midpoint, cross-checked on a grid") {
  std::vector<Vector> pts = {vec2(0, 0), vec2(1, 0), vec2(0, 1)};
  auto res = chebyshev_center(pts, euclid2());
  CHECK((res.center - vec2(0.5, 0.5)).norm() <= 1e-12);
  CHECK(res.radius == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));

  auto oracle = testutil::minimax_grid(pts, NormKind::Euclidean, vec2(-0.2, -0.2),
                                       vec2(1.2, 1.2), 1e-3);
  CHECK(std::abs(res.radius - oracle.radius) <= 2e-3);
  CHECK((res.center - oracle.center).lpNorm<Eigen::Infinity>() <= 2e-3);
}

TEST_CASE("collinear points with duplicates") {
  auto res = chebyshev_center(
      {vec2(0, 0), vec2(1, 0), vec2(2, 0), vec2(1, 0), vec2(2, 0)}, euclid2());
  CHECK((res.center - vec2(1, 0)).norm() <= 1e-9);
  CHECK(res.radius == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("cocircular points recover their circumcircle") {
  std::vector<Vector> pts;
  Vector c0 = vec2(3, -2);
  for (int k = 0; k < 6; ++k) {
    double a = kPi / 18.0 + k * kPi / 3.0;
    pts.push_back(c0 + 2.5 * vec2(std::cos(a), std::sin(a)));
  }
  pts.push_back(vec2(3, -2));
  pts.push_back(vec2(2.5, -1.5));
  auto res = chebyshev_center(pts, euclid2());
  CHECK((res.center - c0).norm() <= 1e-9);
  CHECK(res.radius == doctest::Approx(2.5).epsilon(1e-9));

  std::vector<Vector> permuted(pts.rbegin(), pts.rend());
  auto res2 = chebyshev_center(permuted, euclid2());
  CHECK((res.center - res2.center).norm() <= 1e-7);
}

TEST_CASE("max norm: per-coordinate closed form and the full center box") {
  std::vector<Vector> pts = {vec2(0, 0), vec2(4, 2)};
  auto res = chebyshev_center(pts, NormSpec(NormKind::Max, 2));
  CHECK(res.exact);
  CHECK(res.radius == 2.0);
  CHECK(res.center == vec2(2, 1));
  CHECK(res.boxLo == vec2(2, 0));
  CHECK(res.boxHi == vec2(2, 2));

  auto oracle = testutil::minimax_grid(pts, NormKind::Max, vec2(0, 0), vec2(4, 2), 1e-3);
  CHECK(std::abs(res.radius - oracle.radius) <= 2e-3);

  // Every box point is a center.
  for (double y : {0.0, 0.7, 2.0}) {
    double reach = 0.0;
    for (const auto& p : pts)
      reach = std::max(reach, (vec2(2, y) - p).lpNorm<Eigen::Infinity>());
    CHECK(reach <= res.radius + 1e-12);
  }
}

TEST_CASE("high-dimensional euclidean descent with dual gap") {
  std::vector<Vector> cross;
  for (int i = 0; i < 4; ++i) {
    Vector e = Vector::Zero(4);
    e[i] = 1.0;
    cross.push_back(e);
    cross.push_back(-e);
  }
  auto res = chebyshev_center(cross, NormSpec(NormKind::Euclidean, 4));
  CHECK_FALSE(res.exact);
  CHECK(res.radius == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(res.center.norm() <= 1e-9);
  CHECK(res.optimalityGap <= 1e-9);

  Vector shift(4);
  shift << 1, -2, 0.5, 3;
  std::vector<Vector> moved;
  for (const auto& p : cross) moved.push_back(p + shift);
  auto res2 = chebyshev_center(moved, NormSpec(NormKind::Euclidean, 4));
  CHECK((res2.center - shift).norm() <= 1e-9);
  CHECK(res2.radius == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("random cloud in dimension 5: enclosure and gap accounting") {
  std::mt19937 rng(77);
  std::vector<Vector> pts;
  for (int i = 0; i < 30; ++i) pts.push_back(testutil::random_vec(rng, 5, -1.0, 1.0));
  auto res = chebyshev_center(pts, NormSpec(NormKind::Euclidean, 5));
  CHECK(res.enclosureResidual <= 1e-9);
  CHECK(res.optimalityGap >= 0.0);
  CHECK(res.optimalityGap <= 0.1 * res.radius);
}

TEST_CASE("sum norm: symmetric instances reach the pairwise lower bound") {
  auto seg = chebyshev_center({vec2(0, 0), vec2(2, 0)}, NormSpec(NormKind::Sum, 2));
  CHECK(seg.radius == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(seg.optimalityGap <= 1e-6);

  auto diamond = chebyshev_center({vec2(1, 0), vec2(-1, 0), vec2(0, 1), vec2(0, -1)},
                                  NormSpec(NormKind::Sum, 2));
  CHECK(diamond.radius == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(diamond.center.norm() <= 1e-6);

  auto simplex = chebyshev_center({vec3(1, 0, 0), vec3(0, 1, 0), vec3(0, 0, 1)},
                                  NormSpec(NormKind::Sum, 3));
  CHECK(simplex.radius == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sum norm: the gap is reported honestly when the bound is loose") {
  std::vector<Vector> pts = {vec3(0, 0, 0), vec3(1, 1, 0), vec3(0, 1, 1), vec3(1, 0, 1)};
  auto res = chebyshev_center(pts, NormSpec(NormKind::Sum, 3));
  // All pairwise distances are 2, but no point is within 1 of all four.
  CHECK(res.radius >= 1.4);
  CHECK(res.radius <= 1.8);
  CHECK(res.optimalityGap == doctest::Approx(res.radius - 1.0).epsilon(1e-12));
  CHECK(res.enclosureResidual <= 1e-9);
  CHECK_FALSE(res.exact);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS((void)chebyshev_center({}, euclid2()), InputError);
  CHECK_THROWS_AS((void)chebyshev_center({vec2(0, 0), vec3(0, 0, 0)}, euclid2()),
                  InputError);
  CHECK_THROWS_AS((void)chebyshev_center({vec3(0, 0, 0)}, euclid2()), InputError);
}

TEST_CASE("center invariance under a rotation fixing the configuration") {
  auto pts = regular_polygon(3);
  auto cert = invariance_check(MapExpr::rotation(0, 1, 2.0 * kPi / 3.0), pts, euclid2());
  CHECK(cert.passed());
  CHECK(cert.property == Property::CenterInvariance);
  CHECK(to_string(cert.property) == "centerInvariance");
}

TEST_CASE("center invariance under the identity is unconditional") {
  std::vector<Vector> pts = {vec2(0.3, 0.4), vec2(2, 1), vec2(-1, 0.5)};
  auto cert = invariance_check(MapExpr::identity(), pts, euclid2());
  CHECK(cert.passed());
}

TEST_CASE("center invariance under a rotation about an off-origin point") {
  Matrix rot(2, 2);
  rot << 0, -1, 1, 0;
  Vector b = vec2(1, 1) - rot * vec2(1, 1);
  MapExpr t = MapExpr::affine(rot, b);
  std::vector<Vector> square = {vec2(0, 0), vec2(2, 0), vec2(2, 2), vec2(0, 2)};
  CHECK((t(vec2(0, 0)) - vec2(2, 0)).norm() <= 1e-12);

  auto cert = invariance_check(t, square, euclid2());
  CHECK(cert.passed());
  CHECK((t(vec2(1, 1)) - vec2(1, 1)).norm() <= 1e-12);
}

TEST_CASE("invariance hypotheses are enforced") {
  std::vector<Vector> pts = {vec2(0, 0), vec2(2, 0)};
  MapExpr collapse = MapExpr::constant(vec2(1, 0));
  CHECK_THROWS_WITH_AS((void)invariance_check(collapse, pts, euclid2()),
                       doctest::Contains("preserve"), InputError);
  MapExpr doubling = MapExpr::affine(2.0 * Matrix::Identity(2, 2), vec2(0, 0));
  CHECK_THROWS_WITH_AS((void)invariance_check(doubling, pts, euclid2()),
                       doctest::Contains("nonexpansive"), InputError);
}

TEST_CASE("common fixed point inside the center set: pentagon rotations") {
  auto pts = regular_polygon(5);
  std::vector<MapExpr> family = {MapExpr::rotation(0, 1, 2.0 * kPi / 5.0),
                                 MapExpr::rotation(0, 1, 4.0 * kPi / 5.0)};
  auto out = fixed_point_in_center(family, pts, euclid2());
  CHECK(out.certificate.passed());
  CHECK(out.point.norm() <= 1e-9);
  CHECK(out.center.radius == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("common fixed point: identity family returns the center unconditionally") {
  std::vector<Vector> pts = {vec2(0, 0), vec2(1, 0), vec2(0, 1)};
  auto out = fixed_point_in_center({MapExpr::identity()}, pts, euclid2());
  CHECK(out.certificate.passed());
  CHECK((out.point - vec2(0.5, 0.5)).norm() <= 1e-12);
}

TEST_CASE("common fixed point: reflection family, euclidean and max norm") {
  Matrix refl = Matrix::Identity(2, 2);
  refl(1, 1) = -1.0;
  std::vector<MapExpr> family = {MapExpr::affine(refl, Vector::Zero(2))};
  std::vector<Vector> pts = {vec2(0, 1), vec2(0, -1)};

  auto euclidOut = fixed_point_in_center(family, pts, euclid2());
  CHECK(euclidOut.certificate.passed());
  CHECK(euclidOut.point.norm() <= 1e-12);

  auto maxOut = fixed_point_in_center(family, pts, NormSpec(NormKind::Max, 2));
  CHECK(maxOut.certificate.passed());
  CHECK(maxOut.point.norm() <= 1e-9);
  CHECK(maxOut.center.boxLo == vec2(-1, 0));
  CHECK(maxOut.center.boxHi == vec2(1, 0));
}

TEST_CASE("common fixed point: non-commuting family is refused") {
  Matrix rot(2, 2);
  rot << 0, -1, 1, 0;
  Matrix refl = Matrix::Identity(2, 2);
  refl(1, 1) = -1.0;
  std::vector<MapExpr> family = {MapExpr::affine(rot, Vector::Zero(2)),
                                 MapExpr::affine(refl, Vector::Zero(2))};
  std::vector<Vector> square = {vec2(1, 1), vec2(-1, 1), vec2(-1, -1), vec2(1, -1)};
  CHECK_THROWS_WITH_AS((void)fixed_point_in_center(family, square, euclid2()),
                       doctest::Contains("commute"), InputError);
}
