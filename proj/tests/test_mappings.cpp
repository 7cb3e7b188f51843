#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fixpoint/certify.hpp"
#include "fixpoint/errors.hpp"
#include "fixpoint/map_expr.hpp"
#include "helpers.hpp"

using namespace fixpoint;
using testutil::vec1;
using testutil::vec2;

namespace {

const double kPi = std::acos(-1.0);

ConvexBody unit_disk() { return ConvexBody::ball(vec2(0, 0), 1.0); }

MapExpr x_axis_projection() {
  return MapExpr::projectOnto(ConvexBody::hull({vec2(-1, 0), vec2(1, 0)}));
}

}  // namespace

TEST_CASE("evaluation examples") {
  auto rot = MapExpr::rotation(0, 1, kPi / 2);
  CHECK((rot(vec2(1, 0)) - vec2(0, 1)).norm() < 1e-15);

  auto seg = MapExpr::compose({MapExpr::projectOnto(ConvexBody::hull({vec2(0, 0), vec2(1, 0)}))});
  CHECK((seg(vec2(0.5, 1)) - vec2(0.5, 0)).norm() < 1e-12);

  auto avg = MapExpr::convexCombo({0.5, 0.5}, {MapExpr::identity(), MapExpr::constant(vec2(0, 0))});
  CHECK((avg(vec2(2, 4)) - vec2(1, 2)).norm() == 0.0);
}

TEST_CASE("compose applies right-to-left") {
  Matrix two = 2.0 * Matrix::Identity(1, 1);
  auto doubler = MapExpr::affine(two, Vector::Zero(1));
  auto plus_one = MapExpr::affine(Matrix::Identity(1, 1), vec1(1));
  auto f = MapExpr::compose({plus_one, doubler});  // x -> 2x + 1
  CHECK(f(vec1(3))[0] == 7.0);
  auto g = MapExpr::compose({doubler, plus_one});  // x -> 2(x + 1)
  CHECK(g(vec1(3))[0] == 8.0);
}

TEST_CASE("construction validation") {
  CHECK_THROWS_AS(MapExpr::convexCombo({0.5, 0.6}, {MapExpr::identity(), MapExpr::identity()}),
                  InputError);
  CHECK_THROWS_AS(MapExpr::convexCombo({1.5, -0.5}, {MapExpr::identity(), MapExpr::identity()}),
                  InputError);
  CHECK_THROWS_AS(MapExpr::rotation(1, 1, 0.0), InputError);
  CHECK_THROWS_AS(MapExpr::compose({}), InputError);
  CHECK_THROWS_AS(MapExpr::affine(Matrix::Identity(2, 2), Vector::Zero(3)), InputError);
  CHECK_THROWS_AS(MapExpr::identity().matrix(), InputError);
}

TEST_CASE("operator norms") {
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  CHECK(operator_norm(a, NormKind::Sum) == 6.0);
  CHECK(operator_norm(a, NormKind::Max) == 7.0);

  Matrix sym(2, 2);
  sym << 1.5, -0.5, -0.5, 1.5;  // eigenvalues 1 and 2
  CHECK(operator_norm(sym, NormKind::Euclidean) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(operator_norm(2.0 * Matrix::Identity(3, 3), NormKind::Euclidean) ==
        doctest::Approx(2.0).epsilon(1e-9));
  CHECK(operator_norm(Matrix::Zero(2, 2), NormKind::Euclidean) == 0.0);
}

TEST_CASE("nonexpansivity certificates: structural grades") {
  auto disk = unit_disk();
  NormSpec e2(NormKind::Euclidean, 2);

  auto half = MapExpr::affine(0.5 * Matrix::Identity(2, 2), Vector::Zero(2));
  auto c = certify_nonexpansive(half, disk, e2);
  CHECK(c.verdict == Verdict::CertifiedAnalytic);

  auto twice = MapExpr::affine(2.0 * Matrix::Identity(2, 2), Vector::Zero(2));
  auto cTwice = certify_nonexpansive(twice, disk, e2, 50);
  CHECK(cTwice.verdict == Verdict::Fail);
  CHECK_FALSE(cTwice.witnesses.empty());

  auto proj = MapExpr::projectOnto(disk);
  CHECK(certify_nonexpansive(proj, disk, e2).verdict == Verdict::CertifiedAnalytic);

  auto composed = MapExpr::compose({proj, MapExpr::rotation(0, 1, 0.3)});
  CHECK(certify_nonexpansive(composed, disk, e2).verdict == Verdict::CertifiedAnalytic);

  auto combo = MapExpr::convexCombo({0.3, 0.7}, {half, proj});
  CHECK(certify_nonexpansive(combo, disk, e2).verdict == Verdict::CertifiedAnalytic);
}

TEST_CASE("doubling map fails with a genuine witness pair") {
  auto big = ConvexBody::ball(vec2(0, 0), 10.0);
  NormSpec e2(NormKind::Euclidean, 2);
  auto twice = MapExpr::affine(2.0 * Matrix::Identity(2, 2), Vector::Zero(2));
  // self-map fails first on the big ball? no: 2x leaves the ball, so the
  // certificate reports the failed precondition
  auto cert = certify_nonexpansive(twice, big, e2, 50);
  CHECK(cert.verdict == Verdict::Fail);

  // restrict to a tiny ball centered away from 0 is still not a self-map;
  // use halving composed with doubling to exercise the sampled path instead
  auto rotMax = MapExpr::rotation(0, 1, kPi / 4);
  NormSpec mx(NormKind::Max, 2);
  auto sampled = certify_nonexpansive(rotMax, unit_disk(), mx, 60);
  CHECK(sampled.verdict == Verdict::Fail);  // under max-norm a rotation expands some pairs
  REQUIRE_FALSE(sampled.witnesses.empty());
  const auto& w = sampled.witnesses.front();
  CHECK(norm_of(NormKind::Max, Vector(rotMax(w.points[0]) - rotMax(w.points[1]))) ==
        doctest::Approx(w.measured));
  CHECK(w.measured > w.bound);
}

TEST_CASE("closure soundness meta-test: analytic certificates survive sampling") {
  auto disk = unit_disk();
  NormSpec e2(NormKind::Euclidean, 2);
  std::vector<MapExpr> analytic = {
      MapExpr::projectOnto(disk),
      MapExpr::rotation(0, 1, 1.1),
      MapExpr::affine(0.9 * Matrix::Identity(2, 2), Vector::Zero(2)),
      MapExpr::convexCombo({0.5, 0.5}, {MapExpr::identity(), MapExpr::projectOnto(disk)}),
      MapExpr::compose({MapExpr::projectOnto(disk), MapExpr::rotation(0, 1, 2.0)}),
  };
  for (const auto& m : analytic) {
    auto structural = certify_nonexpansive(m, disk, e2);
    REQUIRE(structural.verdict == Verdict::CertifiedAnalytic);
    auto sampled = certify_nonexpansive(m, disk, e2, 33, 1e-9, 1, true);
    CHECK(sampled.verdict == Verdict::PassSampled);
    CHECK(sampled.checksPerformed >= 500);
  }
}

TEST_CASE("firm nonexpansivity: identity and projections pass") {
  auto disk = unit_disk();
  CHECK(certify_firmly_nonexpansive(MapExpr::identity(), disk, 40).passed());
  auto proj = MapExpr::projectOnto(ConvexBody::box(vec2(-0.5, -0.5), vec2(0.5, 0.5)));
  auto cert = certify_firmly_nonexpansive(proj, disk, 40);
  CHECK(cert.verdict == Verdict::PassSampled);
}

TEST_CASE("firm nonexpansivity: half turn fails at the antipodal witness") {
  auto cert = certify_firmly_nonexpansive(MapExpr::rotation(0, 1, kPi), unit_disk(), 40);
  REQUIRE(cert.verdict == Verdict::Fail);
  REQUIRE_FALSE(cert.witnesses.empty());
  const auto& w = cert.witnesses.front();
  CHECK((w.points[0] - vec2(1, 0)).norm() < 1e-12);
  CHECK((w.points[1] - vec2(-1, 0)).norm() < 1e-12);
  CHECK(w.a == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(w.measured == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(w.bound == doctest::Approx(0.0).scale(1).epsilon(1e-9));
}

TEST_CASE("firm pass implies nonexpansive pass on the same samples") {
  auto disk = unit_disk();
  NormSpec e2(NormKind::Euclidean, 2);
  std::vector<MapExpr> maps = {
      MapExpr::projectOnto(ConvexBody::hull({vec2(-1, 0), vec2(1, 0)})),
      MapExpr::identity(),
      MapExpr::affine(0.25 * Matrix::Identity(2, 2), vec2(0.1, 0)),
  };
  for (const auto& m : maps) {
    auto firm = certify_firmly_nonexpansive(m, disk, 40, {}, 1e-9, 3);
    REQUIRE(firm.passed());
    // a = 0.01 grid point dominating gives nonexpansivity up to 100x tol
    auto ne = certify_nonexpansive(m, disk, e2, 40, 1e-7, 3, true);
    CHECK(ne.passed());
  }
}

TEST_CASE("commutation certificates") {
  auto disk = unit_disk();
  NormSpec e2(NormKind::Euclidean, 2);

  auto r1 = MapExpr::rotation(0, 1, 0.7), r2 = MapExpr::rotation(0, 1, 2.1);
  CHECK(certify_commuting({r1, r2}, disk, e2, 60).passed());

  auto proj = x_axis_projection();
  auto halfTurn = MapExpr::rotation(0, 1, kPi);
  CHECK(certify_commuting({proj, halfTurn}, disk, e2, 60).passed());

  auto quarterTurn = MapExpr::rotation(0, 1, kPi / 2);
  auto bad = certify_commuting({proj, quarterTurn}, disk, e2, 60);
  REQUIRE(bad.verdict == Verdict::Fail);
  REQUIRE_FALSE(bad.witnesses.empty());
  CHECK((bad.witnesses.front().points[0] - vec2(1, 0)).norm() < 1e-12);
  CHECK(bad.witnesses.front().mapI == 0);
  CHECK(bad.witnesses.front().mapJ == 1);

  auto badSwapped = certify_commuting({quarterTurn, proj}, disk, e2, 60);
  CHECK(badSwapped.verdict == bad.verdict);
  auto goodSwapped = certify_commuting({halfTurn, proj}, disk, e2, 60);
  CHECK(goodSwapped.passed());
}

TEST_CASE("set preservation certificates") {
  NormSpec e2(NormKind::Euclidean, 2);
  std::vector<Vector> triangle;
  for (int k = 0; k < 3; ++k)
    triangle.push_back(vec2(std::cos(2 * kPi * k / 3), std::sin(2 * kPi * k / 3)));

  CHECK(certify_preserves_set(MapExpr::rotation(0, 1, 2 * kPi / 3), triangle, e2).passed());
  CHECK(certify_preserves_set(MapExpr::identity(), triangle, e2).passed());

  auto constant = MapExpr::constant(vec2(1, 0));
  auto fail = certify_preserves_set(constant, {vec2(1, 0), vec2(0, 1)}, e2);
  CHECK(fail.verdict == Verdict::Fail);
  CHECK_FALSE(fail.witnesses.empty());
}

TEST_CASE("self-map certificates") {
  auto box = ConvexBody::box(vec2(-1, -1), vec2(1, 1));
  auto cert = certify_self_map(MapExpr::rotation(0, 1, kPi / 4), box, 60);
  CHECK(cert.verdict == Verdict::Fail);  // corners rotate out of the box

  CHECK(certify_self_map(MapExpr::projectOnto(box), box).verdict == Verdict::CertifiedAnalytic);
  CHECK(certify_self_map(MapExpr::constant(vec2(0, 0)), box).verdict ==
        Verdict::CertifiedAnalytic);

  NormSpec e2(NormKind::Euclidean, 2);
  auto ne = certify_nonexpansive(MapExpr::rotation(0, 1, kPi / 4), box, e2, 60);
  CHECK(ne.verdict == Verdict::Fail);
  CHECK(ne.note == "self-map precondition failed");
}

TEST_CASE("maps describe themselves") {
  auto m = MapExpr::compose({MapExpr::rotation(0, 1, 1.0),
                             MapExpr::projectOnto(unit_disk())});
  CHECK(m.describe() == "compose[rotation(0,1;1) . projectOnto(ball)]");
}
