#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fixpoint/body.hpp"
#include "fixpoint/errors.hpp"
#include "fixpoint/norms.hpp"

using namespace fixpoint;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

// Oracle: projection onto the segment [a, b] by parameter clamping.
Vector segment_project(const Vector& a, const Vector& b, const Vector& x) {
  Vector d = b - a;
  double t = std::clamp(d.dot(x - a) / d.squaredNorm(), 0.0, 1.0);
  return a + t * d;
}

// Oracle: projection onto the probability simplex (sort-based).
Vector simplex_project(const Vector& x) {
  std::vector<double> u(x.data(), x.data() + x.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  int rho = 0;
  for (int j = 0; j < static_cast<int>(u.size()); ++j) {
    cum += u[j];
    double t = (1.0 - cum) / (j + 1);
    if (u[j] + t > 0) {
      rho = j + 1;
      theta = t;
    }
  }
  (void)rho;
  return (x.array() + theta).max(0.0);
}

Vector random_vec(std::mt19937& rng, Index dim) {
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  Vector v(dim);
  for (Index i = 0; i < dim; ++i) v[i] = dist(rng);
  return v;
}

}  // namespace

TEST_CASE("norm values match the definitions") {
  NormSpec e2(NormKind::Euclidean, 2), m2(NormKind::Max, 2), s3(NormKind::Sum, 3);
  CHECK(norm(e2, vec2(3, 4)) == 5.0);
  CHECK(norm(m2, vec2(-2, 1)) == 2.0);
  Vector ones = Vector::Ones(3);
  CHECK(norm(s3, ones) == 3.0);
  CHECK_THROWS_AS(norm(e2, ones), InputError);
}

TEST_CASE("norm axioms hold on sampled pairs") {
  std::mt19937 rng(42);
  for (NormKind kind : {NormKind::Euclidean, NormKind::Sum, NormKind::Max}) {
    NormSpec space(kind, 4);
    for (int i = 0; i < 1000; ++i) {
      Vector x = random_vec(rng, 4), y = random_vec(rng, 4);
      double alpha = std::uniform_real_distribution<double>(-5, 5)(rng);
      CHECK(norm(space, x) >= 0.0);
      CHECK(norm(space, Vector(alpha * x)) ==
            doctest::Approx(std::abs(alpha) * norm(space, x)).epsilon(1e-12));
      CHECK(norm(space, Vector(x + y)) <= norm(space, x) + norm(space, y) + 1e-12);
    }
    CHECK(norm(space, Vector(Vector::Zero(4))) == 0.0);
  }
}

TEST_CASE("projection examples") {
  auto box = ConvexBody::box(vec2(0, 0), vec2(1, 1));
  CHECK((box.project(vec2(2, 0.5)) - vec2(1, 0.5)).norm() == 0.0);

  auto ball = ConvexBody::ball(vec2(0, 0), 1.0);
  CHECK((ball.project(vec2(3, 4)) - vec2(0.6, 0.8)).norm() < 1e-15);

  auto seg = ConvexBody::hull({vec2(0, 0), vec2(1, 0)});
  Vector want = segment_project(vec2(0, 0), vec2(1, 0), vec2(0.5, 1));
  CHECK((seg.project(vec2(0.5, 1)) - want).norm() < 1e-12);
  CHECK((seg.project(vec2(0.5, 1)) - vec2(0.5, 0)).norm() < 1e-12);
}

TEST_CASE("projection is idempotent and nonexpansive on samples") {
  std::vector<ConvexBody> bodies;
  bodies.push_back(ConvexBody::box(vec2(-1, -1), vec2(1, 1)));
  bodies.push_back(ConvexBody::ball(vec2(0.5, 0), 2.0));
  bodies.push_back(ConvexBody::hull({vec2(0, 0), vec2(2, 0), vec2(0, 2)}));
  std::vector<Halfspace> hs;
  for (auto [a, b, c] : {std::tuple{1.0, 0.0, 1.0},
                         {-1.0, 0.0, 1.0},
                         {0.0, 1.0, 1.0},
                         {0.0, -1.0, 1.0}})
    hs.push_back({vec2(a, b), c});
  bodies.push_back(ConvexBody::polytope(hs));

  std::mt19937 rng(7);
  for (const auto& body : bodies) {
    for (int i = 0; i < 50; ++i) {
      Vector x = random_vec(rng, 2), y = random_vec(rng, 2);
      Vector px = body.project(x), py = body.project(y);
      CHECK(body.contains(px, 1e-9));
      CHECK((body.project(px) - px).norm() < 1e-12);
      CHECK((px - py).norm() <= (x - y).norm() + 1e-9);
    }
  }
}

TEST_CASE("polytope projection agrees with box clamping on the unit square") {
  std::vector<Halfspace> hs;
  for (auto [a, b, c] : {std::tuple{1.0, 0.0, 1.0},
                         {-1.0, 0.0, 0.0},
                         {0.0, 1.0, 1.0},
                         {0.0, -1.0, 0.0}})
    hs.push_back({vec2(a, b), c});
  auto poly = ConvexBody::polytope(hs);
  auto box = ConvexBody::box(vec2(0, 0), vec2(1, 1));
  std::mt19937 rng(11);
  for (int i = 0; i < 100; ++i) {
    Vector x = random_vec(rng, 2);
    CHECK((poly.project(x) - box.project(x)).norm() < 1e-8);
  }
}

TEST_CASE("diameter examples") {
  NormSpec e2(NormKind::Euclidean, 2);
  auto box = ConvexBody::box(vec2(0, 0), vec2(1, 1));
  CHECK(box.diameter(e2).value == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(box.diameter(e2).exact);

  auto ball = ConvexBody::ball(vec2(0, 0), 1.0);
  CHECK(ball.diameter(e2).value == 2.0);

  auto tri = ConvexBody::hull({vec2(0, 0), vec2(1, 0), vec2(0, 1)});
  double oracle = 0.0;
  for (const auto& p : tri.vertices())
    for (const auto& q : tri.vertices()) oracle = std::max(oracle, (p - q).norm());
  CHECK(tri.diameter(e2).value == doctest::Approx(oracle).epsilon(1e-15));
  CHECK(tri.diameter(e2).value == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("diameter dominates sampled pairwise distances") {
  NormSpec spaces[] = {NormSpec(NormKind::Euclidean, 2), NormSpec(NormKind::Sum, 2),
                       NormSpec(NormKind::Max, 2)};
  std::vector<ConvexBody> bodies;
  bodies.push_back(ConvexBody::ball(vec2(1, -1), 1.5));
  bodies.push_back(ConvexBody::box(vec2(-2, 0), vec2(1, 3)));
  bodies.push_back(ConvexBody::hull({vec2(0, 0), vec2(3, 1), vec2(-1, 2), vec2(1, 1)}));
  for (const auto& body : bodies) {
    auto pts = body.sample(40, 3);
    for (const auto& space : spaces) {
      auto diam = body.diameter(space);
      for (const auto& p : pts)
        for (const auto& q : pts)
          CHECK(norm_of(space.kind, p - q) <= diam.value + 1e-9);
    }
  }
}

TEST_CASE("sampling: extreme points first, all samples inside") {
  Vector lo1(1), hi1(1);
  lo1 << 0;
  hi1 << 1;
  auto seg = ConvexBody::box(lo1, hi1);
  auto pts = seg.sample(3);
  REQUIRE(pts.size() == 3);
  CHECK(pts[0][0] == 0.0);
  CHECK(pts[1][0] == 1.0);
  CHECK(pts[2][0] == 0.5);

  auto ball = ConvexBody::ball(vec2(0, 0), 1.0);
  auto bpts = ball.sample(5);
  REQUIRE(bpts.size() == 5);
  CHECK((bpts[0] - vec2(1, 0)).norm() == 0.0);
  CHECK((bpts[1] - vec2(-1, 0)).norm() == 0.0);
  CHECK((bpts[2] - vec2(0, 1)).norm() == 0.0);
  CHECK((bpts[3] - vec2(0, -1)).norm() == 0.0);
  CHECK((bpts[4] - vec2(0, 0)).norm() == 0.0);

  for (const auto& body :
       {ConvexBody::hull({vec2(0, 0), vec2(2, 1), vec2(1, 3)}),
        ConvexBody::ball(vec2(4, 4), 0.5)}) {
    for (const auto& p : body.sample(64, 5)) CHECK(body.contains(p, 1e-9));
  }
}

TEST_CASE("sampling is reproducible per seed") {
  auto ball = ConvexBody::ball(vec2(0, 0), 1.0);
  auto a = ball.sample(32, 9), b = ball.sample(32, 9), c = ball.sample(32, 10);
  bool same = true, differs = false;
  for (int i = 0; i < 32; ++i) {
    same = same && (a[i] - b[i]).norm() == 0.0;
    differs = differs || (a[i] - c[i]).norm() > 0.0;
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("construction errors") {
  CHECK_THROWS_AS(ConvexBody::ball(vec2(0, 0), -1.0), InputError);
  CHECK_THROWS_AS(ConvexBody::box(vec2(1, 1), vec2(0, 0)), InputError);
  CHECK_THROWS_AS(ConvexBody::hull({}), InputError);
  Vector bad = vec2(0, 0);
  bad[0] = std::nan("");
  CHECK_THROWS_AS(ConvexBody::ball(bad, 1.0), InputError);

  // halfplane: unbounded
  CHECK_THROWS_AS(ConvexBody::polytope({{vec2(1, 0), 1.0}}), InputError);
  // x <= -1 and x >= 2: empty
  CHECK_THROWS_AS(
      ConvexBody::polytope({{vec2(1, 0), -1.0}, {vec2(-1, 0), -2.0},
                            {vec2(0, 1), 1.0}, {vec2(0, -1), 1.0}}),
      InputError);
}

TEST_CASE("vertex enumeration") {
  auto box = ConvexBody::box(vec2(0, 0), vec2(2, 1));
  CHECK(box.enumerateVertices().size() == 4);

  // octahedron |x|+|y|+|z| <= 1 from its 8 facets
  std::vector<Halfspace> hs;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1}) {
        Vector n(3);
        n << sx, sy, sz;
        hs.push_back({n, 1.0});
      }
  auto oct = ConvexBody::polytope(hs);
  auto verts = oct.enumerateVertices();
  CHECK(verts.size() == 6);
  for (const auto& v : verts)
    CHECK(std::abs(v.lpNorm<1>() - 1.0) < 1e-9);
  NormSpec e3(NormKind::Euclidean, 3);
  auto diam = oct.diameter(e3);
  CHECK(diam.exact);
  CHECK(diam.value == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("polytope above dimension 3 reports inexact diameter") {
  std::vector<Halfspace> hs;
  for (Index i = 0; i < 4; ++i) {
    Vector e = Vector::Zero(4);
    e[i] = 1.0;
    hs.push_back({e, 1.0});
    hs.push_back({Vector(-e), 0.0});
  }
  auto cube = ConvexBody::polytope(hs);
  CHECK_THROWS_AS(cube.enumerateVertices(), InputError);
  NormSpec e4(NormKind::Euclidean, 4);
  auto diam = cube.diameter(e4);
  CHECK_FALSE(diam.exact);
  CHECK(diam.value >= 2.0 - 1e-6);
  CHECK(diam.value <= 2.0 + 1e-3);
}

TEST_CASE("high-dimensional hull projection matches the simplex oracle") {
  std::vector<Vector> verts;
  for (Index i = 0; i < 4; ++i) {
    Vector e = Vector::Zero(4);
    e[i] = 1.0;
    verts.push_back(e);
  }
  auto simplex = ConvexBody::hull(verts);
  std::mt19937 rng(13);
  for (int i = 0; i < 25; ++i) {
    Vector x = random_vec(rng, 4);
    Vector got = simplex.project(x);
    Vector want = simplex_project(x);
    CHECK((got - want).norm() < 1e-4);
  }
}

TEST_CASE("projection under non-euclidean norms is a configuration error") {
  auto ball = ConvexBody::ball(vec2(0, 0), 1.0);
  CHECK_THROWS_AS(project(ball, vec2(3, 4), NormSpec(NormKind::Max, 2)), ConfigError);
  CHECK((project(ball, vec2(3, 4), NormSpec(NormKind::Euclidean, 2)) - vec2(0.6, 0.8))
            .norm() < 1e-15);
}

TEST_CASE("norm kind parsing") {
  CHECK(norm_kind_from_string("euclidean") == NormKind::Euclidean);
  CHECK(norm_kind_from_string("l1") == NormKind::Sum);
  CHECK(norm_kind_from_string("max") == NormKind::Max);
  CHECK_THROWS_AS(norm_kind_from_string("spectral"), ConfigError);
  CHECK(to_string(NormKind::Sum) == "sum");
}
