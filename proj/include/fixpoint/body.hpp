#pragma once

#include <vector>

#include "fixpoint/norms.hpp"
#include "fixpoint/types.hpp"

namespace fixpoint {

/// Halfspace normal . x <= offset. Normals are unit length after body
/// construction.
struct Halfspace {
  Vector normal;
  double offset = 0.0;
};

struct DiameterResult {
  double value = 0.0;
  bool exact = true;
};

/// Compact convex subset of R^n: the ambient set every map lives on.
/// Immutable after construction; construction verifies nonemptiness and
/// boundedness, so compactness holds by closedness.
class ConvexBody {
 public:
  enum class Shape { Ball, Box, Polytope, Hull };

  static ConvexBody ball(Vector center, double radius);
  static ConvexBody box(Vector lo, Vector hi);
  static ConvexBody polytope(std::vector<Halfspace> halfspaces);
  static ConvexBody hull(std::vector<Vector> vertices);

  Shape shape() const { return shape_; }
  Index dim() const { return dim_; }

  bool contains(const Vector& x, double tol = 1e-9) const;

  /// Euclidean metric projection: the unique nearest point of the body.
  /// Idempotent and nonexpansive.
  Vector project(const Vector& x) const;

  DiameterResult diameter(const NormSpec& space) const;

  /// Deterministic probe points: extreme points first, then a Halton fill
  /// projected into the body. Reproducible for a given seed.
  std::vector<Vector> sample(int count, unsigned seed = 0) const;

  const Vector& boundingLo() const { return bboxLo_; }
  const Vector& boundingHi() const { return bboxHi_; }

  // Shape accessors; valid only for the matching shape.
  const Vector& center() const;
  double radius() const;
  const Vector& lo() const;
  const Vector& hi() const;
  const std::vector<Halfspace>& halfspaces() const;
  const std::vector<Vector>& vertices() const;

  /// Vertex list: exact for box/hull and for polytopes in dimension <= 3.
  /// Throws for polytopes above dimension 3.
  std::vector<Vector> enumerateVertices() const;

  bool operator==(const ConvexBody& other) const;

 private:
  ConvexBody() = default;
  void finishBoundingBox();

  Shape shape_ = Shape::Box;
  Index dim_ = 0;

  Vector center_;
  double radius_ = 0.0;
  Vector lo_, hi_;
  std::vector<Halfspace> halfspaces_;
  Vector feasiblePoint_;
  std::vector<Vector> vertices_;

  Vector bboxLo_, bboxHi_;
};

/// Metric projection in the given space. Only the Euclidean norm has a
/// single-valued projection; other kinds are rejected as configuration
/// errors.
Vector project(const ConvexBody& body, const Vector& x, const NormSpec& space);

/// Halton low-discrepancy point in [0,1]^dim at the given index (>= 1).
Vector halton_point(long index, Index dim);

}  // namespace fixpoint
