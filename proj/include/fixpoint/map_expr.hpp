#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fixpoint/body.hpp"
#include "fixpoint/types.hpp"

namespace fixpoint {

enum class MapKind {
  Affine,
  ProjectOnto,
  Rotation,
  Constant,
  Compose,
  ConvexCombo,
  Identity
};

/// Immutable self-map expression over R^n. Evaluation is pure; nodes are
/// shared, so copies are cheap and safe to use concurrently.
class MapExpr {
 public:
  static MapExpr affine(Matrix a, Vector b);
  static MapExpr projectOnto(ConvexBody body);
  /// Plane rotation in coordinates (i, j), i < j, by `angle` radians.
  static MapExpr rotation(Index i, Index j, double angle);
  static MapExpr constant(Vector p);
  /// Applied right-to-left: compose({f, g}) evaluates f(g(x)).
  static MapExpr compose(std::vector<MapExpr> maps);
  static MapExpr convexCombo(std::vector<double> weights, std::vector<MapExpr> maps);
  static MapExpr identity();

  MapKind kind() const;
  Vector evaluate(const Vector& x) const;
  Vector operator()(const Vector& x) const { return evaluate(x); }
  std::string describe() const;

  // Node accessors; throw InputError when the kind does not match.
  const Matrix& matrix() const;
  const Vector& offset() const;
  const ConvexBody& target() const;
  Index planeI() const;
  Index planeJ() const;
  double angle() const;
  const Vector& point() const;
  const std::vector<MapExpr>& children() const;
  const std::vector<double>& weights() const;

 private:
  struct Node;
  explicit MapExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

}  // namespace fixpoint
