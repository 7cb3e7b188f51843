#include "fixpoint/map_expr.hpp"

#include <cmath>
#include <optional>
#include <sstream>

#include "fixpoint/errors.hpp"
#include "fixpoint/norms.hpp"

namespace fixpoint {

struct MapExpr::Node {
  MapKind kind;
  Matrix a;
  Vector b;
  std::optional<ConvexBody> body;
  Index i = 0, j = 0;
  double angle = 0.0;
  Vector p;
  std::vector<MapExpr> children;
  std::vector<double> weights;
};

MapExpr MapExpr::affine(Matrix a, Vector b) {
  if (a.rows() != b.size())
    throw InputError("affine: matrix rows must match offset length");
  if (a.cols() < 1) throw InputError("affine: empty matrix");
  if (!a.allFinite()) throw InputError("affine: matrix must be finite");
  require_finite(b, "affine offset");
  auto node = std::make_shared<Node>();
  node->kind = MapKind::Affine;
  node->a = std::move(a);
  node->b = std::move(b);
  return MapExpr(std::move(node));
}

MapExpr MapExpr::projectOnto(ConvexBody body) {
  auto node = std::make_shared<Node>();
  node->kind = MapKind::ProjectOnto;
  node->body = std::move(body);
  return MapExpr(std::move(node));
}

MapExpr MapExpr::rotation(Index i, Index j, double angle) {
  if (i < 0 || j <= i) throw InputError("rotation: needs plane indices 0 <= i < j");
  if (!std::isfinite(angle)) throw InputError("rotation: angle must be finite");
  auto node = std::make_shared<Node>();
  node->kind = MapKind::Rotation;
  node->i = i;
  node->j = j;
  node->angle = angle;
  return MapExpr(std::move(node));
}

MapExpr MapExpr::constant(Vector p) {
  require_finite(p, "constant point");
  auto node = std::make_shared<Node>();
  node->kind = MapKind::Constant;
  node->p = std::move(p);
  return MapExpr(std::move(node));
}

MapExpr MapExpr::compose(std::vector<MapExpr> maps) {
  if (maps.empty()) throw InputError("compose: needs at least one map");
  auto node = std::make_shared<Node>();
  node->kind = MapKind::Compose;
  node->children = std::move(maps);
  return MapExpr(std::move(node));
}

MapExpr MapExpr::convexCombo(std::vector<double> weights, std::vector<MapExpr> maps) {
  if (maps.empty() || weights.size() != maps.size())
    throw InputError("convexCombo: weights and maps must have equal nonzero length");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InputError("convexCombo: weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw InputError("convexCombo: weights must sum to 1 within 1e-12");
  auto node = std::make_shared<Node>();
  node->kind = MapKind::ConvexCombo;
  node->weights = std::move(weights);
  node->children = std::move(maps);
  return MapExpr(std::move(node));
}

MapExpr MapExpr::identity() {
  auto node = std::make_shared<Node>();
  node->kind = MapKind::Identity;
  return MapExpr(std::move(node));
}

MapKind MapExpr::kind() const { return node_->kind; }

Vector MapExpr::evaluate(const Vector& x) const {
  switch (node_->kind) {
    case MapKind::Affine:
      if (x.size() != node_->a.cols())
        throw InputError("affine: input dimension mismatch");
      return node_->a * x + node_->b;
    case MapKind::ProjectOnto:
      return node_->body->project(x);
    case MapKind::Rotation: {
      if (node_->j >= x.size())
        throw InputError("rotation: plane indices exceed input dimension");
      Vector y = x;
      double c = std::cos(node_->angle), s = std::sin(node_->angle);
      y[node_->i] = c * x[node_->i] - s * x[node_->j];
      y[node_->j] = s * x[node_->i] + c * x[node_->j];
      return y;
    }
    case MapKind::Constant:
      if (x.size() != node_->p.size())
        throw InputError("constant: input dimension mismatch");
      return node_->p;
    case MapKind::Compose: {
      Vector y = x;
      for (auto it = node_->children.rbegin(); it != node_->children.rend(); ++it)
        y = it->evaluate(y);
      return y;
    }
    case MapKind::ConvexCombo: {
      Vector acc = node_->weights[0] * node_->children[0].evaluate(x);
      for (std::size_t k = 1; k < node_->children.size(); ++k)
        acc += node_->weights[k] * node_->children[k].evaluate(x);
      return acc;
    }
    case MapKind::Identity:
      return x;
  }
  throw InputError("evaluate: unknown map kind");
}

namespace {
const char* shape_name(ConvexBody::Shape s) {
  switch (s) {
    case ConvexBody::Shape::Ball:
      return "ball";
    case ConvexBody::Shape::Box:
      return "box";
    case ConvexBody::Shape::Polytope:
      return "polytope";
    case ConvexBody::Shape::Hull:
      return "hull";
  }
  return "?";
}
}  // namespace

std::string MapExpr::describe() const {
  std::ostringstream out;
  switch (node_->kind) {
    case MapKind::Affine:
      out << "affine(" << node_->a.rows() << "x" << node_->a.cols() << ")";
      break;
    case MapKind::ProjectOnto:
      out << "projectOnto(" << shape_name(node_->body->shape()) << ")";
      break;
    case MapKind::Rotation:
      out << "rotation(" << node_->i << "," << node_->j << ";" << node_->angle << ")";
      break;
    case MapKind::Constant:
      out << "constant";
      break;
    case MapKind::Compose: {
      out << "compose[";
      for (std::size_t k = 0; k < node_->children.size(); ++k) {
        if (k) out << " . ";
        out << node_->children[k].describe();
      }
      out << "]";
      break;
    }
    case MapKind::ConvexCombo: {
      out << "combo[";
      for (std::size_t k = 0; k < node_->children.size(); ++k) {
        if (k) out << " + ";
        out << node_->weights[k] << "*" << node_->children[k].describe();
      }
      out << "]";
      break;
    }
    case MapKind::Identity:
      out << "identity";
      break;
  }
  return out.str();
}

namespace {
[[noreturn]] void wrong_kind(const char* what) {
  throw InputError(std::string("MapExpr: accessor ") + what + " used on wrong node kind");
}
}  // namespace

const Matrix& MapExpr::matrix() const {
  if (node_->kind != MapKind::Affine) wrong_kind("matrix");
  return node_->a;
}
const Vector& MapExpr::offset() const {
  if (node_->kind != MapKind::Affine) wrong_kind("offset");
  return node_->b;
}
const ConvexBody& MapExpr::target() const {
  if (node_->kind != MapKind::ProjectOnto) wrong_kind("target");
  return *node_->body;
}
Index MapExpr::planeI() const {
  if (node_->kind != MapKind::Rotation) wrong_kind("planeI");
  return node_->i;
}
Index MapExpr::planeJ() const {
  if (node_->kind != MapKind::Rotation) wrong_kind("planeJ");
  return node_->j;
}
double MapExpr::angle() const {
  if (node_->kind != MapKind::Rotation) wrong_kind("angle");
  return node_->angle;
}
const Vector& MapExpr::point() const {
  if (node_->kind != MapKind::Constant) wrong_kind("point");
  return node_->p;
}
const std::vector<MapExpr>& MapExpr::children() const {
  if (node_->kind != MapKind::Compose && node_->kind != MapKind::ConvexCombo)
    wrong_kind("children");
  return node_->children;
}
const std::vector<double>& MapExpr::weights() const {
  if (node_->kind != MapKind::ConvexCombo) wrong_kind("weights");
  return node_->weights;
}

}  // namespace fixpoint
