#include "fixpoint/norms.hpp"

#include <cmath>

namespace fixpoint {

std::string to_string(NormKind kind) {
  switch (kind) {
    case NormKind::Euclidean:
      return "euclidean";
    case NormKind::Sum:
      return "sum";
    case NormKind::Max:
      return "max";
  }
  return "euclidean";
}

NormKind norm_kind_from_string(const std::string& name) {
  if (name == "euclidean" || name == "l2") return NormKind::Euclidean;
  if (name == "sum" || name == "l1") return NormKind::Sum;
  if (name == "max" || name == "linf") return NormKind::Max;
  throw ConfigError("unknown norm kind: " + name);
}

NormSpec::NormSpec(NormKind k, Index dim) : kind(k), dimension(dim) {
  if (dim < 1) throw InputError("NormSpec: dimension must be >= 1");
}

double norm(const NormSpec& space, const Vector& x) {
  if (x.size() != space.dimension)
    throw InputError("norm: point has dimension " + std::to_string(x.size()) +
                     ", space expects " + std::to_string(space.dimension));
  return norm_of(space.kind, x);
}

double distance(const NormSpec& space, const Vector& x, const Vector& y) {
  if (x.size() != space.dimension || y.size() != space.dimension)
    throw InputError("distance: dimension mismatch");
  return norm_of(space.kind, x - y);
}

void require_finite(const Vector& x, const char* what) {
  if (!x.allFinite())
    throw InputError(std::string(what) + ": coordinates must be finite");
}

}  // namespace fixpoint
