#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fixpoint/certify.hpp"
#include "fixpoint/norms.hpp"
#include "fixpoint/tchebyshev.hpp"
#include "fixpoint/types.hpp"

namespace fixpoint {

using IndexMap = std::vector<int>;  // map[i] = image index

/// A finite metric space with self-maps given as index arrays, optionally
/// embedded in a normed space. Metric axioms are checked over all triples
/// at construction: exactly when every distance is an integer, otherwise
/// within a recorded 1e-12-scale tolerance.
struct FiniteSystem {
  Matrix distance;
  std::vector<std::string> mapNames;
  std::vector<IndexMap> maps;
  std::vector<Vector> embedding;  // empty when absent
  double metricTolerance = 0.0;

  static FiniteSystem create(Matrix distance,
                             std::vector<std::pair<std::string, IndexMap>> namedMaps,
                             std::vector<Vector> embedding = {});

  int size() const { return static_cast<int>(distance.rows()); }
  double dist(int i, int j) const { return distance(i, j); }
  bool hasEmbedding() const { return !embedding.empty(); }
};

/// Stable set of the intersection iteration C_{k+1} = the intersection of
/// T(C_k) over the selected maps, from C_0 = everything. When the maps
/// commute pointwise (checked exactly), every selected map is a bijection
/// of the result; a violation or an empty result under the verified
/// hypothesis is a falsification.
struct CoreResult {
  std::vector<int> indices;  // ascending
  bool commutingHypothesisHeld = false;
  int iterations = 0;
};

CoreResult eventual_core(const FiniteSystem& sys, std::vector<int> mapSubset = {});

/// Closure of the selected maps under composition, breadth-first, each
/// element deduplicated by its full image array and carrying a shortest
/// witness word (indices of the generating maps, leftmost applied last).
struct SemigroupClosure {
  std::vector<IndexMap> elements;
  std::vector<std::vector<int>> generatorWords;
  bool sizeBoundHit = false;
};

SemigroupClosure semigroup_closure(const FiniteSystem& sys, std::vector<int> mapSubset = {},
                                   long long maxElements = 1000000);

/// Points at which every pair from the closure commutes; empty means the
/// family is not somewhere commuting.
std::vector<int> gamma_set(const FiniteSystem& sys, std::vector<int> mapSubset = {},
                           long long maxElements = 1000000);

/// Exact verification that the commuting set is invariant under every
/// generator and contains every common fixed point (closedness is
/// automatic in a finite space and recorded as such). Violations are
/// falsifications.
PropertyCertificate gamma_properties_check(const FiniteSystem& sys,
                                           std::vector<int> mapSubset = {},
                                           long long maxElements = 1000000);

/// For a map sending the subset into itself: checks nonexpansivity and
/// surjectivity on the subset, and when both hold asserts exact distance
/// preservation (a nonexpansive surjection of a finite metric space is an
/// isometry). A nonexpansive surjection that distorts a distance is a
/// falsification; failing either hypothesis is an ordinary FAIL.
PropertyCertificate isometry_check(const FiniteSystem& sys, int mapIndex,
                                   const std::vector<int>& subset);

/// Chains the structural lemmas: commuting locus, then the surjectivity
/// core inside it, then per-map isometry certificates on the core; with
/// an embedding, the enclosing-ball center of the embedded core is the
/// common-fixed-point location candidate.
struct FinitePipelineReport {
  std::vector<int> gamma;
  bool somewhereCommuting = false;
  CoreResult core;  // indices refer to the original system
  std::vector<PropertyCertificate> isometries;
  bool embeddingPresent = false;
  bool embeddingConsistent = false;
  CenterResult center;
  std::string note;
};

FinitePipelineReport finite_pipeline(const FiniteSystem& sys, std::vector<int> mapSubset = {},
                                     NormKind embeddingNorm = NormKind::Euclidean);

}  // namespace fixpoint
