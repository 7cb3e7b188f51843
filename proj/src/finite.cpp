#include "fixpoint/finite.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <sstream>

#include "fixpoint/errors.hpp"

namespace fixpoint {

namespace {

std::vector<int> resolve_subset(const FiniteSystem& sys, std::vector<int> subset,
                                const char* caller) {
  if (subset.empty()) {
    subset.resize(sys.maps.size());
    std::iota(subset.begin(), subset.end(), 0);
  }
  std::vector<int> out;
  for (int m : subset) {
    if (m < 0 || m >= static_cast<int>(sys.maps.size()))
      throw InputError(std::string(caller) + ": map index " + std::to_string(m) +
                       " out of range");
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  return out;
}

IndexMap compose(const IndexMap& f, const IndexMap& g) {
  IndexMap out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    out[i] = f[static_cast<std::size_t>(g[i])];
  return out;
}

std::string reproduction_bundle(const FiniteSystem& sys, const std::vector<int>& subset,
                                const std::string& datum) {
  std::ostringstream s;
  s << "N=" << sys.size() << "\ndistance=";
  for (int i = 0; i < sys.size(); ++i) {
    if (i) s << ";";
    for (int j = 0; j < sys.size(); ++j) {
      if (j) s << ",";
      s << sys.distance(i, j);
    }
  }
  s << "\nmaps=";
  for (std::size_t k = 0; k < subset.size(); ++k) {
    const int m = subset[k];
    if (k) s << ";";
    s << sys.mapNames[static_cast<std::size_t>(m)] << ":";
    const auto& arr = sys.maps[static_cast<std::size_t>(m)];
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (i) s << ",";
      s << arr[i];
    }
  }
  s << "\nviolation=" << datum;
  return s.str();
}

}  // namespace

FiniteSystem FiniteSystem::create(Matrix distance,
                                  std::vector<std::pair<std::string, IndexMap>> namedMaps,
                                  std::vector<Vector> embedding) {
  const Index n = distance.rows();
  if (n < 1 || distance.cols() != n)
    throw InputError("finite system: distance matrix must be square and nonempty");

  bool allInteger = true;
  double maxEntry = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      const double d = distance(i, j);
      if (!std::isfinite(d)) throw InputError("finite system: nonfinite distance");
      maxEntry = std::max(maxEntry, std::abs(d));
      if (d != std::floor(d)) allInteger = false;
    }
  const double tol = allInteger ? 0.0 : 1e-12 * (1.0 + maxEntry);

  for (Index i = 0; i < n; ++i)
    if (std::abs(distance(i, i)) > tol)
      throw InputError("finite system: nonzero diagonal at " + std::to_string(i));
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      if (std::abs(distance(i, j) - distance(j, i)) > tol)
        throw InputError("finite system: asymmetric distances at (" + std::to_string(i) +
                         "," + std::to_string(j) + ")");
      if (distance(i, j) <= tol)
        throw InputError("finite system: distinct points " + std::to_string(i) + "," +
                         std::to_string(j) + " must be at positive distance");
    }
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < n; ++k)
        if (distance(i, k) > distance(i, j) + distance(j, k) + tol)
          throw InputError("finite system: triangle inequality fails at (" +
                           std::to_string(i) + "," + std::to_string(j) + "," +
                           std::to_string(k) + ")");

  FiniteSystem sys;
  sys.distance = std::move(distance);
  sys.metricTolerance = tol;
  for (auto& [name, arr] : namedMaps) {
    if (static_cast<Index>(arr.size()) != n)
      throw InputError("finite system: map '" + name + "' has wrong length");
    for (int v : arr)
      if (v < 0 || v >= n)
        throw InputError("finite system: map '" + name + "' has an out-of-range image");
    sys.mapNames.push_back(name.empty() ? "T" + std::to_string(sys.maps.size()) : name);
    sys.maps.push_back(std::move(arr));
  }
  if (!embedding.empty()) {
    if (static_cast<Index>(embedding.size()) != n)
      throw InputError("finite system: embedding size differs from the point count");
    for (const auto& p : embedding) {
      if (p.size() != embedding.front().size())
        throw InputError("finite system: embedded points of mixed dimension");
      require_finite(p, "embedding");
    }
    sys.embedding = std::move(embedding);
  }
  return sys;
}

CoreResult eventual_core(const FiniteSystem& sys, std::vector<int> mapSubset) {
  const auto subset = resolve_subset(sys, std::move(mapSubset), "eventual_core");
  const int n = sys.size();

  CoreResult res;
  res.commutingHypothesisHeld = true;
  for (std::size_t a = 0; a < subset.size() && res.commutingHypothesisHeld; ++a)
    for (std::size_t b = a + 1; b < subset.size() && res.commutingHypothesisHeld; ++b) {
      const auto& f = sys.maps[static_cast<std::size_t>(subset[a])];
      const auto& g = sys.maps[static_cast<std::size_t>(subset[b])];
      for (int x = 0; x < n; ++x)
        if (f[static_cast<std::size_t>(g[static_cast<std::size_t>(x)])] !=
            g[static_cast<std::size_t>(f[static_cast<std::size_t>(x)])]) {
          res.commutingHypothesisHeld = false;
          break;
        }
    }

  std::vector<char> cur(static_cast<std::size_t>(n), 1);
  while (true) {
    std::vector<char> next(static_cast<std::size_t>(n), 1);
    for (int m : subset) {
      std::vector<char> img(static_cast<std::size_t>(n), 0);
      const auto& t = sys.maps[static_cast<std::size_t>(m)];
      for (int x = 0; x < n; ++x)
        if (cur[static_cast<std::size_t>(x)])
          img[static_cast<std::size_t>(t[static_cast<std::size_t>(x)])] = 1;
      for (int i = 0; i < n; ++i)
        next[static_cast<std::size_t>(i)] &= img[static_cast<std::size_t>(i)];
    }
    if (next == cur) break;
    cur = std::move(next);
    ++res.iterations;
  }
  for (int i = 0; i < n; ++i)
    if (cur[static_cast<std::size_t>(i)]) res.indices.push_back(i);

  if (res.commutingHypothesisHeld) {
    if (res.indices.empty())
      throw FalsificationError(
          "eventual core is empty although the maps commute exactly",
          reproduction_bundle(sys, subset, "empty core"));
    for (int m : subset) {
      const auto& t = sys.maps[static_cast<std::size_t>(m)];
      std::vector<char> hit(static_cast<std::size_t>(n), 0);
      for (int x : res.indices) {
        const int y = t[static_cast<std::size_t>(x)];
        if (!cur[static_cast<std::size_t>(y)])
          throw FalsificationError(
              "a commuting map leaves the eventual core",
              reproduction_bundle(sys, subset, "map " + sys.mapNames[static_cast<std::size_t>(m)] +
                                                    " sends " + std::to_string(x) + " outside"));
        hit[static_cast<std::size_t>(y)] = 1;
      }
      for (int x : res.indices)
        if (!hit[static_cast<std::size_t>(x)])
          throw FalsificationError(
              "a commuting map is not surjective on the eventual core",
              reproduction_bundle(sys, subset, "map " + sys.mapNames[static_cast<std::size_t>(m)] +
                                                    " misses " + std::to_string(x)));
    }
  }
  return res;
}

SemigroupClosure semigroup_closure(const FiniteSystem& sys, std::vector<int> mapSubset,
                                   long long maxElements) {
  const auto subset = resolve_subset(sys, std::move(mapSubset), "semigroup_closure");
  if (maxElements < static_cast<long long>(subset.size()))
    throw InputError("semigroup_closure: maxElements must cover the generators");

  SemigroupClosure out;
  std::map<IndexMap, int> seen;
  std::deque<int> frontier;
  for (int g : subset) {
    const auto& arr = sys.maps[static_cast<std::size_t>(g)];
    if (seen.emplace(arr, static_cast<int>(out.elements.size())).second) {
      out.elements.push_back(arr);
      out.generatorWords.push_back({g});
      frontier.push_back(static_cast<int>(out.elements.size()) - 1);
    }
  }
  while (!frontier.empty()) {
    const int idx = frontier.front();
    frontier.pop_front();
    const IndexMap elem = out.elements[static_cast<std::size_t>(idx)];
    for (int g : subset) {
      IndexMap child = compose(sys.maps[static_cast<std::size_t>(g)], elem);
      if (seen.count(child)) continue;
      if (static_cast<long long>(out.elements.size()) >= maxElements) {
        out.sizeBoundHit = true;
        throw SolverError("semigroup_closure: closure exceeds maxElements=" +
                          std::to_string(maxElements));
      }
      std::vector<int> word = {g};
      const auto& parent = out.generatorWords[static_cast<std::size_t>(idx)];
      word.insert(word.end(), parent.begin(), parent.end());
      seen.emplace(child, static_cast<int>(out.elements.size()));
      out.elements.push_back(std::move(child));
      out.generatorWords.push_back(std::move(word));
      frontier.push_back(static_cast<int>(out.elements.size()) - 1);
    }
  }
  return out;
}

std::vector<int> gamma_set(const FiniteSystem& sys, std::vector<int> mapSubset,
                           long long maxElements) {
  const auto subset = resolve_subset(sys, std::move(mapSubset), "gamma_set");
  const auto closure = semigroup_closure(sys, subset, maxElements);
  const int n = sys.size();
  const double work = static_cast<double>(closure.elements.size()) *
                      static_cast<double>(closure.elements.size()) * n;
  if (work > 2e9)
    throw SolverError("gamma_set: closure too large for the exhaustive pair check");

  std::vector<int> out;
  for (int x = 0; x < n; ++x) {
    bool commutes = true;
    for (std::size_t a = 0; a < closure.elements.size() && commutes; ++a)
      for (std::size_t b = a + 1; b < closure.elements.size(); ++b) {
        const auto& u = closure.elements[a];
        const auto& v = closure.elements[b];
        if (u[static_cast<std::size_t>(v[static_cast<std::size_t>(x)])] !=
            v[static_cast<std::size_t>(u[static_cast<std::size_t>(x)])]) {
          commutes = false;
          break;
        }
      }
    if (commutes) out.push_back(x);
  }
  return out;
}

PropertyCertificate gamma_properties_check(const FiniteSystem& sys,
                                           std::vector<int> mapSubset,
                                           long long maxElements) {
  const auto subset = resolve_subset(sys, std::move(mapSubset), "gamma_properties_check");
  const auto gamma = gamma_set(sys, subset, maxElements);
  const int n = sys.size();
  std::vector<char> inGamma(static_cast<std::size_t>(n), 0);
  for (int x : gamma) inGamma[static_cast<std::size_t>(x)] = 1;

  PropertyCertificate cert;
  cert.property = Property::PreservesSet;
  cert.sampleCount = n;
  cert.tolerance = 0.0;

  for (int m : subset) {
    const auto& t = sys.maps[static_cast<std::size_t>(m)];
    for (int x : gamma) {
      ++cert.checksPerformed;
      if (!inGamma[static_cast<std::size_t>(t[static_cast<std::size_t>(x)])])
        throw FalsificationError(
            "commuting locus is not invariant under a generator",
            reproduction_bundle(sys, subset,
                                sys.mapNames[static_cast<std::size_t>(m)] + " moves " +
                                    std::to_string(x) + " out of the locus"));
    }
  }
  for (int x = 0; x < n; ++x) {
    bool fixedByAll = true;
    for (int m : subset)
      if (sys.maps[static_cast<std::size_t>(m)][static_cast<std::size_t>(x)] != x) {
        fixedByAll = false;
        break;
      }
    ++cert.checksPerformed;
    if (fixedByAll && !inGamma[static_cast<std::size_t>(x)])
      throw FalsificationError(
          "a common fixed point lies outside the commuting locus",
          reproduction_bundle(sys, subset, "fixed point " + std::to_string(x)));
  }

  cert.verdict = Verdict::CertifiedAnalytic;
  cert.note = "invariance and fixed-point inclusion verified exhaustively; "
              "closedness is automatic in a finite space";
  return cert;
}

PropertyCertificate isometry_check(const FiniteSystem& sys, int mapIndex,
                                   const std::vector<int>& subset) {
  if (mapIndex < 0 || mapIndex >= static_cast<int>(sys.maps.size()))
    throw InputError("isometry_check: map index out of range");
  if (subset.empty()) throw InputError("isometry_check: empty subset");
  std::vector<int> pts = subset;
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  for (int x : pts)
    if (x < 0 || x >= sys.size())
      throw InputError("isometry_check: subset index out of range");

  const auto& t = sys.maps[static_cast<std::size_t>(mapIndex)];
  std::vector<char> inSub(static_cast<std::size_t>(sys.size()), 0);
  for (int x : pts) inSub[static_cast<std::size_t>(x)] = 1;
  for (int x : pts)
    if (!inSub[static_cast<std::size_t>(t[static_cast<std::size_t>(x)])])
      throw InputError("isometry_check: the map does not send the subset into itself");

  PropertyCertificate cert;
  cert.property = Property::Isometry;
  cert.sampleCount = static_cast<int>(pts.size());
  cert.tolerance = sys.metricTolerance;

  bool nonexpansive = true;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      ++cert.checksPerformed;
      const int x = pts[i], y = pts[j];
      const int tx = t[static_cast<std::size_t>(x)], ty = t[static_cast<std::size_t>(y)];
      if (sys.dist(tx, ty) > sys.dist(x, y) + sys.metricTolerance) {
        nonexpansive = false;
        if (cert.witnesses.size() < 8)
          cert.witnesses.push_back(
              Witness{{}, -1.0, x, y, sys.dist(tx, ty), sys.dist(x, y)});
      }
    }
  if (!nonexpansive) {
    cert.verdict = Verdict::Fail;
    cert.note = "nonexpansivity fails on the subset; no isometry claim";
    return cert;
  }

  std::vector<char> hit(static_cast<std::size_t>(sys.size()), 0);
  for (int x : pts) hit[static_cast<std::size_t>(t[static_cast<std::size_t>(x)])] = 1;
  for (int x : pts)
    if (!hit[static_cast<std::size_t>(x)]) {
      cert.verdict = Verdict::Fail;
      cert.note = "not surjective on the subset; no isometry claim";
      if (cert.witnesses.size() < 8)
        cert.witnesses.push_back(Witness{{}, -1.0, x, -1, 0.0, 0.0});
      return cert;
    }

  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const int x = pts[i], y = pts[j];
      const int tx = t[static_cast<std::size_t>(x)], ty = t[static_cast<std::size_t>(y)];
      if (std::abs(sys.dist(tx, ty) - sys.dist(x, y)) > sys.metricTolerance)
        throw FalsificationError(
            "a nonexpansive surjection distorts a distance",
            reproduction_bundle(sys, {mapIndex},
                                "pair (" + std::to_string(x) + "," + std::to_string(y) +
                                    "): " + std::to_string(sys.dist(x, y)) + " -> " +
                                    std::to_string(sys.dist(tx, ty))));
    }
  cert.verdict = Verdict::CertifiedAnalytic;
  cert.note = "exact isometry on the subset";
  return cert;
}

FinitePipelineReport finite_pipeline(const FiniteSystem& sys, std::vector<int> mapSubset,
                                     NormKind embeddingNorm) {
  const auto subset = resolve_subset(sys, std::move(mapSubset), "finite_pipeline");
  FinitePipelineReport rep;
  rep.gamma = gamma_set(sys, subset);
  rep.somewhereCommuting = !rep.gamma.empty();
  if (!rep.somewhereCommuting) {
    rep.note = "not somewhere commuting; pipeline stopped";
    return rep;
  }

  const int g = static_cast<int>(rep.gamma.size());
  std::vector<int> pos(static_cast<std::size_t>(sys.size()), -1);
  for (int k = 0; k < g; ++k) pos[static_cast<std::size_t>(rep.gamma[static_cast<std::size_t>(k)])] = k;

  Matrix dd(g, g);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j)
      dd(i, j) = sys.dist(rep.gamma[static_cast<std::size_t>(i)],
                          rep.gamma[static_cast<std::size_t>(j)]);
  std::vector<std::pair<std::string, IndexMap>> restricted;
  for (int m : subset) {
    const auto& t = sys.maps[static_cast<std::size_t>(m)];
    IndexMap r(static_cast<std::size_t>(g));
    for (int k = 0; k < g; ++k) {
      const int image = t[static_cast<std::size_t>(rep.gamma[static_cast<std::size_t>(k)])];
      if (pos[static_cast<std::size_t>(image)] < 0)
        throw FalsificationError("commuting locus is not invariant under a generator",
                                 reproduction_bundle(sys, subset,
                                                     "while restricting " +
                                                         sys.mapNames[static_cast<std::size_t>(m)]));
      r[static_cast<std::size_t>(k)] = pos[static_cast<std::size_t>(image)];
    }
    restricted.emplace_back(sys.mapNames[static_cast<std::size_t>(m)], std::move(r));
  }
  std::vector<Vector> subEmbedding;
  if (sys.hasEmbedding())
    for (int x : rep.gamma) subEmbedding.push_back(sys.embedding[static_cast<std::size_t>(x)]);
  FiniteSystem sub = FiniteSystem::create(dd, std::move(restricted), std::move(subEmbedding));

  CoreResult coreSub = eventual_core(sub, {});
  rep.core.commutingHypothesisHeld = coreSub.commutingHypothesisHeld;
  rep.core.iterations = coreSub.iterations;
  for (int k : coreSub.indices)
    rep.core.indices.push_back(rep.gamma[static_cast<std::size_t>(k)]);

  for (std::size_t i = 0; i < subset.size(); ++i) {
    auto cert = isometry_check(sub, static_cast<int>(i), coreSub.indices);
    cert.note = sys.mapNames[static_cast<std::size_t>(subset[i])] + ": " + cert.note;
    rep.isometries.push_back(std::move(cert));
  }

  std::ostringstream note;
  note << "commuting locus of " << g << " points, core of " << rep.core.indices.size();
  if (sys.hasEmbedding()) {
    rep.embeddingPresent = true;
    rep.embeddingConsistent = true;
    const double tolE = std::max(1e-9, sys.metricTolerance);
    for (std::size_t i = 0; i < rep.core.indices.size(); ++i)
      for (std::size_t j = i + 1; j < rep.core.indices.size(); ++j) {
        const int x = rep.core.indices[i], y = rep.core.indices[j];
        const double emb = norm_of(embeddingNorm, sys.embedding[static_cast<std::size_t>(x)] -
                                                      sys.embedding[static_cast<std::size_t>(y)]);
        if (std::abs(emb - sys.dist(x, y)) > tolE) rep.embeddingConsistent = false;
      }
    std::vector<Vector> corePts;
    for (int x : rep.core.indices) corePts.push_back(sys.embedding[static_cast<std::size_t>(x)]);
    rep.center = chebyshev_center(
        corePts, NormSpec(embeddingNorm, corePts.front().size()));
    note << "; embedded center radius " << rep.center.radius
         << (rep.embeddingConsistent ? " (embedding isometric on the core)"
                                     : " (embedding distorts the core metric)");
  }
  rep.note = note.str();
  return rep;
}

}  // namespace fixpoint
