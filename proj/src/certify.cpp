#include "fixpoint/certify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "fixpoint/errors.hpp"

namespace fixpoint {

std::string to_string(Property p) {
  switch (p) {
    case Property::SelfMap:
      return "selfMap";
    case Property::Nonexpansive:
      return "nonexpansive";
    case Property::FirmlyNonexpansive:
      return "firmlyNonexpansive";
    case Property::Commuting:
      return "commuting";
    case Property::PreservesSet:
      return "preservesSet";
    case Property::ApfsTransfer:
      return "apfsTransfer";
    case Property::CenterInvariance:
      return "centerInvariance";
    case Property::FixedPoint:
      return "fixedPoint";
    case Property::Isometry:
      return "isometry";
  }
  return "?";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::CertifiedAnalytic:
      return "certified-analytic";
    case Verdict::PassSampled:
      return "pass-sampled";
    case Verdict::Fail:
      return "FAIL";
  }
  return "?";
}

double operator_norm(const Matrix& a, NormKind kind) {
  switch (kind) {
    case NormKind::Sum:
      return a.cwiseAbs().colwise().sum().maxCoeff();
    case NormKind::Max:
      return a.cwiseAbs().rowwise().sum().maxCoeff();
    case NormKind::Euclidean:
      break;
  }
  // power iteration on A^T A; deterministic start with a slight tilt so
  // it cannot sit exactly orthogonal to the top eigenvector
  Matrix b = a.transpose() * a;
  Vector v(b.rows());
  for (Index i = 0; i < v.size(); ++i) v[i] = 1.0 + 0.01 * std::sin(1.0 + static_cast<double>(i));
  v.normalize();
  double lambda = 0.0;
  for (int iter = 0; iter < 200000; ++iter) {
    Vector w = b * v;
    double next = w.norm();
    if (next < 1e-300) return 0.0;
    v = w / next;
    if (iter > 0 && std::abs(next - lambda) <= 1e-10 * std::max(1.0, next))
      return std::sqrt(next);
    lambda = next;
  }
  return std::sqrt(lambda);
}

namespace {

std::string fmt(double x) {
  std::ostringstream out;
  out.precision(12);
  out << x;
  return out.str();
}

struct Structural {
  bool ok = false;
  std::string why;
};

Structural analytic_nonexpansive(const MapExpr& m, NormKind kind) {
  switch (m.kind()) {
    case MapKind::Identity:
      return {true, "identity"};
    case MapKind::Constant:
      return {true, "constant map"};
    case MapKind::ProjectOnto:
      if (kind == NormKind::Euclidean) return {true, "euclidean metric projection"};
      return {false, "projection certified only under the euclidean norm"};
    case MapKind::Rotation:
      if (kind == NormKind::Euclidean) return {true, "euclidean isometry"};
      return {false, "rotation is an isometry only under the euclidean norm"};
    case MapKind::Affine: {
      double n = operator_norm(m.matrix(), kind);
      if (n <= 1.0 + 1e-12) return {true, "operator norm " + fmt(n)};
      return {false, "operator norm " + fmt(n) + " exceeds 1"};
    }
    case MapKind::Compose: {
      for (const auto& c : m.children()) {
        auto s = analytic_nonexpansive(c, kind);
        if (!s.ok) return {false, "composition factor not certified: " + s.why};
      }
      return {true, "composition of certified nonexpansive maps"};
    }
    case MapKind::ConvexCombo: {
      for (const auto& c : m.children()) {
        auto s = analytic_nonexpansive(c, kind);
        if (!s.ok) return {false, "combination term not certified: " + s.why};
      }
      return {true, "convex combination of certified nonexpansive maps"};
    }
  }
  return {false, "unknown node"};
}

Structural analytic_self_map(const MapExpr& m, const ConvexBody& body) {
  switch (m.kind()) {
    case MapKind::Identity:
      return {true, "identity"};
    case MapKind::ProjectOnto:
      if (m.target() == body) return {true, "projection onto the domain itself"};
      return {false, "projection target differs from the domain"};
    case MapKind::Constant:
      if (body.contains(m.point(), 1e-12)) return {true, "constant value lies in the domain"};
      return {false, "constant value outside the domain"};
    case MapKind::Compose: {
      for (const auto& c : m.children())
        if (!analytic_self_map(c, body).ok) return {false, "composition factor not a certified self-map"};
      return {true, "composition of certified self-maps"};
    }
    case MapKind::ConvexCombo: {
      for (const auto& c : m.children())
        if (!analytic_self_map(c, body).ok) return {false, "combination term not a certified self-map"};
      return {true, "convex combination of certified self-maps (domain is convex)"};
    }
    default:
      return {false, "no structural rule"};
  }
}

void add_witness(PropertyCertificate& cert, Witness w, std::size_t cap = 8) {
  // keep the worst violation first
  if (cert.witnesses.empty() || w.measured - w.bound >
                                    cert.witnesses.front().measured - cert.witnesses.front().bound) {
    cert.witnesses.insert(cert.witnesses.begin(), std::move(w));
  } else if (cert.witnesses.size() < cap) {
    cert.witnesses.push_back(std::move(w));
  }
  if (cert.witnesses.size() > cap) cert.witnesses.resize(cap);
}

double golden_min(const std::function<double(double)>& f, double lo, double hi,
                  double tol) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

bool affine_structured(const MapExpr& m) {
  switch (m.kind()) {
    case MapKind::Affine:
    case MapKind::Rotation:
    case MapKind::Constant:
    case MapKind::Identity:
      return true;
    case MapKind::Compose:
    case MapKind::ConvexCombo:
      return std::all_of(m.children().begin(), m.children().end(), affine_structured);
    default:
      return false;
  }
}

}  // namespace

PropertyCertificate certify_self_map(const MapExpr& map, const ConvexBody& body,
                                     int sampleCount, double tol, unsigned seed) {
  PropertyCertificate cert;
  cert.property = Property::SelfMap;
  cert.tolerance = tol;
  auto structural = analytic_self_map(map, body);
  if (structural.ok) {
    cert.verdict = Verdict::CertifiedAnalytic;
    cert.note = structural.why;
    return cert;
  }
  auto pts = body.sample(sampleCount, seed);
  cert.sampleCount = static_cast<int>(pts.size());
  cert.verdict = Verdict::PassSampled;
  for (const auto& x : pts) {
    Vector y = map(x);
    ++cert.checksPerformed;
    if (!body.contains(y, tol)) {
      double out = (y - body.project(y)).norm();
      add_witness(cert, Witness{{x, y}, -1.0, -1, -1, out, tol});
      cert.verdict = Verdict::Fail;
    }
  }
  if (!cert.passed()) cert.note = "image leaves the domain";
  return cert;
}

PropertyCertificate certify_nonexpansive(const MapExpr& map, const ConvexBody& body,
                                         const NormSpec& space, int sampleCount,
                                         double tol, unsigned seed, bool forceSampled) {
  PropertyCertificate cert;
  cert.property = Property::Nonexpansive;
  cert.tolerance = tol;
  auto self = certify_self_map(map, body, sampleCount, tol, seed);
  if (!self.passed()) {
    cert.verdict = Verdict::Fail;
    cert.witnesses = self.witnesses;
    cert.sampleCount = self.sampleCount;
    cert.note = "self-map precondition failed";
    return cert;
  }
  if (!forceSampled) {
    auto structural = analytic_nonexpansive(map, space.kind);
    if (structural.ok) {
      cert.verdict = Verdict::CertifiedAnalytic;
      cert.note = structural.why;
      return cert;
    }
    cert.note = structural.why;
  }
  auto pts = body.sample(sampleCount, seed);
  cert.sampleCount = static_cast<int>(pts.size());
  std::vector<Vector> images;
  images.reserve(pts.size());
  for (const auto& x : pts) images.push_back(map(x));
  cert.verdict = Verdict::PassSampled;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      ++cert.checksPerformed;
      double dxy = norm_of(space.kind, pts[i] - pts[j]);
      double dT = norm_of(space.kind, images[i] - images[j]);
      if (dT > dxy + tol) {
        add_witness(cert, Witness{{pts[i], pts[j]}, -1.0, -1, -1, dT, dxy});
        cert.verdict = Verdict::Fail;
      }
    }
  }
  return cert;
}

std::vector<double> default_firm_a_grid() {
  std::vector<double> grid{0.01};
  for (int k = 1; k <= 9; ++k) grid.push_back(k / 10.0);
  grid.push_back(0.99);
  return grid;
}

PropertyCertificate certify_firmly_nonexpansive(const MapExpr& map, const ConvexBody& body,
                                                int sampleCount, std::vector<double> aGrid,
                                                double tol, unsigned seed) {
  PropertyCertificate cert;
  cert.property = Property::FirmlyNonexpansive;
  cert.tolerance = tol;
  if (aGrid.empty()) aGrid = default_firm_a_grid();
  for (double a : aGrid)
    if (!(a > 0.0 && a < 1.0)) throw InputError("firm nonexpansivity: aGrid values must lie in (0,1)");
  auto pts = body.sample(sampleCount, seed);
  cert.sampleCount = static_cast<int>(pts.size());
  std::vector<Vector> images;
  images.reserve(pts.size());
  for (const auto& x : pts) images.push_back(map(x));
  const bool searchWorstA = affine_structured(map);
  cert.verdict = Verdict::PassSampled;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      Vector u = pts[i] - pts[j];
      Vector v = images[i] - images[j];
      double nv = v.norm();
      auto rhs = [&](double a) { return (a * u + (1.0 - a) * v).norm(); };
      double worstViol = -1.0, worstA = -1.0, worstRhs = 0.0;
      auto consider = [&](double a) {
        ++cert.checksPerformed;
        double r = rhs(a);
        if (nv - r > worstViol) {
          worstViol = nv - r;
          worstA = a;
          worstRhs = r;
        }
      };
      for (double a : aGrid) consider(a);
      if (searchWorstA) consider(golden_min(rhs, 0.0, 1.0, 1e-9));
      if (worstViol > tol) {
        add_witness(cert, Witness{{pts[i], pts[j]}, worstA, -1, -1, nv, worstRhs});
        cert.verdict = Verdict::Fail;
      }
    }
  }
  if (searchWorstA) cert.note = "grid plus golden-section worst-a search";
  return cert;
}

PropertyCertificate certify_commuting(const std::vector<MapExpr>& maps,
                                      const ConvexBody& body, const NormSpec& space,
                                      int sampleCount, double tol, unsigned seed) {
  PropertyCertificate cert;
  cert.property = Property::Commuting;
  cert.tolerance = tol;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    auto self = certify_self_map(maps[i], body, sampleCount, tol, seed);
    if (!self.passed()) {
      cert.verdict = Verdict::Fail;
      cert.witnesses = self.witnesses;
      cert.note = "self-map precondition failed for map " + std::to_string(i);
      return cert;
    }
  }
  auto pts = body.sample(sampleCount, seed);
  cert.sampleCount = static_cast<int>(pts.size());
  cert.verdict = Verdict::PassSampled;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    for (std::size_t j = i + 1; j < maps.size(); ++j) {
      for (const auto& x : pts) {
        ++cert.checksPerformed;
        double d = norm_of(space.kind, maps[i](maps[j](x)) - maps[j](maps[i](x)));
        if (d > tol) {
          add_witness(cert, Witness{{x}, -1.0, static_cast<int>(i), static_cast<int>(j), d, tol});
          cert.verdict = Verdict::Fail;
        }
      }
    }
  }
  return cert;
}

PropertyCertificate certify_preserves_set(const MapExpr& map,
                                          const std::vector<Vector>& points,
                                          const NormSpec& space, double tol) {
  PropertyCertificate cert;
  cert.property = Property::PreservesSet;
  cert.tolerance = tol;
  cert.sampleCount = static_cast<int>(points.size());
  if (points.empty()) throw InputError("preservesSet: empty point set");
  std::vector<Vector> images;
  images.reserve(points.size());
  for (const auto& p : points) images.push_back(map(p));
  auto min_dist_to = [&](const Vector& q, const std::vector<Vector>& set) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : set) best = std::min(best, norm_of(space.kind, q - s));
    return best;
  };
  cert.verdict = Verdict::PassSampled;
  for (std::size_t i = 0; i < points.size(); ++i) {
    ++cert.checksPerformed;
    double d = min_dist_to(images[i], points);
    if (d > tol) {
      add_witness(cert, Witness{{points[i], images[i]}, -1.0, -1, -1, d, tol});
      cert.verdict = Verdict::Fail;
    }
    ++cert.checksPerformed;
    double back = min_dist_to(points[i], images);
    if (back > tol) {
      add_witness(cert, Witness{{points[i]}, -1.0, -1, -1, back, tol});
      cert.verdict = Verdict::Fail;
    }
  }
  if (!cert.passed()) cert.note = "image does not match the set";
  return cert;
}

}  // namespace fixpoint
