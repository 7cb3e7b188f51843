#include "fixpoint/retraction.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "fixpoint/errors.hpp"

namespace fixpoint {

namespace {

// Inputs quantized to 1e-12 so repeated evaluations inside nested Banach
// iterations hit the cache.
std::string memo_key(const Vector& x) {
  std::string key(static_cast<std::size_t>(x.size()) * sizeof(long long), '\0');
  for (Index i = 0; i < x.size(); ++i) {
    double scaled = std::clamp(x[i] * 1e12, -9.0e18, 9.0e18);
    long long q = std::llround(scaled);
    std::memcpy(&key[static_cast<std::size_t>(i) * sizeof(long long)], &q, sizeof(long long));
  }
  return key;
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

}  // namespace

struct RetractionModel::Stage {
  std::optional<MapExpr> map;  // resolvent stage: T_k
  long long sStar = 0;
  double solveTol = 0.0;
  StabilizationRecord record;
  MapFn custom;  // finder-built stage: the full R_k
  std::string method;
  PropertyCertificate stageCheck;
  mutable std::unordered_map<std::string, Vector> memo;
  mutable std::mutex memoLock;
};

RetractionModel RetractionModel::identityOn(ConvexBody body, NormSpec space) {
  if (space.dimension != body.dim())
    throw InputError("retraction: space and body dimensions differ");
  RetractionModel m;
  m.body_ = std::move(body);
  m.space_ = space;
  return m;
}

std::vector<StabilizationRecord> RetractionModel::stabilization() const {
  std::vector<StabilizationRecord> out;
  for (const auto& st : stages_)
    if (st->map) out.push_back(st->record);
  return out;
}

std::vector<PropertyCertificate> RetractionModel::stageChecks() const {
  std::vector<PropertyCertificate> out;
  for (const auto& st : stages_)
    if (st->custom) out.push_back(st->stageCheck);
  return out;
}

double RetractionModel::rangeBound() const {
  long long sMin = 0;
  double tolMax = 0.0;
  for (const auto& st : stages_) {
    if (!st->map) continue;
    if (sMin == 0 || st->sStar < sMin) sMin = st->sStar;
    tolMax = std::max(tolMax, st->solveTol);
  }
  if (sMin == 0) return 0.0;
  return body_.diameter(space_).value / static_cast<double>(sMin) + 2.0 * tolMax;
}

Vector RetractionModel::evaluate(const Vector& x) const {
  if (x.size() != body_.dim()) throw InputError("retraction: dimension mismatch");
  if (!body_.contains(x, 1e-9))
    throw InputError("retraction: evaluation outside the body is rejected");
  return evalStage(stages_.size(), x);
}

Vector RetractionModel::evalStage(std::size_t k, const Vector& x) const {
  if (k == 0) return x;
  const Stage& st = *stages_[k - 1];
  std::string key = memo_key(x);
  {
    std::lock_guard<std::mutex> lock(st.memoLock);
    auto it = st.memo.find(key);
    if (it != st.memo.end()) return it->second;
  }
  Vector result;
  if (st.custom) {
    result = st.custom(x);
  } else {
    MapFn prev = [this, k](const Vector& z) { return evalStage(k - 1, z); };
    result = resolvent(*st.map, prev, st.sStar, x, body_, st.solveTol);
  }
  {
    std::lock_guard<std::mutex> lock(st.memoLock);
    if (st.memo.size() < 1000000) st.memo.emplace(std::move(key), result);
  }
  return result;
}

MapFn RetractionModel::asFn() const {
  return [copy = *this](const Vector& x) { return copy.evaluate(x); };
}

RetractionModel build_retraction(const std::vector<MapExpr>& family, const ConvexBody& body,
                                 const NormSpec& space, std::vector<long long> sSchedule,
                                 double stabilizationTol, int probeCount) {
  if (space.dimension != body.dim())
    throw InputError("build_retraction: space and body dimensions differ");
  if (!(stabilizationTol > 0.0))
    throw InputError("build_retraction: stabilization tolerance must be positive");
  if (probeCount < 1) throw InputError("build_retraction: probeCount must be >= 1");
  if (sSchedule.empty()) sSchedule = default_s_schedule();
  for (std::size_t i = 0; i < sSchedule.size(); ++i)
    if (sSchedule[i] < 1 || (i > 0 && sSchedule[i] <= sSchedule[i - 1]))
      throw InputError("build_retraction: s schedule must be increasing and >= 1");

  for (std::size_t i = 0; i < family.size(); ++i) {
    auto cert = certify_nonexpansive(family[i], body, space);
    if (!cert.passed())
      throw InputError("build_retraction: hypothesis certificate FAIL - family member " +
                       std::to_string(i) + " (" + family[i].describe() +
                       ") is not a certified nonexpansive self-map");
  }
  if (family.size() >= 2) {
    auto cert = certify_commuting(family, body, space);
    if (!cert.passed()) {
      std::string which;
      if (!cert.witnesses.empty())
        which = " (maps " + std::to_string(cert.witnesses.front().mapI) + " and " +
                std::to_string(cert.witnesses.front().mapJ) + ")";
      throw InputError("build_retraction: hypothesis certificate FAIL - family does not commute" +
                       which);
    }
  }

  RetractionModel model = RetractionModel::identityOn(body, space);
  model.family_ = family;
  auto probes = body.sample(probeCount, 0);

  for (std::size_t k = 0; k < family.size(); ++k) {
    const MapExpr& t = family[k];
    StabilizationRecord record;
    record.stage = static_cast<int>(k) + 1;
    MapFn prev = [&model, k](const Vector& z) { return model.evalStage(k, z); };

    std::map<long long, std::vector<Vector>> imagesBy;
    auto imagesAt = [&](long long s) -> const std::vector<Vector>& {
      auto it = imagesBy.find(s);
      if (it != imagesBy.end()) return it->second;
      std::vector<Vector> imgs;
      imgs.reserve(probes.size());
      const double innerTol = stabilizationTol / (4.0 * static_cast<double>(s));
      for (const auto& p : probes) imgs.push_back(resolvent(t, prev, s, p, body, innerTol));
      return imagesBy.emplace(s, std::move(imgs)).first->second;
    };

    for (long long s : sSchedule) {
      const auto& at = imagesAt(s);
      const auto& at2 = imagesAt(2 * s);
      double delta = 0.0;
      for (std::size_t i = 0; i < probes.size(); ++i)
        delta = std::max(delta, norm_of(space.kind, at2[i] - at[i]));
      record.sTried.push_back(s);
      record.maxProbeDelta.push_back(delta);
      if (delta <= stabilizationTol) {
        record.sStar = s;
        record.stabilized = true;
        break;
      }
    }
    if (!record.stabilized) {
      std::ostringstream msg, tr;
      msg << "build_retraction: stage " << record.stage << " (" << t.describe()
          << ") did not stabilize within the s schedule (best delta "
          << *std::min_element(record.maxProbeDelta.begin(), record.maxProbeDelta.end())
          << ", tolerance " << stabilizationTol << ")";
      tr << "stage,s,maxProbeDelta\n";
      for (std::size_t i = 0; i < record.sTried.size(); ++i)
        tr << record.stage << "," << record.sTried[i] << "," << record.maxProbeDelta[i] << "\n";
      throw SolverError(msg.str(), tr.str());
    }

    auto st = std::make_shared<RetractionModel::Stage>();
    st->map = t;
    st->sStar = record.sStar;
    st->solveTol = stabilizationTol / (4.0 * static_cast<double>(record.sStar));
    st->record = record;
    const auto& starImages = imagesAt(record.sStar);
    for (std::size_t i = 0; i < probes.size(); ++i)
      st->memo.emplace(memo_key(probes[i]), starImages[i]);
    model.stages_.push_back(std::move(st));
  }
  return model;
}

RetractionCertificate certify_retraction(const RetractionModel& r,
                                         const std::vector<MapExpr>& family,
                                         const ConvexBody& body, const NormSpec& space,
                                         int sampleCount, double tol, bool checkFirm) {
  RetractionCertificate cert;
  cert.tolerance = tol;
  auto pts = body.sample(sampleCount, 0);
  cert.sampleCount = static_cast<int>(pts.size());
  std::vector<Vector> images;
  images.reserve(pts.size());
  for (const auto& x : pts) images.push_back(r.evaluate(x));

  cert.rangeInFix.assign(family.size(), 0.0);
  for (std::size_t i = 0; i < family.size(); ++i)
    for (const auto& rx : images)
      cert.rangeInFix[i] =
          std::max(cert.rangeInFix[i], norm_of(space.kind, family[i](rx) - rx));
  cert.rangePass = std::all_of(cert.rangeInFix.begin(), cert.rangeInFix.end(),
                               [&](double v) { return v <= tol; });

  for (const auto& rx : images)
    cert.idempotenceResidual =
        std::max(cert.idempotenceResidual, norm_of(space.kind, r.evaluate(rx) - rx));
  cert.idempotencePass = cert.idempotenceResidual <= tol;

  double slack = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      slack = std::max(slack, norm_of(space.kind, images[i] - images[j]) -
                                  norm_of(space.kind, pts[i] - pts[j]));
  cert.nonexpansiveSlack = slack;
  cert.nonexpansivePass = slack <= tol;

  if (checkFirm && space.euclidean()) {
    cert.checkedFirm = true;
    auto grid = default_firm_a_grid();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        Vector u = pts[i] - pts[j];
        Vector v = images[i] - images[j];
        double nv = v.norm();
        for (double a : grid) {
          double viol = nv - (a * u + (1.0 - a) * v).norm();
          if (viol > cert.firmWorstViolation) {
            cert.firmWorstViolation = viol;
            cert.firmWorstA = a;
          }
        }
      }
    }
    cert.firmPass = cert.firmWorstViolation <= tol;
  }

  cert.stabilization = r.stabilization();
  return cert;
}

std::vector<Vector> body_grid(const ConvexBody& body, double gridResolution) {
  if (body.dim() > 3) throw InputError("grid probe supports dimension <= 3 only");
  if (!(gridResolution > 0.0)) throw InputError("grid resolution must be positive");
  const Index dim = body.dim();
  const Vector& lo = body.boundingLo();
  const Vector& hi = body.boundingHi();
  std::vector<long> counts(dim);
  double total = 1.0;
  for (Index i = 0; i < dim; ++i) {
    counts[i] = static_cast<long>(std::floor((hi[i] - lo[i]) / gridResolution + 1e-9)) + 1;
    total *= static_cast<double>(counts[i]);
  }
  if (total > 1e7) throw InputError("grid too large (> 10^7 points)");
  std::vector<Vector> out;
  std::vector<long> idx(dim, 0);
  while (true) {
    Vector x(dim);
    for (Index i = 0; i < dim; ++i) x[i] = lo[i] + static_cast<double>(idx[i]) * gridResolution;
    if (body.contains(x, 1e-9)) out.push_back(x);
    Index carry = 0;
    while (carry < dim) {
      if (++idx[carry] < counts[carry]) break;
      idx[carry] = 0;
      ++carry;
    }
    if (carry == dim) break;
  }
  return out;
}

std::vector<Vector> fix_set_probe_fn(const std::vector<MapFn>& family, const ConvexBody& body,
                                     const NormSpec& space, double gridResolution) {
  auto grid = body_grid(body, gridResolution);
  const double tol = gridResolution / 2.0;
  std::vector<Vector> out;
  for (const auto& x : grid) {
    bool fixed = true;
    for (const auto& f : family) {
      if (norm_of(space.kind, f(x) - x) > tol) {
        fixed = false;
        break;
      }
    }
    if (fixed) out.push_back(x);
  }
  return out;
}

std::vector<Vector> fix_set_probe(const std::vector<MapExpr>& family, const ConvexBody& body,
                                  const NormSpec& space, double gridResolution) {
  std::vector<MapFn> fns;
  fns.reserve(family.size());
  for (const auto& m : family) fns.emplace_back([m](const Vector& x) { return m(x); });
  return fix_set_probe_fn(fns, body, space, gridResolution);
}

PropertyCertificate commute_retract_check(const MapExpr& t, const std::vector<MapExpr>& family,
                                          const MapFn& r, const ConvexBody& body,
                                          const NormSpec& space, double gridResolution,
                                          double tol) {
  PropertyCertificate cert;
  cert.property = Property::PreservesSet;
  std::vector<Vector> probes;
  std::string mode;
  if (body.dim() <= 3) {
    probes = body_grid(body, gridResolution);
    mode = "grid";
  } else {
    probes = body.sample(512, 0);
    mode = "sampled fallback";
  }
  const double tolEff = tol < 0.0 ? gridResolution / 2.0 : tol;
  cert.tolerance = tolEff;
  cert.sampleCount = static_cast<int>(probes.size());
  cert.verdict = Verdict::PassSampled;
  for (const auto& x : probes) {
    ++cert.checksPerformed;
    double dTR = norm_of(space.kind, t(r(x)) - x);
    double dT = norm_of(space.kind, t(x) - x);
    double dS = 0.0;
    for (const auto& s : family) dS = std::max(dS, norm_of(space.kind, s(x) - x));
    bool inTR = dTR <= tolEff;
    bool inBoth = dT <= tolEff && dS <= tolEff;
    if (inTR != inBoth) {
      cert.witnesses.push_back(Witness{{x}, -1.0, -1, -1, dTR, tolEff});
      cert.verdict = Verdict::Fail;
    }
  }
  cert.note = "Fix(T.R) vs FixT intersect Fix(family), " + mode;
  return cert;
}

PropertyCertificate commute_retract_check(const MapExpr& t, const std::vector<MapExpr>& family,
                                          const RetractionModel& r, const ConvexBody& body,
                                          const NormSpec& space, double gridResolution,
                                          double tol) {
  return commute_retract_check(t, family, r.asFn(), body, space, gridResolution, tol);
}

PropertyCertificate apfs_transfer_check(const MapExpr& t, const std::vector<MapExpr>& family,
                                        const RetractionModel& r, const ConvexBody& body,
                                        const NormSpec& space, const Vector& x,
                                        std::vector<long long> sSchedule, double tol,
                                        ApfsTransferData* data) {
  if (sSchedule.empty()) sSchedule = default_s_schedule();
  for (std::size_t i = 1; i < sSchedule.size(); ++i)
    if (sSchedule[i] <= sSchedule[i - 1])
      throw InputError("apfs_transfer_check: s schedule must be strictly increasing");

  PropertyCertificate cert;
  cert.property = Property::ApfsTransfer;
  cert.tolerance = tol;
  ApfsTransferData local;
  ApfsTransferData& d = data ? *data : local;
  d.diameter = body.diameter(space).value;
  d.familyResiduals.assign(family.size(), {});
  MapFn rfn = r.asFn();

  for (long long s : sSchedule) {
    const double innerTol = std::max(1e-13, tol / (4.0 * static_cast<double>(s)));
    Vector xs = resolvent(t, rfn, s, x, body, innerTol);
    d.sValues.push_back(s);
    for (std::size_t i = 0; i < family.size(); ++i)
      d.familyResiduals[i].push_back(norm_of(space.kind, family[i](xs) - xs));
    d.retractionResiduals.push_back(norm_of(space.kind, rfn(xs) - xs));
    d.mapResiduals.push_back(norm_of(space.kind, t(xs) - xs));
    cert.checksPerformed += static_cast<long>(family.size()) + 2;
  }
  cert.sampleCount = static_cast<int>(sSchedule.size());

  const double cBound = 3.0 * d.diameter;
  cert.verdict = Verdict::PassSampled;
  std::string firstFailure;
  auto judge = [&](const std::vector<double>& seq, const std::string& label) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      double c = seq[i] * static_cast<double>(d.sValues[i]);
      d.fittedC = std::max(d.fittedC, c);
      if (c > cBound + 1e-12) {
        cert.witnesses.push_back(
            Witness{{x}, -1.0, -1, -1, seq[i], cBound / static_cast<double>(d.sValues[i])});
        cert.verdict = Verdict::Fail;
        if (firstFailure.empty()) firstFailure = label + " domination at s=" + std::to_string(d.sValues[i]);
      }
    }
    if (!seq.empty() && seq.back() > tol) {
      cert.witnesses.push_back(Witness{{x}, -1.0, -1, -1, seq.back(), tol});
      cert.verdict = Verdict::Fail;
      if (firstFailure.empty()) firstFailure = label + " final residual above tolerance";
    }
  };
  for (std::size_t i = 0; i < family.size(); ++i)
    judge(d.familyResiduals[i], "family member " + std::to_string(i));
  judge(d.retractionResiduals, "retraction");
  judge(d.mapResiduals, "map");

  cert.note = "dominating constant " + fmt(d.fittedC) + " vs bound 3*diam = " + fmt(cBound);
  if (!firstFailure.empty()) cert.note += "; " + firstFailure;
  return cert;
}

RetractionFinder resolvent_limit_finder(std::vector<long long> sSchedule,
                                        double stabilizationTol, int probeCount) {
  if (sSchedule.empty()) sSchedule = default_s_schedule();
  return [sSchedule, stabilizationTol, probeCount](const FinderInput& in,
                                                   const ConvexBody& body) -> FoundRetraction {
    auto probes = body.sample(probeCount, 0);
    MapFn tr = in.eval;
    std::map<long long, std::vector<Vector>> imagesBy;
    auto imagesAt = [&](long long s) -> const std::vector<Vector>& {
      auto it = imagesBy.find(s);
      if (it != imagesBy.end()) return it->second;
      std::vector<Vector> imgs;
      imgs.reserve(probes.size());
      const double innerTol = stabilizationTol / (4.0 * static_cast<double>(s));
      for (const auto& p : probes) imgs.push_back(resolvent(tr, s, p, body, innerTol));
      return imagesBy.emplace(s, std::move(imgs)).first->second;
    };
    long long sStar = 0;
    for (long long s : sSchedule) {
      const auto& at = imagesAt(s);
      const auto& at2 = imagesAt(2 * s);
      double delta = 0.0;
      for (std::size_t i = 0; i < probes.size(); ++i)
        delta = std::max(delta, (at2[i] - at[i]).norm());
      if (delta <= stabilizationTol) {
        sStar = s;
        break;
      }
    }
    if (sStar == 0)
      throw SolverError("resolvent-limit finder: probes did not stabilize within the schedule");
    const double solveTol = stabilizationTol / (4.0 * static_cast<double>(sStar));
    FoundRetraction out;
    ConvexBody bodyCopy = body;
    out.eval = [tr, sStar, bodyCopy, solveTol](const Vector& x) {
      return resolvent(tr, sStar, x, bodyCopy, solveTol);
    };
    out.method = "resolvent-limit (s*=" + std::to_string(sStar) + ")";
    return out;
  };
}

RetractionFinder affine_subspace_finder() {
  return [](const FinderInput& in, const ConvexBody& body) -> FoundRetraction {
    if (!in.expr)
      throw SolverError("affine finder: composite carries no exact structure");
    const MapExpr f = *in.expr;
    const Index dim = body.dim();
    Vector b = f(Vector::Zero(dim));
    Matrix a(dim, dim);
    for (Index i = 0; i < dim; ++i) {
      Vector e = Vector::Zero(dim);
      e[i] = 1.0;
      a.col(i) = f(e) - b;
    }
    for (const auto& p : body.sample(20, 3))
      if ((f(p) - (a * p + b)).norm() > 1e-9 * (1.0 + p.norm()))
        throw SolverError("affine finder: composite is not affine");

    Matrix m = a - Matrix::Identity(dim, dim);
    Eigen::FullPivLU<Matrix> lu(m);
    lu.setThreshold(1e-10);
    Vector x0 = lu.solve(Vector(-b));
    if ((m * x0 + b).norm() > 1e-8)
      throw SolverError("affine finder: fixed-point system is inconsistent");

    const Index kdim = lu.dimensionOfKernel();
    Matrix p;
    if (kdim == 0) {
      p = Matrix::Zero(dim, dim);
    } else {
      Matrix kernel = lu.kernel();
      Eigen::HouseholderQR<Matrix> qr(kernel);
      Matrix thinQ = qr.householderQ() * Matrix::Identity(dim, kdim);
      p = thinQ * thinQ.transpose();
    }
    Vector c = x0 - p * x0;
    MapExpr proj = MapExpr::affine(p, c);
    for (const auto& q : body.sample(64, 0)) {
      Vector y = proj(q);
      if (!body.contains(y, 1e-7))
        throw SolverError("affine finder: projection leaves the body");
      if ((f(y) - y).norm() > 1e-7)
        throw SolverError("affine finder: projected point is not fixed by the map");
      if ((proj(y) - y).norm() > 1e-9)
        throw SolverError("affine finder: projection is not idempotent");
    }
    FoundRetraction out;
    out.eval = [proj](const Vector& x) { return proj(x); };
    out.expr = proj;
    out.method = "affine-subspace projection";
    return out;
  };
}

RetractionModel staged_compose(const std::vector<MapExpr>& family, const RetractionFinder& finder,
                              const ConvexBody& body, const NormSpec& space,
                              double gridResolution, double tol) {
  if (!finder) throw InputError("staged_compose: a retraction finder is required");
  for (std::size_t i = 0; i < family.size(); ++i) {
    auto cert = certify_nonexpansive(family[i], body, space);
    if (!cert.passed())
      throw InputError("staged_compose: hypothesis certificate FAIL - family member " +
                       std::to_string(i) + " is not a certified nonexpansive self-map");
  }
  if (family.size() >= 2) {
    auto cert = certify_commuting(family, body, space);
    if (!cert.passed())
      throw InputError("staged_compose: hypothesis certificate FAIL - family does not commute");
  }

  RetractionModel model = RetractionModel::identityOn(body, space);
  model.family_ = family;
  MapFn prevEval = [](const Vector& v) { return v; };
  std::optional<MapExpr> prevExpr = MapExpr::identity();

  for (std::size_t k = 0; k < family.size(); ++k) {
    const MapExpr& t = family[k];
    FinderInput input;
    MapFn prevCopy = prevEval;
    input.eval = [t, prevCopy](const Vector& z) { return t(prevCopy(z)); };
    if (prevExpr) input.expr = MapExpr::compose({t, *prevExpr});

    FoundRetraction found;
    try {
      found = finder(input, body);
    } catch (const std::exception& e) {
      throw SolverError("staged_compose: retraction finder failed at stage " +
                        std::to_string(k + 1) + ": " + e.what());
    }

    std::vector<MapExpr> prefix(family.begin(), family.begin() + static_cast<long>(k));
    auto check = commute_retract_check(t, prefix, prevEval, body, space, gridResolution, tol);

    auto st = std::make_shared<RetractionModel::Stage>();
    st->custom = found.eval;
    st->method = found.method;
    st->stageCheck = check;
    model.stages_.push_back(std::move(st));

    prevEval = found.eval;
    prevExpr = found.expr;
  }
  return model;
}

}  // namespace fixpoint
