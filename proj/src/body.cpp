#include "fixpoint/body.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "fixpoint/errors.hpp"

namespace fixpoint {

namespace {

constexpr double kDykstraTol = 1e-10;
constexpr int kDykstraMaxCycles = 10000;
constexpr double kFwGapTol = 1e-9;

double project_halfspace_residual(const Halfspace& h, const Vector& x) {
  return h.normal.dot(x) - h.offset;
}

// Dykstra's alternating projections over halfspaces. Converges to the
// Euclidean projection onto the intersection.
Vector dykstra_project(const std::vector<Halfspace>& hs, const Vector& x) {
  const std::size_t m = hs.size();
  Vector z = x;
  std::vector<Vector> increments(m, Vector::Zero(x.size()));
  Vector prev = z;
  for (int cycle = 0; cycle < kDykstraMaxCycles; ++cycle) {
    prev = z;
    for (std::size_t i = 0; i < m; ++i) {
      Vector y = z + increments[i];
      double viol = project_halfspace_residual(hs[i], y);
      Vector projected = viol > 0 ? Vector(y - viol * hs[i].normal) : y;
      increments[i] = y - projected;
      z = projected;
    }
    double moved = (z - prev).lpNorm<Eigen::Infinity>();
    double worst = 0.0;
    for (const auto& h : hs)
      worst = std::max(worst, project_halfspace_residual(h, z));
    if (moved <= kDykstraTol && worst <= kDykstraTol) return z;
  }
  throw SolverError("polytope projection: Dykstra did not converge within " +
                    std::to_string(kDykstraMaxCycles) + " cycles");
}

// Cyclic projections; finds some feasible point of the intersection.
Vector pocs_feasible(const std::vector<Halfspace>& hs, Index dim) {
  Vector z = Vector::Zero(dim);
  for (int cycle = 0; cycle < 20000; ++cycle) {
    double worst = 0.0;
    for (const auto& h : hs) {
      double viol = project_halfspace_residual(h, z);
      if (viol > 0) z -= viol * h.normal;
      worst = std::max(worst, viol);
    }
    if (worst <= 1e-12) return z;
  }
  throw InputError("polytope: no feasible point found (empty or degenerate)");
}

// Projected ascent along +-e_i with adaptive step. Returns the extent of
// the polytope in that direction; throws when the walk escapes the cap.
double axis_extent(const std::vector<Halfspace>& hs, const Vector& start,
                   const Vector& dir) {
  Vector x = start;
  double step = 1.0 + start.lpNorm<Eigen::Infinity>();
  const double cap = 1e7 * (1.0 + start.lpNorm<Eigen::Infinity>());
  for (int iter = 0; iter < 4000; ++iter) {
    Vector y = dykstra_project(hs, x + step * dir);
    if (dir.dot(y) > cap)
      throw InputError("polytope: unbounded in direction of a coordinate axis");
    double gain = dir.dot(y) - dir.dot(x);
    if (gain < 1e-12) {
      step *= 0.5;
      if (step < 1e-10) return dir.dot(x);
    } else {
      x = y;
      if (gain > 0.5 * step) step *= 2.0;
    }
  }
  throw InputError("polytope: boundedness probe did not converge");
}

struct HullCandidate {
  Vector point;
  double dist2 = std::numeric_limits<double>::infinity();
};

// Projection of x onto the affine hull of {v[idx]}, with barycentric
// validity check. Updates best on success.
void try_subset(const std::vector<Vector>& v, const std::vector<int>& idx,
                const Vector& x, HullCandidate& best) {
  const int k = static_cast<int>(idx.size());
  const Vector& v0 = v[idx[0]];
  if (k == 1) {
    double d2 = (x - v0).squaredNorm();
    if (d2 < best.dist2) best = {v0, d2};
    return;
  }
  Matrix b(v0.size(), k - 1);
  for (int i = 1; i < k; ++i) b.col(i - 1) = v[idx[i]] - v0;
  Matrix gram = b.transpose() * b;
  Eigen::FullPivLU<Matrix> lu(gram);
  lu.setThreshold(1e-12);
  if (lu.rank() < k - 1) return;  // affinely dependent, a smaller subset covers it
  Vector y = lu.solve(b.transpose() * (x - v0));
  double lambda0 = 1.0 - y.sum();
  if (lambda0 < -1e-12 || (y.array() < -1e-12).any()) return;
  Vector q = v0 + b * y;
  double d2 = (x - q).squaredNorm();
  if (d2 < best.dist2) best = {q, d2};
}

void enumerate_subsets(int m, int k, std::vector<int>& cur, int next,
                       const std::function<void(const std::vector<int>&)>& fn) {
  if (static_cast<int>(cur.size()) == k) {
    fn(cur);
    return;
  }
  for (int i = next; i < m; ++i) {
    cur.push_back(i);
    enumerate_subsets(m, k, cur, i + 1, fn);
    cur.pop_back();
  }
}

// Exact nearest point of conv(v): the projection lies on some face, so it
// is the closest among projections onto affine hulls of affinely
// independent vertex subsets with nonnegative barycentric coordinates.
Vector hull_project_exact(const std::vector<Vector>& v, const Vector& x,
                          Index dim) {
  HullCandidate best;
  const int m = static_cast<int>(v.size());
  std::vector<int> cur;
  for (int k = 1; k <= static_cast<int>(dim) + 1 && k <= m; ++k)
    enumerate_subsets(m, k, cur, 0,
                      [&](const std::vector<int>& idx) { try_subset(v, idx, x, best); });
  return best.point;
}

// Away-step Frank-Wolfe for min |V y - x|^2 over the simplex. Linear
// convergence on polytopes; stops at duality gap < kFwGapTol.
Vector hull_project_fw(const std::vector<Vector>& v, const Vector& x) {
  const int m = static_cast<int>(v.size());
  std::vector<double> lambda(m, 0.0);
  lambda[0] = 1.0;
  Vector p = v[0];
  for (long iter = 0; iter < 200000; ++iter) {
    Vector g = p - x;
    int fw = 0, away = -1;
    double fwVal = std::numeric_limits<double>::infinity();
    double awayVal = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      double s = v[i].dot(g);
      if (s < fwVal) {
        fwVal = s;
        fw = i;
      }
      if (lambda[i] > 0 && s > awayVal) {
        awayVal = s;
        away = i;
      }
    }
    double gap = p.dot(g) - fwVal;
    if (gap < kFwGapTol) return p;
    double fwGain = p.dot(g) - fwVal;
    double awayGain = awayVal - p.dot(g);
    bool useAway = away >= 0 && awayGain > fwGain && lambda[away] < 1.0;
    Vector d = useAway ? Vector(p - v[away]) : Vector(v[fw] - p);
    double gammaMax = useAway ? lambda[away] / (1.0 - lambda[away]) : 1.0;
    double denom = d.squaredNorm();
    if (denom <= 0) return p;
    double gamma = std::clamp(-g.dot(d) / denom, 0.0, gammaMax);
    if (gamma <= 0) return p;
    if (useAway) {
      for (auto& l : lambda) l *= 1.0 + gamma;
      lambda[away] -= gamma;
    } else {
      for (auto& l : lambda) l *= 1.0 - gamma;
      lambda[fw] += gamma;
    }
    p += gamma * d;
  }
  throw SolverError("hull projection: Frank-Wolfe gap did not reach tolerance");
}

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31,
                           37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79,
                           83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

double radical_inverse(long index, int base) {
  double result = 0.0, f = 1.0 / base;
  long i = index;
  while (i > 0) {
    result += f * (i % base);
    i /= base;
    f /= base;
  }
  return result;
}

}  // namespace

Vector halton_point(long index, Index dim) {
  Vector u(dim);
  for (Index d = 0; d < dim; ++d)
    u[d] = radical_inverse(index, kPrimes[d % (sizeof(kPrimes) / sizeof(int))]);
  return u;
}

ConvexBody ConvexBody::ball(Vector center, double radius) {
  require_finite(center, "ball center");
  if (radius < 0) throw InputError("ball: radius must be nonnegative");
  if (center.size() < 1) throw InputError("ball: dimension must be >= 1");
  ConvexBody b;
  b.shape_ = Shape::Ball;
  b.dim_ = center.size();
  b.center_ = std::move(center);
  b.radius_ = radius;
  b.finishBoundingBox();
  return b;
}

ConvexBody ConvexBody::box(Vector lo, Vector hi) {
  require_finite(lo, "box lo");
  require_finite(hi, "box hi");
  if (lo.size() != hi.size() || lo.size() < 1)
    throw InputError("box: lo/hi dimension mismatch");
  if ((lo.array() > hi.array()).any())
    throw InputError("box: lo must be <= hi componentwise");
  ConvexBody b;
  b.shape_ = Shape::Box;
  b.dim_ = lo.size();
  b.lo_ = std::move(lo);
  b.hi_ = std::move(hi);
  b.finishBoundingBox();
  return b;
}

ConvexBody ConvexBody::polytope(std::vector<Halfspace> halfspaces) {
  if (halfspaces.empty()) throw InputError("polytope: needs at least one halfspace");
  const Index dim = halfspaces.front().normal.size();
  if (dim < 1) throw InputError("polytope: dimension must be >= 1");
  for (auto& h : halfspaces) {
    require_finite(h.normal, "halfspace normal");
    if (h.normal.size() != dim) throw InputError("polytope: normal dimension mismatch");
    double len = h.normal.norm();
    if (len < 1e-14) throw InputError("polytope: zero halfspace normal");
    h.normal /= len;
    h.offset /= len;
  }
  ConvexBody b;
  b.shape_ = Shape::Polytope;
  b.dim_ = dim;
  b.halfspaces_ = std::move(halfspaces);
  b.feasiblePoint_ = pocs_feasible(b.halfspaces_, dim);
  b.finishBoundingBox();
  return b;
}

ConvexBody ConvexBody::hull(std::vector<Vector> vertices) {
  if (vertices.empty()) throw InputError("hull: needs at least one vertex");
  const Index dim = vertices.front().size();
  if (dim < 1) throw InputError("hull: dimension must be >= 1");
  for (const auto& v : vertices) {
    require_finite(v, "hull vertex");
    if (v.size() != dim) throw InputError("hull: vertex dimension mismatch");
  }
  ConvexBody b;
  b.shape_ = Shape::Hull;
  b.dim_ = dim;
  b.vertices_ = std::move(vertices);
  b.finishBoundingBox();
  return b;
}

void ConvexBody::finishBoundingBox() {
  switch (shape_) {
    case Shape::Ball:
      bboxLo_ = center_.array() - radius_;
      bboxHi_ = center_.array() + radius_;
      break;
    case Shape::Box:
      bboxLo_ = lo_;
      bboxHi_ = hi_;
      break;
    case Shape::Hull: {
      bboxLo_ = vertices_.front();
      bboxHi_ = vertices_.front();
      for (const auto& v : vertices_) {
        bboxLo_ = bboxLo_.cwiseMin(v);
        bboxHi_ = bboxHi_.cwiseMax(v);
      }
      break;
    }
    case Shape::Polytope: {
      bboxLo_ = Vector(dim_);
      bboxHi_ = Vector(dim_);
      for (Index i = 0; i < dim_; ++i) {
        Vector e = Vector::Zero(dim_);
        e[i] = 1.0;
        bboxHi_[i] = axis_extent(halfspaces_, feasiblePoint_, e);
        bboxLo_[i] = -axis_extent(halfspaces_, feasiblePoint_, Vector(-e));
      }
      break;
    }
  }
}

bool ConvexBody::contains(const Vector& x, double tol) const {
  if (x.size() != dim_) return false;
  switch (shape_) {
    case Shape::Ball:
      return (x - center_).norm() <= radius_ + tol;
    case Shape::Box:
      return (x.array() >= lo_.array() - tol).all() &&
             (x.array() <= hi_.array() + tol).all();
    case Shape::Polytope: {
      for (const auto& h : halfspaces_)
        if (project_halfspace_residual(h, x) > tol) return false;
      return true;
    }
    case Shape::Hull:
      return (project(x) - x).norm() <= tol;
  }
  return false;
}

Vector ConvexBody::project(const Vector& x) const {
  if (x.size() != dim_) throw InputError("project: dimension mismatch");
  switch (shape_) {
    case Shape::Ball: {
      Vector d = x - center_;
      double len = d.norm();
      if (len <= radius_) return x;
      return center_ + (radius_ / len) * d;
    }
    case Shape::Box:
      return x.cwiseMax(lo_).cwiseMin(hi_);
    case Shape::Polytope:
      return dykstra_project(halfspaces_, x);
    case Shape::Hull: {
      if (vertices_.size() == 1) return vertices_.front();
      // subsets up to size dim+1: keep the exact path for small inputs
      double subsets = 1;
      for (int k = 1; k <= static_cast<int>(dim_) + 1; ++k) {
        double c = 1;
        for (int i = 0; i < k; ++i)
          c *= static_cast<double>(vertices_.size() - i) / (i + 1);
        subsets += c;
      }
      if (dim_ <= 3 && subsets < 2e5) return hull_project_exact(vertices_, x, dim_);
      return hull_project_fw(vertices_, x);
    }
  }
  throw InputError("project: unknown shape");
}

DiameterResult ConvexBody::diameter(const NormSpec& space) const {
  if (space.dimension != dim_) throw InputError("diameter: space dimension mismatch");
  switch (shape_) {
    case Shape::Ball: {
      switch (space.kind) {
        case NormKind::Euclidean:
        case NormKind::Max:
          return {2.0 * radius_, true};
        case NormKind::Sum:
          return {2.0 * radius_ * std::sqrt(static_cast<double>(dim_)), true};
      }
      return {2.0 * radius_, true};
    }
    case Shape::Box:
      return {norm_of(space.kind, hi_ - lo_), true};
    case Shape::Hull: {
      double best = 0.0;
      for (std::size_t i = 0; i < vertices_.size(); ++i)
        for (std::size_t j = i + 1; j < vertices_.size(); ++j)
          best = std::max(best, norm_of(space.kind, vertices_[i] - vertices_[j]));
      return {best, true};
    }
    case Shape::Polytope: {
      if (dim_ <= 3) {
        auto verts = enumerateVertices();
        double best = 0.0;
        for (std::size_t i = 0; i < verts.size(); ++i)
          for (std::size_t j = i + 1; j < verts.size(); ++j)
            best = std::max(best, norm_of(space.kind, verts[i] - verts[j]));
        if (!verts.empty()) return {best, true};
      }
      // bounding-box upper bound, inflated for the probe tolerance
      return {norm_of(space.kind, bboxHi_ - bboxLo_) + 1e-6, false};
    }
  }
  throw InputError("diameter: unknown shape");
}

std::vector<Vector> ConvexBody::enumerateVertices() const {
  switch (shape_) {
    case Shape::Ball:
      throw InputError("enumerateVertices: a ball has no vertex representation");
    case Shape::Box: {
      if (dim_ > 20) throw InputError("enumerateVertices: box dimension too large");
      std::vector<Vector> out;
      const long n = 1L << dim_;
      out.reserve(n);
      for (long mask = 0; mask < n; ++mask) {
        Vector v(dim_);
        for (Index i = 0; i < dim_; ++i) v[i] = (mask >> i) & 1 ? hi_[i] : lo_[i];
        out.push_back(v);
      }
      return out;
    }
    case Shape::Hull:
      return vertices_;
    case Shape::Polytope: {
      if (dim_ > 3)
        throw InputError("enumerateVertices: polytope vertex enumeration limited to dimension <= 3");
      const int m = static_cast<int>(halfspaces_.size());
      std::vector<Vector> out;
      std::vector<int> cur;
      enumerate_subsets(m, static_cast<int>(dim_), cur, 0, [&](const std::vector<int>& idx) {
        Matrix a(dim_, dim_);
        Vector b(dim_);
        for (Index r = 0; r < dim_; ++r) {
          a.row(r) = halfspaces_[idx[r]].normal.transpose();
          b[r] = halfspaces_[idx[r]].offset;
        }
        Eigen::FullPivLU<Matrix> lu(a);
        lu.setThreshold(1e-10);
        if (lu.rank() < dim_) return;
        Vector v = lu.solve(b);
        if (!contains(v, 1e-9)) return;
        for (const auto& w : out)
          if ((w - v).lpNorm<Eigen::Infinity>() < 1e-9) return;
        out.push_back(v);
      });
      return out;
    }
  }
  return {};
}

std::vector<Vector> ConvexBody::sample(int count, unsigned seed) const {
  if (count < 1) throw InputError("sample: count must be >= 1");
  std::vector<Vector> pts;
  pts.reserve(count);
  auto push = [&](const Vector& v) {
    if (static_cast<int>(pts.size()) < count) pts.push_back(v);
  };
  switch (shape_) {
    case Shape::Ball: {
      for (Index i = 0; i < dim_ && static_cast<int>(pts.size()) < count; ++i) {
        Vector e = Vector::Zero(dim_);
        e[i] = radius_;
        push(center_ + e);
        push(center_ - e);
      }
      push(center_);
      break;
    }
    case Shape::Box: {
      if (dim_ <= 12) {
        const long n = 1L << dim_;
        for (long mask = 0; mask < n && static_cast<int>(pts.size()) < count; ++mask) {
          Vector v(dim_);
          for (Index i = 0; i < dim_; ++i) v[i] = (mask >> i) & 1 ? hi_[i] : lo_[i];
          push(v);
        }
      }
      push(0.5 * (lo_ + hi_));
      break;
    }
    case Shape::Hull: {
      for (const auto& v : vertices_) push(v);
      Vector centroid = Vector::Zero(dim_);
      for (const auto& v : vertices_) centroid += v;
      push(centroid / static_cast<double>(vertices_.size()));
      break;
    }
    case Shape::Polytope: {
      if (dim_ <= 3) {
        for (const auto& v : enumerateVertices()) push(v);
      }
      push(feasiblePoint_);
      break;
    }
  }
  // Low-discrepancy fill over the bounding box, projected in.
  Vector span = bboxHi_ - bboxLo_;
  long index = static_cast<long>(seed) * 7919 + 1;
  while (static_cast<int>(pts.size()) < count) {
    Vector u = halton_point(index++, dim_);
    Vector y = bboxLo_ + u.cwiseProduct(span);
    push(project(y));
  }
  return pts;
}

const Vector& ConvexBody::center() const {
  if (shape_ != Shape::Ball) throw InputError("center: not a ball");
  return center_;
}
double ConvexBody::radius() const {
  if (shape_ != Shape::Ball) throw InputError("radius: not a ball");
  return radius_;
}
const Vector& ConvexBody::lo() const {
  if (shape_ != Shape::Box) throw InputError("lo: not a box");
  return lo_;
}
const Vector& ConvexBody::hi() const {
  if (shape_ != Shape::Box) throw InputError("hi: not a box");
  return hi_;
}
const std::vector<Halfspace>& ConvexBody::halfspaces() const {
  if (shape_ != Shape::Polytope) throw InputError("halfspaces: not a polytope");
  return halfspaces_;
}
const std::vector<Vector>& ConvexBody::vertices() const {
  if (shape_ != Shape::Hull) throw InputError("vertices: not a hull");
  return vertices_;
}

Vector project(const ConvexBody& body, const Vector& x, const NormSpec& space) {
  if (!space.euclidean())
    throw ConfigError("project: metric projection is supported only under the euclidean norm");
  if (space.dimension != body.dim())
    throw InputError("project: space dimension mismatch");
  return body.project(x);
}

bool ConvexBody::operator==(const ConvexBody& other) const {
  if (shape_ != other.shape_ || dim_ != other.dim_) return false;
  switch (shape_) {
    case Shape::Ball:
      return center_ == other.center_ && radius_ == other.radius_;
    case Shape::Box:
      return lo_ == other.lo_ && hi_ == other.hi_;
    case Shape::Polytope: {
      if (halfspaces_.size() != other.halfspaces_.size()) return false;
      for (std::size_t i = 0; i < halfspaces_.size(); ++i)
        if (halfspaces_[i].normal != other.halfspaces_[i].normal ||
            halfspaces_[i].offset != other.halfspaces_[i].offset)
          return false;
      return true;
    }
    case Shape::Hull:
      return vertices_ == other.vertices_;
  }
  return false;
}

}  // namespace fixpoint
