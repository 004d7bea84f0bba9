#include "decompopt/geometry.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace decompopt {

namespace {

void require_dim(int got, int want, const char* what) {
  if (got != want) {
    std::ostringstream os;
    os << what << ": dimension mismatch (got " << got << ", want " << want
       << ")";
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

Halfspace::Halfspace(Vec n, double c) : normal(std::move(n)), offset(c) {
  const double len = normal.norm();
  if (!(len > 0.0)) {
    throw std::invalid_argument("Halfspace: zero normal");
  }
  normal /= len;
  offset /= len;
}

Ball::Ball(Vec c, double r) : center(std::move(c)), radius(r) {
  if (!(radius > 0.0)) {
    throw std::invalid_argument("Ball: radius must be positive");
  }
}

bool OuterBody::contains(const Vec& y, double tol) const {
  require_dim(static_cast<int>(y.size()), dim(), "OuterBody::contains");
  if (!ball_.contains(y, tol)) return false;
  for (const Halfspace& h : cuts_) {
    if (!h.contains(y, tol)) return false;
  }
  return true;
}

OuterBody OuterBody::with_cut(const Halfspace& h, const Vec& witness) const {
  if (!h.contains(witness, 1e-9)) {
    std::ostringstream os;
    os << "OuterBody::with_cut: witness violates the cut by "
       << h.violation(witness) << "; separation oracle broke its contract";
    throw std::runtime_error(os.str());
  }
  return with_cut_unchecked(h);
}

OuterBody OuterBody::with_cut_unchecked(Halfspace h) const {
  require_dim(h.dim(), dim(), "OuterBody::with_cut");
  OuterBody next = *this;
  // Drop near-duplicate cuts: same direction and offset changes nothing.
  for (const Halfspace& old : cuts_) {
    if (old.normal.dot(h.normal) > 1.0 - 1e-10 &&
        std::abs(old.offset - h.offset) < 1e-10) {
      return next;
    }
  }
  next.cuts_.push_back(std::move(h));
  return next;
}

InnerBody InnerBody::grown(const Vec& point) const {
  require_dim(static_cast<int>(point.size()), dim(), "InnerBody::grown");
  InnerBody next = *this;
  next.hull_points_.push_back(point);
  return next;
}

Vec InnerBody::support_point(const Vec& dir) const {
  const double len = dir.norm();
  Vec best;
  if (len > 0.0) {
    best = seed_.center + (seed_.radius / len) * dir;
  } else {
    best = seed_.center;
  }
  double best_val = dir.dot(best);
  for (const Vec& p : hull_points_) {
    const double v = dir.dot(p);
    if (v > best_val) {
      best_val = v;
      best = p;
    }
  }
  return best;
}

namespace {

// Wolfe-style nearest-point iteration over the generators {hull points} ∪
// {seed-ball support points}. The corral holds the active generators; the
// minor cycle re-solves the affine least-squares problem and drops generators
// whose weight would go negative.

// min ‖q - Σ α_i pts_i‖ subject to Σ α_i = 1 (bordered normal equations).
Vec affine_coeffs(const std::vector<Vec>& pts, const Vec& q) {
  const int k = static_cast<int>(pts.size());
  Mat kkt = Mat::Zero(k + 1, k + 1);
  Vec rhs(k + 1);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j <= i; ++j) {
      kkt(i, j) = kkt(j, i) = pts[i].dot(pts[j]);
    }
    kkt(i, k) = kkt(k, i) = 1.0;
    rhs(i) = pts[i].dot(q);
  }
  rhs(k) = 1.0;
  for (int i = 0; i < k; ++i) kkt(i, i) += 1e-13 * (1.0 + kkt(i, i));
  return Eigen::FullPivLU<Mat>(kkt).solve(rhs).head(k);
}

struct NearestState {
  std::vector<Vec> pts;
  std::vector<double> lambda;
  Vec w;

  explicit NearestState(Vec start) : w(std::move(start)) {
    pts.push_back(w);
    lambda.push_back(1.0);
  }

  void recombine() {
    w = Vec::Zero(pts[0].size());
    for (size_t i = 0; i < pts.size(); ++i) w += lambda[i] * pts[i];
  }

  // One major Wolfe step toward generator v, with minor cycles.
  void add_and_correct(const Vec& q, const Vec& v) {
    pts.push_back(v);
    lambda.push_back(0.0);
    for (int minor = 0; minor < 4 * static_cast<int>(pts.size()) + 8;
         ++minor) {
      const Vec alpha = affine_coeffs(pts, q);
      if (alpha.minCoeff() >= -1e-12) {
        for (size_t i = 0; i < pts.size(); ++i) {
          lambda[i] = std::max(0.0, alpha(i));
        }
        break;
      }
      double theta = 1.0;
      for (size_t i = 0; i < pts.size(); ++i) {
        if (alpha(i) < lambda[i]) {
          theta = std::min(theta, lambda[i] / (lambda[i] - alpha(i)));
        }
      }
      for (size_t i = 0; i < pts.size(); ++i) {
        lambda[i] += theta * (alpha(i) - lambda[i]);
      }
      for (size_t i = pts.size(); i-- > 0;) {
        if (lambda[i] <= 1e-14 && pts.size() > 1) {
          pts.erase(pts.begin() + i);
          lambda.erase(lambda.begin() + i);
        }
      }
    }
    double total = 0.0;
    for (double l : lambda) total += l;
    if (total > 0.0) {
      for (double& l : lambda) l /= total;
    }
    recombine();
  }
};

long nearest_cap(const InnerBody& body) {
  const long k = body.dim() + static_cast<long>(body.hull_points().size()) + 2;
  return std::max<long>(200, 10 * k * k);
}

}  // namespace

double InnerBody::distance(const Vec& point, double gap) const {
  require_dim(static_cast<int>(point.size()), dim(), "InnerBody::distance");
  if (!(gap > 0.0)) throw std::invalid_argument("InnerBody: gap must be > 0");
  if ((point - seed_.center).norm() <= seed_.radius) return 0.0;
  NearestState state(support_point(point - seed_.center));
  double lb = 0.0;
  const long cap = nearest_cap(*this);
  for (long it = 0; it < cap; ++it) {
    const Vec d = point - state.w;
    const double ub = d.norm();
    if (ub - std::max(lb, 0.0) <= std::max(gap, 1e-14 * (1.0 + ub))) return ub;
    const Vec v = support_point(d);
    lb = std::max(lb, d.dot(point - v) / ub);
    // Wolfe gap: w is the exact nearest point when no generator improves.
    if (d.dot(v - state.w) <= 1e-14 * (1.0 + ub * ub)) return ub;
    state.add_and_correct(point, v);
  }
  throw std::runtime_error(
      "InnerBody::distance: nearest-point iteration hit its cap "
      "(ill-conditioned body)");
}

bool InnerBody::contains(const Vec& point, double tol) const {
  require_dim(static_cast<int>(point.size()), dim(), "InnerBody::contains");
  if (!(tol > 0.0)) throw std::invalid_argument("InnerBody: tol must be > 0");
  if ((point - seed_.center).norm() <= seed_.radius + tol) return true;
  NearestState state(support_point(point - seed_.center));
  double lb = 0.0;
  const long cap = nearest_cap(*this);
  for (long it = 0; it < cap; ++it) {
    const Vec d = point - state.w;
    const double ub = d.norm();
    if (ub <= tol) return true;
    if (lb > tol) return false;
    const Vec v = support_point(d);
    lb = std::max(lb, d.dot(point - v) / ub);
    if (d.dot(v - state.w) <= 1e-14 * (1.0 + ub * ub)) return ub <= tol;
    state.add_and_correct(point, v);
  }
  throw std::runtime_error(
      "InnerBody::contains: nearest-point iteration hit its cap "
      "(ill-conditioned body)");
}

PolarBody::PolarBody(InnerBody base, Vec anchor)
    : base_(std::move(base)), anchor_(std::move(anchor)) {
  require_dim(static_cast<int>(anchor_.size()), base_.dim(), "PolarBody");
}

bool PolarBody::contains(const Vec& y, double tol) const {
  require_dim(static_cast<int>(y.size()), dim(), "PolarBody::contains");
  const Ball& seed = base_.seed_ball();
  if (y.dot(seed.center - anchor_) + seed.radius * y.norm() > 1.0 + tol) {
    return false;
  }
  for (const Vec& p : base_.hull_points()) {
    if (y.dot(p - anchor_) > 1.0 + tol) return false;
  }
  return true;
}

std::pair<double, double> PolarBody::chord(const Vec& y, const Vec& dir) const {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  // Hull-point constraints are linear in s.
  for (const Vec& p : base_.hull_points()) {
    const Vec g = p - anchor_;
    const double a = dir.dot(g);
    const double b = 1.0 - y.dot(g);
    if (std::abs(a) < 1e-300) {
      if (b < 0.0) return {0.0, 0.0};
      continue;
    }
    if (a > 0.0) {
      hi = std::min(hi, b / a);
    } else {
      lo = std::max(lo, b / a);
    }
  }

  // Seed-ball constraint: (y+s·dir)·(z-x) + r‖y+s·dir‖ <= 1. Squaring gives a
  // quadratic in s, valid where the linear part 1 - (y+s·dir)·(z-x) >= 0.
  const Ball& seed = base_.seed_ball();
  const Vec g = seed.center - anchor_;
  const double r = seed.radius;
  const double a1 = dir.dot(g);
  const double b1 = 1.0 - y.dot(g);  // need b1 - a1*s >= r‖y+s·dir‖ >= 0
  const double qa = r * r * dir.squaredNorm() - a1 * a1;
  const double qb = 2.0 * (r * r * y.dot(dir) + a1 * b1);
  const double qc = r * r * y.squaredNorm() - b1 * b1;
  // Solve qa*s^2 + qb*s + qc <= 0 together with b1 - a1*s >= 0.
  if (std::abs(qa) < 1e-14 * (1.0 + qb * qb + std::abs(qc))) {
    if (std::abs(qb) > 1e-300) {
      if (qb > 0.0) {
        hi = std::min(hi, -qc / qb);
      } else {
        lo = std::max(lo, -qc / qb);
      }
    } else if (qc > 0.0) {
      return {0.0, 0.0};
    }
  } else {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (qa > 0.0) {
      if (disc <= 0.0) return {0.0, 0.0};
      const double sq = std::sqrt(disc);
      lo = std::max(lo, (-qb - sq) / (2.0 * qa));
      hi = std::min(hi, (-qb + sq) / (2.0 * qa));
    } else if (disc > 0.0) {
      // Feasible outside the roots; keep the side containing s = 0, which the
      // linear validity condition b1 - a1*s >= 0 selects.
      const double sq = std::sqrt(disc);
      const double r1 = (-qb + sq) / (2.0 * qa);  // smaller root (qa < 0)
      const double r2 = (-qb - sq) / (2.0 * qa);
      if (qc <= 0.0) {
        // s = 0 is feasible: it lies left of r1 or right of r2.
        if (0.0 <= r1) {
          hi = std::min(hi, r1);
        } else {
          lo = std::max(lo, r2);
        }
      } else {
        return {0.0, 0.0};
      }
    }
    // qa < 0 with disc <= 0: constraint holds for all s.
  }
  if (!(lo <= hi)) return {0.0, 0.0};
  return {lo, hi};
}

AffineSubspace AffineSubspace::from_system(const Mat& A, const Vec& b) {
  if (A.rows() != b.size()) {
    throw std::invalid_argument("AffineSubspace: A rows != b size");
  }
  AffineSubspace sub;
  sub.A_ = A;
  sub.b_ = b;
  if (A.rows() == 0) {
    sub.particular_ = Vec::Zero(A.cols());
    sub.basis_ = Mat::Identity(A.cols(), A.cols());
    return sub;
  }
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double rank_tol = 1e-10 * std::max(1.0, svd.singularValues()(0));
  int rank = 0;
  while (rank < svd.singularValues().size() &&
         svd.singularValues()(rank) > rank_tol) {
    ++rank;
  }
  // Minimum-norm particular solution via the truncated pseudo-inverse.
  Vec ub = svd.matrixU().transpose() * b;
  Vec y = Vec::Zero(A.cols());
  for (int i = 0; i < rank; ++i) y(i) = ub(i) / svd.singularValues()(i);
  sub.particular_ = svd.matrixV() * y;
  sub.basis_ = svd.matrixV().rightCols(A.cols() - rank);
  if ((A * sub.particular_ - b).norm() > 1e-9 * (1.0 + b.norm())) {
    throw std::invalid_argument("AffineSubspace: inconsistent system Ax = b");
  }
  return sub;
}

AffineSubspace AffineSubspace::unconstrained(int dim) {
  AffineSubspace sub;
  sub.A_ = Mat::Zero(0, dim);
  sub.b_ = Vec::Zero(0);
  sub.particular_ = Vec::Zero(dim);
  sub.basis_ = Mat::Identity(dim, dim);
  return sub;
}

double AffineSubspace::residual(const Vec& x) const {
  if (A_.rows() == 0) return 0.0;
  return (A_ * x - b_).norm();
}

}  // namespace decompopt
