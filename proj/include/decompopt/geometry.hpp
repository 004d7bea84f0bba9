#pragma once

#include <Eigen/Core>
#include <optional>
#include <utility>
#include <vector>

namespace decompopt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Halfspace {y : normal·y <= offset}. The normal is unit-length; construction
/// rescales both fields so the set is unchanged.
struct Halfspace {
  Vec normal;
  double offset = 0.0;

  Halfspace(Vec n, double c);

  bool contains(const Vec& y, double tol = 1e-12) const {
    return normal.dot(y) <= offset + tol;
  }
  double violation(const Vec& y) const { return normal.dot(y) - offset; }
  int dim() const { return static_cast<int>(normal.size()); }
};

struct Ball {
  Vec center;
  double radius = 0.0;

  Ball() = default;
  Ball(Vec c, double r);

  bool contains(const Vec& y, double tol = 1e-12) const {
    return (y - center).norm() <= radius + tol;
  }
  int dim() const { return static_cast<int>(center.size()); }
};

/// Shrinking outer approximation: bounding ball intersected with an ordered
/// list of cuts. Immutable; with_cut returns a new body.
class OuterBody {
 public:
  explicit OuterBody(Ball bounding_ball) : ball_(std::move(bounding_ball)) {}

  bool contains(const Vec& y, double tol = 1e-12) const;

  /// Adds a cut. The witness must be a known member of the true set; a witness
  /// violating h means the separation oracle broke its contract.
  OuterBody with_cut(const Halfspace& h, const Vec& witness) const;

  /// Same, without the witness check (used where no certified member of the
  /// true set is available, e.g. inner-ball finding).
  OuterBody with_cut_unchecked(Halfspace h) const;

  const Ball& bounding_ball() const { return ball_; }
  const std::vector<Halfspace>& cuts() const { return cuts_; }
  int dim() const { return ball_.dim(); }

 private:
  Ball ball_;
  std::vector<Halfspace> cuts_;
};

/// Growing inner approximation: conv(seed ball ∪ hull points). Immutable;
/// grown() returns a new body. Membership is a nearest-point computation over
/// the generators, so it carries a tolerance.
class InnerBody {
 public:
  explicit InnerBody(Ball seed) : seed_(std::move(seed)) {}

  InnerBody grown(const Vec& point) const;

  bool contains(const Vec& point, double tol) const;

  /// Distance from point to the body via the Gilbert nearest-point iteration
  /// over {hull points} ∪ {ball support points}, to absolute gap `gap`
  /// (default per the module's gap tolerance). Throws on hitting the
  /// iteration cap (ill-conditioned body).
  double distance(const Vec& point, double gap = 1e-9) const;

  /// Support point argmax_{g in body} dir·g (dir need not be unit).
  Vec support_point(const Vec& dir) const;

  const Ball& seed_ball() const { return seed_; }
  const std::vector<Vec>& hull_points() const { return hull_points_; }
  int dim() const { return seed_.dim(); }

 private:
  Ball seed_;
  std::vector<Vec> hull_points_;
};

/// Polar (K - anchor)° of an InnerBody about a strictly interior anchor.
/// Membership is closed-form: y·(p_j - anchor) <= 1 for every hull point and
/// y·(z - anchor) + r‖y‖ <= 1 for the seed ball B(z, r). 0 is always a member.
class PolarBody {
 public:
  PolarBody(InnerBody base, Vec anchor);

  bool contains(const Vec& y, double tol = 1e-12) const;

  /// Chord {s : anchor-polar contains y + s*dir}, closed form (linear
  /// constraints from hull points, one quadratic from the seed ball).
  std::pair<double, double> chord(const Vec& y, const Vec& dir) const;

  const InnerBody& base() const { return base_; }
  const Vec& anchor() const { return anchor_; }
  int dim() const { return anchor_.size(); }

 private:
  InnerBody base_;
  Vec anchor_;
};

/// Affine subspace {x : Ax = b} parametrized as x = x_p + N y with N an
/// orthonormal basis of ker(A). Computed once per problem (rank-revealing SVD,
/// rank tolerance 1e-10); the particular solution is the minimum-norm one.
class AffineSubspace {
 public:
  AffineSubspace() = default;  // empty; assign via from_system/unconstrained

  /// Throws std::invalid_argument if the system is inconsistent.
  static AffineSubspace from_system(const Mat& A, const Vec& b);

  /// Unconstrained space of the given dimension (x_p = 0, N = I).
  static AffineSubspace unconstrained(int dim);

  Vec embed(const Vec& reduced) const { return particular_ + basis_ * reduced; }
  Vec project(const Vec& full) const {
    return basis_.transpose() * (full - particular_);
  }

  const Mat& constraint_matrix() const { return A_; }
  const Vec& rhs() const { return b_; }
  const Vec& particular_solution() const { return particular_; }
  const Mat& nullspace_basis() const { return basis_; }
  double residual(const Vec& x) const;
  int ambient_dim() const { return static_cast<int>(basis_.rows()); }
  int reduced_dim() const { return static_cast<int>(basis_.cols()); }

 private:
  Mat A_;
  Vec b_;
  Vec particular_;
  Mat basis_;
};

}  // namespace decompopt
