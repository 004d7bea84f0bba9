#include <doctest.h>

#include <cmath>

#include "decompopt/geometry.hpp"
#include "decompopt/sampling.hpp"

using namespace decompopt;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec v1(double a) { return Vec::Constant(1, a); }

// Independent distance oracle for conv(disc(center, r) ∪ {p}): minimize over
// λ ∈ [0,1] the convex function max(0, ‖q - (1-λ)p - λ·center‖ - λ·r) by
// ternary search.
double disc_point_hull_distance(const Vec& center, double r, const Vec& p,
                                const Vec& q) {
  auto f = [&](double lam) {
    const Vec target = q - (1.0 - lam) * p - lam * center;
    return std::max(0.0, target.norm() - lam * r);
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (f(m1) <= f(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  return f(0.5 * (lo + hi));
}

InnerBody random_inner_body(RngStream& rng, int dim, int points) {
  Vec center = rng.gaussian_vector(dim);
  InnerBody body(Ball(center, 0.3 + rng.uniform()));
  for (int k = 0; k < points; ++k) {
    body = body.grown(center + 2.0 * rng.gaussian_vector(dim));
  }
  return body;
}

}  // namespace

TEST_CASE("halfspace is normalized on construction") {
  Halfspace h(v2(3.0, 4.0), 10.0);
  CHECK(std::abs(h.normal.norm() - 1.0) <= 1e-12);
  CHECK(h.offset == doctest::Approx(2.0));
  CHECK(h.contains(v2(0.0, 0.0)));
  CHECK_THROWS_AS(Halfspace(v2(0.0, 0.0), 1.0), std::invalid_argument);
}

TEST_CASE("outer membership: ball and cuts") {
  OuterBody body(Ball(Vec::Zero(2), 1.0));
  CHECK(body.contains(Vec::Zero(2)));
  OuterBody cutb = body.with_cut(Halfspace(v2(1.0, 0.0), 0.0), v2(-0.5, 0.0));
  CHECK_FALSE(cutb.contains(v2(0.5, 0.0)));
  CHECK(cutb.contains(v2(-0.5, 0.0)));
  CHECK_THROWS_AS(body.contains(Vec::Zero(3)), std::invalid_argument);
}

TEST_CASE("cut_outer: idempotent duplicates and witness contract") {
  OuterBody body(Ball(Vec::Zero(2), 1.0));
  const Halfspace h(v2(1.0, 0.0), 0.0);
  OuterBody once = body.with_cut(h, v2(-0.5, 0.0));
  OuterBody twice = once.with_cut(h, v2(-0.5, 0.0));
  CHECK(once.cuts().size() == 1);
  CHECK(twice.cuts().size() == 1);
  // A witness on the wrong side means the separation oracle is broken.
  CHECK_THROWS_AS(body.with_cut(h, v2(0.5, 0.0)), std::runtime_error);
}

TEST_CASE("cut monotonicity on random probes") {
  RngStream rng(7, 0);
  OuterBody body(Ball(Vec::Zero(3), 2.0));
  OuterBody cutb = body.with_cut(Halfspace(rng.unit_vector(3), 0.4),
                                 Vec::Zero(3));
  for (int k = 0; k < 1000; ++k) {
    const Vec q = 2.5 * rng.gaussian_vector(3);
    if (cutb.contains(q)) CHECK(body.contains(q));
  }
}

TEST_CASE("inner membership: seed ball only") {
  InnerBody body(Ball(Vec::Zero(2), 1.0));
  CHECK(body.contains(Vec::Zero(2), 1e-9));
  CHECK(body.contains(v2(0.999999, 0.0), 1e-5));
  CHECK_FALSE(body.contains(v2(1.5, 0.0), 1e-5));
}

TEST_CASE("inner membership agrees with the disc-plus-point oracle") {
  InnerBody body(Ball(Vec::Zero(2), 1.0));
  body = body.grown(v2(3.0, 0.0));

  // (2,0) = midpoint of (1,0) and (3,0), both generators.
  CHECK(body.contains(v2(2.0, 0.0), 1e-8));

  // (0,2): the nearest hull point is (0,1) on the disc, distance 1.
  const double oracle =
      disc_point_hull_distance(Vec::Zero(2), 1.0, v2(3.0, 0.0), v2(0.0, 2.0));
  CHECK(oracle == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(body.distance(v2(0.0, 2.0), 1e-9) ==
        doctest::Approx(oracle).epsilon(1e-8));
  CHECK_FALSE(body.contains(v2(0.0, 2.0), 0.99));

  RngStream rng(3, 1);
  for (int k = 0; k < 50; ++k) {
    const Vec q = 2.5 * rng.gaussian_vector(2);
    const double want =
        disc_point_hull_distance(Vec::Zero(2), 1.0, v2(3.0, 0.0), q);
    CHECK(body.distance(q, 1e-9) == doctest::Approx(want).epsilon(1e-7));
  }
}

TEST_CASE("inner membership agrees with closed-form 1-D hulls") {
  RngStream rng(11, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const double c = rng.normal();
    const double r = 0.2 + rng.uniform();
    InnerBody body(Ball(v1(c), r));
    double lo = c - r, hi = c + r;
    const int extra = static_cast<int>(rng.uniform() * 4);
    for (int k = 0; k < extra; ++k) {
      const double p = c + 3.0 * rng.normal();
      body = body.grown(v1(p));
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
    for (int k = 0; k < 30; ++k) {
      const double q = c + 5.0 * rng.normal();
      const double want = std::max({0.0, lo - q, q - hi});
      CHECK(body.distance(v1(q), 1e-9) ==
            doctest::Approx(want).epsilon(1e-8));
    }
  }
}

TEST_CASE("grow_inner keeps old members and absorbs members") {
  InnerBody body(Ball(Vec::Zero(2), 1.0));
  InnerBody grown = body.grown(v2(3.0, 0.0));
  CHECK(grown.hull_points().size() == 1);

  RngStream rng(5, 2);
  // Growth monotonicity.
  for (int k = 0; k < 500; ++k) {
    const Vec q = 2.0 * rng.gaussian_vector(2);
    if (body.contains(q, 1e-9)) CHECK(grown.contains(q, 1e-8));
  }
  // conv(K ∪ {p}) = K for a member p: membership unchanged on probes.
  InnerBody same = grown.grown(v2(0.5, 0.0));
  for (int k = 0; k < 1000; ++k) {
    const Vec q = 2.5 * rng.gaussian_vector(2);
    CHECK(grown.contains(q, 1e-7) == same.contains(q, 1e-7));
  }
}

TEST_CASE("polar membership closed forms") {
  // Unit ball about its center is self-polar.
  PolarBody self_polar(InnerBody(Ball(Vec::Zero(2), 1.0)), Vec::Zero(2));
  CHECK(self_polar.contains(v2(0.5, 0.0)));
  CHECK_FALSE(self_polar.contains(v2(1.5, 0.0)));
  CHECK(self_polar.contains(Vec::Zero(2)));

  // Interval [0,2] about 0.5 has polar [-1/(x-a), 1/(b-x)] = [-2, 2/3].
  PolarBody interval(InnerBody(Ball(v1(1.0), 1.0)), v1(0.5));
  CHECK(interval.contains(v1(-1.0)));
  CHECK(interval.contains(v1(0.6666)));
  CHECK_FALSE(interval.contains(v1(0.67)));
  CHECK_FALSE(interval.contains(v1(-2.001)));
  CHECK(interval.contains(v1(-1.9999)));
}

TEST_CASE("polar anti-monotonicity under hull growth") {
  RngStream rng(13, 0);
  for (int trial = 0; trial < 10; ++trial) {
    InnerBody body = random_inner_body(rng, 3, 2);
    const Vec anchor = body.seed_ball().center;
    const Vec y = anchor + 3.0 * rng.gaussian_vector(3);
    PolarBody before(body, anchor);
    PolarBody after(body.grown(y), anchor);
    for (int k = 0; k < 100; ++k) {
      const Vec q = rng.gaussian_vector(3);
      if (after.contains(q)) {
        CHECK(before.contains(q));
        CHECK(q.dot(y - anchor) <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("polar closed-form chord matches bisection") {
  RngStream rng(17, 0);
  for (int trial = 0; trial < 20; ++trial) {
    InnerBody body = random_inner_body(rng, 3, 3);
    const Vec anchor =
        body.seed_ball().center +
        0.3 * body.seed_ball().radius * rng.unit_vector(3);
    PolarBody polar(body, anchor);
    MembershipFn member = [&polar](const Vec& q) { return polar.contains(q); };
    for (int k = 0; k < 10; ++k) {
      const Vec dir = rng.unit_vector(3);
      const auto closed = polar.chord(Vec::Zero(3), dir);
      const auto bisect = chord_by_bisection(member, Vec::Zero(3), dir, 1e-9);
      CHECK(closed.first == doctest::Approx(bisect.first).epsilon(1e-6));
      CHECK(closed.second == doctest::Approx(bisect.second).epsilon(1e-6));
    }
  }
}

TEST_CASE("affine subspace: embed/project and invariants") {
  Mat A(1, 2);
  A << 1.0, 1.0;
  Vec b = v1(1.0);
  const AffineSubspace sub = AffineSubspace::from_system(A, b);

  CHECK((A * sub.particular_solution() - b).norm() <= 1e-9);
  CHECK((A * sub.nullspace_basis()).norm() <= 1e-9);
  CHECK((sub.nullspace_basis().transpose() * sub.nullspace_basis() -
         Mat::Identity(1, 1))
            .norm() <= 1e-9);
  CHECK(sub.embed(Vec::Zero(1)).isApprox(v2(0.5, 0.5), 1e-12));

  // embed(±√2/2) hits (1,0); the sign depends on the basis orientation.
  const double s = sub.nullspace_basis()(0, 0) > 0 ? std::sqrt(0.5)
                                                   : -std::sqrt(0.5);
  CHECK(sub.embed(v1(s)).isApprox(v2(1.0, 0.0), 1e-9));

  RngStream rng(19, 0);
  for (int k = 0; k < 100; ++k) {
    const Vec y = rng.gaussian_vector(sub.reduced_dim());
    const Vec x = sub.embed(y);
    CHECK(sub.residual(x) <= 1e-9);
    CHECK((sub.project(x) - y).norm() <= 1e-9);
  }
}

TEST_CASE("affine subspace: random rectangular systems") {
  RngStream rng(23, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 4 + static_cast<int>(rng.uniform() * 4);
    const int rows = 1 + static_cast<int>(rng.uniform() * (n - 1));
    Mat A(rows, n);
    for (int i = 0; i < rows; ++i) A.row(i) = rng.gaussian_vector(n);
    const Vec x_star = rng.gaussian_vector(n);
    const AffineSubspace sub = AffineSubspace::from_system(A, A * x_star);
    CHECK(sub.residual(sub.particular_solution()) <= 1e-9);
    CHECK((A * sub.nullspace_basis()).norm() <= 1e-9);
    const int rd = sub.reduced_dim();
    CHECK((sub.nullspace_basis().transpose() * sub.nullspace_basis() -
           Mat::Identity(rd, rd))
              .norm() <= 1e-9);
  }
  // Inconsistent systems are rejected.
  Mat A(2, 2);
  A << 1.0, 0.0, 1.0, 0.0;
  Vec b(2);
  b << 0.0, 1.0;
  CHECK_THROWS_AS(AffineSubspace::from_system(A, b), std::invalid_argument);
}
