#include <doctest.h>

#include <cmath>

#include "decompopt/oracles.hpp"
#include "decompopt/sampling.hpp"

using namespace decompopt;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

EpigraphBlock abs_block(double lipschitz = 1.0, double radius = 2.0) {
  EpigraphBlock block;
  block.value = [](const Vec& x) { return std::abs(x(0)); };
  block.subgradient = [](const Vec& x) {
    return Vec::Constant(1, x(0) >= 0.0 ? 1.0 : -1.0);
  };
  block.lipschitz = lipschitz;
  block.box_center = Vec::Zero(1);
  block.z_center = 0.0;
  block.radius = radius;
  return block;
}

}  // namespace

TEST_CASE("epigraph separation on f = |x|") {
  const EpigraphBlock block = abs_block();

  CHECK(block.separate(v2(0.5, 0.7)).member);
  CHECK(block.separate(v2(0.0, 0.0)).member);  // boundary is a member

  const SeparationResult res = block.separate(v2(0.5, 0.2));
  REQUIRE_FALSE(res.member);
  // Cut {y - w <= 0}, normalized; the query violates it by 0.3/√2.
  CHECK(res.cut->normal(0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(res.cut->normal(1) == doctest::Approx(-1.0 / std::sqrt(2.0)));
  CHECK(res.cut->offset == doctest::Approx(0.0));
  CHECK(res.cut->violation(v2(0.5, 0.2)) > 1e-12);
}

TEST_CASE("epigraph separation: box facets come first") {
  const EpigraphBlock block = abs_block(1.0, 2.0);

  // Outside the trust ball in x.
  const SeparationResult ball = block.separate(v2(3.0, 0.5));
  REQUIRE_FALSE(ball.member);
  CHECK(ball.cut->normal(0) == doctest::Approx(1.0));
  CHECK(ball.cut->offset == doctest::Approx(2.0));

  // Outside the z-range.
  const SeparationResult zhi = block.separate(v2(0.0, 5.0));
  REQUIRE_FALSE(zhi.member);
  CHECK(zhi.cut->normal(1) == doctest::Approx(1.0));
  CHECK(zhi.cut->offset == doctest::Approx(4.0));
  const SeparationResult zlo = block.separate(v2(0.0, -5.0));
  REQUIRE_FALSE(zlo.member);
  CHECK(zlo.cut->normal(1) == doctest::Approx(-1.0));

  // Coordinate bounds (when present) separate too.
  EpigraphBlock boxed = abs_block(1.0, 2.0);
  boxed.coord_lo = Vec::Zero(1);
  boxed.coord_hi = Vec::Ones(1);
  const SeparationResult lo = boxed.separate(v2(-0.5, 1.0));
  REQUIRE_FALSE(lo.member);
  CHECK(lo.cut->normal(0) == doctest::Approx(-1.0));
  CHECK(lo.cut->offset == doctest::Approx(0.0));
}

TEST_CASE("epigraph validity on random piecewise-linear terms") {
  RngStream rng(3, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 1 + static_cast<int>(rng.uniform() * 3);
    const int pieces = 2 + static_cast<int>(rng.uniform() * 3);
    std::vector<Vec> slopes;
    std::vector<double> intercepts;
    for (int p = 0; p < pieces; ++p) {
      slopes.push_back(rng.gaussian_vector(d));
      intercepts.push_back(rng.normal());
    }
    EpigraphBlock block;
    block.value = [slopes, intercepts](const Vec& x) {
      double best = slopes[0].dot(x) + intercepts[0];
      for (size_t j = 1; j < slopes.size(); ++j) {
        best = std::max(best, slopes[j].dot(x) + intercepts[j]);
      }
      return best;
    };
    block.subgradient = [slopes, intercepts](const Vec& x) {
      size_t arg = 0;
      double best = slopes[0].dot(x) + intercepts[0];
      for (size_t j = 1; j < slopes.size(); ++j) {
        const double v = slopes[j].dot(x) + intercepts[j];
        if (v > best) {
          best = v;
          arg = j;
        }
      }
      return slopes[arg];
    };
    double lip = 0.0;
    for (const Vec& a : slopes) lip = std::max(lip, a.norm());
    block.lipschitz = lip + 0.1;
    block.box_center = Vec::Zero(d);
    block.z_center = 0.0;
    block.radius = 10.0;

    for (int probe = 0; probe < 200; ++probe) {
      Vec q(d + 1);
      q.head(d) = 2.0 * rng.gaussian_vector(d);
      q(d) = rng.normal();
      if (q.head(d).norm() > block.radius ||
          std::abs(q(d)) > 2.0 * block.radius) {
        continue;
      }
      const double f = block.value(q.head(d));
      const SeparationResult res = block.separate(q);
      if (f <= block.lipschitz * q(d)) {
        CHECK(res.member);
      } else if (f > block.lipschitz * q(d) + 1e-9) {
        REQUIRE_FALSE(res.member);
        CHECK(res.cut->violation(q) > 0.0);
      }
    }
  }
}

TEST_CASE("separation soundness: cuts contain the true set") {
  const EpigraphBlock block = abs_block();
  RngStream rng(5, 0);
  const SeparationResult res = block.separate(v2(0.5, 0.2));
  REQUIRE_FALSE(res.member);
  int members = 0;
  while (members < 1000) {
    Vec y(2);
    y(0) = 4.0 * rng.uniform() - 2.0;
    y(1) = 4.0 * rng.uniform() - 2.0;
    if (!block.separate(y).member) continue;
    ++members;
    CHECK(res.cut->contains(y, 1e-9));
  }
}

TEST_CASE("known-body oracles: ball, box, polytope") {
  const auto ball = known_body_oracle(Ball(Vec::Zero(2), 1.0));
  CHECK(ball(Vec::Zero(2)).member);
  const SeparationResult tangent = ball(v2(2.0, 0.0));
  REQUIRE_FALSE(tangent.member);
  CHECK(tangent.cut->normal(0) == doctest::Approx(1.0));
  CHECK(tangent.cut->offset == doctest::Approx(1.0));

  const auto box = known_body_oracle(Vec::Zero(2), Vec::Ones(2));
  const SeparationResult facet = box(v2(0.5, 2.0));
  REQUIRE_FALSE(facet.member);
  CHECK(facet.cut->normal(1) == doctest::Approx(1.0));
  CHECK(facet.cut->offset == doctest::Approx(1.0));
  CHECK(box(v2(0.5, 0.5)).member);

  OuterBody poly(Ball(Vec::Zero(2), 2.0));
  poly = poly.with_cut(Halfspace(v2(1.0, 0.0), 0.5), Vec::Zero(2));
  const auto oracle = known_body_oracle(poly);
  CHECK(oracle(v2(0.25, 0.0)).member);
  const SeparationResult cut = oracle(v2(1.0, 0.0));
  REQUIRE_FALSE(cut.member);
  CHECK(cut.cut->normal(0) == doctest::Approx(1.0));
}

TEST_CASE("counting wrapper increments exactly once per call") {
  auto counter = std::make_shared<OracleCounter>();
  const EpigraphBlock block = abs_block();
  const SeparationOracleFn oracle = block.oracle(counter);
  long independent_log = 0;
  oracle(v2(0.5, 0.7));
  ++independent_log;
  oracle(v2(0.5, 0.2));  // separated verdicts count too
  ++independent_log;
  oracle(v2(0.0, 0.0));
  ++independent_log;
  CHECK(counter->separation_calls.load() == independent_log);
  CHECK(counter->subgradient_calls.load() == 1);  // only the separated query
}
