#include "decompopt/oracles.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace decompopt {

SeparationOracleFn wrap_counting(SeparationOracleFn oracle,
                                 std::shared_ptr<OracleCounter> counter) {
  return [oracle = std::move(oracle),
          counter = std::move(counter)](const Vec& q) {
    counter->separation_calls.fetch_add(1, std::memory_order_relaxed);
    return oracle(q);
  };
}

Vec EpigraphBlock::block_center() const {
  Vec c(dim());
  c.head(x_dim()) = box_center;
  c(x_dim()) = z_center;
  return c;
}

SeparationResult EpigraphBlock::separate(const Vec& q,
                                         OracleCounter* counter) const {
  if (q.size() != dim()) {
    throw std::invalid_argument("EpigraphBlock::separate: dimension mismatch");
  }
  const int d = x_dim();
  const Vec xq = q.head(d);
  const double zq = q(d);

  const Vec off = xq - box_center;
  const double dist = off.norm();
  if (dist > radius) {
    Vec normal = Vec::Zero(dim());
    normal.head(d) = off / dist;
    const double offset = normal.head(d).dot(box_center) + radius;
    return SeparationResult::separated(Halfspace(normal, offset));
  }
  if (zq > z_center + 2.0 * radius) {
    Vec normal = Vec::Zero(dim());
    normal(d) = 1.0;
    return SeparationResult::separated(
        Halfspace(normal, z_center + 2.0 * radius));
  }
  if (zq < z_center - 2.0 * radius) {
    Vec normal = Vec::Zero(dim());
    normal(d) = -1.0;
    return SeparationResult::separated(
        Halfspace(normal, -(z_center - 2.0 * radius)));
  }
  if (coord_lo || coord_hi) {
    int worst = -1;
    double worst_violation = 0.0;
    double worst_sign = 1.0;
    for (int k = 0; k < d; ++k) {
      if (coord_hi && xq(k) - (*coord_hi)(k) > worst_violation) {
        worst_violation = xq(k) - (*coord_hi)(k);
        worst = k;
        worst_sign = 1.0;
      }
      if (coord_lo && (*coord_lo)(k) - xq(k) > worst_violation) {
        worst_violation = (*coord_lo)(k) - xq(k);
        worst = k;
        worst_sign = -1.0;
      }
    }
    if (worst >= 0) {
      Vec normal = Vec::Zero(dim());
      normal(worst) = worst_sign;
      const double offset =
          worst_sign > 0 ? (*coord_hi)(worst) : -(*coord_lo)(worst);
      return SeparationResult::separated(Halfspace(normal, offset));
    }
  }

  const double f = value(xq);
  if (f <= lipschitz * zq) {
    return SeparationResult::member_result();
  }
  if (counter != nullptr) {
    counter->subgradient_calls.fetch_add(1, std::memory_order_relaxed);
  }
  const Vec g = subgradient(xq);
  Vec normal(dim());
  normal.head(d) = g;
  normal(d) = -lipschitz;
  return SeparationResult::separated(Halfspace(normal, g.dot(xq) - f));
}

SeparationOracleFn EpigraphBlock::oracle(
    std::shared_ptr<OracleCounter> counter) const {
  EpigraphBlock self = *this;
  return wrap_counting(
      [self, counter](const Vec& q) {
        return self.separate(q, counter.get());
      },
      counter);
}

SeparationOracleFn known_body_oracle(const Ball& ball) {
  return [ball](const Vec& q) {
    const Vec off = q - ball.center;
    const double dist = off.norm();
    if (dist <= ball.radius) return SeparationResult::member_result();
    const Vec normal = off / dist;
    return SeparationResult::separated(
        Halfspace(normal, normal.dot(ball.center) + ball.radius));
  };
}

SeparationOracleFn known_body_oracle(const Vec& lo, const Vec& hi) {
  if (lo.size() != hi.size()) {
    throw std::invalid_argument("known_body_oracle: box bound sizes differ");
  }
  return [lo, hi](const Vec& q) {
    int worst = -1;
    double worst_violation = 0.0;
    double sign = 1.0;
    for (int k = 0; k < q.size(); ++k) {
      if (q(k) - hi(k) > worst_violation) {
        worst_violation = q(k) - hi(k);
        worst = k;
        sign = 1.0;
      }
      if (lo(k) - q(k) > worst_violation) {
        worst_violation = lo(k) - q(k);
        worst = k;
        sign = -1.0;
      }
    }
    if (worst < 0) return SeparationResult::member_result();
    Vec normal = Vec::Zero(q.size());
    normal(worst) = sign;
    return SeparationResult::separated(
        Halfspace(normal, sign > 0 ? hi(worst) : -lo(worst)));
  };
}

SeparationOracleFn known_body_oracle(const OuterBody& body) {
  return [body](const Vec& q) {
    int worst = -1;
    double worst_violation = 0.0;
    const auto& cuts = body.cuts();
    for (size_t j = 0; j < cuts.size(); ++j) {
      const double v = cuts[j].violation(q);
      if (v > worst_violation) {
        worst_violation = v;
        worst = static_cast<int>(j);
      }
    }
    if (worst >= 0) {
      return SeparationResult::separated(cuts[worst]);
    }
    return known_body_oracle(body.bounding_ball())(q);
  };
}

}  // namespace decompopt
