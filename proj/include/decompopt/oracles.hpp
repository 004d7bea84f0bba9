#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <optional>

#include "decompopt/geometry.hpp"

namespace decompopt {

/// Answer of a separation oracle: member, or a halfspace that contains the
/// true set and strictly excludes the query.
struct SeparationResult {
  bool member = false;
  std::optional<Halfspace> cut;

  static SeparationResult member_result() { return {true, std::nullopt}; }
  static SeparationResult separated(Halfspace h) {
    return {false, std::move(h)};
  }
};

using SeparationOracleFn = std::function<SeparationResult(const Vec&)>;

/// Monotone call counters; atomics so concurrent read-only oracle evaluation
/// can share one instance.
struct OracleCounter {
  std::atomic<long> separation_calls{0};
  std::atomic<long> subgradient_calls{0};
  std::atomic<long> evaluation_calls{0};
};

struct OracleCounts {
  long separation_calls = 0;
  long subgradient_calls = 0;
  long evaluation_calls = 0;
};

inline OracleCounts snapshot(const OracleCounter& c) {
  return {c.separation_calls.load(), c.subgradient_calls.load(),
          c.evaluation_calls.load()};
}

/// Transparent pass-through that bumps separation_calls once per call.
SeparationOracleFn wrap_counting(SeparationOracleFn oracle,
                                 std::shared_ptr<OracleCounter> counter);

/// One Lipschitz term lifted to the set {(x, z) : f(x) <= L z} intersected
/// with its trust box: ‖x - box_center‖₂ <= radius, |z - z_center| <= 2·radius,
/// and optional per-coordinate bounds on x.
struct EpigraphBlock {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> subgradient;
  double lipschitz = 1.0;
  Vec box_center;
  double z_center = 0.0;
  double radius = 1.0;
  std::optional<Vec> coord_lo;
  std::optional<Vec> coord_hi;

  int x_dim() const { return static_cast<int>(box_center.size()); }
  int dim() const { return x_dim() + 1; }
  Vec block_center() const;

  /// Box constraints are tested before the function value; a violated facet
  /// is returned as the cut. Otherwise f is evaluated and, if f(x) > L z, a
  /// subgradient cut {(y,w) : g·y - L·w <= g·x - f(x)} is returned.
  SeparationResult separate(const Vec& q, OracleCounter* counter = nullptr) const;

  /// The separate() above as a closure.
  SeparationOracleFn oracle(std::shared_ptr<OracleCounter> counter) const;
};

/// Exact separation oracles for analytically known bodies (test fixtures and
/// Phase-I slack blocks). Cuts are tangent/facet halfspaces.
SeparationOracleFn known_body_oracle(const Ball& ball);
SeparationOracleFn known_body_oracle(const Vec& lo, const Vec& hi);
SeparationOracleFn known_body_oracle(const OuterBody& body);

}  // namespace decompopt
