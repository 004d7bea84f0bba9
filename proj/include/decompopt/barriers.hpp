#pragma once

#include <vector>

#include "decompopt/geometry.hpp"
#include "decompopt/sampling.hpp"

namespace decompopt {

/// Universal-barrier gradient and Hessian at a point, built from the sampled
/// centroid μ and covariance Σ of the polar body: grad = (d+1)μ,
/// hessian = (d+1)(d+2)Σ + (d+1)μμᵀ (plus a 1e-10 ridge before norms).
struct LocalMetric {
  Vec grad;
  Mat hessian;
  int block_dim = 0;
  MomentEstimate polar_moments;

  double local_norm(const Vec& v) const;
  /// Batch-means standard error of ⟨grad, u⟩.
  double grad_dot_stderr(const Vec& u) const;
};

/// Samples the polar of `body` about `x` uniformly and assembles the metric.
/// `x` must be strictly interior (margin checked by coordinate probes; a
/// non-interior x makes the polar unbounded and is reported as an error).
LocalMetric universal_metric(const InnerBody& body, const Vec& x,
                             const ChainConfig& cfg);

/// The entropic-barrier path point x*_out for the product of outer bodies
/// restricted to {Ax=b}: the centroid of exp(-t·c·x) over the body, sampled
/// in reduced coordinates.
struct OuterCenter {
  Vec x;                        // full coordinates, satisfies Ax=b exactly
  double objective = 0.0;       // c·x
  double objective_stderr = 0.0;
  MomentEstimate moments_reduced;
  Mat samples_reduced;          // one row per sample
  std::vector<Vec> chain_ends;  // reduced coordinates, for warm restarts
};

/// Chord oracle for Π blocks ∩ {Ax=b} in reduced coordinates (closed form).
ChordFn product_body_chord(const std::vector<OuterBody>& blocks,
                           const AffineSubspace& sub);

/// One-shot estimate from a cold start at `start_full` (must be a member).
OuterCenter outer_center(const std::vector<OuterBody>& blocks,
                         const AffineSubspace& sub, double t, const Vec& c,
                         const Vec& start_full, const ChainConfig& cfg);

/// Per-coordinate standard error of the full-coordinate mean.
double outer_coordinate_stderr(const OuterCenter& oc, const AffineSubspace& sub,
                               int coord);

/// Warm-startable engine behind outer_center; the solver re-estimates x*_out
/// after every event and keeps chain state across t-updates.
class OuterCenterEstimator {
 public:
  OuterCenterEstimator(const std::vector<OuterBody>* blocks,
                       const AffineSubspace* sub, Vec c);

  /// Drops chain state; the next estimate restarts from `start_full`.
  void reset(const Vec& start_full);

  /// Estimate at path parameter t. Uses the previous chains' final states as
  /// starts when available (they must still be members, i.e. call reset()
  /// after any cut).
  OuterCenter estimate(double t, const ChainConfig& cfg);

 private:
  const std::vector<OuterBody>* blocks_;
  const AffineSubspace* sub_;
  Vec c_;
  Vec tilt_base_;  // -Nᵀc; tilt at parameter t is t · tilt_base_
  std::vector<Vec> warm_starts_;
  bool warm_ = false;
  Vec cold_start_reduced_;
};

}  // namespace decompopt
