#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "decompopt/geometry.hpp"

namespace decompopt {

/// Target density over a convex body: uniform, or exponential ∝ exp(tilt·x).
struct Density {
  Vec tilt;

  static Density uniform(int dim) { return Density{Vec::Zero(dim)}; }
  static Density exponential(Vec theta) { return Density{std::move(theta)}; }
  bool is_uniform() const { return tilt.size() == 0 || tilt.isZero(0); }
};

struct ChainConfig {
  long burn_in = 0;
  long n_samples = 0;
  long thinning = 1;
  std::uint64_t seed = 0;
  int chains = 4;

  /// Mixing defaults at desk scale: burn_in = 200·dim, thinning = dim.
  static ChainConfig defaults_for(int dim, std::uint64_t seed,
                                  long n_samples = 4000);
  void validate() const;
};

/// Sampled centroid/covariance with standard errors from batch means over the
/// independent chains.
struct MomentEstimate {
  Vec mean;
  Mat covariance;     // denominator n-1
  long n = 0;         // sample count
  Vec stderr_coord;   // per-coordinate standard error of the mean
  Mat chain_means;    // one row per batch/chain, for functional stderrs

  /// Standard error of the scalar functional w·mean.
  double stderr_of(const Vec& w) const;
};

using MembershipFn = std::function<bool(const Vec&)>;
/// Maximal chord interval {s : point + s·dir in body}, containing 0.
using ChordFn = std::function<std::pair<double, double>(const Vec&, const Vec&)>;

/// Deterministic counter-based RNG stream; every chain derives its own stream
/// from (seed, stream id), so results do not depend on scheduling.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);
  double uniform();          // in (0,1)
  double normal();
  Vec gaussian_vector(int dim);
  Vec unit_vector(int dim);

 private:
  std::uint64_t next_u64();
  std::uint64_t state_;
  std::uint64_t inc_;
};

/// Generic chord by doubling-then-bisection on a membership predicate,
/// resolved to `tol` of the boundary. Requires membership(point).
std::pair<double, double> chord_by_bisection(const MembershipFn& member,
                                             const Vec& point, const Vec& dir,
                                             double tol = 1e-9,
                                             double initial_step = 1.0);

/// Closed-form chord for an OuterBody (ball quadratic + linear cuts).
std::pair<double, double> chord_outer(const OuterBody& body, const Vec& point,
                                      const Vec& dir);

/// Hit-and-run over a body given by its chord oracle. Returns n_samples rows;
/// every sample satisfies the body (up to the chord oracle's boundary slack).
/// Deterministic given cfg.seed. `chain_ends`, when non-null, receives each
/// chain's final state for warm restarts.
Mat hit_and_run_sample(const ChordFn& chord, const Density& density,
                       const Vec& start, const ChainConfig& cfg,
                       std::vector<Vec>* chain_ends = nullptr);

/// Same walk, forced through the serial reference path (no OpenMP). Kept for
/// testing and benchmarking against the parallel kernel; output is identical.
Mat hit_and_run_sample_serial(const ChordFn& chord, const Density& density,
                              const Vec& start, const ChainConfig& cfg,
                              std::vector<Vec>* chain_ends = nullptr);

/// Convenience overload on a membership predicate (bisection chords).
Mat hit_and_run_sample(const MembershipFn& member, const Density& density,
                       const Vec& start, const ChainConfig& cfg);

/// Warm-started variant: one starting state per chain (size must equal
/// cfg.chains), e.g. the chain_ends of a previous run.
Mat hit_and_run_warm(const ChordFn& chord, const Density& density,
                     const std::vector<Vec>& starts, const ChainConfig& cfg,
                     std::vector<Vec>* chain_ends = nullptr);

/// Sample mean/covariance with batch-means standard errors. `chains` tells the
/// estimator how the rows split into equal consecutive batches.
MomentEstimate estimate_moments(const Mat& samples, int chains);

/// Exact inverse-CDF draw from the density ∝ exp(rate·s) on [lo, hi].
double sample_truncated_exponential(double lo, double hi, double rate,
                                    double u01);

/// Number of sampler threads: min(chains, hardware, DECOMPOPT_THREADS).
int sampler_threads(int chains);

}  // namespace decompopt
