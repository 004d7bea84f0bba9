#include "decompopt/barriers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace decompopt {

double LocalMetric::local_norm(const Vec& v) const {
  if (v.size() != hessian.rows()) {
    throw std::invalid_argument("LocalMetric: dimension mismatch");
  }
  return std::sqrt(std::max(0.0, v.dot(hessian * v)));
}

double LocalMetric::grad_dot_stderr(const Vec& u) const {
  return (block_dim + 1) * polar_moments.stderr_of(u);
}

LocalMetric universal_metric(const InnerBody& body, const Vec& x,
                             const ChainConfig& cfg) {
  const int d = body.dim();
  // Strict-interior probe: a small coordinate ball around x must be inside.
  const double margin = 1e-6;
  for (int i = 0; i < d; ++i) {
    for (double sgn : {-1.0, 1.0}) {
      Vec probe = x;
      probe(i) += sgn * margin;
      bool ok = false;
      try {
        ok = body.contains(probe, 1e-7);
      } catch (const std::runtime_error&) {
        ok = false;
      }
      if (!ok) {
        throw std::runtime_error(
            "universal_metric: point is not strictly interior (polar "
            "unbounded)");
      }
    }
  }

  PolarBody polar(body, x);
  ChordFn chord = [&polar](const Vec& p, const Vec& dir) {
    auto iv = polar.chord(p, dir);
    if (!std::isfinite(iv.first) || !std::isfinite(iv.second)) {
      throw std::runtime_error(
          "universal_metric: polar chord unbounded (anchor too close to the "
          "boundary)");
    }
    return iv;
  };
  Mat samples = hit_and_run_sample(chord, Density::uniform(d), Vec::Zero(d),
                                   cfg);
  MomentEstimate est = estimate_moments(samples, cfg.chains);

  LocalMetric metric;
  metric.block_dim = d;
  metric.grad = (d + 1) * est.mean;
  metric.hessian = double(d + 1) * double(d + 2) * est.covariance +
                   double(d + 1) * est.mean * est.mean.transpose();
  metric.hessian += 1e-10 * Mat::Identity(d, d);
  metric.polar_moments = std::move(est);
  return metric;
}

ChordFn product_body_chord(const std::vector<OuterBody>& blocks,
                           const AffineSubspace& sub) {
  std::vector<int> offsets(blocks.size() + 1, 0);
  for (size_t i = 0; i < blocks.size(); ++i) {
    offsets[i + 1] = offsets[i] + blocks[i].dim();
  }
  if (offsets.back() != sub.ambient_dim()) {
    throw std::invalid_argument(
        "product_body_chord: block dims do not add up to the ambient "
        "dimension");
  }
  const Mat& basis = sub.nullspace_basis();
  const Vec& xp = sub.particular_solution();
  return [&blocks, offsets, &basis, &xp](const Vec& y, const Vec& d) {
    const Vec pt_full = xp + basis * y;
    const Vec dir_full = basis * d;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < blocks.size(); ++i) {
      const auto seg_p = pt_full.segment(offsets[i], blocks[i].dim());
      const auto seg_d = dir_full.segment(offsets[i], blocks[i].dim());
      const auto iv = chord_outer(blocks[i], seg_p, seg_d);
      lo = std::max(lo, iv.first);
      hi = std::min(hi, iv.second);
      if (!(lo <= hi)) return std::make_pair(0.0, 0.0);
    }
    return std::make_pair(lo, hi);
  };
}

namespace {

OuterCenter finish_estimate(const AffineSubspace& sub, const Vec& c,
                            Mat samples, int chains,
                            std::vector<Vec> chain_ends) {
  OuterCenter oc;
  oc.moments_reduced = estimate_moments(samples, chains);
  oc.samples_reduced = std::move(samples);
  oc.chain_ends = std::move(chain_ends);
  oc.x = sub.embed(oc.moments_reduced.mean);
  oc.objective = c.dot(oc.x);
  oc.objective_stderr =
      oc.moments_reduced.stderr_of(sub.nullspace_basis().transpose() * c);
  return oc;
}

}  // namespace

OuterCenter outer_center(const std::vector<OuterBody>& blocks,
                         const AffineSubspace& sub, double t, const Vec& c,
                         const Vec& start_full, const ChainConfig& cfg) {
  OuterCenterEstimator est(&blocks, &sub, c);
  est.reset(start_full);
  return est.estimate(t, cfg);
}

double outer_coordinate_stderr(const OuterCenter& oc, const AffineSubspace& sub,
                               int coord) {
  return oc.moments_reduced.stderr_of(
      sub.nullspace_basis().row(coord).transpose());
}

OuterCenterEstimator::OuterCenterEstimator(const std::vector<OuterBody>* blocks,
                                           const AffineSubspace* sub, Vec c)
    : blocks_(blocks), sub_(sub), c_(std::move(c)) {
  tilt_base_ = -(sub_->nullspace_basis().transpose() * c_);
}

void OuterCenterEstimator::reset(const Vec& start_full) {
  warm_ = false;
  warm_starts_.clear();
  cold_start_reduced_ = sub_->project(start_full);
}

OuterCenter OuterCenterEstimator::estimate(double t, const ChainConfig& cfg) {
  ChordFn chord = product_body_chord(*blocks_, *sub_);
  Density density = Density::exponential(t * tilt_base_);
  std::vector<Vec> starts;
  if (warm_ && static_cast<int>(warm_starts_.size()) == cfg.chains) {
    starts = warm_starts_;
  } else {
    starts.assign(cfg.chains, cold_start_reduced_);
  }
  std::vector<Vec> ends;
  Mat samples = hit_and_run_warm(chord, density, starts, cfg, &ends);
  warm_starts_ = ends;
  warm_ = true;
  OuterCenter oc = finish_estimate(*sub_, c_, std::move(samples), cfg.chains,
                                   std::move(ends));
  // The mean of members of each closed convex block body is itself a member.
  int at = 0;
  for (const OuterBody& block : *blocks_) {
    if (!block.contains(oc.x.segment(at, block.dim()), 1e-6)) {
      throw std::runtime_error(
          "outer_center: estimated centroid escaped a block body");
    }
    at += block.dim();
  }
  return oc;
}

}  // namespace decompopt
