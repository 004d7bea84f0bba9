#include "decompopt/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <stdexcept>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace decompopt {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) {
  state_ = splitmix_mix(seed + kGolden * (stream + 1));
  inc_ = splitmix_mix(state_ ^ (stream * 0xDA442D24ULL + 1)) | 1ULL;
}

std::uint64_t RngStream::next_u64() {
  state_ += kGolden + inc_;
  return splitmix_mix(state_);
}

double RngStream::uniform() {
  const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  return u > 0.0 ? u : 0x1.0p-53;
}

double RngStream::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Vec RngStream::gaussian_vector(int dim) {
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = normal();
  return v;
}

Vec RngStream::unit_vector(int dim) {
  for (;;) {
    Vec v = gaussian_vector(dim);
    const double len = v.norm();
    if (len > 1e-12) return v / len;
  }
}

ChainConfig ChainConfig::defaults_for(int dim, std::uint64_t seed,
                                      long n_samples) {
  ChainConfig cfg;
  cfg.burn_in = 200L * dim;
  cfg.thinning = dim;
  cfg.n_samples = n_samples;
  cfg.seed = seed;
  cfg.chains = 4;
  return cfg;
}

void ChainConfig::validate() const {
  if (n_samples < 1 || thinning < 1 || chains < 1 || burn_in < 0) {
    throw std::invalid_argument("ChainConfig: counts must be >= 1");
  }
}

double MomentEstimate::stderr_of(const Vec& w) const {
  const long b = chain_means.rows();
  if (b < 2) {
    // Single batch: fall back to the iid estimate.
    return std::sqrt(std::max(0.0, w.dot(covariance * w)) /
                     static_cast<double>(std::max(1L, n)));
  }
  Vec vals = chain_means * w;
  const double m = vals.mean();
  const double var = (vals.array() - m).square().sum() / (b - 1);
  return std::sqrt(var / b);
}

std::pair<double, double> chord_by_bisection(const MembershipFn& member,
                                             const Vec& point, const Vec& dir,
                                             double tol, double initial_step) {
  if (!member(point)) {
    throw std::invalid_argument("chord: point is not a member");
  }
  auto expand = [&](double sign) {
    double inside = 0.0;
    double step = initial_step;
    int doublings = 0;
    while (member(point + (sign * (inside + step)) * dir)) {
      inside += step;
      step *= 2.0;
      if (++doublings > 120) {
        throw std::runtime_error("chord: direction appears unbounded");
      }
    }
    double outside = inside + step;
    while (outside - inside > tol) {
      const double mid = 0.5 * (inside + outside);
      if (member(point + (sign * mid) * dir)) {
        inside = mid;
      } else {
        outside = mid;
      }
    }
    return inside;
  };
  return {-expand(-1.0), expand(1.0)};
}

std::pair<double, double> chord_outer(const OuterBody& body, const Vec& point,
                                      const Vec& dir) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  const Ball& ball = body.bounding_ball();
  const double a = dir.squaredNorm();
  const Vec w = point - ball.center;
  const double b = 2.0 * dir.dot(w);
  const double c = w.squaredNorm() - ball.radius * ball.radius;
  if (a > 0.0) {
    const double disc = b * b - 4.0 * a * c;
    if (disc <= 0.0) return {0.0, 0.0};
    const double sq = std::sqrt(disc);
    lo = (-b - sq) / (2.0 * a);
    hi = (-b + sq) / (2.0 * a);
  }
  for (const Halfspace& cut : body.cuts()) {
    const double ad = cut.normal.dot(dir);
    const double slack = cut.offset - cut.normal.dot(point);
    if (std::abs(ad) < 1e-300) {
      if (slack < 0.0) return {0.0, 0.0};
      continue;
    }
    if (ad > 0.0) {
      hi = std::min(hi, slack / ad);
    } else {
      lo = std::max(lo, slack / ad);
    }
  }
  if (!(lo <= hi)) return {0.0, 0.0};
  return {lo, hi};
}

double sample_truncated_exponential(double lo, double hi, double rate,
                                    double u01) {
  const double width = hi - lo;
  if (std::abs(rate) * width < 1e-9) {
    return lo + u01 * width;
  }
  if (rate > 0.0) {
    // Mass piles up at hi; w = hi - s is truncated Exp(rate) on [0, width].
    const double w = -std::log1p(u01 * std::expm1(-rate * width)) / rate;
    return hi - std::min(w, width);
  }
  const double a = -rate;
  const double w = -std::log1p(u01 * std::expm1(-a * width)) / a;
  return lo + std::min(w, width);
}

int sampler_threads(int chains) {
  int hw = 1;
#if defined(_OPENMP)
  hw = omp_get_max_threads();
#endif
  if (const char* env = std::getenv("DECOMPOPT_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) hw = std::min(hw, cap);
  }
  return std::max(1, std::min(chains, hw));
}

namespace {

// Per-chain sample quota: total split as evenly as possible, earlier chains
// taking the remainder. estimate_moments batches rows with the same rule.
std::vector<long> chain_quotas(long n_samples, int chains) {
  std::vector<long> quota(chains, n_samples / chains);
  for (long i = 0; i < n_samples % chains; ++i) quota[i] += 1;
  return quota;
}

void run_one_chain(const ChordFn& chord, const Density& density,
                   const Vec& start, const ChainConfig& cfg, int chain_index,
                   long quota, Mat& out, long row_offset, Vec* end_state) {
  RngStream rng(cfg.seed, static_cast<std::uint64_t>(chain_index));
  const int dim = static_cast<int>(start.size());
  const bool uniform = density.is_uniform();
  Vec x = start;
  long recorded = 0;
  long steps_until_record = cfg.burn_in + cfg.thinning;
  int degenerate_run = 0;
  while (recorded < quota) {
    const Vec dir = rng.unit_vector(dim);
    const auto [lo, hi] = chord(x, dir);
    if (hi - lo < 1e-12) {
      if (++degenerate_run > 50) {
        throw std::runtime_error(
            "hit_and_run: repeatedly degenerate chords (body appears "
            "lower-dimensional)");
      }
      continue;
    }
    degenerate_run = 0;
    const double u = rng.uniform();
    const double s = uniform
                         ? lo + u * (hi - lo)
                         : sample_truncated_exponential(
                               lo, hi, density.tilt.dot(dir), u);
    x += s * dir;
    if (--steps_until_record == 0) {
      out.row(row_offset + recorded) = x.transpose();
      ++recorded;
      steps_until_record = cfg.thinning;
    }
  }
  if (end_state != nullptr) *end_state = x;
}

Mat run_chains(const ChordFn& chord, const Density& density,
               const std::vector<Vec>& starts, const ChainConfig& cfg,
               std::vector<Vec>* chain_ends, bool force_serial) {
  cfg.validate();
  if (static_cast<int>(starts.size()) != cfg.chains) {
    throw std::invalid_argument("run_chains: starts size != chains");
  }
  const int dim = static_cast<int>(starts[0].size());
  const auto quota = chain_quotas(cfg.n_samples, cfg.chains);
  std::vector<long> offsets(cfg.chains, 0);
  for (int c = 1; c < cfg.chains; ++c) {
    offsets[c] = offsets[c - 1] + quota[c - 1];
  }
  Mat out(cfg.n_samples, dim);
  std::vector<Vec> ends(cfg.chains);

  const int threads = force_serial ? 1 : sampler_threads(cfg.chains);
  if (threads <= 1) {
    for (int c = 0; c < cfg.chains; ++c) {
      run_one_chain(chord, density, starts[c], cfg, c, quota[c], out,
                    offsets[c], &ends[c]);
    }
  } else {
#if defined(_OPENMP)
    std::exception_ptr error;
#pragma omp parallel for num_threads(threads) schedule(static)
    for (int c = 0; c < cfg.chains; ++c) {
      try {
        run_one_chain(chord, density, starts[c], cfg, c, quota[c], out,
                      offsets[c], &ends[c]);
      } catch (...) {
#pragma omp critical
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
#else
    for (int c = 0; c < cfg.chains; ++c) {
      run_one_chain(chord, density, starts[c], cfg, c, quota[c], out,
                    offsets[c], &ends[c]);
    }
#endif
  }
  if (chain_ends != nullptr) *chain_ends = std::move(ends);
  return out;
}

}  // namespace

Mat hit_and_run_sample(const ChordFn& chord, const Density& density,
                       const Vec& start, const ChainConfig& cfg,
                       std::vector<Vec>* chain_ends) {
  return run_chains(chord, density, std::vector<Vec>(cfg.chains, start), cfg,
                    chain_ends, /*force_serial=*/false);
}

Mat hit_and_run_sample_serial(const ChordFn& chord, const Density& density,
                              const Vec& start, const ChainConfig& cfg,
                              std::vector<Vec>* chain_ends) {
  return run_chains(chord, density, std::vector<Vec>(cfg.chains, start), cfg,
                    chain_ends, /*force_serial=*/true);
}

Mat hit_and_run_sample(const MembershipFn& member, const Density& density,
                       const Vec& start, const ChainConfig& cfg) {
  ChordFn chord = [&member](const Vec& p, const Vec& d) {
    return chord_by_bisection(member, p, d);
  };
  return hit_and_run_sample(chord, density, start, cfg);
}

Mat hit_and_run_warm(const ChordFn& chord, const Density& density,
                     const std::vector<Vec>& starts, const ChainConfig& cfg,
                     std::vector<Vec>* chain_ends) {
  return run_chains(chord, density, starts, cfg, chain_ends,
                    /*force_serial=*/false);
}

MomentEstimate estimate_moments(const Mat& samples, int chains) {
  const long n = samples.rows();
  if (n < 2) {
    throw std::invalid_argument("estimate_moments: need at least 2 samples");
  }
  MomentEstimate est;
  est.n = n;
  est.mean = samples.colwise().mean();
  Mat centered = samples.rowwise() - est.mean.transpose();
  est.covariance = (centered.transpose() * centered) / double(n - 1);
  // Symmetrize against rounding drift.
  est.covariance = 0.5 * (est.covariance + est.covariance.transpose()).eval();

  int b = std::max(1, chains);
  if (b == 1) b = static_cast<int>(std::min<long>(4, n));
  const auto quota = chain_quotas(n, b);
  est.chain_means.resize(b, samples.cols());
  long row = 0;
  for (int k = 0; k < b; ++k) {
    est.chain_means.row(k) =
        samples.middleRows(row, quota[k]).colwise().mean();
    row += quota[k];
  }
  est.stderr_coord.resize(samples.cols());
  if (b >= 2) {
    for (int j = 0; j < samples.cols(); ++j) {
      const double m = est.chain_means.col(j).mean();
      const double var =
          (est.chain_means.col(j).array() - m).square().sum() / (b - 1);
      est.stderr_coord(j) = std::sqrt(var / b);
    }
  } else {
    est.stderr_coord =
        (est.covariance.diagonal().array().max(0.0) / double(n)).sqrt();
  }
  return est;
}

}  // namespace decompopt
