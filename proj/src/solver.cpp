#include "decompopt/solver.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace decompopt {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::TUpdate:
      return "t_update";
    case EventKind::KinGrow:
      return "kin_grow";
    case EventKind::KoutCut:
      return "kout_cut";
    case EventKind::XStep:
      return "x_step";
    case EventKind::Terminate:
      return "terminate";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw std::invalid_argument("SolverConfig: need 0 < epsilon < 1/2");
  }
  if (!(eta > 0.0 && eta <= 0.25)) {
    throw std::invalid_argument("SolverConfig: need 0 < eta <= 1/4");
  }
  if (!(R > 0.0) || !(r > 0.0)) {
    throw std::invalid_argument("SolverConfig: radii must be positive");
  }
  if (metric_samples < 2 || outer_samples < 2 || outer_samples_warm < 2) {
    throw std::invalid_argument("SolverConfig: sample budgets too small");
  }
}

bool condition1_holds(double cx, double cx_out, double m, double t,
                      double slack) {
  return cx > cx_out + 4.0 * m / t + slack;
}

double condition2_lhs(const LocalMetric& metric, const Vec& u, double eta) {
  return metric.grad.dot(u) + eta * metric.local_norm(u);
}

bool condition2_violated(const LocalMetric& metric, const Vec& u, double eta,
                         int block_dim, double slack) {
  return condition2_lhs(metric, u, eta) >= 4.0 * block_dim - slack;
}

namespace {

struct BlockLayout {
  std::vector<int> offset;
  std::vector<int> dim;
  int total = 0;
};

BlockLayout layout_of(const std::vector<BlockSetup>& blocks) {
  BlockLayout lay;
  for (const BlockSetup& b : blocks) {
    lay.offset.push_back(lay.total);
    lay.dim.push_back(b.inner.dim());
    lay.total += b.inner.dim();
  }
  return lay;
}

class Run {
 public:
  Run(const SolveInput& input, const SolverConfig& cfg,
      std::shared_ptr<OracleCounter> counter)
      : input_(input),
        cfg_(cfg),
        lay_(layout_of(input.blocks)),
        counter_(counter ? std::move(counter)
                         : std::make_shared<OracleCounter>()),
        start_time_(std::chrono::steady_clock::now()) {
    cfg_.validate();
    const int n = static_cast<int>(input.blocks.size());
    for (int i = 0; i < n; ++i) {
      inner_.push_back(input.blocks[i].inner);
      outer_.push_back(input.blocks[i].outer);
      oracles_.push_back(
          wrap_counting(input.blocks[i].oracle, counter_));
    }
    metrics_.assign(n, std::nullopt);
    x_ = input.x_initial;
    m_ = lay_.total;
    if (m_ != input.c.size() || m_ != input.sub.ambient_dim() ||
        m_ != x_.size()) {
      throw std::invalid_argument("solve: inconsistent problem dimensions");
    }
    c_norm_ = input.c.norm();
    estimator_.emplace(&outer_, &input_.sub, input_.c);
    result_.block_queries.assign(n, 0);
    result_.block_violations.assign(n, 0);
  }

  SolveResult run() {
    const int n = static_cast<int>(input_.blocks.size());
    if (c_norm_ == 0.0) {
      result_.x = x_;
      result_.objective = 0.0;
      result_.converged = true;
      result_.diagnostic = "zero objective vector";
      finish();
      return std::move(result_);
    }

    t_ = cfg_.t_init > 0.0 ? cfg_.t_init
                           : m_ * std::log(std::max<double>(m_, 2.0)) /
                                 (std::sqrt(double(n)) * c_norm_ * cfg_.R);
    t_end_ = 8.0 * m_ / (cfg_.epsilon * c_norm_ * cfg_.R);
    t_ = std::min(t_, t_end_);
    const long max_iter =
        cfg_.max_iterations > 0
            ? cfg_.max_iterations
            : static_cast<long>(std::ceil(
                  50.0 * m_ *
                  std::log(m_ * cfg_.R / (cfg_.epsilon * cfg_.r))));

    estimator_->reset(x_);
    center_ = estimator_->estimate(t_, outer_cfg(/*warm=*/false));

    long iter = 0;
    while (true) {
      if (++iter > max_iter) {
        result_.diagnostic = "max_iterations exceeded";
        break;
      }
      const double cx = input_.c.dot(x_);
      const bool progress = condition1_holds(
          cx, center_->objective, m_, t_,
          cfg_.noise_slack * center_->objective_stderr);
      if (!progress) {
        if (t_ >= t_end_) {
          finalize_x(iter);
          result_.converged = true;
          break;
        }
        t_ *= 1.0 + cfg_.eta / (4.0 * m_);
        log_event(iter, EventKind::TUpdate, -1, cx);
        center_ = estimator_->estimate(t_, outer_cfg(/*warm=*/true));
        continue;
      }

      const int violated = first_violated_block();
      if (violated >= 0) {
        process_block(iter, violated, cx);
        continue;
      }

      if (!step_x(iter, cx)) break;
    }

    result_.x = x_;
    result_.objective = input_.c.dot(x_);
    result_.t_final = t_;
    result_.t_end = t_end_;
    finish();
    return std::move(result_);
  }

 private:
  ChainConfig outer_cfg(bool warm) {
    const int rd = input_.sub.reduced_dim();
    ChainConfig cc;
    cc.chains = cfg_.chains;
    cc.seed = next_seed();
    if (warm) {
      cc.burn_in = 3L * rd;
      cc.thinning = std::max(1, rd / 3);
      cc.n_samples = cfg_.outer_samples_warm;
    } else {
      cc.burn_in = 200L * rd;
      cc.thinning = std::max(1, rd);
      cc.n_samples = cfg_.outer_samples;
    }
    return cc;
  }

  ChainConfig metric_cfg(int block, long samples) {
    // Polar chains start at 0, which is already deep inside the polar body;
    // a short burn-in and light thinning suffice, and the batch-means
    // standard errors feed the condition slacks either way.
    const int d = lay_.dim[block];
    ChainConfig cc;
    cc.burn_in = 50L * d;
    cc.thinning = std::max(1, (d + 1) / 2);
    cc.n_samples = samples > 0 ? samples : cfg_.metric_samples;
    cc.seed = next_seed();
    cc.chains = cfg_.chains;
    return cc;
  }

  std::uint64_t next_seed() { return cfg_.seed * 0x100000001ULL + seed_ctr_++; }

  const LocalMetric& metric(int i, long samples = 0) {
    if (!metrics_[i]) {
      metrics_[i] = universal_metric(
          inner_[i], x_.segment(lay_.offset[i], lay_.dim[i]),
          metric_cfg(i, samples));
    }
    return *metrics_[i];
  }

  void invalidate_metric(int i) { metrics_[i] = std::nullopt; }
  void invalidate_all_metrics() {
    for (auto& m : metrics_) m = std::nullopt;
  }

  double condition2_slack(int i, const Vec& u) {
    const LocalMetric& met = *metrics_[i];
    double err = met.grad_dot_stderr(u);
    for (int k = 0; k < lay_.dim[i]; ++k) {
      err += std::abs(met.grad(k)) *
             outer_coordinate_stderr(*center_, input_.sub,
                                     lay_.offset[i] + k);
    }
    return cfg_.noise_slack * err;
  }

  int first_violated_block() {
    const int n = static_cast<int>(input_.blocks.size());
    for (int i = 0; i < n; ++i) {
      metric(i);
      const Vec u = center_->x.segment(lay_.offset[i], lay_.dim[i]) -
                    x_.segment(lay_.offset[i], lay_.dim[i]);
      if (condition2_violated(*metrics_[i], u, cfg_.eta, lay_.dim[i],
                              condition2_slack(i, u))) {
        result_.block_violations[i] += 1;
        return i;
      }
    }
    return -1;
  }

  void process_block(long iter, int i, double cx) {
    const Vec q = center_->x.segment(lay_.offset[i], lay_.dim[i]);
    result_.block_queries[i] += 1;
    const SeparationResult res = oracles_[i](q);
    if (res.member) {
      inner_[i] = inner_[i].grown(q);
      invalidate_metric(i);
      log_event(iter, EventKind::KinGrow, i, cx);
      center_ = estimator_->estimate(t_, outer_cfg(/*warm=*/true));
      return;
    }
    const Vec witness = inner_[i].seed_ball().center;
    outer_[i] = outer_[i].with_cut(*res.cut, witness);
    const double retained = retained_fraction(i, *res.cut);
    SolverEvent ev = make_event(iter, EventKind::KoutCut, i, cx);
    ev.cut_retained_fraction = retained;
    result_.events.push_back(ev);
    // The stationary law changed support: restart chains from the iterate.
    estimator_->reset(x_);
    center_ = estimator_->estimate(t_, outer_cfg(/*warm=*/false));
  }

  double retained_fraction(int i, const Halfspace& cut) const {
    const Mat& samples = center_->samples_reduced;
    if (samples.rows() == 0) return -1.0;
    long kept = 0;
    const Mat block_basis =
        input_.sub.nullspace_basis().middleRows(lay_.offset[i], lay_.dim[i]);
    const Vec block_part =
        input_.sub.particular_solution().segment(lay_.offset[i], lay_.dim[i]);
    const Vec proj = block_basis.transpose() * cut.normal;
    const double base = cut.normal.dot(block_part);
    for (long s = 0; s < samples.rows(); ++s) {
      if (base + proj.dot(samples.row(s)) <= cut.offset + 1e-12) ++kept;
    }
    return double(kept) / double(samples.rows());
  }

  bool step_x(long iter, double cx) {
    for (int attempt = 0; attempt < 2; ++attempt) {
      const Vec u = center_->x - x_;
      double denom = 0.0;
      for (size_t i = 0; i < inner_.size(); ++i) {
        denom += metrics_[i]->local_norm(
            u.segment(lay_.offset[i], lay_.dim[i]));
      }
      if (!(denom > 0.0)) {
        result_.diagnostic = "degenerate step direction";
        return false;
      }
      const Vec candidate = x_ + (cfg_.eta / 2.0) * u / denom;
      if (input_.sub.residual(candidate) <= 1e-9 &&
          all_blocks_member(candidate)) {
        x_ = candidate;
        invalidate_all_metrics();
        log_event(iter, EventKind::XStep, -1, input_.c.dot(x_));
        return true;
      }
      if (attempt == 0) {
        // Sampling noise exceeded the slack: re-estimate with 4x samples.
        for (size_t i = 0; i < inner_.size(); ++i) {
          invalidate_metric(static_cast<int>(i));
          metric(static_cast<int>(i), 4 * cfg_.metric_samples);
        }
        center_ = estimator_->estimate(t_, outer_cfg(/*warm=*/true));
        (void)cx;
      }
    }
    result_.diagnostic = "post-step membership failed after retry";
    return false;
  }

  bool all_blocks_member(const Vec& candidate) const {
    for (size_t i = 0; i < inner_.size(); ++i) {
      if (!inner_[i].contains(
              candidate.segment(lay_.offset[i], lay_.dim[i]), 1e-7)) {
        return false;
      }
    }
    return true;
  }

  // Damped descent on t·c·x + Σψ using sampled barrier gradients; keeps only
  // feasible iterates and returns the best of them (the entering x at worst).
  void finalize_x(long iter) {
    Vec best = x_;
    double best_obj = input_.c.dot(x_);
    Vec cur = x_;
    for (int step = 0; step < 50; ++step) {
      Vec g = t_ * input_.c;
      bool metrics_ok = true;
      std::vector<LocalMetric> mets;
      for (size_t i = 0; i < inner_.size(); ++i) {
        try {
          mets.push_back(universal_metric(
              inner_[i], cur.segment(lay_.offset[i], lay_.dim[i]),
              metric_cfg(static_cast<int>(i), cfg_.metric_samples)));
        } catch (const std::runtime_error&) {
          metrics_ok = false;
          break;
        }
        g.segment(lay_.offset[i], lay_.dim[i]) += mets.back().grad;
      }
      if (!metrics_ok) break;
      const Vec dir =
          input_.sub.nullspace_basis() *
          (-(input_.sub.nullspace_basis().transpose() * g));
      double denom = 0.0;
      for (size_t i = 0; i < inner_.size(); ++i) {
        denom +=
            mets[i].local_norm(dir.segment(lay_.offset[i], lay_.dim[i]));
      }
      if (!(denom > 1e-12) || g.dot(dir) >= 0.0) break;
      const Vec candidate = cur + (cfg_.eta / 2.0) * dir / denom;
      if (input_.sub.residual(candidate) > 1e-9 ||
          !all_blocks_member(candidate)) {
        break;
      }
      cur = candidate;
      const double obj = input_.c.dot(cur);
      if (obj < best_obj) {
        best_obj = obj;
        best = cur;
      }
    }
    x_ = best;
    log_event(iter, EventKind::Terminate, -1, best_obj);
  }

  SolverEvent make_event(long iter, EventKind kind, int block,
                         double cx) const {
    SolverEvent ev;
    ev.iter = iter;
    ev.kind = kind;
    ev.block = block;
    ev.t = t_;
    ev.objective = cx;
    ev.outer_objective = center_ ? center_->objective : 0.0;
    ev.sep_calls = counter_->separation_calls.load();
    ev.eval_calls = counter_->evaluation_calls.load();
    ev.wall_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - start_time_)
                     .count();
    return ev;
  }

  void log_event(long iter, EventKind kind, int block, double cx) {
    result_.events.push_back(make_event(iter, kind, block, cx));
  }

  void finish() {
    result_.counts = snapshot(*counter_);
    result_.inner_bodies = inner_;
    result_.outer_bodies = outer_;
  }

  SolveInput input_;
  SolverConfig cfg_;
  BlockLayout lay_;
  std::shared_ptr<OracleCounter> counter_;
  std::chrono::steady_clock::time_point start_time_;

  std::vector<InnerBody> inner_;
  std::vector<OuterBody> outer_;
  std::vector<SeparationOracleFn> oracles_;
  std::vector<std::optional<LocalMetric>> metrics_;
  std::optional<OuterCenterEstimator> estimator_;
  std::optional<OuterCenter> center_;
  Vec x_;
  double t_ = 0.0;
  double t_end_ = 0.0;
  int m_ = 0;
  double c_norm_ = 0.0;
  std::uint64_t seed_ctr_ = 0;
  SolveResult result_;
};

}  // namespace

SolveResult solve(const SolveInput& input, const SolverConfig& cfg,
                  std::shared_ptr<OracleCounter> counter) {
  Run run(input, cfg, std::move(counter));
  return run.run();
}

}  // namespace decompopt
