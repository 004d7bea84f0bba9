#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "decompopt/barriers.hpp"
#include "decompopt/geometry.hpp"
#include "decompopt/oracles.hpp"

namespace decompopt {

enum class EventKind { TUpdate, KinGrow, KoutCut, XStep, Terminate };

const char* to_string(EventKind kind);

struct SolverEvent {
  long iter = 0;
  EventKind kind = EventKind::TUpdate;
  int block = -1;  // -1 when the event is not block-specific
  double t = 0.0;
  double objective = 0.0;        // c·x
  double outer_objective = 0.0;  // c·x*_out (current estimate)
  long sep_calls = 0;
  long eval_calls = 0;
  double wall_ms = 0.0;
  double cut_retained_fraction = -1.0;  // KoutCut only
};

struct BlockSetup {
  SeparationOracleFn oracle;  // raw; the solver adds the counting wrapper
  InnerBody inner;
  OuterBody outer;
};

struct SolverConfig {
  double epsilon = 0.05;  // target relative accuracy, gap <= ε·‖c‖₂·R
  double eta = 0.2;       // step/slack constant, must lie in (0, 1/4]
  double R = 1.0;         // outer radius scale
  double r = 0.1;         // inner radius scale
  double noise_slack = 3.0;  // κ, multiplier on standard errors in conditions
  long metric_samples = 4000;
  long outer_samples = 2000;      // cold x*_out estimates
  long outer_samples_warm = 600;  // warm re-estimates (after t-updates/grows)
  long max_iterations = 0;        // 0 -> ceil(50·m·log(m·R/(ε·r)))
  double t_init = 0.0;            // 0 -> m·log(m)/(√n·‖c‖₂·R)
  std::uint64_t seed = 0;
  int chains = 4;

  void validate() const;
};

struct SolveInput {
  std::vector<BlockSetup> blocks;
  AffineSubspace sub;  // over the concatenated block coordinates
  Vec c;
  Vec x_initial;  // member of Π K_in,i ∩ {Ax=b}
};

struct SolveResult {
  Vec x;
  double objective = 0.0;
  bool converged = false;
  std::string diagnostic;
  double t_final = 0.0;
  double t_end = 0.0;
  std::vector<SolverEvent> events;
  OracleCounts counts;
  std::vector<long> block_queries;     // separation queries per block
  std::vector<long> block_violations;  // condition-2 violations per block
  std::vector<InnerBody> inner_bodies;
  std::vector<OuterBody> outer_bodies;
};

/// Pure condition tests (exposed for unit tests; the solver calls these).
bool condition1_holds(double cx, double cx_out, double m, double t,
                      double slack);
double condition2_lhs(const LocalMetric& metric, const Vec& u, double eta);
bool condition2_violated(const LocalMetric& metric, const Vec& u, double eta,
                         int block_dim, double slack);

/// Runs the cutting-plane/interior-point loop. `counter`, when given, is
/// shared with the caller's other oracle uses (it is also how the trace rows
/// report sep_calls).
SolveResult solve(const SolveInput& input, const SolverConfig& cfg,
                  std::shared_ptr<OracleCounter> counter = nullptr);

}  // namespace decompopt
