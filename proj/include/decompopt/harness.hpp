#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "decompopt/oracles.hpp"
#include "decompopt/sfm.hpp"
#include "decompopt/solver.hpp"

namespace decompopt {

/// Declarative problem description; round-trips through JSON.
struct ProblemSpec {
  std::string kind;  // sfm | chain_quadratic | piecewise_linear | custom_epigraph
  std::uint64_t seed = 0;
  double epsilon = 0.05;
  std::string parameters_json = "{}";  // kind-specific

  static ProblemSpec from_json(const std::string& text);
  std::string to_json() const;
};

/// One term in the original variable space, for the baselines.
struct ThetaTerm {
  std::vector<int> support;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> subgradient;
};

/// A generated instance: epigraph-block formulation for the main solver plus
/// the flat θ-space view the baselines consume.
struct GeneratedProblem {
  std::string kind;
  std::vector<EpigraphBlock> blocks;
  std::vector<Ball> seed_balls;
  Mat A;
  Vec b;
  Vec c;
  Vec x_initial;
  double solver_R = 0.0;
  double solver_r = 0.0;

  int theta_dim = 0;
  Vec theta0;
  double theta_radius = 0.0;
  double lipschitz = 0.0;  // of Σ f_i over the trust region
  std::vector<ThetaTerm> theta_terms;
  std::optional<double> known_optimum;  // min Σ f_i, when available
  std::optional<SubmodularInstance> sfm;
  std::string instance_json;  // SFM only

  double objective_theta(const Vec& theta,
                         OracleCounter* counter = nullptr) const;
  /// Collapses a solver iterate (block coordinates) back onto θ.
  Vec theta_from_blocks(const Vec& x) const;
};

GeneratedProblem generate(const ProblemSpec& spec,
                          std::shared_ptr<OracleCounter> counter);

/// Runs the main solver on a generated problem (init handoff included).
struct PipelineResult {
  SolveResult solve;
  Vec theta;
  double objective = 0.0;  // Σ f_i(θ)
  OracleCounts counts;
};
PipelineResult run_pipeline(const GeneratedProblem& problem,
                            const SolverConfig& cfg,
                            std::shared_ptr<OracleCounter> counter);

struct BaselineResult {
  std::vector<double> value_trace;  // best-so-far per iteration
  double best = 0.0;
  OracleCounts counts;
};

/// Projected subgradient with step R/(L√k); queries every term per iteration.
BaselineResult baseline_subgradient(const GeneratedProblem& problem,
                                    long iters,
                                    std::shared_ptr<OracleCounter> counter);

/// Centroid cutting-plane on the same hit-and-run sampler; every iteration
/// costs one full subgradient (n term queries).
BaselineResult baseline_cpm(const GeneratedProblem& problem, double epsilon,
                            long max_iters, std::uint64_t seed,
                            std::shared_ptr<OracleCounter> counter);

/// Trace CSV (one row per solver event) and the canonical summary JSON.
/// wall_ms appears only in the CSV; the summary is byte-stable across runs
/// with the same seed and config.
std::string trace_to_csv(const std::vector<SolverEvent>& events);
std::string summary_json(const GeneratedProblem& problem,
                         const PipelineResult& result, const ProblemSpec& spec,
                         const SolverConfig& cfg);

/// FNV-1a over the canonical config encoding.
std::string config_hash(const ProblemSpec& spec, const SolverConfig& cfg);

/// Separation-call budget asserted by the bench suite: 200·m·log(m/ε).
double oracle_budget(int m, double epsilon);

}  // namespace decompopt
