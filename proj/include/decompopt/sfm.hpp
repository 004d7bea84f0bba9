#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "decompopt/oracles.hpp"
#include "decompopt/solver.hpp"

namespace decompopt {

/// One submodular term F_i on a support set V_i ⊆ V, accessed through an
/// evaluation oracle over bitmasks of the support (bit j ↔ support[j]).
/// F_i(∅) = 0 by convention.
struct SubmodularTerm {
  std::vector<int> support;  // ascending indices into the ground set
  std::function<double(std::uint32_t)> evaluate;

  int arity() const { return static_cast<int>(support.size()); }
};

struct SubmodularInstance {
  int ground_set = 0;
  std::vector<SubmodularTerm> terms;

  /// F(S) = Σ F_i(S ∩ V_i); one evaluation call per term.
  double total(std::uint32_t set_mask, OracleCounter* counter = nullptr) const;
};

/// Parses the instance JSON:
///   {"ground_set": n, "terms": [{"support": [..],
///     "type": "cut"|"modular"|"table", "data": ...}]}
/// cut: data = [[u, v, w], ...] edges by ground-set index inside the support;
/// modular: data = per-support-element weights; table: data = all 2^{|V_i|}
/// values in mask order (data[0] must be 0).
SubmodularInstance sfm_instance_from_json(const std::string& json_text);

/// Lovász extension value by the sorted prefix-difference formula; exactly
/// arity() evaluation calls (prefix values cached within the call). Ties in
/// the sort break by ascending index. Valid for any x (the extension is the
/// support function of the base polytope); coincides with
/// E_{t~[0,1]} F({i : x_i >= t}) on [0,1]^{V_i}.
double lovasz_value(const SubmodularTerm& term, const Vec& x,
                    OracleCounter* counter = nullptr);

/// Subgradient g with g_{π(j)} = F(first j) − F(first j−1) for the same sort.
Vec lovasz_subgradient(const SubmodularTerm& term, const Vec& x,
                       OracleCounter* counter = nullptr);

/// Both from one sorted prefix sweep (arity() evaluation calls).
std::pair<double, Vec> lovasz_value_and_subgradient(
    const SubmodularTerm& term, const Vec& x,
    OracleCounter* counter = nullptr);

/// Σ_i f̂_i at a ground-set point.
double lovasz_total(const SubmodularInstance& instance, const Vec& theta,
                    OracleCounter* counter = nullptr);

/// Threshold rounding: evaluates F on ∅ and every descending-sort prefix of x
/// and returns the best; guarantees F(S) <= f̂(x) + 1e-12.
std::pair<std::uint32_t, double> round_to_set(
    const SubmodularInstance& instance, const Vec& x,
    OracleCounter* counter = nullptr);

/// Exhaustive 2^{|V|} minimization (|V| <= 20); first minimizer in increasing
/// bitmask order wins ties.
std::pair<std::uint32_t, double> brute_force_min(
    const SubmodularInstance& instance);

/// Diminishing-marginal-returns spot check on random (S ⊆ T, i ∉ T) triples.
bool check_submodular(const SubmodularInstance& instance, int trials,
                      std::uint64_t seed, double tol = 1e-12);

struct SfmResult {
  std::uint32_t set_mask = 0;
  std::vector<int> set;  // sorted elements of set_mask
  double value = 0.0;
  Vec theta;             // fractional minimizer, clamped to [0,1]^V
  double lovasz = 0.0;   // f̂(theta)
  OracleCounts counts;
  SolveResult solve_detail;
};

/// Wraps each Lovász extension as an epigraph block with L = 2, couples the
/// shared coordinates through A, runs init + solver, and rounds.
SfmResult minimize_decomposable(const SubmodularInstance& instance,
                                double epsilon, const SolverConfig& base_cfg);

/// The epigraph-block formulation behind minimize_decomposable, exposed for
/// the harness and tests: blocks, coupling system, objective, initial seeds.
struct SfmFormulation {
  std::vector<EpigraphBlock> blocks;
  std::vector<Ball> seed_balls;
  Mat A;
  Vec b;
  Vec c;
  Vec x_initial;
  double solver_R = 0.0;
  double solver_r = 0.0;
};

SfmFormulation build_sfm_formulation(const SubmodularInstance& instance,
                                     std::shared_ptr<OracleCounter> counter);

}  // namespace decompopt
