#pragma once

#include <cstdint>
#include <vector>

#include "decompopt/oracles.hpp"
#include "decompopt/solver.hpp"

namespace decompopt {

/// Output of the inner-ball search: B(center, radius) ⊆ K with
/// radius = r / (6 d^3.5).
struct InnerBallResult {
  Vec center;
  double radius = 0.0;
  long oracle_calls = 0;
};

/// Cutting-plane search for a certified inner ball of a convex set given only
/// by a separation oracle, assuming B(z, r) ⊆ K ⊆ B(0, R) for some unknown z.
/// Errors out when the oracle-call budget 200·d·log(R/r) is exhausted
/// (signals that the inner-radius assumption is violated).
InnerBallResult find_inner_ball(const SeparationOracleFn& oracle, int d,
                                double R, double r, std::uint64_t seed);

struct Phase1Input {
  std::vector<Ball> inner_balls;     // per block, B(z_i, r_i) ⊆ K_i
  std::vector<Ball> bounding_balls;  // per block, K_i ⊆ ball
  std::vector<SeparationOracleFn> oracles;  // raw, per block
  Mat A;
  Vec b;
  Vec c;
  std::shared_ptr<OracleCounter> counter;  // optional, shared accounting
};

struct Phase1Config {
  double s = 0.0;            // penalty scale; 0 -> 2^16·m^2.5·R/(r·ε)
  double epsilon_bar = 0.0;  // accuracy of the auxiliary solve; 0 -> ε/(6√n·s)
  double t_init_ratio = 0.0; // 0 -> paper schedule; else t_init = t_end/ratio
  double epsilon = 0.05;     // target accuracy of the original program
  SolverConfig solver;       // eta/budgets/seed for the auxiliary solve
};

struct Phase1Result {
  Vec x_in;  // feasible initial point: A·x_in = b, x_in ∈ Π K_in,i
  std::vector<InnerBody> kin;
  std::vector<OuterBody> kout;
  Vec x1, x2, x3;
  bool solver_ran = false;  // false when A·z = b already (zero residual)
  SolveResult aux;          // auxiliary solve result, when it ran
  // Quantities of the auxiliary program, for the objective-relation bound
  // c·x_in <= min + (ν+1)/t + γ.
  double penalty_s = 0.0;
  double nu_bar = 0.0;    // barrier parameter of the product body (= 3m)
  double gamma_bound = 0.0;  // ε̄·‖c̄‖₂·R̄
};

/// Builds the modified program with slack variables x⁽²⁾, x⁽³⁾ ≥ 0 and
/// penalty c̄ = (c, s‖c‖₂/√m·1, s‖c‖₂/√m·1), starts it from the min-norm
/// split of A y = b - A z, and runs the solver on it. When z already
/// satisfies A z = b the solve is skipped and x_in = z.
Phase1Result phase1_initialize(const Phase1Input& input,
                               const Phase1Config& cfg);

/// Minimum-norm solution of A y = rhs (rank tolerance 1e-10); throws
/// std::invalid_argument when the system is inconsistent.
Vec min_norm_solve(const Mat& A, const Vec& rhs);

}  // namespace decompopt
