#include <doctest.h>

#include <cmath>

#include "decompopt/sampling.hpp"
#include "decompopt/sfm.hpp"

using namespace decompopt;

namespace {

// Cut function of the single edge {0,1} with unit weight.
SubmodularTerm edge_cut_term() {
  SubmodularTerm term;
  term.support = {0, 1};
  term.evaluate = [](std::uint32_t mask) {
    const bool a = mask & 1u, b = mask & 2u;
    return a != b ? 1.0 : 0.0;
  };
  return term;
}

SubmodularTerm modular_term(std::vector<int> support, std::vector<double> w) {
  SubmodularTerm term;
  term.support = std::move(support);
  term.evaluate = [w](std::uint32_t mask) {
    double s = 0.0;
    for (size_t j = 0; j < w.size(); ++j) {
      if (mask & (1u << j)) s += w[j];
    }
    return s;
  };
  return term;
}

SubmodularTerm random_table_term(std::vector<int> support, std::uint64_t seed,
                                 double scale = 0.2) {
  // Submodular mixture: modular + coverage + cut, materialized as a table.
  RngStream rng(seed, 0xAB);
  const int k = static_cast<int>(support.size());
  std::vector<double> table(1u << k, 0.0);
  std::vector<double> w(k);
  for (double& v : w) v = scale * (2.0 * rng.uniform() - 1.0);
  std::uint32_t cover = 0;
  for (int j = 0; j < k; ++j) {
    if (rng.uniform() < 0.5) cover |= 1u << j;
  }
  const double cover_w = scale * rng.uniform();
  for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
    double v = 0.0;
    for (int j = 0; j < k; ++j) {
      if (mask & (1u << j)) v += w[j];
    }
    if (mask & cover) v += cover_w;
    table[mask] = v;
  }
  SubmodularTerm term;
  term.support = std::move(support);
  term.evaluate = [table](std::uint32_t mask) { return table[mask]; };
  return term;
}

// Exact piecewise integration of E_{t~U[0,1]} F({i : x_i >= t}) for
// x ∈ [0,1]^k: the level set is constant between consecutive sorted values.
double lovasz_by_integration(const SubmodularTerm& term, const Vec& x) {
  const int k = term.arity();
  std::vector<double> cuts{0.0, 1.0};
  for (int j = 0; j < k; ++j) cuts.push_back(x(j));
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double len = cuts[s + 1] - cuts[s];
    if (len <= 0.0) continue;
    const double t = 0.5 * (cuts[s] + cuts[s + 1]);
    std::uint32_t mask = 0;
    for (int j = 0; j < k; ++j) {
      if (x(j) >= t) mask |= 1u << j;
    }
    total += len * term.evaluate(mask);
  }
  return total;
}

}  // namespace

TEST_CASE("lovasz value: indicators, cut example, zero") {
  const SubmodularTerm cut = edge_cut_term();
  // f̂(1_S) = F(S) on all indicators.
  for (std::uint32_t mask = 0; mask < 4; ++mask) {
    Vec x(2);
    x << (mask & 1u ? 1.0 : 0.0), (mask & 2u ? 1.0 : 0.0);
    CHECK(lovasz_value(cut, x) ==
          doctest::Approx(cut.evaluate(mask)).epsilon(1e-13));
  }
  Vec x(2);
  x << 0.5, 0.25;
  CHECK(lovasz_value(cut, x) == doctest::Approx(0.25));
  CHECK(lovasz_value(cut, Vec::Zero(2)) == 0.0);

  // Exactly |V_i| evaluation calls per value.
  auto counter = std::make_shared<OracleCounter>();
  lovasz_value(cut, x, counter.get());
  CHECK(counter->evaluation_calls.load() == 2);
}

TEST_CASE("lovasz value equals exact piecewise integration") {
  RngStream rng(5, 0);
  const SubmodularTerm term = random_table_term({0, 1, 2, 3}, 7);
  for (int trial = 0; trial < 50; ++trial) {
    Vec x(4);
    for (int j = 0; j < 4; ++j) x(j) = rng.uniform();
    CHECK(lovasz_value(term, x) ==
          doctest::Approx(lovasz_by_integration(term, x)).epsilon(1e-10));
  }
}

TEST_CASE("lovasz indicators exhaustively at arity 5") {
  const SubmodularTerm term = random_table_term({0, 1, 2, 3, 4}, 11);
  for (std::uint32_t mask = 0; mask < 32; ++mask) {
    Vec x(5);
    for (int j = 0; j < 5; ++j) x(j) = (mask & (1u << j)) ? 1.0 : 0.0;
    CHECK(std::abs(lovasz_value(term, x) - term.evaluate(mask)) <= 1e-12);
  }
}

TEST_CASE("lovasz subgradient: prefix differences and validity") {
  const SubmodularTerm cut = edge_cut_term();
  Vec x(2);
  x << 0.5, 0.25;
  const Vec g = lovasz_subgradient(cut, x);
  CHECK(g(0) == doctest::Approx(1.0));
  CHECK(g(1) == doctest::Approx(-1.0));

  // Modular terms have constant subgradient = weights.
  const SubmodularTerm mod = modular_term({0, 1, 2}, {-0.3, 0.2, -0.1});
  RngStream rng(9, 0);
  for (int k = 0; k < 10; ++k) {
    Vec xm(3);
    for (int j = 0; j < 3; ++j) xm(j) = rng.uniform();
    const Vec gm = lovasz_subgradient(mod, xm);
    CHECK(gm(0) == doctest::Approx(-0.3));
    CHECK(gm(1) == doctest::Approx(0.2));
    CHECK(gm(2) == doctest::Approx(-0.1));
  }

  // Validity f̂(y) >= f̂(x) + g·(y-x) - 1e-12 on random pairs, including the
  // all-equal-coordinates tie case.
  const SubmodularTerm term = random_table_term({0, 1, 2, 3}, 13);
  for (int trial = 0; trial < 1000; ++trial) {
    Vec xa(4), ya(4);
    for (int j = 0; j < 4; ++j) {
      xa(j) = rng.uniform();
      ya(j) = rng.uniform();
    }
    if (trial % 10 == 0) xa = Vec::Constant(4, rng.uniform());
    const auto [fx, gx] = lovasz_value_and_subgradient(term, xa);
    const double fy = lovasz_value(term, ya);
    CHECK(fy >= fx + gx.dot(ya - xa) - 1e-12);
  }
}

TEST_CASE("round_to_set: dominance and examples") {
  SubmodularInstance inst;
  inst.ground_set = 2;
  inst.terms.push_back(edge_cut_term());

  Vec x(2);
  x << 0.5, 0.25;
  const auto [mask, value] = round_to_set(inst, x);
  CHECK(value == 0.0);
  CHECK((mask == 0u || mask == 3u));
  CHECK(value <= lovasz_total(inst, x) + 1e-12);

  // Rounding dominance on random instances/points.
  RngStream rng(21, 0);
  SubmodularInstance rnd;
  rnd.ground_set = 5;
  rnd.terms.push_back(random_table_term({0, 1, 2}, 3));
  rnd.terms.push_back(random_table_term({2, 3, 4}, 4));
  for (int trial = 0; trial < 200; ++trial) {
    Vec p(5);
    for (int j = 0; j < 5; ++j) p(j) = rng.uniform();
    const auto [m2, v2] = round_to_set(rnd, p);
    (void)m2;
    CHECK(v2 <= lovasz_total(rnd, p) + 1e-12);
  }

  // All prefixes positive: ∅ wins with value 0.
  SubmodularInstance pos;
  pos.ground_set = 2;
  pos.terms.push_back(modular_term({0, 1}, {0.5, 0.5}));
  const auto [empty_mask, empty_value] = round_to_set(pos, Vec::Constant(2, 0.5));
  CHECK(empty_mask == 0u);
  CHECK(empty_value == 0.0);
}

TEST_CASE("brute force: examples and tie-break") {
  SubmodularInstance mod;
  mod.ground_set = 3;
  mod.terms.push_back(modular_term({0, 1, 2}, {-0.3, 0.2, -0.1}));
  const auto [mask, value] = brute_force_min(mod);
  CHECK(mask == 0b101u);
  CHECK(value == doctest::Approx(-0.4));

  SubmodularInstance zero;
  zero.ground_set = 3;
  zero.terms.push_back(modular_term({0, 1, 2}, {0.0, 0.0, 0.0}));
  CHECK(brute_force_min(zero).first == 0u);

  // Unit triangle cut: minimum 0 at ∅ (first in mask order) or V.
  SubmodularInstance tri;
  tri.ground_set = 3;
  for (auto [u, v] : {std::pair{0, 1}, {0, 2}, {1, 2}}) {
    SubmodularTerm t;
    t.support = {u, v};
    t.evaluate = [](std::uint32_t m2) {
      const bool a = m2 & 1u, b = m2 & 2u;
      return a != b ? 1.0 : 0.0;
    };
    tri.terms.push_back(t);
  }
  const auto [tmask, tvalue] = brute_force_min(tri);
  CHECK(tvalue == 0.0);
  CHECK(tmask == 0u);
}

TEST_CASE("submodularity spot check accepts and rejects") {
  SubmodularInstance good;
  good.ground_set = 4;
  good.terms.push_back(random_table_term({0, 1, 2}, 31));
  good.terms.push_back(edge_cut_term());
  CHECK(check_submodular(good, 200, 5));

  SubmodularInstance bad;  // strictly supermodular pair
  bad.ground_set = 2;
  SubmodularTerm sup;
  sup.support = {0, 1};
  sup.evaluate = [](std::uint32_t mask) {
    return mask == 3u ? 1.0 : 0.0;
  };
  bad.terms.push_back(sup);
  CHECK_FALSE(check_submodular(bad, 200, 5));
}

TEST_CASE("instance JSON parsing and validation") {
  const std::string text = R"({
    "ground_set": 3,
    "terms": [
      {"support": [0, 1], "type": "cut", "data": [[0, 1, 1.0]]},
      {"support": [0, 2], "type": "modular", "data": [-0.25, 0.5]},
      {"support": [1, 2], "type": "table", "data": [0.0, 0.3, 0.4, 0.2]}
    ]})";
  const SubmodularInstance inst = sfm_instance_from_json(text);
  CHECK(inst.ground_set == 3);
  CHECK(inst.terms.size() == 3);
  CHECK(inst.terms[0].evaluate(1u) == 1.0);
  CHECK(inst.terms[0].evaluate(3u) == 0.0);
  CHECK(inst.terms[1].evaluate(3u) == doctest::Approx(0.25));
  CHECK(inst.terms[2].evaluate(2u) == doctest::Approx(0.4));
  CHECK(check_submodular(inst, 200, 1));

  CHECK_THROWS_AS(
      sfm_instance_from_json(
          R"({"ground_set": 2,
              "terms": [{"support": [0], "type": "table", "data": [0.5, 0]}]})"),
      std::invalid_argument);
  CHECK_THROWS_AS(
      sfm_instance_from_json(
          R"({"ground_set": 2,
              "terms": [{"support": [0], "type": "nope", "data": []}]})"),
      std::invalid_argument);
}

namespace {

SolverConfig fast_sfm_config(std::uint64_t seed) {
  SolverConfig cfg;
  cfg.eta = 0.2;
  cfg.seed = seed;
  cfg.outer_samples = 1000;
  cfg.outer_samples_warm = 300;
  cfg.metric_samples = 1500;
  return cfg;
}

}  // namespace

TEST_CASE("minimize_decomposable: single edge cut reaches value 0") {
  SubmodularInstance inst;
  inst.ground_set = 2;
  inst.terms.push_back(edge_cut_term());
  const SfmResult res = minimize_decomposable(inst, 0.05, fast_sfm_config(3));
  CHECK(res.value == 0.0);
  CHECK((res.set_mask == 0u || res.set_mask == 3u));
  CHECK(res.counts.evaluation_calls > 0);
}

TEST_CASE("minimize_decomposable: modular sign rule") {
  SubmodularInstance inst;
  inst.ground_set = 3;
  inst.terms.push_back(modular_term({0, 1, 2}, {-0.3, 0.2, -0.1}));
  const SfmResult res = minimize_decomposable(inst, 0.05, fast_sfm_config(7));
  CHECK(res.set_mask == 0b101u);
  CHECK(res.value == doctest::Approx(-0.4));
}

TEST_CASE("minimize_decomposable: overlapping terms vs brute force") {
  SubmodularInstance inst;
  inst.ground_set = 3;
  inst.terms.push_back(random_table_term({0, 1}, 51, 0.25));
  inst.terms.push_back(random_table_term({1, 2}, 52, 0.25));
  REQUIRE(check_submodular(inst, 200, 2));
  const double epsilon = 0.05;
  const SfmResult res =
      minimize_decomposable(inst, epsilon, fast_sfm_config(11));
  const auto [bmask, bvalue] = brute_force_min(inst);
  (void)bmask;
  CHECK(res.value <= bvalue + epsilon);
}
