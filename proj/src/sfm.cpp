#include "decompopt/sfm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "decompopt/init.hpp"
#include "decompopt/sampling.hpp"

namespace decompopt {

namespace {

void require_support_size(const Vec& x, int want) {
  if (x.size() != want) {
    throw std::invalid_argument("lovasz: x size does not match the support");
  }
}

// Descending sort permutation, ties by ascending index.
std::vector<int> descending_order(const Vec& x) {
  std::vector<int> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&x](int a, int b) { return x(a) > x(b); });
  return order;
}

}  // namespace

double SubmodularInstance::total(std::uint32_t set_mask,
                                 OracleCounter* counter) const {
  double sum = 0.0;
  for (const SubmodularTerm& term : terms) {
    std::uint32_t local = 0;
    for (int j = 0; j < term.arity(); ++j) {
      if (set_mask & (1u << term.support[j])) local |= 1u << j;
    }
    sum += term.evaluate(local);
    if (counter != nullptr) {
      counter->evaluation_calls.fetch_add(1, std::memory_order_relaxed);
    }
  }
  return sum;
}

std::pair<double, Vec> lovasz_value_and_subgradient(const SubmodularTerm& term,
                                                    const Vec& x,
                                                    OracleCounter* counter) {
  const int k = term.arity();
  require_support_size(x, k);
  const std::vector<int> order = descending_order(x);
  Vec g(k);
  double value = 0.0;
  double prev = 0.0;  // F(∅) = 0
  std::uint32_t prefix = 0;
  for (int j = 0; j < k; ++j) {
    prefix |= 1u << order[j];
    const double cur = term.evaluate(prefix);
    if (counter != nullptr) {
      counter->evaluation_calls.fetch_add(1, std::memory_order_relaxed);
    }
    const double marginal = cur - prev;
    g(order[j]) = marginal;
    value += marginal * x(order[j]);
    prev = cur;
  }
  return {value, g};
}

double lovasz_value(const SubmodularTerm& term, const Vec& x,
                    OracleCounter* counter) {
  return lovasz_value_and_subgradient(term, x, counter).first;
}

Vec lovasz_subgradient(const SubmodularTerm& term, const Vec& x,
                       OracleCounter* counter) {
  return lovasz_value_and_subgradient(term, x, counter).second;
}

double lovasz_total(const SubmodularInstance& instance, const Vec& theta,
                    OracleCounter* counter) {
  if (theta.size() != instance.ground_set) {
    throw std::invalid_argument("lovasz_total: theta size != ground set");
  }
  double sum = 0.0;
  for (const SubmodularTerm& term : instance.terms) {
    Vec local(term.arity());
    for (int j = 0; j < term.arity(); ++j) local(j) = theta(term.support[j]);
    sum += lovasz_value(term, local, counter);
  }
  return sum;
}

std::pair<std::uint32_t, double> round_to_set(const SubmodularInstance& instance,
                                              const Vec& x,
                                              OracleCounter* counter) {
  if (x.size() != instance.ground_set) {
    throw std::invalid_argument("round_to_set: x size != ground set");
  }
  const std::vector<int> order = descending_order(x);
  std::uint32_t best_mask = 0;
  double best_value = 0.0;  // F(∅) = 0
  std::uint32_t prefix = 0;
  for (int j = 0; j < instance.ground_set; ++j) {
    prefix |= 1u << order[j];
    const double v = instance.total(prefix, counter);
    if (v < best_value) {
      best_value = v;
      best_mask = prefix;
    }
  }
  return {best_mask, best_value};
}

std::pair<std::uint32_t, double> brute_force_min(
    const SubmodularInstance& instance) {
  if (instance.ground_set > 20) {
    throw std::invalid_argument("brute_force_min: |V| must be <= 20");
  }
  std::uint32_t best_mask = 0;
  double best_value = instance.total(0);
  for (std::uint32_t mask = 1; mask < (1u << instance.ground_set); ++mask) {
    const double v = instance.total(mask);
    if (v < best_value) {
      best_value = v;
      best_mask = mask;
    }
  }
  return {best_mask, best_value};
}

bool check_submodular(const SubmodularInstance& instance, int trials,
                      std::uint64_t seed, double tol) {
  RngStream rng(seed, 0x5F3);
  const int nv = instance.ground_set;
  for (int trial = 0; trial < trials; ++trial) {
    std::uint32_t t_mask = 0;
    for (int k = 0; k < nv; ++k) {
      if (rng.uniform() < 0.5) t_mask |= 1u << k;
    }
    std::uint32_t s_mask = 0;
    for (int k = 0; k < nv; ++k) {
      if ((t_mask & (1u << k)) && rng.uniform() < 0.5) s_mask |= 1u << k;
    }
    std::vector<int> outside;
    for (int k = 0; k < nv; ++k) {
      if (!(t_mask & (1u << k))) outside.push_back(k);
    }
    if (outside.empty()) continue;
    const int i = outside[static_cast<size_t>(rng.uniform() * outside.size()) %
                          outside.size()];
    const double lhs = instance.total(t_mask | (1u << i)) -
                       instance.total(t_mask);
    const double rhs = instance.total(s_mask | (1u << i)) -
                       instance.total(s_mask);
    if (lhs > rhs + tol) return false;
  }
  return true;
}

namespace {

// Exact Lipschitz bound of one Lovász extension: the largest 2-norm of a
// prefix-difference vector over all sort orders (arity <= 5 keeps this cheap).
double lovasz_lipschitz(const SubmodularTerm& term) {
  const int k = term.arity();
  if (k > 8) {
    throw std::invalid_argument(
        "lovasz_lipschitz: exact bound only implemented up to arity 8");
  }
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  double worst = 0.0;
  do {
    double prev = 0.0;
    std::uint32_t prefix = 0;
    double norm2 = 0.0;
    for (int j = 0; j < k; ++j) {
      prefix |= 1u << perm[j];
      const double cur = term.evaluate(prefix);
      norm2 += (cur - prev) * (cur - prev);
      prev = cur;
    }
    worst = std::max(worst, std::sqrt(norm2));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return worst;
}

}  // namespace

SfmFormulation build_sfm_formulation(const SubmodularInstance& instance,
                                     std::shared_ptr<OracleCounter> counter) {
  const int n = static_cast<int>(instance.terms.size());
  if (n == 0 || instance.ground_set < 1) {
    throw std::invalid_argument("build_sfm_formulation: empty instance");
  }
  const double L = 2.0;
  double r_trust = 1.5;
  for (const SubmodularTerm& term : instance.terms) {
    r_trust = std::max(r_trust, 1.0 + 0.5 * std::sqrt(double(term.arity())));
  }

  SfmFormulation form;
  std::vector<int> offsets;
  int m = 0;
  for (const SubmodularTerm& term : instance.terms) {
    offsets.push_back(m);
    m += term.arity() + 1;
  }

  form.c = Vec::Zero(m);
  form.x_initial = Vec::Zero(m);
  double max_center_norm = 0.0;
  double min_seed = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const SubmodularTerm& term = instance.terms[i];
    const int d = term.arity();
    const Vec x0 = Vec::Constant(d, 0.5);
    const double z0 = lovasz_value(term, x0) / L;

    EpigraphBlock block;
    block.value = [term, counter](const Vec& x) {
      return lovasz_value(term, x, counter.get());
    };
    block.subgradient = [term, counter](const Vec& x) {
      return lovasz_subgradient(term, x, counter.get());
    };
    block.lipschitz = L;
    block.box_center = x0;
    block.z_center = z0;
    block.radius = r_trust;
    block.coord_lo = Vec::Zero(d);
    block.coord_hi = Vec::Ones(d);
    form.blocks.push_back(block);
    form.c(offsets[i] + d) = L;

    // Seed ball: lifted one unit above the surface at the box center.
    const double lift = 1.0;
    const double lip = lovasz_lipschitz(term);
    const double rho =
        0.9 * std::min({L * lift / std::sqrt(lip * lip + L * L), 0.5,
                        r_trust, 2.0 * r_trust - lift});
    Vec seed_center(d + 1);
    seed_center.head(d) = x0;
    seed_center(d) = z0 + lift;
    form.seed_balls.emplace_back(seed_center, rho);
    form.x_initial.segment(offsets[i], d + 1) = seed_center;
    min_seed = std::min(min_seed, rho);

    Vec block_center(d + 1);
    block_center.head(d) = x0;
    block_center(d) = z0;
    max_center_norm =
        std::max(max_center_norm, block_center.norm() +
                                      std::sqrt(5.0) * r_trust);
  }

  // Coupling rows x^{(i)}_k = x^{(j)}_k, one per shared-coordinate pair, in
  // (ascending k, then lexicographic i < j) order.
  std::vector<std::pair<int, int>> pairs;  // (column +1, column -1)
  for (int k = 0; k < instance.ground_set; ++k) {
    std::vector<std::pair<int, int>> holders;  // (term, local index)
    for (int i = 0; i < n; ++i) {
      const auto& sup = instance.terms[i].support;
      const auto it = std::find(sup.begin(), sup.end(), k);
      if (it != sup.end()) {
        holders.emplace_back(i, static_cast<int>(it - sup.begin()));
      }
    }
    for (size_t a = 0; a < holders.size(); ++a) {
      for (size_t b = a + 1; b < holders.size(); ++b) {
        pairs.emplace_back(offsets[holders[a].first] + holders[a].second,
                           offsets[holders[b].first] + holders[b].second);
      }
    }
  }
  form.A = Mat::Zero(static_cast<int>(pairs.size()), m);
  for (size_t row = 0; row < pairs.size(); ++row) {
    form.A(row, pairs[row].first) = 1.0;
    form.A(row, pairs[row].second) = -1.0;
  }
  form.b = Vec::Zero(static_cast<int>(pairs.size()));
  form.solver_R = max_center_norm;
  form.solver_r = min_seed;
  return form;
}

SfmResult minimize_decomposable(const SubmodularInstance& instance,
                                double epsilon, const SolverConfig& base_cfg) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw std::invalid_argument("minimize_decomposable: need ε in (0, 1/2)");
  }
  auto counter = std::make_shared<OracleCounter>();
  SfmFormulation form = build_sfm_formulation(instance, counter);
  const int n = static_cast<int>(form.blocks.size());

  Phase1Input p1;
  for (int i = 0; i < n; ++i) {
    p1.inner_balls.push_back(form.seed_balls[i]);
    Vec center = form.blocks[i].block_center();
    p1.bounding_balls.emplace_back(center, std::sqrt(5.0) *
                                               form.blocks[i].radius);
    p1.oracles.push_back([block = form.blocks[i], counter](const Vec& q) {
      return block.separate(q, counter.get());
    });
  }
  p1.A = form.A;
  p1.b = form.b;
  p1.c = form.c;
  p1.counter = counter;
  Phase1Config p1cfg;
  p1cfg.epsilon = epsilon;
  p1cfg.solver = base_cfg;
  Phase1Result init = phase1_initialize(p1, p1cfg);

  SolveInput in;
  for (int i = 0; i < n; ++i) {
    in.blocks.push_back(BlockSetup{
        [block = form.blocks[i], counter](const Vec& q) {
          return block.separate(q, counter.get());
        },
        init.kin[i], init.kout[i]});
  }
  in.sub = AffineSubspace::from_system(form.A, form.b);
  in.c = form.c;
  in.x_initial = init.x_in;

  SolverConfig cfg = base_cfg;
  cfg.R = form.solver_R;
  cfg.r = form.solver_r;
  cfg.epsilon = epsilon / (form.c.norm() * form.solver_R);
  SfmResult out;
  out.solve_detail = solve(in, cfg, counter);

  // Collapse the coordinate copies (consistent through Ax=b) onto V.
  Vec theta = Vec::Zero(instance.ground_set);
  Vec hits = Vec::Zero(instance.ground_set);
  int at = 0;
  for (const SubmodularTerm& term : instance.terms) {
    for (int j = 0; j < term.arity(); ++j) {
      theta(term.support[j]) += out.solve_detail.x(at + j);
      hits(term.support[j]) += 1.0;
    }
    at += term.arity() + 1;
  }
  for (int k = 0; k < instance.ground_set; ++k) {
    if (hits(k) > 0.0) theta(k) /= hits(k);
    theta(k) = std::min(1.0, std::max(0.0, theta(k)));
  }

  out.theta = theta;
  out.lovasz = lovasz_total(instance, theta, counter.get());
  const auto [mask, value] = round_to_set(instance, theta, counter.get());
  out.set_mask = mask;
  out.value = value;
  for (int k = 0; k < instance.ground_set; ++k) {
    if (mask & (1u << k)) out.set.push_back(k);
  }
  out.counts = snapshot(*counter);
  return out;
}

SubmodularInstance sfm_instance_from_json(const std::string& json_text) {
  const nlohmann::json j = nlohmann::json::parse(json_text);
  SubmodularInstance inst;
  inst.ground_set = j.at("ground_set").get<int>();
  if (inst.ground_set < 1 || inst.ground_set > 20) {
    throw std::invalid_argument("sfm instance: ground_set must be in [1,20]");
  }
  for (const auto& jt : j.at("terms")) {
    SubmodularTerm term;
    term.support = jt.at("support").get<std::vector<int>>();
    if (!std::is_sorted(term.support.begin(), term.support.end())) {
      throw std::invalid_argument("sfm instance: support must be ascending");
    }
    const int k = term.arity();
    if (k < 1 || k > 20) {
      throw std::invalid_argument("sfm instance: bad support size");
    }
    const std::string type = jt.at("type").get<std::string>();
    if (type == "table") {
      auto values = jt.at("data").get<std::vector<double>>();
      if (values.size() != (1u << k) || values[0] != 0.0) {
        throw std::invalid_argument(
            "sfm instance: table needs 2^k values with table[0] = 0");
      }
      term.evaluate = [values](std::uint32_t mask) { return values[mask]; };
    } else if (type == "modular") {
      auto w = jt.at("data").get<std::vector<double>>();
      if (w.size() != static_cast<size_t>(k)) {
        throw std::invalid_argument("sfm instance: modular weights size");
      }
      term.evaluate = [w](std::uint32_t mask) {
        double s = 0.0;
        for (size_t j2 = 0; j2 < w.size(); ++j2) {
          if (mask & (1u << j2)) s += w[j2];
        }
        return s;
      };
    } else if (type == "cut") {
      // Edges by ground-set index; endpoints must lie in the support.
      struct Edge {
        int u, v;
        double w;
      };
      std::vector<Edge> edges;
      for (const auto& je : jt.at("data")) {
        Edge e{je.at(0).get<int>(), je.at(1).get<int>(),
               je.at(2).get<double>()};
        auto local = [&term](int g) {
          const auto it =
              std::find(term.support.begin(), term.support.end(), g);
          if (it == term.support.end()) {
            throw std::invalid_argument(
                "sfm instance: cut edge endpoint outside support");
          }
          return static_cast<int>(it - term.support.begin());
        };
        e.u = local(e.u);
        e.v = local(e.v);
        edges.push_back(e);
      }
      term.evaluate = [edges](std::uint32_t mask) {
        double s = 0.0;
        for (const Edge& e : edges) {
          const bool in_u = mask & (1u << e.u);
          const bool in_v = mask & (1u << e.v);
          if (in_u != in_v) s += e.w;
        }
        return s;
      };
    } else {
      throw std::invalid_argument("sfm instance: unknown term type " + type);
    }
    inst.terms.push_back(std::move(term));
  }
  return inst;
}

}  // namespace decompopt
