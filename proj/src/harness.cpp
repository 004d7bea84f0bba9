#include "decompopt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

#include "decompopt/init.hpp"
#include "decompopt/sampling.hpp"

namespace decompopt {

using nlohmann::json;

ProblemSpec ProblemSpec::from_json(const std::string& text) {
  const json j = json::parse(text);
  ProblemSpec spec;
  spec.kind = j.at("kind").get<std::string>();
  spec.seed = j.value("seed", 0ULL);
  spec.epsilon = j.value("epsilon", 0.05);
  spec.parameters_json = j.value("parameters", json::object()).dump();
  return spec;
}

std::string ProblemSpec::to_json() const {
  json j;
  j["kind"] = kind;
  j["seed"] = seed;
  j["epsilon"] = epsilon;
  j["parameters"] = json::parse(parameters_json);
  return j.dump();
}

double GeneratedProblem::objective_theta(const Vec& theta,
                                         OracleCounter* counter) const {
  double sum = 0.0;
  for (const ThetaTerm& term : theta_terms) {
    Vec local(term.support.size());
    for (size_t j = 0; j < term.support.size(); ++j) {
      local(j) = theta(term.support[j]);
    }
    sum += term.value(local);
    (void)counter;
  }
  return sum;
}

Vec GeneratedProblem::theta_from_blocks(const Vec& x) const {
  Vec theta = Vec::Zero(theta_dim);
  Vec hits = Vec::Zero(theta_dim);
  int at = 0;
  for (const ThetaTerm& term : theta_terms) {
    for (size_t j = 0; j < term.support.size(); ++j) {
      theta(term.support[j]) += x(at + static_cast<int>(j));
      hits(term.support[j]) += 1.0;
    }
    at += static_cast<int>(term.support.size()) + 1;
  }
  for (int k = 0; k < theta_dim; ++k) {
    if (hits(k) > 0.0) theta(k) /= hits(k);
  }
  return theta;
}

namespace {

struct PwTerm {
  std::vector<int> support;
  std::vector<Vec> slopes;
  std::vector<double> intercepts;

  double value(const Vec& x) const {
    double best = slopes[0].dot(x) + intercepts[0];
    for (size_t j = 1; j < slopes.size(); ++j) {
      best = std::max(best, slopes[j].dot(x) + intercepts[j]);
    }
    return best;
  }
  Vec subgradient(const Vec& x) const {
    size_t arg = 0;
    double best = slopes[0].dot(x) + intercepts[0];
    for (size_t j = 1; j < slopes.size(); ++j) {
      const double v = slopes[j].dot(x) + intercepts[j];
      if (v > best) {
        best = v;
        arg = j;
      }
    }
    return slopes[arg];
  }
  double lipschitz() const {
    double lip = 0.0;
    for (const Vec& a : slopes) lip = std::max(lip, a.norm());
    return lip;
  }
};

// Assembles blocks/coupling/seeds shared by the epigraph-style generators.
// Terms are given in θ space; every term gets one (x_i, z_i) block.
void assemble_epigraph_problem(GeneratedProblem& out, double trust_radius,
                               double term_L, const Vec& theta0,
                               const std::vector<double>& seed_lip) {
  const int n = static_cast<int>(out.theta_terms.size());
  std::vector<int> offsets;
  int m = 0;
  for (const ThetaTerm& t : out.theta_terms) {
    offsets.push_back(m);
    m += static_cast<int>(t.support.size()) + 1;
  }
  out.c = Vec::Zero(m);
  out.x_initial = Vec::Zero(m);
  double max_center = 0.0;
  double min_seed = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const ThetaTerm& term = out.theta_terms[i];
    const int d = static_cast<int>(term.support.size());
    Vec x0(d);
    for (int j = 0; j < d; ++j) x0(j) = theta0(term.support[j]);
    const double z0 = term.value(x0) / term_L;

    EpigraphBlock block;
    block.value = term.value;
    block.subgradient = term.subgradient;
    block.lipschitz = term_L;
    block.box_center = x0;
    block.z_center = z0;
    block.radius = trust_radius;
    out.blocks.push_back(block);
    out.c(offsets[i] + d) = term_L;

    const double lift = 1.0;
    const double lip = seed_lip[i];
    const double rho =
        0.9 * std::min({term_L * lift / std::sqrt(lip * lip + term_L * term_L),
                        trust_radius, 2.0 * trust_radius - lift});
    Vec seed_center(d + 1);
    seed_center.head(d) = x0;
    seed_center(d) = z0 + lift;
    out.seed_balls.emplace_back(seed_center, rho);
    out.x_initial.segment(offsets[i], d + 1) = seed_center;
    min_seed = std::min(min_seed, rho);

    Vec center(d + 1);
    center.head(d) = x0;
    center(d) = z0;
    max_center = std::max(center.norm() + std::sqrt(5.0) * trust_radius,
                          max_center);
  }

  std::vector<std::pair<int, int>> pairs;
  for (int k = 0; k < out.theta_dim; ++k) {
    std::vector<int> cols;
    for (int i = 0; i < n; ++i) {
      const auto& sup = out.theta_terms[i].support;
      const auto it = std::find(sup.begin(), sup.end(), k);
      if (it != sup.end()) {
        cols.push_back(offsets[i] + static_cast<int>(it - sup.begin()));
      }
    }
    for (size_t a = 0; a < cols.size(); ++a) {
      for (size_t b2 = a + 1; b2 < cols.size(); ++b2) {
        pairs.emplace_back(cols[a], cols[b2]);
      }
    }
  }
  out.A = Mat::Zero(static_cast<int>(pairs.size()), m);
  for (size_t row = 0; row < pairs.size(); ++row) {
    out.A(row, pairs[row].first) = 1.0;
    out.A(row, pairs[row].second) = -1.0;
  }
  out.b = Vec::Zero(static_cast<int>(pairs.size()));
  out.solver_R = max_center;
  out.solver_r = min_seed;
  out.theta0 = theta0;
  out.theta_radius = trust_radius;
}

GeneratedProblem generate_chain(const ProblemSpec& spec) {
  const json params = json::parse(spec.parameters_json);
  const int n = params.value("n", 6);
  const double trust = params.value("radius", 2.0);
  if (n < 2) throw std::invalid_argument("chain_quadratic: need n >= 2");

  GeneratedProblem out;
  out.kind = spec.kind;
  out.theta_dim = n;

  auto quad1 = [](double shift) {
    return ThetaTerm{
        {},
        [shift](const Vec& x) {
          return (x(0) - shift) * (x(0) - shift);
        },
        [shift](const Vec& x) {
          return Vec::Constant(1, 2.0 * (x(0) - shift));
        }};
  };
  ThetaTerm first = quad1(1.0);
  first.support = {0};
  out.theta_terms.push_back(first);
  for (int i = 0; i + 1 < n; ++i) {
    ThetaTerm mid;
    mid.support = {i, i + 1};
    mid.value = [](const Vec& x) {
      const double d = x(0) - x(1);
      return d * d;
    };
    mid.subgradient = [](const Vec& x) {
      Vec g(2);
      g(0) = 2.0 * (x(0) - x(1));
      g(1) = -g(0);
      return g;
    };
    out.theta_terms.push_back(mid);
  }
  ThetaTerm last = quad1(0.0);
  last.support = {n - 1};
  out.theta_terms.push_back(last);

  const double L = std::max(2.0 * (trust + 1.0), 4.0 * trust);
  std::vector<double> seed_lip(out.theta_terms.size(), 4.0);
  assemble_epigraph_problem(out, trust, L, Vec::Zero(n), seed_lip);
  out.lipschitz = L;

  // Exact optimum from the tridiagonal normal equations.
  Mat T = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    T(i, i) = 2.0;
    if (i + 1 < n) {
      T(i, i + 1) = -1.0;
      T(i + 1, i) = -1.0;
    }
  }
  Vec rhs = Vec::Zero(n);
  rhs(0) = 1.0;
  const Vec opt = T.ldlt().solve(rhs);
  double value = (opt(0) - 1.0) * (opt(0) - 1.0) + opt(n - 1) * opt(n - 1);
  for (int i = 0; i + 1 < n; ++i) {
    value += (opt(i) - opt(i + 1)) * (opt(i) - opt(i + 1));
  }
  out.known_optimum = value;
  return out;
}

GeneratedProblem generate_piecewise(const ProblemSpec& spec,
                                    const json& explicit_terms) {
  const json params = json::parse(spec.parameters_json);
  const double trust = params.value("radius", 2.0);
  GeneratedProblem out;
  out.kind = spec.kind;

  std::vector<PwTerm> terms;
  if (!explicit_terms.is_null()) {
    for (const auto& jt : explicit_terms) {
      PwTerm t;
      t.support = jt.at("support").get<std::vector<int>>();
      for (const auto& jp : jt.at("pieces")) {
        const auto coeffs = jp.get<std::vector<double>>();
        if (coeffs.size() != t.support.size() + 1) {
          throw std::invalid_argument(
              "custom_epigraph: piece needs |support| slopes plus intercept");
        }
        Vec a(t.support.size());
        for (size_t j = 0; j + 1 < coeffs.size(); ++j) a(j) = coeffs[j];
        t.slopes.push_back(a);
        t.intercepts.push_back(coeffs.back());
      }
      terms.push_back(std::move(t));
    }
    int dim = 0;
    for (const PwTerm& t : terms) {
      for (int k : t.support) dim = std::max(dim, k + 1);
    }
    out.theta_dim = params.value("dim", dim);
    if (params.contains("optimum")) {
      out.known_optimum = params.at("optimum").get<double>();
    }
  } else {
    const int dim = params.value("dim", 3);
    const int n_terms = params.value("n_terms", 3);
    const int pieces = params.value("pieces", 3);
    out.theta_dim = dim;
    RngStream rng(spec.seed, 0x9E);
    for (int i = 0; i < n_terms; ++i) {
      PwTerm t;
      const int arity = 1 + static_cast<int>(rng.uniform() * std::min(3, dim));
      std::vector<int> all(dim);
      std::iota(all.begin(), all.end(), 0);
      for (int j = 0; j < arity; ++j) {
        const int pick =
            j + static_cast<int>(rng.uniform() * (dim - j)) % (dim - j);
        std::swap(all[j], all[pick]);
      }
      t.support.assign(all.begin(), all.begin() + arity);
      std::sort(t.support.begin(), t.support.end());
      for (int p = 0; p < pieces; ++p) {
        Vec a(arity);
        for (int j = 0; j < arity; ++j) a(j) = 2.0 * rng.uniform() - 1.0;
        t.slopes.push_back(a);
        t.intercepts.push_back(2.0 * rng.uniform() - 1.0);
      }
      terms.push_back(std::move(t));
    }
  }

  double L = 1e-9;
  std::vector<double> seed_lip;
  for (const PwTerm& t : terms) {
    L = std::max(L, t.lipschitz());
    seed_lip.push_back(t.lipschitz());
  }
  for (const PwTerm& t : terms) {
    ThetaTerm tt;
    tt.support = t.support;
    tt.value = [t](const Vec& x) { return t.value(x); };
    tt.subgradient = [t](const Vec& x) { return t.subgradient(x); };
    out.theta_terms.push_back(std::move(tt));
  }
  assemble_epigraph_problem(out, trust, L, Vec::Zero(out.theta_dim), seed_lip);
  out.lipschitz = L;
  return out;
}

// Random decomposable submodular instance materialized as explicit tables:
// a mixture of modular weights, coverage terms min(1, |S∩B|), and cut edges,
// rescaled so Σ_i max|F_i| <= 1.
GeneratedProblem generate_sfm(const ProblemSpec& spec,
                              std::shared_ptr<OracleCounter> counter) {
  const json params = json::parse(spec.parameters_json);
  RngStream rng(spec.seed, 0x5F11);
  const int nv = params.value("ground_set",
                              2 + static_cast<int>(rng.uniform() * 3));
  const int n_terms = params.value("n_terms",
                                   2 + static_cast<int>(rng.uniform() * 3));
  const int max_arity = params.value("max_arity", 4);

  json jinstance;
  jinstance["ground_set"] = nv;
  json jterms = json::array();
  std::vector<std::vector<double>> tables;
  std::vector<std::vector<int>> supports;
  for (int i = 0; i < n_terms; ++i) {
    const int arity = std::min(
        nv, 2 + static_cast<int>(rng.uniform() * (max_arity - 1)));
    std::vector<int> all(nv);
    std::iota(all.begin(), all.end(), 0);
    for (int j = 0; j < arity; ++j) {
      const int pick = j + static_cast<int>(rng.uniform() * (nv - j)) % (nv - j);
      std::swap(all[j], all[pick]);
    }
    std::vector<int> support(all.begin(), all.begin() + arity);
    std::sort(support.begin(), support.end());

    std::vector<double> w(arity);
    for (double& v : w) v = 2.0 * rng.uniform() - 1.0;
    std::uint32_t cover = 0;
    for (int j = 0; j < arity; ++j) {
      if (rng.uniform() < 0.5) cover |= 1u << j;
    }
    const double cover_w = rng.uniform();
    int eu = static_cast<int>(rng.uniform() * arity) % arity;
    int ev = static_cast<int>(rng.uniform() * arity) % arity;
    if (eu == ev) ev = (ev + 1) % arity;
    const double cut_w = arity >= 2 ? rng.uniform() : 0.0;

    std::vector<double> table(1u << arity, 0.0);
    for (std::uint32_t mask = 0; mask < (1u << arity); ++mask) {
      double v = 0.0;
      for (int j = 0; j < arity; ++j) {
        if (mask & (1u << j)) v += w[j];
      }
      if (mask & cover) v += cover_w;
      const bool in_u = mask & (1u << eu);
      const bool in_v = mask & (1u << ev);
      if (in_u != in_v) v += cut_w;
      table[mask] = v;
    }
    tables.push_back(table);
    supports.push_back(support);
  }
  double total_abs = 0.0;
  for (const auto& t : tables) {
    double mx = 0.0;
    for (double v : t) mx = std::max(mx, std::abs(v));
    total_abs += mx;
  }
  const double scale = total_abs > 1.0 ? 0.999 / total_abs : 1.0;
  for (size_t i = 0; i < tables.size(); ++i) {
    for (double& v : tables[i]) v *= scale;
    json jt;
    jt["support"] = supports[i];
    jt["type"] = "table";
    jt["data"] = tables[i];
    jterms.push_back(jt);
  }
  jinstance["terms"] = jterms;

  GeneratedProblem out;
  out.kind = "sfm";
  out.instance_json = jinstance.dump();
  out.sfm = sfm_instance_from_json(out.instance_json);
  out.theta_dim = nv;

  SfmFormulation form = build_sfm_formulation(*out.sfm, counter);
  out.blocks = form.blocks;
  out.seed_balls = form.seed_balls;
  out.A = form.A;
  out.b = form.b;
  out.c = form.c;
  out.x_initial = form.x_initial;
  out.solver_R = form.solver_R;
  out.solver_r = form.solver_r;
  out.theta0 = Vec::Constant(nv, 0.5);
  out.theta_radius = out.blocks.empty() ? 1.5 : out.blocks[0].radius;

  double lip_total = 0.0;
  for (const SubmodularTerm& term : out.sfm->terms) {
    ThetaTerm tt;
    tt.support = term.support;
    tt.value = [term, counter](const Vec& x) {
      return lovasz_value(term, x, counter.get());
    };
    tt.subgradient = [term, counter](const Vec& x) {
      return lovasz_subgradient(term, x, counter.get());
    };
    out.theta_terms.push_back(std::move(tt));
    Vec probe = Vec::Constant(term.arity(), 0.5);
    lip_total += lovasz_subgradient(term, probe).norm() + 2.0;
  }
  out.lipschitz = lip_total;
  out.known_optimum = brute_force_min(*out.sfm).second;
  return out;
}

}  // namespace

GeneratedProblem generate(const ProblemSpec& spec,
                          std::shared_ptr<OracleCounter> counter) {
  if (spec.kind == "chain_quadratic") return generate_chain(spec);
  if (spec.kind == "piecewise_linear") {
    return generate_piecewise(spec, json());
  }
  if (spec.kind == "custom_epigraph") {
    const json params = json::parse(spec.parameters_json);
    return generate_piecewise(spec, params.at("terms"));
  }
  if (spec.kind == "sfm") return generate_sfm(spec, std::move(counter));
  throw std::invalid_argument("generate: unknown problem kind " + spec.kind);
}

PipelineResult run_pipeline(const GeneratedProblem& problem,
                            const SolverConfig& cfg,
                            std::shared_ptr<OracleCounter> counter) {
  if (!counter) counter = std::make_shared<OracleCounter>();
  const int n = static_cast<int>(problem.blocks.size());

  Phase1Input p1;
  for (int i = 0; i < n; ++i) {
    p1.inner_balls.push_back(problem.seed_balls[i]);
    p1.bounding_balls.emplace_back(problem.blocks[i].block_center(),
                                   std::sqrt(5.0) * problem.blocks[i].radius);
    p1.oracles.push_back([block = problem.blocks[i], counter](const Vec& q) {
      return block.separate(q, counter.get());
    });
  }
  p1.A = problem.A;
  p1.b = problem.b;
  p1.c = problem.c;
  p1.counter = counter;
  Phase1Config p1cfg;
  p1cfg.epsilon = cfg.epsilon;
  p1cfg.solver = cfg;
  Phase1Result init = phase1_initialize(p1, p1cfg);

  SolveInput in;
  for (int i = 0; i < n; ++i) {
    in.blocks.push_back(BlockSetup{
        [block = problem.blocks[i], counter](const Vec& q) {
          return block.separate(q, counter.get());
        },
        init.kin[i], init.kout[i]});
  }
  in.sub = AffineSubspace::from_system(problem.A, problem.b);
  in.c = problem.c;
  in.x_initial = init.x_in;

  SolverConfig scfg = cfg;
  scfg.R = problem.solver_R;
  scfg.r = problem.solver_r;
  // Map the user-level ε (gap target ε·L·R in objective units) onto the
  // solver's relative ε against ‖c‖₂·R_solver.
  const double target_gap =
      cfg.epsilon * problem.lipschitz * problem.theta_radius;
  scfg.epsilon = std::min(0.49, target_gap / (problem.c.norm() *
                                              problem.solver_R));

  PipelineResult out;
  out.solve = solve(in, scfg, counter);
  out.theta = problem.theta_from_blocks(out.solve.x);
  out.objective = problem.objective_theta(out.theta);
  out.counts = snapshot(*counter);
  return out;
}

BaselineResult baseline_subgradient(const GeneratedProblem& problem,
                                    long iters,
                                    std::shared_ptr<OracleCounter> counter) {
  if (!counter) counter = std::make_shared<OracleCounter>();
  const double L = std::max(problem.lipschitz, 1e-12);
  const double R = problem.theta_radius;
  Vec theta = problem.theta0;
  BaselineResult out;
  out.best = problem.objective_theta(theta);
  for (long k = 1; k <= iters; ++k) {
    Vec g = Vec::Zero(problem.theta_dim);
    for (const ThetaTerm& term : problem.theta_terms) {
      Vec local(term.support.size());
      for (size_t j = 0; j < term.support.size(); ++j) {
        local(j) = theta(term.support[j]);
      }
      const Vec gl = term.subgradient(local);
      counter->subgradient_calls.fetch_add(1, std::memory_order_relaxed);
      for (size_t j = 0; j < term.support.size(); ++j) {
        g(term.support[j]) += gl(j);
      }
    }
    theta -= (R / (L * std::sqrt(double(k)))) * g;
    const Vec off = theta - problem.theta0;
    if (off.norm() > R) theta = problem.theta0 + off * (R / off.norm());
    out.best = std::min(out.best, problem.objective_theta(theta));
    out.value_trace.push_back(out.best);
  }
  out.counts = snapshot(*counter);
  return out;
}

BaselineResult baseline_cpm(const GeneratedProblem& problem, double epsilon,
                            long max_iters, std::uint64_t seed,
                            std::shared_ptr<OracleCounter> counter) {
  if (!counter) counter = std::make_shared<OracleCounter>();
  const int d = problem.theta_dim;
  OuterBody body(Ball(problem.theta0, problem.theta_radius));
  Vec start = problem.theta0;
  BaselineResult out;
  out.best = std::numeric_limits<double>::infinity();
  const long iters =
      std::min<long>(max_iters,
                     static_cast<long>(std::ceil(
                         4.0 * d * std::log(4.0 / std::max(epsilon, 1e-6)))));
  RngStream rng(seed, 0xC9);
  for (long it = 0; it < iters; ++it) {
    ChainConfig cc = ChainConfig::defaults_for(d, rng.uniform() * 1e18, 1500);
    ChordFn chord = [&body](const Vec& p, const Vec& dir) {
      return chord_outer(body, p, dir);
    };
    Mat samples = hit_and_run_sample(chord, Density::uniform(d), start, cc);
    const Vec v = samples.colwise().mean();
    Vec g = Vec::Zero(d);
    for (const ThetaTerm& term : problem.theta_terms) {
      Vec local(term.support.size());
      for (size_t j = 0; j < term.support.size(); ++j) {
        local(j) = v(term.support[j]);
      }
      const Vec gl = term.subgradient(local);
      counter->subgradient_calls.fetch_add(1, std::memory_order_relaxed);
      for (size_t j = 0; j < term.support.size(); ++j) {
        g(term.support[j]) += gl(j);
      }
    }
    out.best = std::min(out.best, problem.objective_theta(v));
    out.value_trace.push_back(out.best);
    if (g.norm() < 1e-12) break;
    body = body.with_cut_unchecked(Halfspace(g, g.dot(v)));
    if (!body.contains(start, 1e-12)) {
      double best_margin = -1.0;
      for (long r = 0; r < samples.rows(); ++r) {
        const Vec p = samples.row(r).transpose();
        if (!body.contains(p, 1e-12)) continue;
        double margin = body.bounding_ball().radius -
                        (p - body.bounding_ball().center).norm();
        for (const Halfspace& h : body.cuts()) {
          margin = std::min(margin, -h.violation(p));
        }
        if (margin > best_margin) {
          best_margin = margin;
          start = p;
        }
      }
      if (best_margin <= 0.0) break;  // search body has collapsed
    }
  }
  out.counts = snapshot(*counter);
  return out;
}

std::string trace_to_csv(const std::vector<SolverEvent>& events) {
  std::ostringstream os;
  os << "iter,event,block,t,objective,outer_objective,sep_calls,eval_calls,"
        "wall_ms\n";
  os.precision(17);
  for (const SolverEvent& ev : events) {
    os << ev.iter << ',' << to_string(ev.kind) << ',' << ev.block << ','
       << ev.t << ',' << ev.objective << ',' << ev.outer_objective << ','
       << ev.sep_calls << ',' << ev.eval_calls << ',' << ev.wall_ms << '\n';
  }
  return os.str();
}

std::string config_hash(const ProblemSpec& spec, const SolverConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << spec.to_json() << '|' << cfg.epsilon << '|' << cfg.eta << '|' << cfg.R
     << '|' << cfg.r << '|' << cfg.noise_slack << '|' << cfg.metric_samples
     << '|' << cfg.outer_samples << '|' << cfg.outer_samples_warm << '|'
     << cfg.max_iterations << '|' << cfg.seed << '|' << cfg.chains;
  const std::string text = os.str();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream hex;
  hex << std::hex << h;
  return hex.str();
}

std::string summary_json(const GeneratedProblem& problem,
                         const PipelineResult& result, const ProblemSpec& spec,
                         const SolverConfig& cfg) {
  json j;
  j["kind"] = problem.kind;
  j["final_value"] = result.objective;
  if (problem.known_optimum) {
    j["optimum_if_known"] = *problem.known_optimum;
    j["gap"] = result.objective - *problem.known_optimum;
  } else {
    j["optimum_if_known"] = nullptr;
    j["gap"] = nullptr;
  }
  j["sep_calls"] = result.counts.separation_calls;
  j["eval_calls"] = result.counts.evaluation_calls;
  j["seed"] = spec.seed;
  j["config_hash"] = config_hash(spec, cfg);
  j["converged"] = result.solve.converged;
  return j.dump(2) + "\n";
}

double oracle_budget(int m, double epsilon) {
  return 200.0 * m * std::log(m / epsilon);
}

}  // namespace decompopt
