#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "decompopt/harness.hpp"
#include "decompopt/init.hpp"
#include "decompopt/sfm.hpp"

using namespace decompopt;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

struct CommonFlags {
  double epsilon = 0.0;  // 0: take the problem file's value
  std::uint64_t seed = 0;
  bool seed_set = false;
  long samples = 0;
  double eta = 0.1;
  double noise_slack = 3.0;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonFlags* flags) {
  cmd->add_option("--epsilon", flags->epsilon, "target accuracy");
  cmd->add_option("--seed", flags->seed, "RNG seed")
      ->each([flags](const std::string&) { flags->seed_set = true; });
  cmd->add_option("--samples", flags->samples,
                  "post-burn-in samples per barrier/centroid call");
  cmd->add_option("--eta", flags->eta, "step/slack constant (0, 1/4]");
  cmd->add_option("--noise-slack", flags->noise_slack,
                  "stderr multiplier in the condition tests");
  cmd->add_option("--out", flags->out_dir, "output directory for artifacts");
}

SolverConfig solver_config(const CommonFlags& flags, double epsilon,
                           std::uint64_t seed) {
  SolverConfig cfg;
  cfg.epsilon = epsilon;
  cfg.eta = flags.eta;
  cfg.noise_slack = flags.noise_slack;
  cfg.seed = seed;
  if (flags.samples > 0) {
    cfg.metric_samples = flags.samples;
    cfg.outer_samples = flags.samples;
    cfg.outer_samples_warm = std::max<long>(64, flags.samples / 4);
  } else {
    cfg.metric_samples = 1500;
    cfg.outer_samples = 1000;
    cfg.outer_samples_warm = 300;
  }
  return cfg;
}

void write_artifacts(const CommonFlags& flags, const std::string& trace,
                     const std::string& summary) {
  if (flags.out_dir.empty()) {
    std::cout << summary;
    return;
  }
  std::filesystem::create_directories(flags.out_dir);
  write_file(flags.out_dir + "/trace.csv", trace);
  write_file(flags.out_dir + "/summary.json", summary);
}

int cmd_solve(const std::string& problem_path, const CommonFlags& flags) {
  ProblemSpec spec = ProblemSpec::from_json(read_file(problem_path));
  if (flags.epsilon > 0.0) spec.epsilon = flags.epsilon;
  if (flags.seed_set) spec.seed = flags.seed;

  auto counter = std::make_shared<OracleCounter>();
  const GeneratedProblem problem = generate(spec, counter);
  const SolverConfig cfg = solver_config(flags, spec.epsilon, spec.seed);
  const PipelineResult result = run_pipeline(problem, cfg, counter);

  write_artifacts(flags, trace_to_csv(result.solve.events),
                  summary_json(problem, result, spec, cfg));

  if (!result.solve.converged) {
    std::cerr << "{\"error\": \"" << result.solve.diagnostic << "\"}\n";
    return 2;
  }
  if (problem.known_optimum) {
    const double gap = result.objective - *problem.known_optimum;
    const double tol = spec.epsilon * problem.c.norm() * problem.solver_R;
    if (gap > tol) {
      std::cerr << "{\"error\": \"gap " << gap << " exceeds tolerance " << tol
                << "\"}\n";
      return 1;
    }
  }
  return 0;
}

int cmd_sfm(const std::string& instance_path, const CommonFlags& flags,
            bool brute_check) {
  const double epsilon = flags.epsilon > 0.0 ? flags.epsilon : 0.02;
  const std::uint64_t seed = flags.seed_set ? flags.seed : 0;
  const SubmodularInstance instance =
      sfm_instance_from_json(read_file(instance_path));
  const SolverConfig cfg = solver_config(flags, epsilon, seed);
  const SfmResult res = minimize_decomposable(instance, epsilon, cfg);

  json j;
  j["kind"] = "sfm";
  j["final_value"] = res.value;
  j["set"] = res.set;
  j["lovasz_value"] = res.lovasz;
  j["sep_calls"] = res.counts.separation_calls;
  j["eval_calls"] = res.counts.evaluation_calls;
  j["seed"] = seed;
  int exit_code = 0;
  if (brute_check) {
    const auto [mask, value] = brute_force_min(instance);
    (void)mask;
    j["optimum_if_known"] = value;
    j["gap"] = res.value - value;
    if (res.value > value + epsilon) exit_code = 1;
  } else {
    j["optimum_if_known"] = nullptr;
    j["gap"] = nullptr;
  }
  write_artifacts(flags, trace_to_csv(res.solve_detail.events),
                  j.dump(2) + "\n");
  return exit_code;
}

int cmd_bench(const std::string& suite, int seeds, const CommonFlags& flags) {
  if (suite != "desk") {
    std::cerr << "unknown suite: " << suite << "\n";
    return 2;
  }
  std::ostringstream csv;
  csv << "kind,params,seed,epsilon,m,sep_calls,budget,ratio,gap,"
         "baseline_subgrad_calls,cpm_subgrad_calls\n";
  csv.precision(12);
  bool all_within = true;

  auto run_one = [&](const ProblemSpec& spec, const std::string& params) {
    auto counter = std::make_shared<OracleCounter>();
    const GeneratedProblem problem = generate(spec, counter);
    const SolverConfig cfg = solver_config(flags, spec.epsilon, spec.seed);
    const PipelineResult res = run_pipeline(problem, cfg, counter);
    const int m = static_cast<int>(problem.c.size());
    const double budget = oracle_budget(m, spec.epsilon);
    const double ratio = res.counts.separation_calls / budget;
    if (res.counts.separation_calls > budget) all_within = false;

    auto sub_counter = std::make_shared<OracleCounter>();
    const BaselineResult sub = baseline_subgradient(problem, 500, sub_counter);
    auto cpm_counter = std::make_shared<OracleCounter>();
    const BaselineResult cpm =
        baseline_cpm(problem, spec.epsilon, 60, spec.seed, cpm_counter);

    csv << spec.kind << ',' << params << ',' << spec.seed << ','
        << spec.epsilon << ',' << m << ',' << res.counts.separation_calls
        << ',' << budget << ',' << ratio << ',';
    if (problem.known_optimum) {
      csv << (res.objective - *problem.known_optimum);
    } else {
      csv << "nan";
    }
    csv << ',' << sub.counts.subgradient_calls << ','
        << cpm.counts.subgradient_calls << '\n';
  };

  for (int s = 0; s < seeds; ++s) {
    for (double eps : {0.02, 0.05}) {
      for (int terms : {2, 3, 4}) {
        ProblemSpec spec;
        spec.kind = "sfm";
        spec.seed = 1000 + s * 10 + terms;
        spec.epsilon = eps;
        spec.parameters_json =
            "{\"ground_set\": 4, \"n_terms\": " + std::to_string(terms) +
            ", \"max_arity\": 4}";
        run_one(spec, "terms=" + std::to_string(terms));
      }
      for (int n : {4, 6}) {
        ProblemSpec spec;
        spec.kind = "chain_quadratic";
        spec.seed = 2000 + s;
        spec.epsilon = eps;
        spec.parameters_json = "{\"n\": " + std::to_string(n) + "}";
        run_one(spec, "n=" + std::to_string(n));
      }
    }
  }

  if (flags.out_dir.empty()) {
    std::cout << csv.str();
  } else {
    std::filesystem::create_directories(flags.out_dir);
    write_file(flags.out_dir + "/bench.csv", csv.str());
  }
  return all_within ? 0 : 1;
}

int cmd_inner_ball(const std::string& body_path, double R, double r,
                   std::uint64_t seed) {
  const json spec = json::parse(read_file(body_path));
  const std::string type = spec.at("type").get<std::string>();
  SeparationOracleFn oracle;
  int dim = 0;
  if (type == "ball") {
    const auto center = spec.at("center").get<std::vector<double>>();
    dim = static_cast<int>(center.size());
    Vec c(dim);
    for (int i = 0; i < dim; ++i) c(i) = center[i];
    oracle = known_body_oracle(Ball(c, spec.at("radius").get<double>()));
  } else if (type == "box") {
    const auto lo = spec.at("lo").get<std::vector<double>>();
    const auto hi = spec.at("hi").get<std::vector<double>>();
    dim = static_cast<int>(lo.size());
    Vec l(dim), h(dim);
    for (int i = 0; i < dim; ++i) {
      l(i) = lo[i];
      h(i) = hi[i];
    }
    oracle = known_body_oracle(l, h);
  } else {
    std::cerr << "unknown body type: " << type << "\n";
    return 2;
  }
  const InnerBallResult res = find_inner_ball(oracle, dim, R, r, seed);
  json j;
  j["center"] = std::vector<double>(res.center.data(),
                                    res.center.data() + res.center.size());
  j["radius"] = res.radius;
  j["oracle_calls"] = res.oracle_calls;
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decomposable non-smooth convex optimization"};
  app.require_subcommand(1);

  CommonFlags solve_flags, sfm_flags, bench_flags;
  std::string problem_path, instance_path, body_path;
  bool brute_check = false;
  std::string suite = "desk";
  int seeds = 1;
  double ib_R = 1.0, ib_r = 0.1;
  std::uint64_t ib_seed = 0;

  CLI::App* solve_cmd = app.add_subcommand("solve", "solve a problem spec");
  solve_cmd->add_option("--problem", problem_path, "problem JSON")->required();
  add_common(solve_cmd, &solve_flags);

  CLI::App* sfm_cmd =
      app.add_subcommand("sfm", "minimize a decomposable submodular instance");
  sfm_cmd->add_option("--instance", instance_path, "instance JSON")
      ->required();
  sfm_cmd->add_flag("--brute-force-check", brute_check,
                    "verify against 2^|V| enumeration");
  add_common(sfm_cmd, &sfm_flags);

  CLI::App* bench_cmd = app.add_subcommand("bench", "run the benchmark suite");
  bench_cmd->add_option("--suite", suite, "suite name (desk)");
  bench_cmd->add_option("--seeds", seeds, "seeds per configuration");
  add_common(bench_cmd, &bench_flags);

  CLI::App* ib_cmd =
      app.add_subcommand("inner-ball", "run inner-ball finding directly");
  ib_cmd->add_option("--body", body_path, "body JSON (ball or box)")
      ->required();
  ib_cmd->add_option("--R", ib_R, "outer radius")->required();
  ib_cmd->add_option("--r", ib_r, "inner radius")->required();
  ib_cmd->add_option("--seed", ib_seed, "RNG seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed()) return cmd_solve(problem_path, solve_flags);
    if (sfm_cmd->parsed()) return cmd_sfm(instance_path, sfm_flags, brute_check);
    if (bench_cmd->parsed()) return cmd_bench(suite, seeds, bench_flags);
    if (ib_cmd->parsed()) return cmd_inner_ball(body_path, ib_R, ib_r, ib_seed);
  } catch (const std::exception& e) {
    std::cerr << "{\"error\": \"" << e.what() << "\"}\n";
    return 2;
  }
  return 2;
}
