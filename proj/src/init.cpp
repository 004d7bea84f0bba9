#include "decompopt/init.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "decompopt/sampling.hpp"

namespace decompopt {

Vec min_norm_solve(const Mat& A, const Vec& rhs) {
  if (A.rows() != rhs.size()) {
    throw std::invalid_argument("min_norm_solve: shape mismatch");
  }
  if (A.rows() == 0) return Vec::Zero(A.cols());
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double rank_tol = 1e-10 * std::max(1.0, svd.singularValues()(0));
  Vec ub = svd.matrixU().transpose() * rhs;
  Vec y = Vec::Zero(svd.matrixV().cols());
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()(i) > rank_tol) {
      y(i) = ub(i) / svd.singularValues()(i);
    }
  }
  const Vec sol = svd.matrixV() * y;
  if ((A * sol - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) {
    throw std::invalid_argument(
        "min_norm_solve: inconsistent system (problem infeasible as posed)");
  }
  return sol;
}

namespace {

// Deepest retained sample w.r.t. the newest cut; used to restart chains after
// the previous start may have been cut away.
bool pick_interior_start(const Mat& samples, const OuterBody& body,
                         Vec* start) {
  double best_margin = -1.0;
  for (long i = 0; i < samples.rows(); ++i) {
    const Vec p = samples.row(i).transpose();
    if (!body.contains(p, 1e-12)) continue;
    double margin = body.bounding_ball().radius -
                    (p - body.bounding_ball().center).norm();
    for (const Halfspace& h : body.cuts()) {
      margin = std::min(margin, -h.violation(p));
    }
    if (margin > best_margin) {
      best_margin = margin;
      *start = p;
    }
  }
  return best_margin > 0.0;
}

}  // namespace

InnerBallResult find_inner_ball(const SeparationOracleFn& oracle, int d,
                                double R, double r, std::uint64_t seed) {
  if (d < 1 || !(R > 0.0) || !(r > 0.0) || r > R) {
    throw std::invalid_argument("find_inner_ball: bad geometry parameters");
  }
  const long budget = static_cast<long>(
      std::ceil(200.0 * d * std::max(1.0, std::log(R / r))));
  long calls = 0;
  auto ask = [&](const Vec& q) {
    if (++calls > budget) {
      throw std::runtime_error(
          "find_inner_ball: oracle budget exhausted (inner-radius assumption "
          "violated?)");
    }
    return oracle(q);
  };

  OuterBody body(Ball(Vec::Zero(d), R));
  Vec start = Vec::Zero(d);
  RngStream rng(seed, 0xB411);
  const double sample_radius = r / (6.0 * d);
  const double spoke = r / (6.0 * std::pow(double(d), 3.0));
  const double inscribed = r / (6.0 * std::pow(double(d), 3.5));

  for (;;) {
    ChainConfig cc = ChainConfig::defaults_for(d, rng.uniform() * 1e18, 2000);
    ChordFn chord = [&body](const Vec& p, const Vec& dir) {
      return chord_outer(body, p, dir);
    };
    const Mat samples =
        hit_and_run_sample(chord, Density::uniform(d), start, cc);
    const Vec centroid = samples.colwise().mean();

    bool spokes_checked = false;
    for (;;) {
      // u uniform over B(centroid, r/(6d)).
      const Vec u = centroid + sample_radius *
                                   std::pow(rng.uniform(), 1.0 / d) *
                                   rng.unit_vector(d);
      const SeparationResult res = ask(u);
      if (!res.member) {
        body = body.with_cut_unchecked(*res.cut);
        if (!body.contains(start, 1e-12) &&
            !pick_interior_start(samples, body, &start)) {
          throw std::runtime_error(
              "find_inner_ball: no interior point survived the cut");
        }
        break;  // re-estimate the centroid of the shrunk body
      }
      if (!spokes_checked) {
        spokes_checked = true;
        bool all_in = true;
        for (int i = 0; i < d && all_in; ++i) {
          for (double sgn : {1.0, -1.0}) {
            Vec p = centroid;
            p(i) += sgn * spoke;
            if (!ask(p).member) {
              all_in = false;
              break;
            }
          }
        }
        if (all_in) {
          return {centroid, inscribed, calls};
        }
      }
      // u was a member but the spoke set is not inside: redraw u (fresh
      // sample, same centroid) until one lands outside and yields a cut.
    }
  }
}

Phase1Result phase1_initialize(const Phase1Input& input,
                               const Phase1Config& cfg) {
  const int n = static_cast<int>(input.inner_balls.size());
  if (n == 0 || input.bounding_balls.size() != input.inner_balls.size() ||
      input.oracles.size() != input.inner_balls.size()) {
    throw std::invalid_argument("phase1_initialize: inconsistent inputs");
  }
  int m = 0;
  for (const Ball& b : input.inner_balls) m += b.dim();
  if (input.A.cols() != m || input.c.size() != m) {
    throw std::invalid_argument("phase1_initialize: shape mismatch");
  }

  Vec z(m);
  {
    int at = 0;
    for (const Ball& b : input.inner_balls) {
      z.segment(at, b.dim()) = b.center;
      at += b.dim();
    }
  }

  Phase1Result out;
  out.kin.reserve(n);
  out.kout.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.kin.emplace_back(input.inner_balls[i]);
    out.kout.emplace_back(input.bounding_balls[i]);
  }

  const Vec y = min_norm_solve(input.A, input.b - input.A * z);
  out.x1 = z;
  if (y.lpNorm<Eigen::Infinity>() <= 1e-12) {
    out.x2 = Vec::Zero(m);
    out.x3 = Vec::Zero(m);
    out.x_in = z;
    out.solver_ran = false;
    return out;
  }

  // Modified program over (x1, x2, x3) with x2, x3 in boxes [0, S]^m.
  const double c_norm = std::max(input.c.norm(), 1e-30);
  double max_R = 0.0;
  for (int i = 0; i < n; ++i) {
    max_R = std::max(max_R, input.bounding_balls[i].center.norm() +
                                input.bounding_balls[i].radius);
  }
  double min_r = std::numeric_limits<double>::infinity();
  for (const Ball& b : input.inner_balls) min_r = std::min(min_r, b.radius);

  const double s =
      cfg.s > 0.0 ? cfg.s
                  : 65536.0 * std::pow(double(m), 2.5) * max_R /
                        (min_r * cfg.epsilon);
  const double S = 8.0 * std::max(y.lpNorm<Eigen::Infinity>(), 1e-3 * max_R);
  const double shift = S / 8.0;

  SolveInput aux;
  aux.c.resize(3 * m);
  aux.c.head(m) = input.c;
  aux.c.segment(m, 2 * m).setConstant(s * c_norm / std::sqrt(double(m)));
  Mat A_bar(input.A.rows(), 3 * m);
  A_bar << input.A, input.A, -input.A;
  aux.sub = AffineSubspace::from_system(A_bar, input.b);

  aux.x_initial.resize(3 * m);
  aux.x_initial.head(m) = z;
  for (int k = 0; k < m; ++k) {
    aux.x_initial(m + k) = std::max(y(k), 0.0) + shift;
    aux.x_initial(2 * m + k) = std::max(-y(k), 0.0) + shift;
  }

  for (int i = 0; i < n; ++i) {
    aux.blocks.push_back(BlockSetup{input.oracles[i],
                                    InnerBody(input.inner_balls[i]),
                                    OuterBody(input.bounding_balls[i])});
  }
  const Vec lo1 = Vec::Zero(1);
  const Vec hi1 = Vec::Constant(1, S);
  for (int k = 0; k < 2 * m; ++k) {
    const double v = aux.x_initial(m + k);
    const double rad = 0.9 * std::min(v, S - v);
    Vec center1 = Vec::Constant(1, v);
    aux.blocks.push_back(BlockSetup{
        known_body_oracle(lo1, hi1), InnerBody(Ball(center1, rad)),
        OuterBody(Ball(Vec::Constant(1, S / 2.0), S / 2.0))});
  }

  SolverConfig scfg = cfg.solver;
  scfg.R = std::max(max_R, S);
  scfg.r = std::min(min_r, 0.9 * shift);
  const int n_bar = n + 2 * m;
  const double c_bar_norm = aux.c.norm();
  scfg.epsilon =
      cfg.epsilon_bar > 0.0
          ? cfg.epsilon_bar
          : cfg.epsilon / (6.0 * std::sqrt(double(n_bar)) * s);
  scfg.epsilon = std::min(scfg.epsilon, 0.49);
  if (cfg.t_init_ratio > 0.0) {
    const double t_end =
        8.0 * (3.0 * m) / (scfg.epsilon * c_bar_norm * scfg.R);
    scfg.t_init = t_end / cfg.t_init_ratio;
  }

  out.penalty_s = s;
  out.nu_bar = 3.0 * m;
  out.gamma_bound = scfg.epsilon * c_bar_norm * scfg.R;
  out.aux = solve(aux, scfg, input.counter);
  out.solver_ran = true;
  out.x1 = out.aux.x.head(m);
  out.x2 = out.aux.x.segment(m, m);
  out.x3 = out.aux.x.tail(m);
  out.x_in = out.x1 + out.x2 - out.x3;

  const double resid = (input.A * out.x_in - input.b).norm();
  if (resid > 1e-9 * (1.0 + input.b.norm())) {
    std::ostringstream os;
    os << "phase1_initialize: residual " << resid << " exceeds tolerance";
    throw std::runtime_error(os.str());
  }
  return out;
}

}  // namespace decompopt
