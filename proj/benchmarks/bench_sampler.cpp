// Compares the serial reference chain kernel against the OpenMP one on a
// fixed polytope and verifies the outputs are identical while timing both.
#include <chrono>
#include <cstdio>

#include "decompopt/sampling.hpp"

using namespace decompopt;

namespace {

double time_ms(const std::function<Mat()>& fn, Mat* out) {
  const auto start = std::chrono::steady_clock::now();
  *out = fn();
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

int main() {
  const int dim = 10;
  RngStream rng(4242, 0);
  OuterBody body(Ball(Vec::Zero(dim), 1.0));
  for (int k = 0; k < 12; ++k) {
    body = body.with_cut(
        Halfspace(rng.unit_vector(dim), 0.2 + 0.5 * rng.uniform()),
        Vec::Zero(dim));
  }
  ChordFn chord = [&body](const Vec& p, const Vec& d) {
    return chord_outer(body, p, d);
  };

  std::printf("%8s %8s %12s %12s %9s %8s\n", "chains", "samples", "serial_ms",
              "parallel_ms", "speedup", "equal");
  for (int chains : {2, 4, 8}) {
    ChainConfig cfg = ChainConfig::defaults_for(dim, 7, 20000);
    cfg.chains = chains;
    Mat serial, parallel;
    const double t_ser = time_ms(
        [&] {
          return hit_and_run_sample_serial(chord, Density::uniform(dim),
                                           Vec::Zero(dim), cfg);
        },
        &serial);
    const double t_par = time_ms(
        [&] {
          return hit_and_run_sample(chord, Density::uniform(dim),
                                    Vec::Zero(dim), cfg);
        },
        &parallel);
    const bool equal = (serial - parallel).norm() == 0.0;
    std::printf("%8d %8ld %12.1f %12.1f %8.2fx %8s\n", chains, cfg.n_samples,
                t_ser, t_par, t_ser / t_par, equal ? "yes" : "NO");
    if (!equal) return 1;
  }
  return 0;
}
