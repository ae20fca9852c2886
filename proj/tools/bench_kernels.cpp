// Benchmark comparing the serial reference kernels against the OpenMP ones.

#include <omp.h>

#include <cstdio>

#include "pseudoext/baselines.hpp"
#include "pseudoext/boltzmann.hpp"
#include "pseudoext/harness.hpp"

using namespace pseudoext;

int main() {
  omp_set_num_threads(configured_thread_count());
  std::printf("threads: %d\n", configured_thread_count());

  std::printf("\nBoltzmann spin enumeration (log Z_b + first/second moments)\n");
  std::printf("%6s %12s %12s %10s %12s\n", "d_b", "serial s", "parallel s", "speedup",
              "max |diff|");
  for (int d_b : {12, 14, 16, 18}) {
    const BoltzmannRelaxation relax = generate_relaxation(17, d_b);
    double t0 = omp_get_wtime();
    const SpinMoments ref = enumerate_spin_moments_serial(relax.coupling, relax.bias);
    const double serial = omp_get_wtime() - t0;
    t0 = omp_get_wtime();
    const SpinMoments fast = enumerate_spin_moments(relax.coupling, relax.bias);
    const double parallel = omp_get_wtime() - t0;
    const double diff = std::max(std::abs(ref.log_zb - fast.log_zb),
                                 (ref.second_s - fast.second_s).cwiseAbs().maxCoeff());
    std::printf("%6d %12.4f %12.4f %9.2fx %12.3e\n", d_b, serial, parallel, serial / parallel,
                diff);
  }

  std::printf("\nAIS particles (Gaussian target, 200-rung ladder)\n");
  MixtureSpec spec;
  spec.means = {Eigen::Vector2d(3.0, -1.0)};
  spec.weights = Eigen::VectorXd::Ones(1);
  spec.variances = Eigen::VectorXd::Ones(1);
  const TargetDensity target = build_mixture_target(spec);
  const auto ladder = TemperatureLadder::uniform(200, 0.005);
  HmcConfig kernel;
  kernel.step_size = 0.25;
  kernel.num_leapfrog = 5;
  for (long particles : {200L, 1000L}) {
    const double t0 = omp_get_wtime();
    const WeightedSampleSet set = annealed_importance_sampling(
        target, standard_normal_base(2), ladder, kernel, particles, 1, 99);
    const double secs = omp_get_wtime() - t0;
    std::printf("%6ld particles: %8.3f s   logZ estimate %.4f\n", particles, secs,
                log_normalizing_estimate(set));
  }
  return 0;
}
