#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>

#include "pseudoext/hmc.hpp"
#include "pseudoext/sample_set.hpp"
#include "pseudoext/target.hpp"

namespace pseudoext {

/// Ascending inverse temperatures with beta_T = 1. For PT/ST the first rung
/// is clamped away from zero (beta_1 = 0 makes the hottest density improper
/// on R^d); AIS anchors at a proper base distribution instead.
struct TemperatureLadder {
  Eigen::VectorXd betas;

  long size() const { return betas.size(); }
  void validate() const;
  static TemperatureLadder uniform(long rungs, double beta_min = 0.01);
  static TemperatureLadder geometric(long rungs, double beta_min = 0.01);
};

/// Log acceptance probability for exchanging states between neighboring
/// rungs: (beta_hi - beta_lo) * (phi(x_hi) - phi(x_lo)).
double swap_log_accept(double beta_lo, double beta_hi, double phi_lo, double phi_hi);

/// Replica exchange: one HMC chain per rung on exp(-beta_t phi), neighbor
/// swaps every swap_every iterations (even pairs then odd pairs, fixed
/// order). Returns the beta = 1 chain with unit weights. Rungs advance
/// concurrently between swap rounds.
WeightedSampleSet parallel_tempering(const TargetDensity& target, const TemperatureLadder& ladder,
                                     const HmcConfig& kernel, long iters, long warmup,
                                     long swap_every, std::uint64_t seed);

/// Single chain over (x, rung): alternates an HMC move at beta_r with a
/// Metropolis rung move r -> r+-1 weighted by the pseudo-prior. Returns the
/// beta = 1 visits; throws (with a rung-occupancy report) if there are none.
WeightedSampleSet simulated_tempering(const TargetDensity& target, const TemperatureLadder& ladder,
                                      const Eigen::VectorXd& pseudo_prior, long iters, long warmup,
                                      const HmcConfig& kernel, std::uint64_t seed);

/// Exactly sampleable base distribution for AIS.
struct SampleableBase {
  PotentialFn delta;
  GradFn grad_delta;
  std::function<Eigen::VectorXd(std::mt19937_64&)> draw;
};

SampleableBase standard_normal_base(int dim);

/// Annealed importance sampling along the geometric path
/// f_t propto exp(-(1-beta_t) delta_base - beta_t phi). Weight increments
/// accumulate (beta_{t+1} - beta_t)(delta_base(x) - phi(x)) in the standard
/// telescoping form; kernel_steps fixed-step HMC transitions are applied per
/// rung (0 skips them). Particles run concurrently; non-finite particles are
/// dropped and counted. Output is one row of n_particles weighted draws.
WeightedSampleSet annealed_importance_sampling(const TargetDensity& target,
                                               const SampleableBase& base,
                                               const TemperatureLadder& ladder,
                                               const HmcConfig& kernel, long n_particles,
                                               int kernel_steps, std::uint64_t seed);

}  // namespace pseudoext
