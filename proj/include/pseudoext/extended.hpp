#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

#include "pseudoext/target.hpp"

namespace pseudoext {

/// Instrumental density q(x) propto exp(-delta(x)); only pointwise
/// evaluation is ever needed, never sampling.
struct InstrumentalDistribution {
  PotentialFn delta;
  GradFn grad_delta;
  std::string label;
};

/// Normalized isotropic Gaussian instrumental N(mean, variance I).
InstrumentalDistribution gaussian_instrumental(const Eigen::VectorXd& mean, double variance);

/// q identical to the target itself (delta = phi).
InstrumentalDistribution instrumental_from_target(const TargetDensity& target);

/// A point in the pseudo-extended space: N pseudo-samples, plus (for the
/// tempered variant) N unconstrained temperatures with beta_i = sigmoid(u_i).
struct ExtendedState {
  std::vector<Eigen::VectorXd> xs;
  std::vector<double> us;  // empty for the plain variant

  int pseudo_count() const { return static_cast<int>(xs.size()); }
  bool tempered() const { return !us.empty(); }
  std::vector<double> betas() const;
};

/// Flat packing for the HMC kernel: [x_1 .. x_N] or [x_1 .. x_N, u_1 .. u_N].
Eigen::VectorXd pack_state(const ExtendedState& state);
ExtendedState unpack_plain(const Eigen::VectorXd& flat, int pseudo, int dim);
ExtendedState unpack_tempered(const Eigen::VectorXd& flat, int pseudo, int dim);

/// Optional beta distributions for the tempered target: the target pi(beta)
/// and the instrumental weight g(beta), both given as log-density plus its
/// beta-derivative. Defaults are flat (log density 0).
struct BetaFunction {
  std::function<double(double)> log_value;
  std::function<double(double)> dlog_value;
};

/// Composite tempered pseudo-extended density built over a base target, with
/// q(x, beta) propto exp(-beta phi(x)) g(beta) and the logit-transform
/// Jacobian for beta folded in.
struct TemperedExtendedTarget {
  TargetDensity base;
  int pseudo_count = 2;
  BetaFunction beta_prior;   // pi(beta), flat by default
  BetaFunction beta_weight;  // g(beta), flat by default
};

/// log pi^N(x_1:N) up to constants:
/// logsumexp_i(-phi(x_i) + delta(x_i)) - sum_i delta(x_i).
double extended_log_density(const ExtendedState& state, const TargetDensity& target,
                            const InstrumentalDistribution& q);

/// Gradient of extended_log_density over the N*d flat coordinates.
Eigen::VectorXd extended_gradient(const ExtendedState& state, const TargetDensity& target,
                                  const InstrumentalDistribution& q);

/// log pi^N(x_1:N, u_1:N) up to constants, including the logit Jacobian.
double tempered_log_density(const ExtendedState& state, const TemperedExtendedTarget& target);

/// Gradient over the N*(d+1) flat coordinates (x blocks then u block).
Eigen::VectorXd tempered_gradient(const ExtendedState& state,
                                  const TemperedExtendedTarget& target);

/// Theorem-1 post-hoc log-weights, unnormalized:
/// plain variant log w_i = -phi(x_i) + delta(x_i).
Eigen::VectorXd posthoc_log_weights(const ExtendedState& state, const TargetDensity& target,
                                    const InstrumentalDistribution& q);

/// Tempered variant log w_i = -phi + log pi(beta_i) + beta_i phi - log g(beta_i).
Eigen::VectorXd posthoc_log_weights(const ExtendedState& state,
                                    const TemperedExtendedTarget& target);

/// Flat-vector density/gradient callbacks for the HMC kernel.
using DensityFn = std::function<double(const Eigen::VectorXd&)>;
using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

std::pair<DensityFn, GradientFn> make_extended_callbacks(const TargetDensity& target,
                                                         const InstrumentalDistribution& q,
                                                         int pseudo);
std::pair<DensityFn, GradientFn> make_tempered_callbacks(const TemperedExtendedTarget& target);

/// Fused log-density-with-gradient forms; one pass over the base target per
/// pseudo-sample. These drive the samplers.
using FlatValueGradFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;
FlatValueGradFn make_extended_valuegrad(const TargetDensity& target,
                                        const InstrumentalDistribution& q, int pseudo);
FlatValueGradFn make_tempered_valuegrad(const TemperedExtendedTarget& target);

}  // namespace pseudoext
