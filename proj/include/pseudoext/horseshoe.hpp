#pragma once

#include <Eigen/Core>

#include <cstdint>

#include "pseudoext/target.hpp"

namespace pseudoext {

/// Logistic regression with a regularized horseshoe prior, parameterized on
/// the unconstrained space (x_1..x_p, log lambda_1..log lambda_p, log tau),
/// so dim = 2p + 1. The likelihood uses Pr(Y=1) = sigmoid(-z^T x); priors are
/// x_j | lambda_j, tau ~ N(0, tau^2 lt_j^2) with lt_j^2 = c^2 lambda_j^2 /
/// (c^2 + tau^2 lambda_j^2), lambda_j ~ C+(0,1), tau ~ C+(0,1). Log-Jacobian
/// terms for the log transforms are folded into the potential.
struct HorseshoeModel {
  Eigen::MatrixXd covariates;  // n x p
  Eigen::VectorXi responses;   // n entries in {0,1}
  double slab_scale = 2.0;     // c

  int n() const { return static_cast<int>(covariates.rows()); }
  int p() const { return static_cast<int>(covariates.cols()); }
  int dim() const { return 2 * p() + 1; }
  void validate() const;  // throws on z/y size mismatch or labels outside {0,1}
};

TargetDensity build_horseshoe_target(const HorseshoeModel& model);

/// Synthetic dataset with the first n_active coefficients at +-magnitude and
/// the rest zero; covariates standard normal, labels drawn from the model's
/// own likelihood. Deterministic given seed.
HorseshoeModel make_synthetic_horseshoe(int n, int p, int n_active, double magnitude,
                                        std::uint64_t seed, double slab_scale = 2.0);

}  // namespace pseudoext
