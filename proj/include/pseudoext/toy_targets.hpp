#pragma once

#include "pseudoext/target.hpp"

namespace pseudoext {

/// Warped (banana-shaped) Gaussian: x1 ~ N(0, nu), x2 | x1 ~ N(b(x1^2 - nu), 1).
/// Defaults b = 0.1, nu = 100.
TargetDensity build_banana_target(double b = 0.1, double nu = 100.0);

/// Ridge density concentrated on the petal curve radius = r + A cos(omega * theta):
/// phi(x) = (|x| - r - A cos(omega * atan2(x2, x1)))^2 / (2 sigma^2).
/// The gradient is zero at the origin by convention. Defaults r=10, A=6,
/// omega=6, sigma=1.
TargetDensity build_flower_target(double r = 10.0, double amplitude = 6.0,
                                  double omega = 6.0, double sigma = 1.0);

}  // namespace pseudoext
