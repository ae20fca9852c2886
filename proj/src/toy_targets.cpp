#include "pseudoext/toy_targets.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pseudoext {

TargetDensity build_banana_target(double b, double nu) {
  if (nu <= 0.0) throw std::invalid_argument("banana: nu must be positive");
  const double log_norm =
      0.5 * std::log(2.0 * std::numbers::pi * nu) + 0.5 * std::log(2.0 * std::numbers::pi);
  TargetDensity t;
  t.dim = 2;
  t.label = "banana";
  t.potential = [b, nu, log_norm](const Eigen::VectorXd& x) {
    const double warp = x[1] - b * (x[0] * x[0] - nu);
    return x[0] * x[0] / (2.0 * nu) + 0.5 * warp * warp + log_norm;
  };
  t.gradient = [b, nu](const Eigen::VectorXd& x) {
    const double warp = x[1] - b * (x[0] * x[0] - nu);
    Eigen::VectorXd g(2);
    g[0] = x[0] / nu - 2.0 * b * x[0] * warp;
    g[1] = warp;
    return g;
  };
  t.potential_gradient = [b, nu, log_norm](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double warp = x[1] - b * (x[0] * x[0] - nu);
    g.resize(2);
    g[0] = x[0] / nu - 2.0 * b * x[0] * warp;
    g[1] = warp;
    return x[0] * x[0] / (2.0 * nu) + 0.5 * warp * warp + log_norm;
  };
  return t;
}

TargetDensity build_flower_target(double r, double amplitude, double omega, double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("flower: sigma must be positive");
  const double inv_var = 1.0 / (sigma * sigma);
  TargetDensity t;
  t.dim = 2;
  t.label = "flower";
  t.potential = [r, amplitude, omega, inv_var](const Eigen::VectorXd& x) {
    const double rho = std::hypot(x[0], x[1]);
    const double theta = std::atan2(x[1], x[0]);
    const double dev = rho - r - amplitude * std::cos(omega * theta);
    return 0.5 * inv_var * dev * dev;
  };
  t.gradient = [r, amplitude, omega, inv_var](const Eigen::VectorXd& x) {
    const double rho = std::hypot(x[0], x[1]);
    if (rho == 0.0) return Eigen::VectorXd(Eigen::VectorXd::Zero(2));
    const double theta = std::atan2(x[1], x[0]);
    const double dev = rho - r - amplitude * std::cos(omega * theta);
    // grad dev = grad rho + A omega sin(omega theta) grad theta
    const double ring = amplitude * omega * std::sin(omega * theta) / (rho * rho);
    Eigen::VectorXd g(2);
    g[0] = inv_var * dev * (x[0] / rho - ring * x[1]);
    g[1] = inv_var * dev * (x[1] / rho + ring * x[0]);
    return g;
  };
  return t;
}

}  // namespace pseudoext
