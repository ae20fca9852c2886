#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdlib>
#include <functional>
#include <string>

// Shared test oracles. These stay independent of the implementation paths
// they check: finite differences for gradients, naive sums for stabilized
// ones.

namespace testutil {

/// Central finite differences with step 1e-5 (1 + |x_i|).
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * (1.0 + std::abs(x[i]));
    Eigen::VectorXd hi = x, lo = x;
    hi[i] += h;
    lo[i] -= h;
    g[i] = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

/// Worst per-component relative error |fd - g| / max(1, |g|).
inline double gradient_rel_error(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                                 const Eigen::VectorXd& x) {
  const Eigen::VectorXd g = grad(x);
  const Eigen::VectorXd fd = fd_gradient(f, x);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    worst = std::max(worst, std::abs(fd[i] - g[i]) / std::max(1.0, std::abs(g[i])));
  return worst;
}

inline std::string data_dir() {
  if (const char* env = std::getenv("PSEUDOEXT_DATA_DIR")) return env;
  return "data";
}

}  // namespace testutil
