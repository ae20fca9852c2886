#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>

namespace pseudoext {

using PotentialFn = std::function<double(const Eigen::VectorXd&)>;
using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using PotentialGradFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// A differentiable unnormalized density on R^dim, stored as the potential
/// phi(x) = -log gamma(x) (nats) and its hand-derived gradient. Builders may
/// also fill the fused potential_gradient form, which shares work between
/// the two; samplers prefer it when present.
///
/// TargetDensity values are immutable after construction and safe to share
/// across concurrent chains; evaluation is reentrant.
struct TargetDensity {
  int dim = 0;
  PotentialFn potential;
  GradFn gradient;
  PotentialGradFn potential_gradient;  // optional fused path
  std::string label;
};

inline double eval_potential_gradient(const TargetDensity& t, const Eigen::VectorXd& x,
                                      Eigen::VectorXd& grad) {
  if (t.potential_gradient) return t.potential_gradient(x, grad);
  grad = t.gradient(x);
  return t.potential(x);
}

}  // namespace pseudoext
