#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <numbers>

namespace pseudoext {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// log(1 + exp(a)) without overflow.
inline double log1pexp(double a) {
  if (a > 35.0) return a;
  if (a < -35.0) return std::exp(a);
  return std::log1p(std::exp(a));
}

/// log cosh(a) = |a| + log(1 + exp(-2|a|)) - log 2, safe for large |a|.
inline double log_cosh(double a) {
  const double t = std::abs(a);
  return t + log1pexp(-2.0 * t) - std::numbers::ln2;
}

inline double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// log(beta(1-beta)) for beta = sigmoid(u); the logit-transform Jacobian.
inline double log_sigmoid_jacobian(double u) {
  return -log1pexp(u) - log1pexp(-u);
}

inline double logsumexp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

/// exp(v - logsumexp(v)); tolerates -inf entries.
inline Eigen::VectorXd softmax_from_log(const Eigen::VectorXd& v) {
  const double lse = logsumexp(v);
  Eigen::VectorXd w(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) w[i] = std::exp(v[i] - lse);
  return w;
}

}  // namespace pseudoext
