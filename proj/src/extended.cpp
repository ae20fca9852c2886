#include "pseudoext/extended.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pseudoext/numerics.hpp"

namespace pseudoext {

InstrumentalDistribution gaussian_instrumental(const Eigen::VectorXd& mean, double variance) {
  if (variance <= 0.0) throw std::invalid_argument("instrumental: variance must be positive");
  const double log_norm =
      0.5 * static_cast<double>(mean.size()) * std::log(2.0 * std::numbers::pi * variance);
  InstrumentalDistribution q;
  q.label = "gaussian";
  q.delta = [mean, variance, log_norm](const Eigen::VectorXd& x) {
    return (x - mean).squaredNorm() / (2.0 * variance) + log_norm;
  };
  q.grad_delta = [mean, variance](const Eigen::VectorXd& x) {
    return ((x - mean) / variance).eval();
  };
  return q;
}

InstrumentalDistribution instrumental_from_target(const TargetDensity& target) {
  InstrumentalDistribution q;
  q.label = "target";
  q.delta = target.potential;
  q.grad_delta = target.gradient;
  return q;
}

std::vector<double> ExtendedState::betas() const {
  std::vector<double> b(us.size());
  for (std::size_t i = 0; i < us.size(); ++i) b[i] = sigmoid(us[i]);
  return b;
}

Eigen::VectorXd pack_state(const ExtendedState& state) {
  const int n = state.pseudo_count();
  const auto d = state.xs.empty() ? 0 : state.xs.front().size();
  Eigen::VectorXd flat(n * d + static_cast<Eigen::Index>(state.us.size()));
  for (int i = 0; i < n; ++i) flat.segment(i * d, d) = state.xs[static_cast<std::size_t>(i)];
  for (std::size_t i = 0; i < state.us.size(); ++i)
    flat[n * d + static_cast<Eigen::Index>(i)] = state.us[i];
  return flat;
}

ExtendedState unpack_plain(const Eigen::VectorXd& flat, int pseudo, int dim) {
  if (flat.size() != static_cast<Eigen::Index>(pseudo) * dim)
    throw std::invalid_argument("extended: flat state has wrong length");
  ExtendedState s;
  s.xs.reserve(static_cast<std::size_t>(pseudo));
  for (int i = 0; i < pseudo; ++i) s.xs.emplace_back(flat.segment(i * dim, dim));
  return s;
}

ExtendedState unpack_tempered(const Eigen::VectorXd& flat, int pseudo, int dim) {
  if (flat.size() != static_cast<Eigen::Index>(pseudo) * (dim + 1))
    throw std::invalid_argument("extended: flat state has wrong length");
  ExtendedState s;
  s.xs.reserve(static_cast<std::size_t>(pseudo));
  for (int i = 0; i < pseudo; ++i) s.xs.emplace_back(flat.segment(i * dim, dim));
  s.us.assign(flat.data() + pseudo * dim, flat.data() + flat.size());
  return s;
}

namespace {

double beta_log(const BetaFunction& f, double beta) {
  return f.log_value ? f.log_value(beta) : 0.0;
}

double beta_dlog(const BetaFunction& f, double beta) {
  return f.dlog_value ? f.dlog_value(beta) : 0.0;
}

}  // namespace

double extended_log_density(const ExtendedState& state, const TargetDensity& target,
                            const InstrumentalDistribution& q) {
  const int n = state.pseudo_count();
  Eigen::VectorXd a(n);
  double sum_delta = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& x = state.xs[static_cast<std::size_t>(i)];
    if (x.size() != target.dim) throw std::invalid_argument("extended: dimension mismatch");
    const double del = q.delta(x);
    a[i] = -target.potential(x) + del;
    sum_delta += del;
  }
  return logsumexp(a) - sum_delta;
}

Eigen::VectorXd extended_gradient(const ExtendedState& state, const TargetDensity& target,
                                  const InstrumentalDistribution& q) {
  const int n = state.pseudo_count();
  const int d = target.dim;
  Eigen::VectorXd a(n);
  std::vector<Eigen::VectorXd> grad_phi(static_cast<std::size_t>(n)),
      grad_del(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& x = state.xs[static_cast<std::size_t>(i)];
    a[i] = -target.potential(x) + q.delta(x);
    grad_phi[static_cast<std::size_t>(i)] = target.gradient(x);
    grad_del[static_cast<std::size_t>(i)] = q.grad_delta(x);
  }
  const Eigen::VectorXd w = softmax_from_log(a);
  Eigen::VectorXd g(n * d);
  for (int i = 0; i < n; ++i) {
    const auto& gp = grad_phi[static_cast<std::size_t>(i)];
    const auto& gd = grad_del[static_cast<std::size_t>(i)];
    g.segment(i * d, d) = w[i] * (-gp + gd) - gd;
  }
  return g;
}

double tempered_log_density(const ExtendedState& state, const TemperedExtendedTarget& target) {
  if (!state.tempered())
    throw std::invalid_argument("extended: tempered density needs temperatures");
  const int n = state.pseudo_count();
  Eigen::VectorXd a(n);
  double tail = 0.0;
  for (int i = 0; i < n; ++i) {
    const double phi = target.base.potential(state.xs[static_cast<std::size_t>(i)]);
    const double u = state.us[static_cast<std::size_t>(i)];
    const double beta = sigmoid(u);
    const double log_g = beta_log(target.beta_weight, beta);
    a[i] = -phi + beta_log(target.beta_prior, beta) + beta * phi - log_g;
    tail += -beta * phi + log_g + log_sigmoid_jacobian(u);
  }
  return logsumexp(a) + tail;
}

Eigen::VectorXd tempered_gradient(const ExtendedState& state,
                                  const TemperedExtendedTarget& target) {
  if (!state.tempered())
    throw std::invalid_argument("extended: tempered gradient needs temperatures");
  const int n = state.pseudo_count();
  const int d = target.base.dim;
  Eigen::VectorXd a(n), phis(n), betas(n);
  std::vector<Eigen::VectorXd> grad_phi(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& x = state.xs[static_cast<std::size_t>(i)];
    phis[i] = target.base.potential(x);
    grad_phi[static_cast<std::size_t>(i)] = target.base.gradient(x);
    betas[i] = sigmoid(state.us[static_cast<std::size_t>(i)]);
    a[i] = -phis[i] + beta_log(target.beta_prior, betas[i]) + betas[i] * phis[i] -
           beta_log(target.beta_weight, betas[i]);
  }
  const Eigen::VectorXd w = softmax_from_log(a);
  Eigen::VectorXd g(n * (d + 1));
  for (int i = 0; i < n; ++i) {
    const double beta = betas[i];
    // x block: w_i * grad[-(1-beta) phi] + grad[-beta phi]
    g.segment(i * d, d) =
        (w[i] * (beta - 1.0) - beta) * grad_phi[static_cast<std::size_t>(i)];
    // u block via d beta / d u = beta (1 - beta), plus the Jacobian derivative.
    const double dg = beta_dlog(target.beta_weight, beta);
    const double da_dbeta = phis[i] + beta_dlog(target.beta_prior, beta) - dg;
    const double dtail_dbeta = -phis[i] + dg;
    g[n * d + i] = beta * (1.0 - beta) * (w[i] * da_dbeta + dtail_dbeta) + (1.0 - 2.0 * beta);
  }
  return g;
}

Eigen::VectorXd posthoc_log_weights(const ExtendedState& state, const TargetDensity& target,
                                    const InstrumentalDistribution& q) {
  const int n = state.pseudo_count();
  Eigen::VectorXd logw(n);
  for (int i = 0; i < n; ++i) {
    const auto& x = state.xs[static_cast<std::size_t>(i)];
    logw[i] = -target.potential(x) + q.delta(x);
  }
  return logw;
}

Eigen::VectorXd posthoc_log_weights(const ExtendedState& state,
                                    const TemperedExtendedTarget& target) {
  if (!state.tempered())
    throw std::invalid_argument("extended: tempered weights need temperatures");
  const int n = state.pseudo_count();
  Eigen::VectorXd logw(n);
  for (int i = 0; i < n; ++i) {
    const double phi = target.base.potential(state.xs[static_cast<std::size_t>(i)]);
    const double beta = sigmoid(state.us[static_cast<std::size_t>(i)]);
    logw[i] = -phi + beta_log(target.beta_prior, beta) + beta * phi -
              beta_log(target.beta_weight, beta);
  }
  return logw;
}

std::pair<DensityFn, GradientFn> make_extended_callbacks(const TargetDensity& target,
                                                         const InstrumentalDistribution& q,
                                                         int pseudo) {
  const int dim = target.dim;
  DensityFn dens = [target, q, pseudo, dim](const Eigen::VectorXd& flat) {
    return extended_log_density(unpack_plain(flat, pseudo, dim), target, q);
  };
  GradientFn grad = [target, q, pseudo, dim](const Eigen::VectorXd& flat) {
    return extended_gradient(unpack_plain(flat, pseudo, dim), target, q);
  };
  return {std::move(dens), std::move(grad)};
}

std::pair<DensityFn, GradientFn> make_tempered_callbacks(const TemperedExtendedTarget& target) {
  const int dim = target.base.dim;
  const int pseudo = target.pseudo_count;
  DensityFn dens = [target, pseudo, dim](const Eigen::VectorXd& flat) {
    return tempered_log_density(unpack_tempered(flat, pseudo, dim), target);
  };
  GradientFn grad = [target, pseudo, dim](const Eigen::VectorXd& flat) {
    return tempered_gradient(unpack_tempered(flat, pseudo, dim), target);
  };
  return {std::move(dens), std::move(grad)};
}

FlatValueGradFn make_extended_valuegrad(const TargetDensity& target,
                                        const InstrumentalDistribution& q, int pseudo) {
  const int dim = target.dim;
  return [target, q, pseudo, dim](const Eigen::VectorXd& flat, Eigen::VectorXd& grad) {
    Eigen::VectorXd a(pseudo);
    double sum_delta = 0.0;
    std::vector<Eigen::VectorXd> grad_phi(static_cast<std::size_t>(pseudo)),
        grad_del(static_cast<std::size_t>(pseudo));
    for (int i = 0; i < pseudo; ++i) {
      const Eigen::VectorXd x = flat.segment(i * dim, dim);
      const double phi = eval_potential_gradient(target, x, grad_phi[static_cast<std::size_t>(i)]);
      const double del = q.delta(x);
      grad_del[static_cast<std::size_t>(i)] = q.grad_delta(x);
      a[i] = -phi + del;
      sum_delta += del;
    }
    const double lse = logsumexp(a);
    grad.resize(flat.size());
    for (int i = 0; i < pseudo; ++i) {
      const double w = std::exp(a[i] - lse);
      grad.segment(i * dim, dim) =
          w * (-grad_phi[static_cast<std::size_t>(i)] + grad_del[static_cast<std::size_t>(i)]) -
          grad_del[static_cast<std::size_t>(i)];
    }
    return lse - sum_delta;
  };
}

FlatValueGradFn make_tempered_valuegrad(const TemperedExtendedTarget& target) {
  const int dim = target.base.dim;
  const int pseudo = target.pseudo_count;
  return [target, pseudo, dim](const Eigen::VectorXd& flat, Eigen::VectorXd& grad) {
    Eigen::VectorXd a(pseudo), phis(pseudo), betas(pseudo);
    std::vector<Eigen::VectorXd> grad_phi(static_cast<std::size_t>(pseudo));
    double tail = 0.0;
    for (int i = 0; i < pseudo; ++i) {
      const Eigen::VectorXd x = flat.segment(i * dim, dim);
      const double u = flat[pseudo * dim + i];
      phis[i] = eval_potential_gradient(target.base, x, grad_phi[static_cast<std::size_t>(i)]);
      betas[i] = sigmoid(u);
      const double log_g = beta_log(target.beta_weight, betas[i]);
      a[i] = -phis[i] + beta_log(target.beta_prior, betas[i]) + betas[i] * phis[i] - log_g;
      tail += -betas[i] * phis[i] + log_g + log_sigmoid_jacobian(u);
    }
    const double lse = logsumexp(a);
    grad.resize(flat.size());
    for (int i = 0; i < pseudo; ++i) {
      const double w = std::exp(a[i] - lse);
      const double beta = betas[i];
      grad.segment(i * dim, dim) =
          (w * (beta - 1.0) - beta) * grad_phi[static_cast<std::size_t>(i)];
      const double dg = beta_dlog(target.beta_weight, beta);
      const double da_dbeta = phis[i] + beta_dlog(target.beta_prior, beta) - dg;
      const double dtail_dbeta = -phis[i] + dg;
      grad[pseudo * dim + i] =
          beta * (1.0 - beta) * (w * da_dbeta + dtail_dbeta) + (1.0 - 2.0 * beta);
    }
    return lse + tail;
  };
}

}  // namespace pseudoext
