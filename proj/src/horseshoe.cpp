#include "pseudoext/horseshoe.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pseudoext/numerics.hpp"
#include "pseudoext/rng.hpp"

namespace pseudoext {

void HorseshoeModel::validate() const {
  if (covariates.rows() != responses.size())
    throw std::invalid_argument("horseshoe: covariate rows and responses differ");
  if (covariates.cols() < 1) throw std::invalid_argument("horseshoe: no covariates");
  if (slab_scale <= 0.0) throw std::invalid_argument("horseshoe: slab scale must be positive");
  for (Eigen::Index i = 0; i < responses.size(); ++i)
    if (responses[i] != 0 && responses[i] != 1)
      throw std::invalid_argument("horseshoe: labels must be in {0,1}");
}

namespace {

// Shared pieces for potential and gradient at an unconstrained point
// v = (x, eta = log lambda, zeta = log tau).
struct HorseshoeEval {
  Eigen::VectorXd x, eta;
  double zeta;
  Eigen::VectorXd inv_s2;   // 1/s_j^2 = 1/c^2 + exp(-2(zeta + eta_j))
  Eigen::VectorXd kappa;    // c^2 / (c^2 + tau^2 lambda_j^2), computed stably
  Eigen::VectorXd linpred;  // z * x
};

HorseshoeEval split(const HorseshoeModel& m, const Eigen::VectorXd& v) {
  const int p = m.p();
  HorseshoeEval e;
  e.x = v.head(p);
  e.eta = v.segment(p, p);
  e.zeta = v[2 * p];
  const double log_c2 = 2.0 * std::log(m.slab_scale);
  e.inv_s2.resize(p);
  e.kappa.resize(p);
  for (int j = 0; j < p; ++j) {
    const double w = e.zeta + e.eta[j];  // log(tau lambda_j)
    e.inv_s2[j] = std::exp(-log_c2) + std::exp(-2.0 * w);
    e.kappa[j] = sigmoid(log_c2 - 2.0 * w);
  }
  e.linpred = m.covariates * e.x;
  return e;
}

}  // namespace

TargetDensity build_horseshoe_target(const HorseshoeModel& model) {
  model.validate();
  const int p = model.p();
  const int n = model.n();

  TargetDensity t;
  t.dim = model.dim();
  t.label = "horseshoe";
  t.potential = [model, p, n](const Eigen::VectorXd& v) {
    const HorseshoeEval e = split(model, v);
    double lp = 0.0;
    // Likelihood: sum (1 - y_i) t_i - log(1 + exp(t_i)).
    for (int i = 0; i < n; ++i)
      lp += (1.0 - model.responses[i]) * e.linpred[i] - log1pexp(e.linpred[i]);
    // Gaussian slab on x given (lambda, tau).
    for (int j = 0; j < p; ++j)
      lp += -0.5 * e.x[j] * e.x[j] * e.inv_s2[j] -
            0.5 * std::log(2.0 * std::numbers::pi) + 0.5 * std::log(e.inv_s2[j]);
    // Half-Cauchy priors with log-transform Jacobians.
    const double log_half_cauchy = std::log(2.0 / std::numbers::pi);
    for (int j = 0; j < p; ++j)
      lp += log_half_cauchy - log1pexp(2.0 * e.eta[j]) + e.eta[j];
    lp += log_half_cauchy - log1pexp(2.0 * e.zeta) + e.zeta;
    return -lp;
  };
  t.gradient = [model, p, n](const Eigen::VectorXd& v) {
    const HorseshoeEval e = split(model, v);
    Eigen::VectorXd g(2 * p + 1);
    // d(-loglik)/dx = -Z^T ((1-y) - sigmoid(t))
    Eigen::VectorXd resid(n);
    for (int i = 0; i < n; ++i)
      resid[i] = (1.0 - model.responses[i]) - sigmoid(e.linpred[i]);
    g.head(p) = -(model.covariates.transpose() * resid);
    g.head(p) += (e.x.array() * e.inv_s2.array()).matrix();
    double zeta_term = 0.0;
    for (int j = 0; j < p; ++j) {
      const double shrink = e.kappa[j] * (e.x[j] * e.x[j] * e.inv_s2[j] - 1.0);
      g[p + j] = -(shrink - 2.0 * sigmoid(2.0 * e.eta[j]) + 1.0);
      zeta_term += shrink;
    }
    g[2 * p] = -(zeta_term - 2.0 * sigmoid(2.0 * e.zeta) + 1.0);
    return g;
  };
  return t;
}

HorseshoeModel make_synthetic_horseshoe(int n, int p, int n_active, double magnitude,
                                        std::uint64_t seed, double slab_scale) {
  if (n_active > p) throw std::invalid_argument("horseshoe: n_active > p");
  auto rng = make_rng(seed, 0);
  HorseshoeModel m;
  m.slab_scale = slab_scale;
  m.covariates.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) m.covariates(i, j) = draw_normal(rng);
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(p);
  for (int j = 0; j < n_active; ++j) coef[j] = (j % 2 == 0 ? magnitude : -magnitude);
  m.responses.resize(n);
  for (int i = 0; i < n; ++i) {
    const double prob_one = sigmoid(-m.covariates.row(i).dot(coef));
    m.responses[i] = draw_uniform(rng) < prob_one ? 1 : 0;
  }
  m.validate();
  return m;
}

}  // namespace pseudoext
