#include <cmath>
#include <sstream>

#include "pseudoext/baselines.hpp"
#include "pseudoext/boltzmann.hpp"
#include "pseudoext/harness.hpp"
#include "pseudoext/mixture.hpp"
#include "pseudoext/rng.hpp"

// Quick invariant smoke checks behind `pseudoext check`. The full evidence
// lives in the unit and acceptance suites; these are the cheap end-to-end
// sanity properties.

namespace pseudoext {

namespace {

MixtureSpec small_mixture() {
  MixtureSpec spec;
  spec.means = {Eigen::Vector2d(-1.0, 0.5), Eigen::Vector2d(2.0, -1.0)};
  spec.weights = Eigen::Vector2d(0.3, 0.7);
  spec.variances = Eigen::Vector2d(0.5, 1.5);
  return spec;
}

bool gradient_matches_fd(const TargetDensity& t, const Eigen::VectorXd& x, double tol,
                         double* worst) {
  const Eigen::VectorXd g = t.gradient(x);
  for (int i = 0; i < t.dim; ++i) {
    const double h = 1e-5 * (1.0 + std::abs(x[i]));
    Eigen::VectorXd hi = x, lo = x;
    hi[i] += h;
    lo[i] -= h;
    const double fd = (t.potential(hi) - t.potential(lo)) / (2.0 * h);
    const double err = std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i]));
    *worst = std::max(*worst, err);
    if (err > tol) return false;
  }
  return true;
}

}  // namespace

std::vector<CheckResult> run_invariant_checks() {
  std::vector<CheckResult> results;
  auto record = [&](const std::string& name, bool pass, const std::string& detail) {
    results.push_back({name, pass, detail});
  };

  {  // mixture gradient vs central finite differences
    const TargetDensity t = build_mixture_target(small_mixture());
    auto rng = make_rng(7, 0);
    double worst = 0.0;
    bool ok = true;
    for (int k = 0; k < 20; ++k)
      ok = gradient_matches_fd(t, 3.0 * draw_normal_vector(rng, 2), 1e-5, &worst) && ok;
    std::ostringstream d;
    d << "max rel err " << worst;
    record("mixture gradient finite differences", ok, d.str());
  }

  {  // mixture potential invariant under component permutation
    MixtureSpec a = small_mixture();
    MixtureSpec b = a;
    std::swap(b.means[0], b.means[1]);
    std::swap(b.weights[0], b.weights[1]);
    std::swap(b.variances[0], b.variances[1]);
    const TargetDensity ta = build_mixture_target(a), tb = build_mixture_target(b);
    auto rng = make_rng(8, 0);
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
      const Eigen::VectorXd x = 4.0 * draw_normal_vector(rng, 2);
      worst = std::max(worst, std::abs(ta.potential(x) - tb.potential(x)));
    }
    std::ostringstream d;
    d << "max diff " << worst;
    record("mixture permutation invariance", worst <= 1e-12, d.str());
  }

  {  // leapfrog reversibility
    auto rng = make_rng(9, 0);
    const Eigen::VectorXd y0 = draw_normal_vector(rng, 2);
    const Eigen::VectorXd r0 = draw_normal_vector(rng, 2);
    GradientFn grad = [](const Eigen::VectorXd& y) { return (-y).eval(); };
    const LeapfrogResult fwd = leapfrog(y0, r0, 0.1, 25, grad);
    const LeapfrogResult back = leapfrog(fwd.position, -fwd.momentum, 0.1, 25, grad);
    const double err = (back.position - y0).cwiseAbs().maxCoeff();
    std::ostringstream d;
    d << "return error " << err;
    record("leapfrog reversibility", err <= 1e-10, d.str());
  }

  {  // extended density exchangeability
    const TargetDensity t = build_mixture_target(small_mixture());
    const auto q = gaussian_instrumental(Eigen::Vector2d(0.0, 0.0), 2.0);
    auto rng = make_rng(10, 0);
    ExtendedState s;
    for (int i = 0; i < 3; ++i) s.xs.push_back(draw_normal_vector(rng, 2));
    ExtendedState perm = s;
    std::swap(perm.xs[0], perm.xs[2]);
    const double diff =
        std::abs(extended_log_density(s, t, q) - extended_log_density(perm, t, q));
    std::ostringstream d;
    d << "diff " << diff;
    record("extended density exchangeability", diff <= 1e-12, d.str());
  }

  {  // Theorem-1 exactness on an enumerable 5-state toy, N=2
    auto rng = make_rng(11, 0);
    Eigen::VectorXd gamma(5), q(5), f(5);
    for (int i = 0; i < 5; ++i) {
      gamma[i] = 0.2 + draw_uniform(rng);
      q[i] = 0.2 + draw_uniform(rng);
      f[i] = draw_normal(rng);
    }
    const double truth = (f.array() * gamma.array()).sum() / gamma.sum();
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        const double p = gamma[i] * q[j] + gamma[j] * q[i];
        const double wi = gamma[i] / q[i], wj = gamma[j] / q[j];
        num += p * (f[i] * wi + f[j] * wj) / (wi + wj);
        den += p;
      }
    const double err = std::abs(num / den - truth);
    std::ostringstream d;
    d << "err " << err;
    record("post-hoc weighting exactness (5-state toy)", err <= 1e-10, d.str());
  }

  {  // PT swap acceptance symmetry
    const double a = swap_log_accept(0.3, 0.8, 1.7, -0.4);
    const double b = -swap_log_accept(0.3, 0.8, -0.4, 1.7);
    std::ostringstream d;
    d << "asymmetry " << std::abs(a - b);
    record("pt swap symmetry", std::abs(a - b) <= 1e-12, d.str());
  }

  {  // Boltzmann enumeration: serial reference vs parallel kernel
    const BoltzmannRelaxation relax = generate_relaxation(3, 8);
    const SpinMoments fast = enumerate_spin_moments(relax.coupling, relax.bias);
    const SpinMoments ref = enumerate_spin_moments_serial(relax.coupling, relax.bias);
    const double err = std::max(std::abs(fast.log_zb - ref.log_zb),
                                (fast.mean_s - ref.mean_s).cwiseAbs().maxCoeff());
    std::ostringstream d;
    d << "max diff " << err;
    record("boltzmann serial/parallel kernel agreement", err <= 1e-10, d.str());
  }

  {  // Boltzmann moment identity E[XX^T] = Q^T E[SS^T] Q + I
    const BoltzmannRelaxation relax = generate_relaxation(4, 8);
    const BoltzmannMoments mom = enumerate_exact(relax);
    const Eigen::MatrixXd lhs = mom.second_x;
    const Eigen::MatrixXd rhs =
        relax.factor.transpose() * mom.second_s * relax.factor +
        Eigen::MatrixXd::Identity(relax.relaxed_dim, relax.relaxed_dim);
    const double err = (lhs - rhs).cwiseAbs().maxCoeff();
    std::ostringstream d;
    d << "max diff " << err;
    record("boltzmann second-moment identity", err <= 1e-10, d.str());
  }

  return results;
}

}  // namespace pseudoext
