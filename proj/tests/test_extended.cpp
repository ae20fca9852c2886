#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pseudoext/extended.hpp"
#include "pseudoext/mixture.hpp"
#include "pseudoext/numerics.hpp"
#include "pseudoext/rng.hpp"
#include "pseudoext/sample_set.hpp"
#include "test_util.hpp"

using namespace pseudoext;

namespace {

// The 1-D bimodal illustration target: 0.5 N(-1, 0.1) + 0.5 N(1, 0.02).
MixtureSpec bimodal_spec() {
  MixtureSpec spec;
  spec.means = {Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0)};
  spec.weights = Eigen::Vector2d(0.5, 0.5);
  spec.variances = Eigen::Vector2d(0.1, 0.02);
  return spec;
}

ExtendedState random_plain_state(std::mt19937_64& rng, int pseudo, int dim, double scale = 2.0) {
  ExtendedState s;
  for (int i = 0; i < pseudo; ++i) s.xs.push_back(scale * draw_normal_vector(rng, dim));
  return s;
}

ExtendedState random_tempered_state(std::mt19937_64& rng, int pseudo, int dim,
                                    double scale = 2.0) {
  ExtendedState s = random_plain_state(rng, pseudo, dim, scale);
  for (int i = 0; i < pseudo; ++i) s.us.push_back(2.0 * draw_normal(rng));
  return s;
}

}  // namespace

TEST_CASE("extended: N = 1 recovers the original target exactly") {
  const TargetDensity t = build_mixture_target(bimodal_spec());
  const auto q = gaussian_instrumental(Eigen::VectorXd::Zero(1), 2.0);
  auto rng = make_rng(41, 0);
  for (int k = 0; k < 20; ++k) {
    ExtendedState s = random_plain_state(rng, 1, 1);
    CHECK(extended_log_density(s, t, q) ==
          doctest::Approx(-t.potential(s.xs[0])).epsilon(1e-13));
    CHECK((extended_gradient(s, t, q) + t.gradient(s.xs[0])).cwiseAbs().maxCoeff() <= 1e-13);
  }
}

TEST_CASE("extended: q identical to gamma makes the mixture term constant") {
  const TargetDensity t = build_mixture_target(bimodal_spec());
  const auto q = instrumental_from_target(t);
  auto rng = make_rng(42, 0);
  // log pi^N + sum delta is then constant (= log N).
  for (int k = 0; k < 20; ++k) {
    ExtendedState s = random_plain_state(rng, 3, 1);
    double sum_delta = 0.0;
    for (const auto& x : s.xs) sum_delta += q.delta(x);
    CHECK(extended_log_density(s, t, q) + sum_delta ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));
  }
}

TEST_CASE("extended: N=2 density matches the two-term formula on a grid") {
  const MixtureSpec spec = bimodal_spec();
  const TargetDensity t = build_mixture_target(spec);
  const auto q = gaussian_instrumental(Eigen::VectorXd::Zero(1), 2.0);
  const double qv = 2.0;
  auto q_dens = [qv](double x) {
    return std::exp(-x * x / (2 * qv)) / std::sqrt(2 * std::numbers::pi * qv);
  };
  auto gamma = [&t](double x) { return std::exp(-t.potential(Eigen::VectorXd::Constant(1, x))); };
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 100; ++j) {
      const double x1 = -3.0 + 6.0 * i / 99.0, x2 = -3.0 + 6.0 * j / 99.0;
      ExtendedState s;
      s.xs = {Eigen::VectorXd::Constant(1, x1), Eigen::VectorXd::Constant(1, x2)};
      const double direct = gamma(x1) * q_dens(x2) + gamma(x2) * q_dens(x1);
      CHECK(std::abs(std::exp(extended_log_density(s, t, q)) - direct) <= 1e-10);
    }
}

TEST_CASE("extended: identical pseudo-samples give identical gradient blocks") {
  const TargetDensity t = build_mixture_target(bimodal_spec());
  const auto q = gaussian_instrumental(Eigen::VectorXd::Zero(1), 2.0);
  ExtendedState s;
  s.xs = {Eigen::VectorXd::Constant(1, 0.4), Eigen::VectorXd::Constant(1, 0.4),
          Eigen::VectorXd::Constant(1, 0.4)};
  const Eigen::VectorXd g = extended_gradient(s, t, q);
  CHECK(g[0] == doctest::Approx(g[1]).epsilon(1e-14));
  CHECK(g[1] == doctest::Approx(g[2]).epsilon(1e-14));
}

TEST_CASE("extended: gradient matches finite differences over the full flat vector") {
  const TargetDensity t = build_mixture_target(bimodal_spec());
  const auto q = gaussian_instrumental(Eigen::VectorXd::Zero(1), 2.0);
  const int pseudo = 4;
  auto [dens, grad] = make_extended_callbacks(t, q, pseudo);
  auto rng = make_rng(43, 0);
  for (int k = 0; k < 50; ++k) {
    const Eigen::VectorXd flat = 2.0 * draw_normal_vector(rng, pseudo);
    CHECK(testutil::gradient_rel_error(dens, grad, flat) <= 1e-5);
  }
}

TEST_CASE("tempered: N=1 with beta pinned to 1 reduces to the target plus Jacobian") {
  const TargetDensity t = build_mixture_target(bimodal_spec());
  TemperedExtendedTarget tgt{t, 1, {}, {}};
  ExtendedState s;
  s.xs = {Eigen::VectorXd::Constant(1, 0.3)};
  s.us = {20.0};  // beta = 1 - 2e-9
  const double expected = -t.potential(s.xs[0]) + log_sigmoid_jacobian(20.0);
  CHECK(tempered_log_density(s, tgt) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("tempered: symmetric states collapse the mixture term") {
  const TargetDensity t = build_mixture_target(bimodal_spec());
  TemperedExtendedTarget tgt{t, 3, {}, {}};
  ExtendedState s;
  s.xs = {Eigen::VectorXd::Constant(1, 0.7), Eigen::VectorXd::Constant(1, 0.7),
          Eigen::VectorXd::Constant(1, 0.7)};
  s.us = {-0.4, -0.4, -0.4};
  const double phi = t.potential(s.xs[0]);
  const double beta = sigmoid(-0.4);
  const double expected = -(1.0 - beta) * phi + std::log(3.0) +
                          3.0 * (-beta * phi + log_sigmoid_jacobian(-0.4));
  CHECK(tempered_log_density(s, tgt) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("tempered: N=2 grid check against the direct product formula") {
  const TargetDensity t = build_mixture_target(bimodal_spec());
  TemperedExtendedTarget tgt{t, 2, {}, {}};
  auto direct = [&](const ExtendedState& s) {
    const double phi1 = t.potential(s.xs[0]), phi2 = t.potential(s.xs[1]);
    const double b1 = sigmoid(s.us[0]), b2 = sigmoid(s.us[1]);
    // (gamma_1 / gamma_{b1,1}) q(x1,b1) q(x2,b2) + symmetric term, with the
    // logit Jacobians multiplied in.
    const double term1 = std::exp(-phi1 + b1 * phi1 - b1 * phi1 - b2 * phi2);
    const double term2 = std::exp(-phi2 + b2 * phi2 - b1 * phi1 - b2 * phi2);
    return std::log(term1 + term2) + log_sigmoid_jacobian(s.us[0]) +
           log_sigmoid_jacobian(s.us[1]);
  };
  auto rng = make_rng(44, 0);
  for (int k = 0; k < 200; ++k) {
    ExtendedState s = random_tempered_state(rng, 2, 1);
    CHECK(tempered_log_density(s, tgt) == doctest::Approx(direct(s)).epsilon(1e-11));
  }
}

TEST_CASE("tempered: gradient matches finite differences over all coordinates") {
  const TargetDensity t = build_mixture_target(bimodal_spec());
  const int pseudo = 3;
  TemperedExtendedTarget tgt{t, pseudo, {}, {}};
  auto [dens, grad] = make_tempered_callbacks(tgt);
  auto rng = make_rng(45, 0);
  for (int k = 0; k < 50; ++k) {
    Eigen::VectorXd flat(pseudo * 2);
    flat.head(pseudo) = 2.0 * draw_normal_vector(rng, pseudo);
    flat.tail(pseudo) = 1.5 * draw_normal_vector(rng, pseudo);
    CHECK(testutil::gradient_rel_error(dens, grad, flat) <= 1e-5);
  }
}

TEST_CASE("tempered: nonflat beta functions still match finite differences") {
  const TargetDensity t = build_mixture_target(bimodal_spec());
  TemperedExtendedTarget tgt;
  tgt.base = t;
  tgt.pseudo_count = 2;
  // pi(beta) propto beta^2, g(beta) propto exp(1.5 beta)
  tgt.beta_prior = {[](double b) { return 2.0 * std::log(b); },
                    [](double b) { return 2.0 / b; }};
  tgt.beta_weight = {[](double b) { return 1.5 * b; }, [](double) { return 1.5; }};
  auto [dens, grad] = make_tempered_callbacks(tgt);
  auto rng = make_rng(46, 0);
  for (int k = 0; k < 30; ++k) {
    Eigen::VectorXd flat(4);
    flat.head(2) = 2.0 * draw_normal_vector(rng, 2);
    flat.tail(2) = draw_normal_vector(rng, 2);
    CHECK(testutil::gradient_rel_error(dens, grad, flat) <= 1e-5);
  }
}

TEST_CASE("tempered: pinned beta = 1 x-block equals the plain gradient with q = gamma") {
  const TargetDensity t = build_mixture_target(bimodal_spec());
  TemperedExtendedTarget tgt{t, 2, {}, {}};
  const auto q = instrumental_from_target(t);
  for (double x1 : {-1.2, -0.3, 0.5, 1.1})
    for (double x2 : {-0.9, 0.2, 1.3}) {
      ExtendedState s;
      s.xs = {Eigen::VectorXd::Constant(1, x1), Eigen::VectorXd::Constant(1, x2)};
      s.us = {25.0, 25.0};
      const Eigen::VectorXd full = tempered_gradient(s, tgt);
      ExtendedState plain;
      plain.xs = s.xs;
      const Eigen::VectorXd ref = extended_gradient(plain, t, q);
      CHECK((full.head(2) - ref).cwiseAbs().maxCoeff() <= 1e-7);
    }
}

TEST_CASE("extended/tempered: exchangeability under pair permutation") {
  const TargetDensity t = build_mixture_target(bimodal_spec());
  const auto q = gaussian_instrumental(Eigen::VectorXd::Zero(1), 2.0);
  TemperedExtendedTarget tgt{t, 3, {}, {}};
  auto rng = make_rng(47, 0);
  for (int k = 0; k < 20; ++k) {
    ExtendedState s = random_tempered_state(rng, 3, 1);
    ExtendedState perm = s;
    std::swap(perm.xs[0], perm.xs[2]);
    std::swap(perm.us[0], perm.us[2]);
    CHECK(std::abs(tempered_log_density(s, tgt) - tempered_log_density(perm, tgt)) <= 1e-12);
    ExtendedState sp, pp;
    sp.xs = s.xs;
    pp.xs = perm.xs;
    CHECK(std::abs(extended_log_density(sp, t, q) - extended_log_density(pp, t, q)) <= 1e-12);
  }
}

TEST_CASE("extended: marginal of x1 is the target/instrumental mixture") {
  const MixtureSpec spec = bimodal_spec();
  const TargetDensity t = build_mixture_target(spec);
  const auto q = gaussian_instrumental(Eigen::VectorXd::Zero(1), 2.0);
  auto q_dens = [](double x) {
    return std::exp(-x * x / 4.0) / std::sqrt(4.0 * std::numbers::pi);
  };
  auto pi_dens = [&t](double x) {
    return std::exp(-t.potential(Eigen::VectorXd::Constant(1, x)));
  };
  const double step = 0.01;
  std::vector<double> m, target;
  for (double x1 = -4.0; x1 <= 4.0; x1 += 0.25) {
    double integral = 0.0;
    for (double x2 = -8.0; x2 <= 8.0; x2 += step) {
      ExtendedState s;
      s.xs = {Eigen::VectorXd::Constant(1, x1), Eigen::VectorXd::Constant(1, x2)};
      integral += std::exp(extended_log_density(s, t, q)) * step;
    }
    m.push_back(integral);
    target.push_back(0.5 * pi_dens(x1) + 0.5 * q_dens(x1));
  }
  // Fit the single global scale, then check the residual.
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    num += m[i] * target[i];
    den += m[i] * m[i];
  }
  const double scale = num / den;
  double resid = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    resid = std::max(resid, std::abs(scale * m[i] - target[i]));
  CHECK(resid <= 1e-4);
}

TEST_CASE("posthoc weights: q = gamma gives uniform weights") {
  const TargetDensity t = build_mixture_target(bimodal_spec());
  const auto q = instrumental_from_target(t);
  auto rng = make_rng(48, 0);
  ExtendedState s = random_plain_state(rng, 4, 1);
  const Eigen::VectorXd w = softmax_from_log(posthoc_log_weights(s, t, q));
  for (int i = 0; i < 4; ++i) CHECK(w[i] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("posthoc weights: tempered with beta = 1 vanish") {
  const TargetDensity t = build_mixture_target(bimodal_spec());
  TemperedExtendedTarget tgt{t, 2, {}, {}};
  ExtendedState s;
  s.xs = {Eigen::VectorXd::Constant(1, 0.2), Eigen::VectorXd::Constant(1, -0.7)};
  s.us = {40.0, -1.0};
  const Eigen::VectorXd logw = posthoc_log_weights(s, tgt);
  CHECK(std::abs(logw[0]) <= 1e-9);   // beta ~ 1: gamma_beta = gamma
  CHECK(std::abs(logw[1]) > 1e-3);    // beta < 1 carries a real correction
}

TEST_CASE("posthoc weights: finite whenever phi and delta are finite") {
  const TargetDensity t = build_mixture_target(bimodal_spec());
  const auto q = gaussian_instrumental(Eigen::VectorXd::Zero(1), 2.0);
  auto rng = make_rng(49, 0);
  for (int k = 0; k < 100; ++k) {
    ExtendedState s = random_plain_state(rng, 3, 1, 10.0);
    CHECK(posthoc_log_weights(s, t, q).allFinite());
  }
}

TEST_CASE("theorem-1 estimator is exact on an enumerable toy") {
  // 5-state target, N=2 extended space enumerated in full; the brute-force
  // expectation of the self-normalized estimator must equal E_pi[f].
  auto rng = make_rng(50, 0);
  Eigen::VectorXd gamma(5), q(5);
  for (int i = 0; i < 5; ++i) {
    gamma[i] = 0.1 + draw_uniform(rng);
    q[i] = 0.1 + draw_uniform(rng);
  }
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd f(5);
    for (int i = 0; i < 5; ++i) f[i] = draw_normal(rng);
    const double truth = (f.array() * gamma.array()).sum() / gamma.sum();
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        const double p = gamma[i] * q[j] + gamma[j] * q[i];
        const double wi = gamma[i] / q[i], wj = gamma[j] / q[j];
        num += p * (f[i] * wi + f[j] * wj) / (wi + wj);
        den += p;
      }
    CHECK(std::abs(num / den - truth) <= 1e-10);
  }
}

TEST_CASE("weighted_expectation: trivial properties") {
  WeightedSampleSet set;
  set.dim = 1;
  set.pseudo = 2;
  set.draws.resize(8, 1);
  set.draws << 1, 2, 3, 4, 5, 6, 7, 8;
  set.log_weights.resize(4, 2);

  SUBCASE("f = 1 gives exactly 1") {
    set.log_weights.setRandom();
    CHECK(weighted_expectation(set, [](const Eigen::VectorXd&) { return 1.0; }) ==
          doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("constant weights give the plain mean") {
    set.log_weights.setConstant(-3.7);
    CHECK(weighted_expectation(set, [](const Eigen::VectorXd& x) { return x[0]; }) ==
          doctest::Approx(4.5).epsilon(1e-14));
  }
  SUBCASE("an all-(-inf) row is a degenerate fit") {
    set.log_weights.setZero();
    set.log_weights.row(2).setConstant(kNegInf);
    CHECK_THROWS_AS(weighted_expectation(set, [](const Eigen::VectorXd& x) { return x[0]; }),
                    std::runtime_error);
  }
}
