#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "pseudoext/boltzmann.hpp"
#include "pseudoext/rng.hpp"
#include "test_util.hpp"

using namespace pseudoext;

TEST_CASE("choose_diagonal: zero coupling gives the bare epsilon shift") {
  const Eigen::VectorXd d = choose_diagonal(Eigen::MatrixXd::Zero(3, 3));
  CHECK(d.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(d[i] == doctest::Approx(1e-8).epsilon(1e-6));
}

TEST_CASE("choose_diagonal: 2x2 off-diagonal coupling") {
  Eigen::MatrixXd w(2, 2);
  w << 0, 1, 1, 0;  // eigenvalues -1, +1
  const Eigen::VectorXd d = choose_diagonal(w);
  CHECK(d[0] == doctest::Approx(1.0 + 1e-8).epsilon(1e-10));
  Eigen::MatrixXd shifted = w;
  shifted.diagonal() += d;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(shifted);
  CHECK(es.eigenvalues()[0] == doctest::Approx(1e-8).epsilon(1e-4));
  CHECK(es.eigenvalues()[1] == doctest::Approx(2.0 + 1e-8).epsilon(1e-10));
}

TEST_CASE("choose_diagonal: random symmetric matrices end up PSD") {
  auto rng = make_rng(31, 0);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::MatrixXd w(10, 10);
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j <= i; ++j) w(i, j) = w(j, i) = draw_normal(rng);
    w.diagonal().setZero();
    Eigen::MatrixXd shifted = w;
    shifted.diagonal() += choose_diagonal(w);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(shifted, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues()[0] >= 0.0);
    CHECK(es.eigenvalues()[0] <= 2e-8);
  }
}

TEST_CASE("generate_relaxation: paper configuration drops exactly one direction") {
  const BoltzmannRelaxation r = generate_relaxation(1, 28);
  CHECK(r.spin_count == 28);
  CHECK(r.relaxed_dim == 27);
  CHECK_NOTHROW(r.validate());
}

TEST_CASE("generate_relaxation: lambda1 = 0 decouples the spins") {
  const BoltzmannRelaxation r = generate_relaxation(2, 6, 0.0, 2.0);
  CHECK(r.coupling.cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("generate_relaxation: deterministic given seed") {
  const BoltzmannRelaxation a = generate_relaxation(77, 12);
  const BoltzmannRelaxation b = generate_relaxation(77, 12);
  CHECK((a.coupling - b.coupling).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.bias - b.bias).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.factor - b.factor).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("relaxation_target: zero factor leaves a standard Gaussian") {
  BoltzmannRelaxation r = generate_relaxation(3, 6);
  r.factor.setZero();
  const TargetDensity t = relaxation_target(r);
  auto rng = make_rng(32, 0);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(t.dim);
  for (int k = 0; k < 10; ++k) {
    const Eigen::VectorXd x = draw_normal_vector(rng, t.dim);
    CHECK(t.potential(x) - t.potential(zero) ==
          doctest::Approx(0.5 * x.squaredNorm()).epsilon(1e-12));
  }
}

TEST_CASE("relaxation_target: symmetric stationary point at the origin") {
  BoltzmannRelaxation r = generate_relaxation(4, 8);
  r.bias.setZero();
  const TargetDensity t = relaxation_target(r);
  CHECK(t.gradient(Eigen::VectorXd::Zero(t.dim)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("relaxation_target: gradient matches finite differences") {
  const BoltzmannRelaxation r = generate_relaxation(5, 10);
  const TargetDensity t = relaxation_target(r);
  auto rng = make_rng(33, 0);
  for (int k = 0; k < 50; ++k) {
    const Eigen::VectorXd x = 2.0 * draw_normal_vector(rng, t.dim);
    CHECK(testutil::gradient_rel_error(t.potential, t.gradient, x) <= 1e-5);
  }
}

TEST_CASE("enumeration: independent fair spins") {
  const int n = 6;
  const SpinMoments m =
      enumerate_spin_moments(Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n));
  CHECK(m.log_zb == doctest::Approx(n * std::numbers::ln2).epsilon(1e-12));
  CHECK(m.mean_s.cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((m.second_s - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("enumeration: two-spin correlation is tanh(w)") {
  for (double w : {-1.3, -0.2, 0.5, 2.0}) {
    Eigen::MatrixXd coupling(2, 2);
    coupling << 0, w, w, 0;
    const SpinMoments m = enumerate_spin_moments(coupling, Eigen::VectorXd::Zero(2));
    CHECK(m.second_s(0, 1) == doctest::Approx(std::tanh(w)).epsilon(1e-12));
  }
}

TEST_CASE("enumeration: parallel kernel equals the serial reference") {
  for (int n : {5, 9, 13}) {
    const BoltzmannRelaxation r = generate_relaxation(6 + n, n);
    const SpinMoments fast = enumerate_spin_moments(r.coupling, r.bias);
    const SpinMoments slow = enumerate_spin_moments_serial(r.coupling, r.bias);
    CHECK(std::abs(fast.log_zb - slow.log_zb) <= 1e-10 * std::abs(slow.log_zb));
    CHECK((fast.mean_s - slow.mean_s).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((fast.second_s - slow.second_s).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("enumeration: parallel kernel is bit-deterministic") {
  const BoltzmannRelaxation r = generate_relaxation(9, 14);
  const SpinMoments a = enumerate_spin_moments(r.coupling, r.bias);
  const SpinMoments b = enumerate_spin_moments(r.coupling, r.bias);
  CHECK(a.log_zb == b.log_zb);
  CHECK((a.second_s - b.second_s).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("enumeration: zeroing the diagonal only rescales the distribution") {
  auto rng = make_rng(34, 0);
  const int n = 8;
  Eigen::MatrixXd w(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) w(i, j) = w(j, i) = 0.4 * draw_normal(rng);
  Eigen::VectorXd b = draw_normal_vector(rng, n);
  Eigen::MatrixXd w0 = w;
  w0.diagonal().setZero();
  const SpinMoments with_diag = enumerate_spin_moments(w, b);
  const SpinMoments without = enumerate_spin_moments(w0, b);
  // s_i^2 = 1, so the diagonal contributes a constant factor: moments agree,
  // log Z shifts by tr(W)/2.
  CHECK((with_diag.mean_s - without.mean_s).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((with_diag.second_s - without.second_s).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(with_diag.log_zb - without.log_zb ==
        doctest::Approx(0.5 * w.diagonal().sum()).epsilon(1e-12));
}

TEST_CASE("enumerate_exact: moment identity and cap") {
  const BoltzmannRelaxation r = generate_relaxation(10, 10);
  const BoltzmannMoments m = enumerate_exact(r);
  const Eigen::MatrixXd expected =
      r.factor.transpose() * m.second_s * r.factor +
      Eigen::MatrixXd::Identity(r.relaxed_dim, r.relaxed_dim);
  CHECK((m.second_x - expected).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((m.mean_x - r.factor.transpose() * m.mean_s).cwiseAbs().maxCoeff() <= 1e-12);

  BoltzmannRelaxation big;
  big.spin_count = 23;
  CHECK_THROWS_AS(enumerate_exact(big), std::invalid_argument);
  CHECK_THROWS_AS(exact_sampler(big, 10, 1), std::invalid_argument);
}

TEST_CASE("relaxation density integrates to one on a d=2 instance") {
  // d_b = 3 drops to d = 2 via the shift; normalize with the log Z identity
  // and integrate on a grid.
  const BoltzmannRelaxation r = generate_relaxation(11, 3);
  REQUIRE(r.relaxed_dim == 2);
  const TargetDensity t = relaxation_target(r);
  const BoltzmannMoments m = enumerate_exact(r);
  const double limit = r.factor.cwiseAbs().sum() + 7.0;
  const double step = 0.02;
  double mass = 0.0;
  for (double x = -limit; x <= limit; x += step)
    for (double y = -limit; y <= limit; y += step)
      mass += std::exp(-t.potential(Eigen::Vector2d(x, y)) - m.log_z) * step * step;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("exact_sampler: n = 0 gives an empty set") {
  const BoltzmannRelaxation r = generate_relaxation(12, 6);
  CHECK(exact_sampler(r, 0, 1).empty());
}

TEST_CASE("exact_sampler: large bias pins the spins") {
  BoltzmannRelaxation r = generate_relaxation(13, 6, 1.0, 2.0);  // weak coupling
  r.bias.setConstant(5.0);
  const Eigen::VectorXd pinned = r.factor.transpose() * Eigen::VectorXd::Ones(r.spin_count);
  const auto samples = exact_sampler(r, 4000, 2);
  REQUIRE(!samples.empty());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(r.relaxed_dim);
  for (const auto& x : samples) mean += x / static_cast<double>(samples.size());
  // The bias dominates the coupling, so s = all-ones almost surely and the
  // sample mean sits at Q^T 1 up to the unit observation noise.
  CHECK((mean - pinned).cwiseAbs().maxCoeff() < 3.0 / std::sqrt(4000.0) + 0.05);
}

TEST_CASE("exact_sampler: moments agree with enumeration within 3 SE") {
  const BoltzmannRelaxation r = generate_relaxation(14, 10);
  const BoltzmannMoments m = enumerate_exact(r);
  const long n = 100000;
  const auto samples = exact_sampler(r, n, 3);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(r.relaxed_dim);
  for (const auto& x : samples) mean += x / static_cast<double>(n);
  for (int k = 0; k < r.relaxed_dim; ++k) {
    const double var = m.second_x(k, k) - m.mean_x[k] * m.mean_x[k];
    const double se = std::sqrt(var / static_cast<double>(n));
    CHECK(std::abs(mean[k] - m.mean_x[k]) <= 3.0 * se);
  }
}

TEST_CASE("relaxation JSON round-trip") {
  const BoltzmannRelaxation r = generate_relaxation(15, 9);
  const BoltzmannRelaxation back = BoltzmannRelaxation::from_json(r.to_json());
  CHECK((back.coupling - r.coupling).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.factor - r.factor).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.relaxed_dim == r.relaxed_dim);
}
