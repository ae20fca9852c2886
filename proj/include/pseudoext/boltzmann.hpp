#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "pseudoext/target.hpp"

namespace pseudoext {

/// Continuous relaxation of a {-1,+1}^d_b Boltzmann machine: couplings W
/// (symmetric, zero diagonal), biases b, diagonal shift D making W + D PSD,
/// and a factor Q (d_b x d) with Q Q^T = W + D. d is the retained rank after
/// dropping directions annihilated by the shift.
struct BoltzmannRelaxation {
  Eigen::MatrixXd coupling;    // W
  Eigen::VectorXd bias;        // b
  Eigen::VectorXd shift_diag;  // diagonal of D
  Eigen::MatrixXd factor;      // Q, d_b x d
  int spin_count = 0;          // d_b
  int relaxed_dim = 0;         // d
  double shifted_max_eigenvalue = 0.0;  // max eigenvalue of W + D
  std::uint64_t seed = 0;
  double lambda1 = 6.0;
  double lambda2 = 2.0;

  void validate() const;
  nlohmann::json to_json() const;
  static BoltzmannRelaxation from_json(const nlohmann::json& j);
  static BoltzmannRelaxation from_json_file(const std::string& path);
  void to_json_file(const std::string& path) const;
};

/// Uniform eigen-shift D = (-lambda_min(W) + eps) I with eps = 1e-8,
/// guaranteeing W + D is PSD.
Eigen::VectorXd choose_diagonal(const Eigen::MatrixXd& coupling);

/// Random relaxation instance: b_i ~ N(0, 0.1^2), eigenvalues
/// lambda1 tanh(lambda2 eta_i) with eta_i ~ N(0,1), rotated by a Haar
/// orthogonal matrix, diagonal zeroed, then shifted and factored.
/// Deterministic given seed.
BoltzmannRelaxation generate_relaxation(std::uint64_t seed, int spin_count,
                                        double lambda1 = 6.0, double lambda2 = 2.0);

/// phi(x) = x^T x / 2 - sum_k log cosh(q_k^T x + b_k) on R^d.
TargetDensity relaxation_target(const BoltzmannRelaxation& relax);

/// Exact spin-space sums over all 2^d_b states of
/// P(s) propto exp(s^T W s / 2 + b^T s).
struct SpinMoments {
  double log_zb = 0.0;
  Eigen::VectorXd mean_s;    // E[S]
  Eigen::MatrixXd second_s;  // E[S S^T]
};

/// OpenMP kernel: chunked Gray-code walk with a deterministic chunk-ordered
/// reduction (bit-identical across thread counts).
SpinMoments enumerate_spin_moments(const Eigen::MatrixXd& coupling, const Eigen::VectorXd& bias);

/// Straightforward serial reference (O(2^d_b d_b^2)); kept for testing and
/// benchmarking against the parallel kernel.
SpinMoments enumerate_spin_moments_serial(const Eigen::MatrixXd& coupling,
                                          const Eigen::VectorXd& bias);

struct BoltzmannMoments {
  double log_zb = 0.0;  // log Z of the discrete Boltzmann machine
  double log_z = 0.0;   // log Z of the relaxation density
  Eigen::VectorXd mean_s;
  Eigen::MatrixXd second_s;
  Eigen::VectorXd mean_x;    // Q^T E[S]
  Eigen::MatrixXd second_x;  // Q^T E[S S^T] Q + I
};

/// Exact moments of the relaxation via enumeration; rejects d_b > 22.
BoltzmannMoments enumerate_exact(const BoltzmannRelaxation& relax);

/// Independent draws from the relaxation: s from the enumerated categorical,
/// then x | s ~ N(Q^T s, I). Same d_b cap as enumerate_exact.
std::vector<Eigen::VectorXd> exact_sampler(const BoltzmannRelaxation& relax, long n,
                                           std::uint64_t seed);

inline constexpr int kEnumerationCap = 22;

}  // namespace pseudoext
