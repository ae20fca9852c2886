#pragma once

#include <Eigen/Core>

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "pseudoext/target.hpp"

namespace pseudoext {

/// Isotropic Gaussian mixture specification.
struct MixtureSpec {
  std::vector<Eigen::VectorXd> means;
  Eigen::VectorXd weights;    // simplex
  Eigen::VectorXd variances;  // one isotropic variance per component

  int dim() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
  int components() const { return static_cast<int>(means.size()); }

  /// Throws std::invalid_argument on empty components, non-simplex weights
  /// (tolerance 1e-12), non-positive variances, or ragged means.
  void validate() const;

  Eigen::VectorXd mean() const;           // E[X], analytic
  Eigen::VectorXd second_moment() const;  // E[X_k^2] per coordinate, analytic

  nlohmann::json to_json() const;
  static MixtureSpec from_json(const nlohmann::json& j);
  static MixtureSpec from_json_file(const std::string& path);
  void to_json_file(const std::string& path) const;
};

TargetDensity build_mixture_target(const MixtureSpec& spec);

enum class Mixture20Scenario { A, B };

/// Loads the 20 checked-in component means ({"means": [[..],..]}).
std::vector<Eigen::VectorXd> load_means_file(const std::string& path);

/// Scenario (a): equal weights 1/20, variance 1/100.
/// Scenario (b): weights proportional to 1/dist(mu_j, (5,5)), standard
/// deviation dist/20 per component.
MixtureSpec build_scenario_mixture(const std::vector<Eigen::VectorXd>& means,
                                   Mixture20Scenario scenario);

/// Known moments of the two benchmark scenarios: {E[x1], E[x2], E[x1^2], E[x2^2]}.
std::array<double, 4> scenario_truth(Mixture20Scenario scenario);

/// Loads the means file, builds the scenario, and verifies the analytic
/// moments against scenario_truth to 3 decimal places; throws otherwise.
MixtureSpec load_checked_scenario(const std::string& means_path, Mixture20Scenario scenario);

}  // namespace pseudoext
