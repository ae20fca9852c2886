#pragma once

#include <Eigen/Core>

#include <vector>

namespace pseudoext {

struct EssResult {
  double value = 0.0;
  bool degenerate = false;        // constant chain
  bool negative_correlation = false;  // raw ESS exceeded T, capped
};

/// Effective sample size T / (1 + 2 sum rho_k) with Geyer initial-positive
/// truncation, clipped to [1, T]. Constant chains report 1 with a
/// degeneracy flag; antithetic chains report T with a note.
EssResult compute_ess(const std::vector<double>& chain);

/// sqrt of the mean squared deviation across replications and components.
double compute_rmse(const std::vector<Eigen::VectorXd>& estimates, const Eigen::VectorXd& truth);

}  // namespace pseudoext
