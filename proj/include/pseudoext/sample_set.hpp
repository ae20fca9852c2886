#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>

#include <json.hpp>

#include "pseudoext/numerics.hpp"

namespace pseudoext {

/// T iterations x N pseudo-samples with per-draw log-weights (Theorem-1
/// style, unnormalized; self-normalization happens at estimation time).
/// Plain-HMC output uses N = 1 and zero log-weights; AIS output uses a
/// single row holding all particles.
struct WeightedSampleSet {
  int dim = 0;
  int pseudo = 1;
  Eigen::MatrixXd draws;        // (T * pseudo) x dim, row t*pseudo + i
  Eigen::MatrixXd log_weights;  // T x pseudo
  Eigen::MatrixXd betas;        // T x pseudo, or empty when not tempered
  double acceptance_rate = kNaN;
  std::uint64_t seed = 0;
  std::string method;
  long excluded_count = 0;  // non-finite particles dropped (AIS)

  long iterations() const { return log_weights.rows(); }
  Eigen::VectorXd draw(long t, int i) const { return draws.row(t * pseudo + i); }
  bool has_betas() const { return betas.size() > 0; }
};

/// Per-iteration self-normalized estimates of f: row t maps to
/// sum_i softmax(logw_t)_i f(x_ti). Throws if some row has all -inf weights
/// (degenerate instrumental fit).
Eigen::VectorXd per_iteration_estimates(const WeightedSampleSet& set,
                                        const std::function<double(const Eigen::VectorXd&)>& f);

/// Self-normalized estimator: mean over iteration rows of the per-row
/// weighted estimate.
double weighted_expectation(const WeightedSampleSet& set,
                            const std::function<double(const Eigen::VectorXd&)>& f);

/// log of the importance-sampling normalizing estimate over all draws:
/// logsumexp(logw) - log(count). Meaningful for AIS output.
double log_normalizing_estimate(const WeightedSampleSet& set);

/// CSV with header iter,pseudo_index,x_1..x_d,beta,log_weight. Doubles are
/// written with %.17g so the file round-trips bit-exactly.
void write_csv(const WeightedSampleSet& set, const std::string& path);
WeightedSampleSet read_csv(const std::string& path);

nlohmann::json summary_json(const WeightedSampleSet& set, const nlohmann::json& estimates);

}  // namespace pseudoext
