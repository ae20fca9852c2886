#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pseudoext/boltzmann.hpp"
#include "pseudoext/extended.hpp"
#include "pseudoext/hmc.hpp"
#include "pseudoext/mixture.hpp"
#include "pseudoext/sample_set.hpp"

namespace pseudoext {

/// Number of worker threads: min(omp_get_max_threads(), $PSEUDOEXT_THREADS).
int configured_thread_count();

// ---------------------------------------------------------------------------
// Sampler drivers
// ---------------------------------------------------------------------------

/// Plain HMC/NUTS on a target; output has N = 1 and zero log-weights.
/// Initial state defaults to Uniform(-2,2)^dim from the init stream.
WeightedSampleSet run_plain_hmc(const TargetDensity& target, long iters, long warmup,
                                HmcConfig config,
                                std::optional<Eigen::VectorXd> init = std::nullopt);

/// Pseudo-extended HMC with a fixed instrumental distribution.
WeightedSampleSet run_pe_hmc(const TargetDensity& target, const InstrumentalDistribution& q,
                             int pseudo, long iters, long warmup, HmcConfig config,
                             std::optional<Eigen::VectorXd> init = std::nullopt);

/// Pseudo-extended HMC with the tempered instrumental (the default method).
WeightedSampleSet run_pe_hmc(const TemperedExtendedTarget& target, long iters, long warmup,
                             HmcConfig config,
                             std::optional<Eigen::VectorXd> init = std::nullopt);

// ---------------------------------------------------------------------------
// Diagnostics on sample sets
// ---------------------------------------------------------------------------

struct ModeCoverage {
  Eigen::VectorXd mass;      // self-normalized weighted mass per mode
  double unassigned = 0.0;   // mass farther than the radius from every mode
  int covered(double threshold = 0.005) const;
};

/// Assigns each draw to its nearest mixture mode when within
/// radius_sigmas * sigma_j; weights are self-normalized over all pooled draws.
ModeCoverage mode_coverage(const WeightedSampleSet& set, const MixtureSpec& spec,
                           double radius_sigmas = 3.0);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  nlohmann::json target;        // {"kind": ..., ...}
  std::string method = "pe-hmc";  // hmc | pe-hmc | pt | st | ais
  int pseudo_samples = 2;         // N, pe-hmc only
  long iters = 10000;             // recorded draws
  long warmup = -1;               // default iters / 2
  int replications = 1;
  std::uint64_t seed = 1;
  std::string out_dir;            // empty -> nothing persisted
  bool write_samples = true;
  nlohmann::json instrumental;    // pe-hmc: {"kind":"tempered"} (default) or
                                  // {"kind":"normal","mean":..,"variance":..}
  long ladder_rungs = 0;          // 0 -> method default (pt 10, st/ais 1000)
  std::string ladder_kind;        // "" -> method default (pt geometric, st/ais uniform)
  double ladder_beta_min = 0.01;
  long swap_every = 10;           // pt
  long ais_particles = 1000;
  int ais_kernel_steps = 1;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  std::string data_dir = "data";  // where mixture20 means/reference files live

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_json_file(const std::string& path);
};

/// A constructed target plus whatever exact information is available for it.
struct TargetBundle {
  TargetDensity target;
  std::optional<MixtureSpec> mixture;
  std::optional<BoltzmannRelaxation> relaxation;
  Eigen::VectorXd truth_first;   // empty when unknown
  Eigen::VectorXd truth_second;  // E[X_k^2], empty when unknown
  nlohmann::json reference;      // published estimates, echoed verbatim
};

TargetBundle build_target(const nlohmann::json& spec, const std::string& data_dir);

struct ReplicationResult {
  std::uint64_t seed = 0;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  double acceptance_rate = kNaN;
  double ess = kNaN;        // of the per-iteration estimate series for x_1
  double seconds = 0.0;     // sampling wall-clock
  std::optional<ModeCoverage> coverage;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ReplicationResult> replications;
  Eigen::VectorXd mean_first, sd_first, mean_second, sd_second;
  double rmse_first = kNaN, rmse_second = kNaN, rmse_all = kNaN;
  Eigen::VectorXd truth_first, truth_second;
  nlohmann::json reference;
  double mean_seconds = 0.0;
  double mse_all = kNaN;  // mean squared error over all moments and reps
  double mse_ct = kNaN;   // mse_all * mean_seconds

  /// Deterministic content only (no wall-clock), for report.json.
  nlohmann::json to_json() const;
  /// Wall-clock and cost-scaled error, for timing.json.
  nlohmann::json timing_json() const;
};

/// Runs `replications` independent seeded chains (concurrently), estimates
/// first/second moments by self-normalized weighting, aggregates, and (when
/// out_dir is set) persists samples_<rep>.csv, report.json and timing.json.
ExperimentReport run_experiment(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Invariant smoke checks (`pseudoext check`)
// ---------------------------------------------------------------------------

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<CheckResult> run_invariant_checks();

}  // namespace pseudoext
