#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <vector>

#include "pseudoext/extended.hpp"

namespace pseudoext {

/// Fused log-density evaluation: returns log pi(x) and fills its gradient.
/// The kernels run on this form; one evaluation per leapfrog step.
using ValueGradFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Adapter for separately supplied density and gradient callables.
ValueGradFn fuse(DensityFn density, GradientFn gradient);

struct HmcConfig {
  double step_size = 1.0;          // initial epsilon; adapted during warmup
  int num_leapfrog = 10;           // L for fixed-length HMC
  Eigen::VectorXd mass_diag;       // empty -> identity
  long adapt_steps = -1;           // warmup iterations; <0 -> half of the draws
  double target_accept = 0.8;
  bool use_nuts = true;
  int max_tree_depth = 10;
  std::uint64_t seed = 1;
  bool adapt_step_size = true;     // dual averaging during warmup
};

struct LeapfrogResult {
  Eigen::VectorXd position;
  Eigen::VectorXd momentum;
  bool diverged = false;  // non-finite intermediate encountered
};

/// L leapfrog steps (half-kick, drift, half-kick) along grad log-density.
LeapfrogResult leapfrog(const Eigen::VectorXd& position, const Eigen::VectorXd& momentum,
                        double eps, int steps, const GradientFn& grad,
                        const Eigen::VectorXd& mass_diag = Eigen::VectorXd());

/// A state with its cached log-density and gradient.
struct PhasePoint {
  Eigen::VectorXd position;
  double log_density = 0.0;
  Eigen::VectorXd grad;
};

PhasePoint evaluate_point(const ValueGradFn& f, Eigen::VectorXd position);

struct StepResult {
  bool accepted = false;
  double delta_h = 0.0;     // H(proposal) - H(current)
  bool divergent = false;
  double accept_stat = 0.0; // dual-averaging statistic
  int depth = 0;            // NUTS tree depth reached
  bool saturated = false;   // NUTS hit max_tree_depth
};

/// One fixed-length HMC transition: momentum refresh, leapfrog, Metropolis
/// correction on the energy difference. Divergent proposals (non-finite
/// state or |dH| > 1000) are rejected and flagged. Updates `current` in
/// place.
StepResult hmc_transition(PhasePoint& current, const ValueGradFn& f, const HmcConfig& config,
                          std::mt19937_64& rng);

/// One No-U-Turn transition: multiplicative trajectory doubling with the
/// standard U-turn criterion at subtree boundaries and multinomial selection
/// among valid states.
StepResult nuts_transition(PhasePoint& current, const ValueGradFn& f, const HmcConfig& config,
                           std::mt19937_64& rng);

/// Convenience wrappers over the transitions for separately supplied
/// density/gradient callables; return the next state.
struct WrappedStep {
  Eigen::VectorXd state;
  StepResult stats;
};
WrappedStep hmc_step(const Eigen::VectorXd& current, const DensityFn& density,
                     const GradientFn& gradient, const HmcConfig& config, std::mt19937_64& rng);
WrappedStep nuts_step(const Eigen::VectorXd& current, const DensityFn& density,
                      const GradientFn& gradient, const HmcConfig& config, std::mt19937_64& rng);

/// Dual-averaging step-size adaptation (target acceptance rate delta).
class DualAveraging {
 public:
  DualAveraging(double eps_init, double target_accept, double t0 = 10.0, double gamma = 0.05,
                double kappa = 0.75);
  void update(double accept_stat);
  double current() const { return std::exp(log_eps_); }
  double averaged() const { return std::exp(log_eps_bar_); }

 private:
  double target_accept_, t0_, gamma_, kappa_;
  double mu_, log_eps_, log_eps_bar_, h_bar_;
  long iter_ = 0;
};

/// Doubling/halving heuristic for the initial step size.
double find_reasonable_epsilon(const ValueGradFn& f, const PhasePoint& start,
                               const Eigen::VectorXd& mass_diag, std::mt19937_64& rng);

struct ChainResult {
  std::vector<Eigen::VectorXd> states;  // post-warmup only
  double accept_rate = 0.0;             // NaN when no draws requested
  double adapted_eps = 0.0;
  long divergence_count = 0;
  long saturation_count = 0;
};

/// Incremental chain driver: warmup with adaptation, then sampling. Exists
/// so parallel tempering can interleave swap rounds with exactly the same
/// per-iteration behavior as run_chain.
class ChainRunner {
 public:
  ChainRunner(ValueGradFn f, Eigen::VectorXd init, HmcConfig config, long warmup,
              std::mt19937_64 rng);

  StepResult advance();  // one transition; handles warmup adaptation
  const Eigen::VectorXd& state() const { return point_.position; }
  void set_state(const Eigen::VectorXd& s) { point_ = evaluate_point(f_, s); }
  bool in_warmup() const { return iter_ < warmup_; }
  double step_size() const { return config_.step_size; }
  long divergences() const { return divergences_; }
  long saturations() const { return saturations_; }
  double mean_accept() const { return accept_count_ == 0 ? 0.0 : accept_sum_ / accept_count_; }

 private:
  ValueGradFn f_;
  HmcConfig config_;
  PhasePoint point_;
  std::mt19937_64 rng_;
  long warmup_, iter_ = 0;
  DualAveraging da_;
  long divergences_ = 0, saturations_ = 0;
  double accept_sum_ = 0.0;  // post-warmup
  long accept_count_ = 0;
};

/// Warmup (adapt_steps iterations, default iters/2) followed by `iters`
/// recorded transitions. Deterministic given config.seed.
ChainResult run_chain(const ValueGradFn& f, const Eigen::VectorXd& init, long iters,
                      const HmcConfig& config);
ChainResult run_chain(const DensityFn& density, const GradientFn& gradient,
                      const Eigen::VectorXd& init, long iters, const HmcConfig& config);

}  // namespace pseudoext
