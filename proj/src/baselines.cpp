#include "pseudoext/baselines.hpp"

#include <cmath>
#include <iostream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "pseudoext/numerics.hpp"
#include "pseudoext/rng.hpp"

namespace pseudoext {

void TemperatureLadder::validate() const {
  if (betas.size() < 1) throw std::invalid_argument("ladder: empty");
  if (betas[0] < 0.0) throw std::invalid_argument("ladder: beta_1 must be >= 0");
  for (Eigen::Index i = 1; i < betas.size(); ++i)
    if (betas[i] <= betas[i - 1])
      throw std::invalid_argument("ladder: betas must be strictly increasing");
  if (betas[betas.size() - 1] != 1.0)
    throw std::invalid_argument("ladder: last rung must be beta = 1");
}

TemperatureLadder TemperatureLadder::uniform(long rungs, double beta_min) {
  TemperatureLadder l;
  l.betas.resize(rungs);
  for (long i = 0; i < rungs; ++i)
    l.betas[i] = rungs == 1
                     ? 1.0
                     : beta_min + (1.0 - beta_min) * static_cast<double>(i) / (rungs - 1);
  l.betas[rungs - 1] = 1.0;
  l.validate();
  return l;
}

TemperatureLadder TemperatureLadder::geometric(long rungs, double beta_min) {
  TemperatureLadder l;
  l.betas.resize(rungs);
  for (long i = 0; i < rungs; ++i)
    l.betas[i] = rungs == 1
                     ? 1.0
                     : beta_min * std::pow(1.0 / beta_min, static_cast<double>(i) / (rungs - 1));
  l.betas[rungs - 1] = 1.0;
  l.validate();
  return l;
}

double swap_log_accept(double beta_lo, double beta_hi, double phi_lo, double phi_hi) {
  return (beta_hi - beta_lo) * (phi_hi - phi_lo);
}

namespace {

ValueGradFn tempered_valuegrad(const TargetDensity& target, double beta) {
  return [target, beta](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double phi = eval_potential_gradient(target, x, g);
    g *= -beta;
    return -beta * phi;
  };
}

}  // namespace

WeightedSampleSet parallel_tempering(const TargetDensity& target, const TemperatureLadder& ladder,
                                     const HmcConfig& kernel, long iters, long warmup,
                                     long swap_every, std::uint64_t seed) {
  ladder.validate();
  const long rungs = ladder.size();
  if (rungs == 1)
    std::cerr << "parallel_tempering: ladder of length 1 degenerates to a plain chain\n";
  if (swap_every < 1) throw std::invalid_argument("parallel_tempering: swap_every must be >= 1");

  std::vector<ChainRunner> chains;
  chains.reserve(static_cast<std::size_t>(rungs));
  for (long t = 0; t < rungs; ++t) {
    auto init_rng = make_rng(seed, kInitStream + static_cast<std::uint64_t>(t));
    Eigen::VectorXd init = draw_uniform_init(init_rng, target.dim);
    HmcConfig cfg = kernel;
    cfg.seed = seed;
    chains.emplace_back(tempered_valuegrad(target, ladder.betas[t]), std::move(init), cfg,
                        warmup, make_rng(seed, static_cast<std::uint64_t>(t)));
  }
  auto swap_rng = make_rng(seed, kSwapStream);

  WeightedSampleSet out;
  out.dim = target.dim;
  out.pseudo = 1;
  out.method = "pt";
  out.seed = seed;
  out.draws.resize(iters, target.dim);
  out.log_weights = Eigen::MatrixXd::Zero(iters, 1);

  const long total = warmup + iters;
  for (long t = 0; t < total; ++t) {
#pragma omp parallel for schedule(static)
    for (long r = 0; r < rungs; ++r) chains[static_cast<std::size_t>(r)].advance();

    if ((t + 1) % swap_every == 0 && rungs > 1) {
      Eigen::VectorXd phis(rungs);
      for (long r = 0; r < rungs; ++r)
        phis[r] = target.potential(chains[static_cast<std::size_t>(r)].state());
      for (long start : {0L, 1L})
        for (long r = start; r + 1 < rungs; r += 2) {
          const double log_a =
              swap_log_accept(ladder.betas[r], ladder.betas[r + 1], phis[r], phis[r + 1]);
          if (std::log(draw_uniform(swap_rng)) < log_a) {
            const Eigen::VectorXd tmp = chains[static_cast<std::size_t>(r)].state();
            chains[static_cast<std::size_t>(r)].set_state(
                chains[static_cast<std::size_t>(r + 1)].state());
            chains[static_cast<std::size_t>(r + 1)].set_state(tmp);
            std::swap(phis[r], phis[r + 1]);
          }
        }
    }
    if (t >= warmup)
      out.draws.row(t - warmup) = chains[static_cast<std::size_t>(rungs - 1)].state();
  }
  out.acceptance_rate = chains[static_cast<std::size_t>(rungs - 1)].mean_accept();
  return out;
}

WeightedSampleSet simulated_tempering(const TargetDensity& target, const TemperatureLadder& ladder,
                                      const Eigen::VectorXd& pseudo_prior, long iters, long warmup,
                                      const HmcConfig& kernel, std::uint64_t seed) {
  ladder.validate();
  const long rungs = ladder.size();
  Eigen::VectorXd log_prior(rungs);
  if (pseudo_prior.size() == 0)
    log_prior.setZero();
  else if (pseudo_prior.size() == rungs)
    log_prior = pseudo_prior.array().log();
  else
    throw std::invalid_argument("simulated_tempering: pseudo-prior length mismatch");

  auto rng = make_rng(seed, 0);
  auto init_rng = make_rng(seed, kInitStream);
  Eigen::VectorXd x = draw_uniform_init(init_rng, target.dim);
  long rung = rungs - 1;  // start at beta = 1

  // Step size is adapted once at the cold rung, then scaled by 1/sqrt(beta)
  // per rung (tempered widths grow as beta^-1/2).
  HmcConfig cfg = kernel;
  cfg.seed = seed;
  {
    ChainRunner cold(tempered_valuegrad(target, 1.0), x, cfg, warmup, make_rng(seed, 1));
    for (long t = 0; t < warmup; ++t) cold.advance();
    cfg.step_size = cold.step_size();
    cfg.adapt_step_size = false;
    x = cold.state();
  }

  std::vector<Eigen::VectorXd> visits;
  Eigen::VectorXd occupancy = Eigen::VectorXd::Zero(rungs);
  double accept_sum = 0.0;
  for (long t = 0; t < iters; ++t) {
    const ValueGradFn f = tempered_valuegrad(target, ladder.betas[rung]);
    HmcConfig rung_cfg = cfg;
    rung_cfg.step_size = cfg.step_size / std::sqrt(ladder.betas[rung]);
    PhasePoint point = evaluate_point(f, x);
    const StepResult step = cfg.use_nuts ? nuts_transition(point, f, rung_cfg, rng)
                                         : hmc_transition(point, f, rung_cfg, rng);
    x = point.position;
    accept_sum += step.accept_stat;

    // Metropolis rung move r -> r +- 1.
    const long proposal = rung + (draw_uniform(rng) < 0.5 ? -1 : 1);
    if (proposal >= 0 && proposal < rungs) {
      const double phi = target.potential(x);
      const double log_a = log_prior[proposal] - log_prior[rung] -
                           (ladder.betas[proposal] - ladder.betas[rung]) * phi;
      if (std::log(draw_uniform(rng)) < log_a) rung = proposal;
    }
    occupancy[rung] += 1.0;
    if (rung == rungs - 1) visits.push_back(x);
  }

  if (visits.empty()) {
    std::ostringstream msg;
    msg << "simulated_tempering: chain never visited beta = 1; rung occupancy:";
    for (long r = 0; r < rungs; ++r) msg << ' ' << occupancy[r] / static_cast<double>(iters);
    throw std::runtime_error(msg.str());
  }

  WeightedSampleSet out;
  out.dim = target.dim;
  out.pseudo = 1;
  out.method = "st";
  out.seed = seed;
  const auto T = static_cast<long>(visits.size());
  out.draws.resize(T, target.dim);
  for (long t = 0; t < T; ++t) out.draws.row(t) = visits[static_cast<std::size_t>(t)];
  out.log_weights = Eigen::MatrixXd::Zero(T, 1);
  out.acceptance_rate = accept_sum / static_cast<double>(iters);
  return out;
}

SampleableBase standard_normal_base(int dim) {
  const double log_norm = 0.5 * dim * std::log(2.0 * std::numbers::pi);
  SampleableBase base;
  base.delta = [log_norm](const Eigen::VectorXd& x) {
    return 0.5 * x.squaredNorm() + log_norm;
  };
  base.grad_delta = [](const Eigen::VectorXd& x) { return x; };
  base.draw = [dim](std::mt19937_64& g) { return draw_normal_vector(g, dim); };
  return base;
}

WeightedSampleSet annealed_importance_sampling(const TargetDensity& target,
                                               const SampleableBase& base,
                                               const TemperatureLadder& ladder,
                                               const HmcConfig& kernel, long n_particles,
                                               int kernel_steps, std::uint64_t seed) {
  ladder.validate();
  // Full path including the exact base at beta = 0.
  std::vector<double> path;
  path.push_back(0.0);
  for (Eigen::Index i = 0; i < ladder.size(); ++i)
    if (ladder.betas[i] > 0.0) path.push_back(ladder.betas[i]);

  std::vector<Eigen::VectorXd> xs(static_cast<std::size_t>(n_particles));
  std::vector<double> logw(static_cast<std::size_t>(n_particles));

#pragma omp parallel for schedule(dynamic)
  for (long p = 0; p < n_particles; ++p) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(p));
    Eigen::VectorXd x = base.draw(rng);
    double lw = 0.0;
    for (std::size_t t = 1; t < path.size(); ++t) {
      const double beta = path[t];
      lw += (beta - path[t - 1]) * (base.delta(x) - target.potential(x));
      if (kernel_steps <= 0) continue;
      const ValueGradFn f = [&](const Eigen::VectorXd& y, Eigen::VectorXd& g) {
        Eigen::VectorXd gphi;
        const double phi = eval_potential_gradient(target, y, gphi);
        g = -(1.0 - beta) * base.grad_delta(y) - beta * gphi;
        return -(1.0 - beta) * base.delta(y) - beta * phi;
      };
      HmcConfig cfg = kernel;
      cfg.adapt_step_size = false;
      PhasePoint point = evaluate_point(f, x);
      for (int k = 0; k < kernel_steps; ++k) hmc_transition(point, f, cfg, rng);
      x = point.position;
    }
    xs[static_cast<std::size_t>(p)] = std::move(x);
    logw[static_cast<std::size_t>(p)] = lw;
  }

  // One iteration row holding all particles; non-finite particles dropped.
  std::vector<long> keep;
  for (long p = 0; p < n_particles; ++p)
    if (std::isfinite(logw[static_cast<std::size_t>(p)]) &&
        xs[static_cast<std::size_t>(p)].allFinite())
      keep.push_back(p);

  WeightedSampleSet out;
  out.dim = target.dim;
  out.method = "ais";
  out.seed = seed;
  out.excluded_count = n_particles - static_cast<long>(keep.size());
  out.pseudo = static_cast<int>(keep.size());
  if (keep.empty()) throw std::runtime_error("ais: all particles had non-finite weights");
  out.draws.resize(static_cast<long>(keep.size()), target.dim);
  out.log_weights.resize(1, static_cast<long>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.draws.row(static_cast<long>(i)) = xs[static_cast<std::size_t>(keep[i])];
    out.log_weights(0, static_cast<long>(i)) = logw[static_cast<std::size_t>(keep[i])];
  }
  out.acceptance_rate = 1.0;
  return out;
}

}  // namespace pseudoext
