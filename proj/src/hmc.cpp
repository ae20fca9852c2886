#include "pseudoext/hmc.hpp"

#include <cmath>
#include <stdexcept>

#include "pseudoext/numerics.hpp"
#include "pseudoext/rng.hpp"

namespace pseudoext {

namespace {

constexpr double kDivergenceThreshold = 1000.0;

Eigen::VectorXd unit_mass(const Eigen::VectorXd& mass_diag, Eigen::Index dim) {
  if (mass_diag.size() == 0) return Eigen::VectorXd::Ones(dim);
  if (mass_diag.size() != dim) throw std::invalid_argument("hmc: mass vector has wrong length");
  if ((mass_diag.array() <= 0.0).any())
    throw std::invalid_argument("hmc: mass entries must be positive");
  return mass_diag;
}

double kinetic_energy(const Eigen::VectorXd& momentum, const Eigen::VectorXd& mass) {
  return 0.5 * (momentum.array().square() / mass.array()).sum();
}

Eigen::VectorXd sample_momentum(std::mt19937_64& rng, const Eigen::VectorXd& mass) {
  Eigen::VectorXd rho(mass.size());
  for (Eigen::Index i = 0; i < mass.size(); ++i)
    rho[i] = std::sqrt(mass[i]) * draw_normal(rng);
  return rho;
}

// One leapfrog step reusing the cached gradient at the start point; a single
// fused evaluation at the end point.
bool leapfrog_step(const ValueGradFn& f, const PhasePoint& from, const Eigen::VectorXd& rho,
                   double eps, const Eigen::VectorXd& mass, PhasePoint& to,
                   Eigen::VectorXd& rho_out) {
  const Eigen::VectorXd rho_half = rho + 0.5 * eps * from.grad;
  to.position = from.position + eps * (rho_half.array() / mass.array()).matrix();
  if (!to.position.allFinite()) return false;
  to.grad.resize(to.position.size());
  to.log_density = f(to.position, to.grad);
  if (!std::isfinite(to.log_density) || !to.grad.allFinite()) return false;
  rho_out = rho_half + 0.5 * eps * to.grad;
  return rho_out.allFinite();
}

}  // namespace

ValueGradFn fuse(DensityFn density, GradientFn gradient) {
  return [density = std::move(density), gradient = std::move(gradient)](
             const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    grad = gradient(x);
    return density(x);
  };
}

PhasePoint evaluate_point(const ValueGradFn& f, Eigen::VectorXd position) {
  PhasePoint p;
  p.position = std::move(position);
  p.grad.resize(p.position.size());
  p.log_density = f(p.position, p.grad);
  return p;
}

LeapfrogResult leapfrog(const Eigen::VectorXd& position, const Eigen::VectorXd& momentum,
                        double eps, int steps, const GradientFn& grad,
                        const Eigen::VectorXd& mass_diag) {
  const Eigen::VectorXd mass = unit_mass(mass_diag, position.size());
  LeapfrogResult r{position, momentum, false};
  for (int l = 0; l < steps; ++l) {
    r.momentum += 0.5 * eps * grad(r.position);
    r.position += eps * (r.momentum.array() / mass.array()).matrix();
    r.momentum += 0.5 * eps * grad(r.position);
    if (!r.position.allFinite() || !r.momentum.allFinite()) {
      r.diverged = true;
      return r;
    }
  }
  return r;
}

StepResult hmc_transition(PhasePoint& current, const ValueGradFn& f, const HmcConfig& config,
                          std::mt19937_64& rng) {
  const Eigen::VectorXd mass = unit_mass(config.mass_diag, current.position.size());
  const Eigen::VectorXd rho0 = sample_momentum(rng, mass);
  const double h0 = -current.log_density + kinetic_energy(rho0, mass);

  StepResult out;
  PhasePoint pos = current;
  Eigen::VectorXd rho = rho0;
  for (int l = 0; l < config.num_leapfrog; ++l) {
    PhasePoint next;
    Eigen::VectorXd rho_next;
    if (!leapfrog_step(f, pos, rho, config.step_size, mass, next, rho_next)) {
      out.divergent = true;
      return out;
    }
    pos = std::move(next);
    rho = std::move(rho_next);
  }
  const double h1 = -pos.log_density + kinetic_energy(rho, mass);
  out.delta_h = h1 - h0;
  if (!std::isfinite(out.delta_h) || std::abs(out.delta_h) > kDivergenceThreshold) {
    out.divergent = true;
    return out;
  }
  out.accept_stat = std::min(1.0, std::exp(-out.delta_h));
  if (draw_uniform(rng) < out.accept_stat) {
    current = std::move(pos);
    out.accepted = true;
  }
  return out;
}

namespace {

// Multinomial NUTS internals. Tree weights are log sums of exp(h0 - H) over
// the states in a subtree; boundaries carry cached gradients so trajectory
// extension costs one fused evaluation per leapfrog step.
struct TreeEdge {
  PhasePoint point;
  Eigen::VectorXd momentum;
};

struct Tree {
  TreeEdge minus, plus;
  PhasePoint sample;
  double log_sum_weight = kNegInf;
  double sum_alpha = 0.0;
  long n_alpha = 0;
  bool invalid = false;  // divergence or internal U-turn
};

struct NutsContext {
  const ValueGradFn& f;
  const Eigen::VectorXd& mass;
  double eps;
  double h0;
  std::mt19937_64& rng;
  bool divergent = false;
};

bool u_turn(const TreeEdge& minus, const TreeEdge& plus, const Eigen::VectorXd& mass) {
  const Eigen::VectorXd dy = plus.point.position - minus.point.position;
  return dy.dot((minus.momentum.array() / mass.array()).matrix()) < 0.0 ||
         dy.dot((plus.momentum.array() / mass.array()).matrix()) < 0.0;
}

Tree build_tree(NutsContext& ctx, int depth, const TreeEdge& edge, int direction) {
  if (depth == 0) {
    Tree leaf;
    leaf.n_alpha = 1;
    PhasePoint next;
    Eigen::VectorXd rho_next;
    if (!leapfrog_step(ctx.f, edge.point, edge.momentum, direction * ctx.eps, ctx.mass, next,
                       rho_next)) {
      ctx.divergent = true;
      leaf.invalid = true;
      return leaf;
    }
    const double h = -next.log_density + kinetic_energy(rho_next, ctx.mass);
    const double dh = h - ctx.h0;
    if (!std::isfinite(dh) || dh > kDivergenceThreshold) {
      ctx.divergent = true;
      leaf.invalid = true;
      return leaf;
    }
    leaf.sample = next;
    leaf.minus = {next, rho_next};
    leaf.plus = {std::move(next), std::move(rho_next)};
    leaf.log_sum_weight = -dh;
    leaf.sum_alpha = std::min(1.0, std::exp(-dh));
    return leaf;
  }

  Tree first = build_tree(ctx, depth - 1, edge, direction);
  if (first.invalid) return first;
  Tree second = build_tree(ctx, depth - 1, direction > 0 ? first.plus : first.minus, direction);
  first.sum_alpha += second.sum_alpha;
  first.n_alpha += second.n_alpha;
  if (second.invalid) {
    first.invalid = true;
    return first;
  }

  // Unbiased multinomial merge inside the subtree.
  const double total =
      logsumexp(Eigen::Vector2d(first.log_sum_weight, second.log_sum_weight));
  if (std::isfinite(total) && std::log(draw_uniform(ctx.rng)) < second.log_sum_weight - total)
    first.sample = std::move(second.sample);
  first.log_sum_weight = total;
  if (direction > 0)
    first.plus = std::move(second.plus);
  else
    first.minus = std::move(second.minus);
  if (u_turn(first.minus, first.plus, ctx.mass)) first.invalid = true;
  return first;
}

}  // namespace

StepResult nuts_transition(PhasePoint& current, const ValueGradFn& f, const HmcConfig& config,
                           std::mt19937_64& rng) {
  const Eigen::VectorXd mass = unit_mass(config.mass_diag, current.position.size());
  const Eigen::VectorXd rho = sample_momentum(rng, mass);
  const double h0 = -current.log_density + kinetic_energy(rho, mass);
  NutsContext ctx{f, mass, config.step_size, h0, rng};

  Tree tree;
  tree.minus = {current, rho};
  tree.plus = {current, rho};
  tree.sample = current;
  tree.log_sum_weight = 0.0;  // weight of the initial point relative to itself

  StepResult out;
  int depth = 0;
  for (; depth < config.max_tree_depth; ++depth) {
    const int direction = draw_uniform(rng) < 0.5 ? -1 : 1;
    Tree sub = build_tree(ctx, depth, direction > 0 ? tree.plus : tree.minus, direction);
    tree.sum_alpha += sub.sum_alpha;
    tree.n_alpha += sub.n_alpha;
    if (sub.invalid) break;

    // Biased progressive sampling across doublings: favor the new subtree.
    if (std::log(draw_uniform(rng)) < sub.log_sum_weight - tree.log_sum_weight) {
      tree.sample = std::move(sub.sample);
      out.accepted = true;
    }
    tree.log_sum_weight =
        logsumexp(Eigen::Vector2d(tree.log_sum_weight, sub.log_sum_weight));
    if (direction > 0)
      tree.plus = std::move(sub.plus);
    else
      tree.minus = std::move(sub.minus);
    if (u_turn(tree.minus, tree.plus, mass)) {
      ++depth;
      break;
    }
  }
  current = std::move(tree.sample);
  out.depth = depth;
  out.saturated = depth >= config.max_tree_depth;
  out.divergent = ctx.divergent;
  out.accept_stat = tree.n_alpha > 0 ? tree.sum_alpha / static_cast<double>(tree.n_alpha) : 0.0;
  return out;
}

WrappedStep hmc_step(const Eigen::VectorXd& current, const DensityFn& density,
                     const GradientFn& gradient, const HmcConfig& config, std::mt19937_64& rng) {
  const ValueGradFn f = fuse(density, gradient);
  PhasePoint p = evaluate_point(f, current);
  const StepResult stats = hmc_transition(p, f, config, rng);
  return {std::move(p.position), stats};
}

WrappedStep nuts_step(const Eigen::VectorXd& current, const DensityFn& density,
                      const GradientFn& gradient, const HmcConfig& config, std::mt19937_64& rng) {
  const ValueGradFn f = fuse(density, gradient);
  PhasePoint p = evaluate_point(f, current);
  const StepResult stats = nuts_transition(p, f, config, rng);
  return {std::move(p.position), stats};
}

DualAveraging::DualAveraging(double eps_init, double target_accept, double t0, double gamma,
                             double kappa)
    : target_accept_(target_accept),
      t0_(t0),
      gamma_(gamma),
      kappa_(kappa),
      mu_(std::log(10.0 * eps_init)),
      log_eps_(std::log(eps_init)),
      log_eps_bar_(std::log(eps_init)),
      h_bar_(0.0) {}

void DualAveraging::update(double accept_stat) {
  ++iter_;
  const double m = static_cast<double>(iter_);
  const double prop = 1.0 / (m + t0_);
  h_bar_ = (1.0 - prop) * h_bar_ + prop * (target_accept_ - accept_stat);
  log_eps_ = mu_ - std::sqrt(m) / gamma_ * h_bar_;
  const double w = std::pow(m, -kappa_);
  log_eps_bar_ = w * log_eps_ + (1.0 - w) * log_eps_bar_;
}

double find_reasonable_epsilon(const ValueGradFn& f, const PhasePoint& start,
                               const Eigen::VectorXd& mass_diag, std::mt19937_64& rng) {
  const Eigen::VectorXd mass = unit_mass(mass_diag, start.position.size());
  double eps = 1.0;
  const Eigen::VectorXd rho = sample_momentum(rng, mass);
  const double h0 = -start.log_density + kinetic_energy(rho, mass);
  auto accept_prob = [&](double e) {
    PhasePoint next;
    Eigen::VectorXd rho_next;
    if (!leapfrog_step(f, start, rho, e, mass, next, rho_next)) return 0.0;
    const double h1 = -next.log_density + kinetic_energy(rho_next, mass);
    return std::isfinite(h1) ? std::exp(std::min(0.0, h0 - h1)) : 0.0;
  };
  double p = accept_prob(eps);
  const double dir = p > 0.5 ? 2.0 : 0.5;
  for (int i = 0; i < 50; ++i) {
    eps *= dir;
    p = accept_prob(eps);
    if ((dir > 1.0 && p <= 0.5) || (dir < 1.0 && p >= 0.5)) break;
    if (eps < 1e-12 || eps > 1e6) break;
  }
  return eps;
}

ChainRunner::ChainRunner(ValueGradFn f, Eigen::VectorXd init, HmcConfig config, long warmup,
                         std::mt19937_64 rng)
    : f_(std::move(f)),
      config_(std::move(config)),
      point_(evaluate_point(f_, std::move(init))),
      rng_(rng),
      warmup_(warmup),
      da_(1.0, config_.target_accept) {
  if (!point_.position.allFinite()) throw std::invalid_argument("hmc: non-finite initial state");
  if (config_.adapt_step_size && warmup_ > 0) {
    config_.step_size = find_reasonable_epsilon(f_, point_, config_.mass_diag, rng_);
    da_ = DualAveraging(config_.step_size, config_.target_accept);
  }
}

StepResult ChainRunner::advance() {
  StepResult step = config_.use_nuts ? nuts_transition(point_, f_, config_, rng_)
                                     : hmc_transition(point_, f_, config_, rng_);
  if (step.divergent) ++divergences_;
  if (step.saturated) ++saturations_;
  if (iter_ < warmup_) {
    if (config_.adapt_step_size) {
      da_.update(step.accept_stat);
      config_.step_size = da_.current();
      if (iter_ + 1 == warmup_) config_.step_size = da_.averaged();
    }
  } else {
    accept_sum_ += config_.use_nuts ? step.accept_stat : (step.accepted ? 1.0 : 0.0);
    ++accept_count_;
  }
  ++iter_;
  return step;
}

ChainResult run_chain(const ValueGradFn& f, const Eigen::VectorXd& init, long iters,
                      const HmcConfig& config) {
  const long warmup = config.adapt_steps >= 0 ? config.adapt_steps : iters / 2;
  ChainRunner runner(f, init, config, warmup, make_rng(config.seed, 0));
  for (long t = 0; t < warmup; ++t) runner.advance();
  ChainResult result;
  result.states.reserve(static_cast<std::size_t>(iters));
  for (long t = 0; t < iters; ++t) {
    runner.advance();
    result.states.push_back(runner.state());
  }
  result.accept_rate = iters > 0 ? runner.mean_accept() : kNaN;
  result.adapted_eps = runner.step_size();
  result.divergence_count = runner.divergences();
  result.saturation_count = runner.saturations();
  return result;
}

ChainResult run_chain(const DensityFn& density, const GradientFn& gradient,
                      const Eigen::VectorXd& init, long iters, const HmcConfig& config) {
  return run_chain(fuse(density, gradient), init, iters, config);
}

}  // namespace pseudoext
