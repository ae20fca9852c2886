#include "pseudoext/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "pseudoext/baselines.hpp"
#include "pseudoext/diagnostics.hpp"
#include "pseudoext/horseshoe.hpp"
#include "pseudoext/rng.hpp"
#include "pseudoext/toy_targets.hpp"

namespace pseudoext {

int configured_thread_count() {
  int n = omp_get_max_threads();
  if (const char* env = std::getenv("PSEUDOEXT_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

// ---------------------------------------------------------------------------
// Drivers
// ---------------------------------------------------------------------------

WeightedSampleSet run_plain_hmc(const TargetDensity& target, long iters, long warmup,
                                HmcConfig config, std::optional<Eigen::VectorXd> init) {
  if (!init) {
    auto init_rng = make_rng(config.seed, kInitStream);
    init = draw_uniform_init(init_rng, target.dim);
  }
  config.adapt_steps = warmup;
  ValueGradFn f = [target](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double phi = eval_potential_gradient(target, x, g);
    g = -g;
    return -phi;
  };
  const ChainResult chain = run_chain(f, *init, iters, config);

  WeightedSampleSet out;
  out.dim = target.dim;
  out.pseudo = 1;
  out.method = "hmc";
  out.seed = config.seed;
  out.acceptance_rate = chain.accept_rate;
  const auto T = static_cast<long>(chain.states.size());
  out.draws.resize(T, target.dim);
  for (long t = 0; t < T; ++t) out.draws.row(t) = chain.states[static_cast<std::size_t>(t)];
  out.log_weights = Eigen::MatrixXd::Zero(T, 1);
  return out;
}

WeightedSampleSet run_pe_hmc(const TargetDensity& target, const InstrumentalDistribution& q,
                             int pseudo, long iters, long warmup, HmcConfig config,
                             std::optional<Eigen::VectorXd> init) {
  if (!init) {
    auto init_rng = make_rng(config.seed, kInitStream);
    init = draw_uniform_init(init_rng, static_cast<Eigen::Index>(pseudo) * target.dim);
  }
  config.adapt_steps = warmup;
  const ChainResult chain = run_chain(make_extended_valuegrad(target, q, pseudo), *init, iters, config);

  WeightedSampleSet out;
  out.dim = target.dim;
  out.pseudo = pseudo;
  out.method = "pe-hmc";
  out.seed = config.seed;
  out.acceptance_rate = chain.accept_rate;
  const auto T = static_cast<long>(chain.states.size());
  out.draws.resize(T * pseudo, target.dim);
  out.log_weights.resize(T, pseudo);
  for (long t = 0; t < T; ++t) {
    const ExtendedState s =
        unpack_plain(chain.states[static_cast<std::size_t>(t)], pseudo, target.dim);
    out.log_weights.row(t) = posthoc_log_weights(s, target, q);
    for (int i = 0; i < pseudo; ++i)
      out.draws.row(t * pseudo + i) = s.xs[static_cast<std::size_t>(i)];
  }
  return out;
}

WeightedSampleSet run_pe_hmc(const TemperedExtendedTarget& target, long iters, long warmup,
                             HmcConfig config, std::optional<Eigen::VectorXd> init) {
  const int pseudo = target.pseudo_count;
  const int dim = target.base.dim;
  if (!init) {
    auto init_rng = make_rng(config.seed, kInitStream);
    init = draw_uniform_init(init_rng, static_cast<Eigen::Index>(pseudo) * (dim + 1));
  }
  config.adapt_steps = warmup;
  const ChainResult chain = run_chain(make_tempered_valuegrad(target), *init, iters, config);

  WeightedSampleSet out;
  out.dim = dim;
  out.pseudo = pseudo;
  out.method = "pe-hmc";
  out.seed = config.seed;
  out.acceptance_rate = chain.accept_rate;
  const auto T = static_cast<long>(chain.states.size());
  out.draws.resize(T * pseudo, dim);
  out.log_weights.resize(T, pseudo);
  out.betas.resize(T, pseudo);
  for (long t = 0; t < T; ++t) {
    const ExtendedState s =
        unpack_tempered(chain.states[static_cast<std::size_t>(t)], pseudo, dim);
    out.log_weights.row(t) = posthoc_log_weights(s, target);
    const auto betas = s.betas();
    for (int i = 0; i < pseudo; ++i) {
      out.draws.row(t * pseudo + i) = s.xs[static_cast<std::size_t>(i)];
      out.betas(t, i) = betas[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mode coverage
// ---------------------------------------------------------------------------

int ModeCoverage::covered(double threshold) const {
  int n = 0;
  for (Eigen::Index j = 0; j < mass.size(); ++j) n += mass[j] >= threshold;
  return n;
}

ModeCoverage mode_coverage(const WeightedSampleSet& set, const MixtureSpec& spec,
                           double radius_sigmas) {
  ModeCoverage cov;
  cov.mass = Eigen::VectorXd::Zero(spec.components());
  if (set.iterations() == 0) return cov;

  // Global self-normalization over all pooled draws.
  Eigen::Map<const Eigen::VectorXd> flat(set.log_weights.data(), set.log_weights.size());
  const double lse = logsumexp(flat);
  for (long t = 0; t < set.iterations(); ++t)
    for (int i = 0; i < set.pseudo; ++i) {
      const double w = std::exp(set.log_weights(t, i) - lse);
      const Eigen::VectorXd x = set.draw(t, i);
      int best = 0;
      double best_dist = (x - spec.means[0]).norm();
      for (int j = 1; j < spec.components(); ++j) {
        const double d = (x - spec.means[static_cast<std::size_t>(j)]).norm();
        if (d < best_dist) {
          best_dist = d;
          best = j;
        }
      }
      if (best_dist <= radius_sigmas * std::sqrt(spec.variances[best]))
        cov.mass[best] += w;
      else
        cov.unassigned += w;
    }
  return cov;
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
  static const char* kMethods[] = {"hmc", "pe-hmc", "pt", "st", "ais"};
  if (std::find(std::begin(kMethods), std::end(kMethods), method) == std::end(kMethods))
    throw std::invalid_argument("config: unknown method '" + method + "'");
  if (!target.contains("kind")) throw std::invalid_argument("config: target.kind missing");
  if (method == "pe-hmc" && pseudo_samples < 1)
    throw std::invalid_argument("config: pe-hmc needs N >= 1");
  if (iters < 0 || replications < 1) throw std::invalid_argument("config: bad iters/replications");
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["target"] = target;
  j["method"] = method;
  j["N"] = pseudo_samples;
  j["iters"] = iters;
  j["warmup"] = warmup;
  j["replications"] = replications;
  j["seed"] = seed;
  j["write_samples"] = write_samples;
  if (!instrumental.is_null()) j["instrumental"] = instrumental;
  j["ladder_rungs"] = ladder_rungs;
  j["ladder_kind"] = ladder_kind;
  j["ladder_beta_min"] = ladder_beta_min;
  j["swap_every"] = swap_every;
  j["ais_particles"] = ais_particles;
  j["ais_kernel_steps"] = ais_kernel_steps;
  j["target_accept"] = target_accept;
  j["max_tree_depth"] = max_tree_depth;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.target = j.at("target");
  c.method = j.value("method", c.method);
  c.pseudo_samples = j.value("N", c.pseudo_samples);
  c.iters = j.value("iters", c.iters);
  c.warmup = j.value("warmup", c.warmup);
  c.replications = j.value("replications", c.replications);
  c.seed = j.value("seed", c.seed);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.write_samples = j.value("write_samples", c.write_samples);
  if (j.contains("instrumental")) c.instrumental = j.at("instrumental");
  c.ladder_rungs = j.value("ladder_rungs", c.ladder_rungs);
  c.ladder_kind = j.value("ladder_kind", c.ladder_kind);
  c.ladder_beta_min = j.value("ladder_beta_min", c.ladder_beta_min);
  c.swap_every = j.value("swap_every", c.swap_every);
  c.ais_particles = j.value("ais_particles", c.ais_particles);
  c.ais_kernel_steps = j.value("ais_kernel_steps", c.ais_kernel_steps);
  c.target_accept = j.value("target_accept", c.target_accept);
  c.max_tree_depth = j.value("max_tree_depth", c.max_tree_depth);
  c.data_dir = j.value("data_dir", c.data_dir);
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

// ---------------------------------------------------------------------------
// Target construction
// ---------------------------------------------------------------------------

TargetBundle build_target(const nlohmann::json& spec, const std::string& data_dir) {
  const std::string kind = spec.at("kind").get<std::string>();
  TargetBundle bundle;
  auto set_mixture = [&](MixtureSpec m) {
    bundle.target = build_mixture_target(m);
    bundle.truth_first = m.mean();
    bundle.truth_second = m.second_moment();
    bundle.mixture = std::move(m);
  };

  if (kind == "mixture") {
    set_mixture(spec.contains("path") ? MixtureSpec::from_json_file(spec.at("path"))
                                      : MixtureSpec::from_json(spec));
  } else if (kind == "mixture20") {
    const std::string scenario = spec.value("scenario", "a");
    const std::string means_path =
        spec.value("means_path", data_dir + "/mixture20_means.json");
    const auto sc = scenario == "a" ? Mixture20Scenario::A : Mixture20Scenario::B;
    set_mixture(load_checked_scenario(means_path, sc));
    std::ifstream ref(data_dir + "/reference_moments.json");
    if (ref) {
      nlohmann::json r;
      ref >> r;
      bundle.reference = r.value(scenario == "a" ? "mixture20_a" : "mixture20_b",
                                 nlohmann::json());
    }
  } else if (kind == "banana") {
    bundle.target = build_banana_target(spec.value("b", 0.1), spec.value("nu", 100.0));
  } else if (kind == "flower") {
    bundle.target = build_flower_target(spec.value("r", 10.0), spec.value("A", 6.0),
                                        spec.value("omega", 6.0), spec.value("sigma", 1.0));
  } else if (kind == "horseshoe") {
    const HorseshoeModel model = make_synthetic_horseshoe(
        spec.value("n", 50), spec.value("p", 20), spec.value("active", 3),
        spec.value("magnitude", 3.0), spec.value("data_seed", 42), spec.value("slab_scale", 2.0));
    bundle.target = build_horseshoe_target(model);
  } else if (kind == "boltzmann") {
    BoltzmannRelaxation relax =
        spec.contains("path")
            ? BoltzmannRelaxation::from_json_file(spec.at("path"))
            : generate_relaxation(spec.value("relax_seed", 1), spec.value("d_b", 10),
                                  spec.value("lambda1", 6.0), spec.value("lambda2", 2.0));
    bundle.target = relaxation_target(relax);
    if (relax.spin_count <= kEnumerationCap) {
      const BoltzmannMoments mom = enumerate_exact(relax);
      bundle.truth_first = mom.mean_x;
      bundle.truth_second = mom.second_x.diagonal();
    }
    bundle.relaxation = std::move(relax);
  } else {
    throw std::invalid_argument("config: unknown target kind '" + kind + "'");
  }
  return bundle;
}

// ---------------------------------------------------------------------------
// run_experiment
// ---------------------------------------------------------------------------

namespace {

WeightedSampleSet run_method(const ExperimentConfig& cfg, const TargetBundle& bundle,
                             std::uint64_t rep_seed) {
  const long warmup = cfg.warmup >= 0 ? cfg.warmup : cfg.iters / 2;
  HmcConfig kernel;
  kernel.seed = rep_seed;
  kernel.target_accept = cfg.target_accept;
  kernel.max_tree_depth = cfg.max_tree_depth;

  if (cfg.method == "hmc") return run_plain_hmc(bundle.target, cfg.iters, warmup, kernel);

  if (cfg.method == "pe-hmc") {
    const std::string ikind =
        cfg.instrumental.is_null() ? "tempered" : cfg.instrumental.value("kind", "tempered");
    if (ikind == "tempered") {
      TemperedExtendedTarget tgt;
      tgt.base = bundle.target;
      tgt.pseudo_count = cfg.pseudo_samples;
      return run_pe_hmc(tgt, cfg.iters, warmup, kernel);
    }
    if (ikind == "normal") {
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(bundle.target.dim);
      if (cfg.instrumental.contains("mean")) {
        const auto m = cfg.instrumental.at("mean").get<std::vector<double>>();
        mean = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
      }
      const auto q = gaussian_instrumental(mean, cfg.instrumental.value("variance", 2.0));
      return run_pe_hmc(bundle.target, q, cfg.pseudo_samples, cfg.iters, warmup, kernel);
    }
    throw std::invalid_argument("config: unknown instrumental kind '" + ikind + "'");
  }

  if (cfg.method == "pt") {
    const long rungs = cfg.ladder_rungs > 0 ? cfg.ladder_rungs : 10;
    const auto ladder = cfg.ladder_kind == "uniform"
                            ? TemperatureLadder::uniform(rungs, cfg.ladder_beta_min)
                            : TemperatureLadder::geometric(rungs, cfg.ladder_beta_min);
    return parallel_tempering(bundle.target, ladder, kernel, cfg.iters, warmup, cfg.swap_every,
                              rep_seed);
  }
  if (cfg.method == "st") {
    const long rungs = cfg.ladder_rungs > 0 ? cfg.ladder_rungs : 1000;
    const auto ladder = cfg.ladder_kind == "geometric"
                            ? TemperatureLadder::geometric(rungs, cfg.ladder_beta_min)
                            : TemperatureLadder::uniform(rungs, cfg.ladder_beta_min);
    return simulated_tempering(bundle.target, ladder, Eigen::VectorXd(), cfg.iters, warmup,
                               kernel, rep_seed);
  }
  if (cfg.method == "ais") {
    const long rungs = cfg.ladder_rungs > 0 ? cfg.ladder_rungs : 1000;
    const auto ladder = TemperatureLadder::uniform(rungs, 1.0 / static_cast<double>(rungs));
    HmcConfig ais_kernel = kernel;
    ais_kernel.step_size = 0.2;
    ais_kernel.num_leapfrog = 5;
    return annealed_importance_sampling(bundle.target, standard_normal_base(bundle.target.dim),
                                        ladder, ais_kernel, cfg.ais_particles,
                                        cfg.ais_kernel_steps, rep_seed);
  }
  throw std::invalid_argument("config: unknown method '" + cfg.method + "'");
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  return v.size() == 0 ? nlohmann::json() : nlohmann::json(to_std(v));
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const TargetBundle bundle = build_target(config.target, config.data_dir);
  const int dim = bundle.target.dim;

  ExperimentReport report;
  report.config = config;
  report.truth_first = bundle.truth_first;
  report.truth_second = bundle.truth_second;
  report.reference = bundle.reference;
  report.replications.resize(static_cast<std::size_t>(config.replications));

  if (!config.out_dir.empty()) std::filesystem::create_directories(config.out_dir);

  const int threads = std::min(configured_thread_count(), config.replications);
  std::vector<std::string> errors(static_cast<std::size_t>(config.replications));
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int rep = 0; rep < config.replications; ++rep) {
    auto& result = report.replications[static_cast<std::size_t>(rep)];
    try {
      const std::uint64_t rep_seed = config.seed + static_cast<std::uint64_t>(rep);
      result.seed = rep_seed;
      const double t0 = omp_get_wtime();
      const WeightedSampleSet set = run_method(config, bundle, rep_seed);
      result.seconds = omp_get_wtime() - t0;
      result.acceptance_rate = set.acceptance_rate;

      result.first_moment.resize(dim);
      result.second_moment.resize(dim);
      if (set.iterations() > 0) {
        for (int k = 0; k < dim; ++k) {
          result.first_moment[k] =
              weighted_expectation(set, [k](const Eigen::VectorXd& x) { return x[k]; });
          result.second_moment[k] =
              weighted_expectation(set, [k](const Eigen::VectorXd& x) { return x[k] * x[k]; });
        }
        const Eigen::VectorXd series =
            per_iteration_estimates(set, [](const Eigen::VectorXd& x) { return x[0]; });
        if (series.size() >= 10)
          result.ess = compute_ess({series.data(), series.data() + series.size()}).value;
      } else {
        result.first_moment.setConstant(kNaN);
        result.second_moment.setConstant(kNaN);
      }
      if (bundle.mixture) result.coverage = mode_coverage(set, *bundle.mixture);
      if (!config.out_dir.empty() && config.write_samples)
        write_csv(set, config.out_dir + "/samples_" + std::to_string(rep) + ".csv");
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(rep)] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error("replication failed: " + e);

  // Deterministic aggregation in replication order.
  const int R = config.replications;
  report.mean_first = Eigen::VectorXd::Zero(dim);
  report.mean_second = Eigen::VectorXd::Zero(dim);
  for (const auto& r : report.replications) {
    report.mean_first += r.first_moment;
    report.mean_second += r.second_moment;
  }
  report.mean_first /= R;
  report.mean_second /= R;
  report.sd_first = Eigen::VectorXd::Zero(dim);
  report.sd_second = Eigen::VectorXd::Zero(dim);
  if (R > 1) {
    for (const auto& r : report.replications) {
      report.sd_first += (r.first_moment - report.mean_first).array().square().matrix();
      report.sd_second += (r.second_moment - report.mean_second).array().square().matrix();
    }
    report.sd_first = (report.sd_first / (R - 1)).cwiseSqrt();
    report.sd_second = (report.sd_second / (R - 1)).cwiseSqrt();
  }

  report.mean_seconds = 0.0;
  for (const auto& r : report.replications) report.mean_seconds += r.seconds;
  report.mean_seconds /= R;

  if (bundle.truth_first.size() > 0) {
    std::vector<Eigen::VectorXd> firsts, seconds, alls;
    Eigen::VectorXd truth_all(2 * dim);
    truth_all << bundle.truth_first, bundle.truth_second;
    for (const auto& r : report.replications) {
      firsts.push_back(r.first_moment);
      seconds.push_back(r.second_moment);
      Eigen::VectorXd all(2 * dim);
      all << r.first_moment, r.second_moment;
      alls.push_back(all);
    }
    report.rmse_first = compute_rmse(firsts, bundle.truth_first);
    report.rmse_second = compute_rmse(seconds, bundle.truth_second);
    report.rmse_all = compute_rmse(alls, truth_all);
    report.mse_all = report.rmse_all * report.rmse_all;
    report.mse_ct = report.mse_all * report.mean_seconds;
  }

  if (!config.out_dir.empty()) {
    std::ofstream out(config.out_dir + "/report.json");
    out << report.to_json().dump(1) << "\n";
    std::ofstream timing(config.out_dir + "/timing.json");
    timing << report.timing_json().dump(1) << "\n";
  }
  return report;
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json j;
  j["config"] = config.to_json();
  j["truth_first"] = vec_json(truth_first);
  j["truth_second"] = vec_json(truth_second);
  if (!reference.is_null()) j["reference"] = reference;
  j["replications"] = nlohmann::json::array();
  for (const auto& r : replications) {
    nlohmann::json rj;
    rj["seed"] = r.seed;
    rj["first_moment"] = vec_json(r.first_moment);
    rj["second_moment"] = vec_json(r.second_moment);
    rj["acceptance_rate"] = r.acceptance_rate;
    rj["ess"] = r.ess;
    if (r.coverage) {
      rj["mode_mass"] = to_std(r.coverage->mass);
      rj["modes_covered"] = r.coverage->covered();
      rj["unassigned_mass"] = r.coverage->unassigned;
    }
    j["replications"].push_back(rj);
  }
  j["mean_first"] = vec_json(mean_first);
  j["sd_first"] = vec_json(sd_first);
  j["mean_second"] = vec_json(mean_second);
  j["sd_second"] = vec_json(sd_second);
  j["rmse_first"] = rmse_first;
  j["rmse_second"] = rmse_second;
  j["rmse_all"] = rmse_all;
  if (std::isfinite(rmse_all)) j["log_rmse_all"] = std::log(rmse_all);
  return j;
}

nlohmann::json ExperimentReport::timing_json() const {
  nlohmann::json j;
  std::vector<double> secs;
  for (const auto& r : replications) secs.push_back(r.seconds);
  j["seconds_per_replication"] = secs;
  j["mean_seconds"] = mean_seconds;
  j["mse_all"] = mse_all;
  j["mse_ct"] = mse_ct;
  return j;
}

}  // namespace pseudoext
