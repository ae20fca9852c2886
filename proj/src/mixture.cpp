#include "pseudoext/mixture.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "pseudoext/numerics.hpp"

namespace pseudoext {

void MixtureSpec::validate() const {
  if (means.empty()) throw std::invalid_argument("mixture: component list is empty");
  const auto k = static_cast<Eigen::Index>(means.size());
  if (weights.size() != k || variances.size() != k)
    throw std::invalid_argument("mixture: weights/variances length mismatch");
  const Eigen::Index d = means.front().size();
  for (const auto& m : means)
    if (m.size() != d) throw std::invalid_argument("mixture: ragged component means");
  if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("mixture: weights are not a simplex vector");
  if ((variances.array() <= 0.0).any())
    throw std::invalid_argument("mixture: variances must be strictly positive");
}

Eigen::VectorXd MixtureSpec::mean() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(dim());
  for (int j = 0; j < components(); ++j) m += weights[j] * means[j];
  return m;
}

Eigen::VectorXd MixtureSpec::second_moment() const {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(dim());
  for (int j = 0; j < components(); ++j)
    s += weights[j] * (means[j].array().square() + variances[j]).matrix();
  return s;
}

nlohmann::json MixtureSpec::to_json() const {
  nlohmann::json j;
  j["means"] = nlohmann::json::array();
  for (const auto& m : means) {
    std::vector<double> row(m.data(), m.data() + m.size());
    j["means"].push_back(row);
  }
  j["weights"] = std::vector<double>(weights.data(), weights.data() + weights.size());
  j["variances"] = std::vector<double>(variances.data(), variances.data() + variances.size());
  return j;
}

MixtureSpec MixtureSpec::from_json(const nlohmann::json& j) {
  MixtureSpec spec;
  for (const auto& row : j.at("means")) {
    Eigen::VectorXd m(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) m[static_cast<Eigen::Index>(i)] = row[i].get<double>();
    spec.means.push_back(std::move(m));
  }
  const auto w = j.at("weights").get<std::vector<double>>();
  const auto v = j.at("variances").get<std::vector<double>>();
  spec.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  spec.variances = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  spec.validate();
  return spec;
}

MixtureSpec MixtureSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("mixture: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

void MixtureSpec::to_json_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("mixture: cannot write " + path);
  out << to_json().dump(1) << "\n";
}

TargetDensity build_mixture_target(const MixtureSpec& spec) {
  spec.validate();
  const int d = spec.dim();
  const int k = spec.components();

  // Per-component constants: log w_j - (d/2) log(2 pi sigma_j^2).
  Eigen::VectorXd log_const(k);
  for (int j = 0; j < k; ++j)
    log_const[j] = std::log(spec.weights[j]) -
                   0.5 * d * std::log(2.0 * std::numbers::pi * spec.variances[j]);

  auto component_logs = [spec, log_const](const Eigen::VectorXd& x) {
    Eigen::VectorXd logs(static_cast<Eigen::Index>(spec.means.size()));
    for (Eigen::Index j = 0; j < logs.size(); ++j)
      logs[j] = log_const[j] - (x - spec.means[static_cast<std::size_t>(j)]).squaredNorm() /
                                   (2.0 * spec.variances[j]);
    return logs;
  };

  TargetDensity t;
  t.dim = d;
  t.label = "mixture";
  t.potential = [component_logs](const Eigen::VectorXd& x) {
    return -logsumexp(component_logs(x));
  };
  t.gradient = [spec, component_logs, d](const Eigen::VectorXd& x) {
    const Eigen::VectorXd r = softmax_from_log(component_logs(x));
    Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
    for (Eigen::Index j = 0; j < r.size(); ++j)
      g += r[j] / spec.variances[j] * (x - spec.means[static_cast<std::size_t>(j)]);
    return g;
  };
  t.potential_gradient = [spec, component_logs, d](const Eigen::VectorXd& x,
                                                   Eigen::VectorXd& g) {
    const Eigen::VectorXd logs = component_logs(x);
    const double lse = logsumexp(logs);
    g = Eigen::VectorXd::Zero(d);
    for (Eigen::Index j = 0; j < logs.size(); ++j)
      g += std::exp(logs[j] - lse) / spec.variances[j] *
           (x - spec.means[static_cast<std::size_t>(j)]);
    return -lse;
  };
  return t;
}

std::vector<Eigen::VectorXd> load_means_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("mixture: cannot open means file " + path);
  nlohmann::json j;
  in >> j;
  std::vector<Eigen::VectorXd> means;
  for (const auto& row : j.at("means")) {
    Eigen::VectorXd m(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) m[static_cast<Eigen::Index>(i)] = row[i].get<double>();
    means.push_back(std::move(m));
  }
  return means;
}

MixtureSpec build_scenario_mixture(const std::vector<Eigen::VectorXd>& means,
                                   Mixture20Scenario scenario) {
  MixtureSpec spec;
  spec.means = means;
  const auto k = static_cast<Eigen::Index>(means.size());
  spec.weights.resize(k);
  spec.variances.resize(k);
  if (scenario == Mixture20Scenario::A) {
    spec.weights.setConstant(1.0 / static_cast<double>(k));
    spec.variances.setConstant(0.01);
  } else {
    Eigen::Vector2d center(5.0, 5.0);
    for (Eigen::Index j = 0; j < k; ++j) {
      const double dist = (means[static_cast<std::size_t>(j)] - center).norm();
      spec.weights[j] = 1.0 / dist;
      const double sd = dist / 20.0;
      spec.variances[j] = sd * sd;
    }
    spec.weights /= spec.weights.sum();
  }
  spec.validate();
  return spec;
}

std::array<double, 4> scenario_truth(Mixture20Scenario scenario) {
  if (scenario == Mixture20Scenario::A) return {4.478, 4.905, 25.605, 33.920};
  return {4.688, 5.030, 25.558, 31.378};
}

MixtureSpec load_checked_scenario(const std::string& means_path, Mixture20Scenario scenario) {
  MixtureSpec spec = build_scenario_mixture(load_means_file(means_path), scenario);
  const auto truth = scenario_truth(scenario);
  const Eigen::VectorXd m = spec.mean();
  const Eigen::VectorXd s = spec.second_moment();
  const double tol = 6e-4;  // 3 decimal places, allowing for the table's rounding
  if (std::abs(m[0] - truth[0]) > tol || std::abs(m[1] - truth[1]) > tol ||
      std::abs(s[0] - truth[2]) > tol || std::abs(s[1] - truth[3]) > tol)
    throw std::invalid_argument("mixture: means file " + means_path +
                                " fails the scenario moment integrity check");
  return spec;
}

}  // namespace pseudoext
