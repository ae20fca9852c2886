#include "pseudoext/sample_set.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace pseudoext {

Eigen::VectorXd per_iteration_estimates(const WeightedSampleSet& set,
                                        const std::function<double(const Eigen::VectorXd&)>& f) {
  const long T = set.iterations();
  if (T == 0 || set.draws.rows() == 0)
    throw std::invalid_argument("weighted_expectation: empty sample set");
  Eigen::VectorXd est(T);
  for (long t = 0; t < T; ++t) {
    const Eigen::VectorXd logw = set.log_weights.row(t);
    if (!std::isfinite(logw.maxCoeff()))
      throw std::runtime_error(
          "weighted_expectation: all-(-inf) weight row, degenerate instrumental fit");
    const Eigen::VectorXd w = softmax_from_log(logw);
    double acc = 0.0;
    for (int i = 0; i < set.pseudo; ++i) acc += w[i] * f(set.draw(t, i));
    est[t] = acc;
  }
  return est;
}

double weighted_expectation(const WeightedSampleSet& set,
                            const std::function<double(const Eigen::VectorXd&)>& f) {
  return per_iteration_estimates(set, f).mean();
}

double log_normalizing_estimate(const WeightedSampleSet& set) {
  Eigen::Map<const Eigen::VectorXd> flat(set.log_weights.data(), set.log_weights.size());
  return logsumexp(flat) - std::log(static_cast<double>(set.log_weights.size()));
}

void write_csv(const WeightedSampleSet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << "iter,pseudo_index";
  for (int k = 1; k <= set.dim; ++k) out << ",x_" << k;
  out << ",beta,log_weight\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << ',' << buf;
  };
  for (long t = 0; t < set.iterations(); ++t)
    for (int i = 0; i < set.pseudo; ++i) {
      out << t << ',' << i;
      for (int k = 0; k < set.dim; ++k) put(set.draws(t * set.pseudo + i, k));
      put(set.has_betas() ? set.betas(t, i) : 1.0);
      put(set.log_weights(t, i));
      out << '\n';
    }
}

WeightedSampleSet read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty csv " + path);
  long columns = 1;
  for (char c : line) columns += c == ',';
  const int dim = static_cast<int>(columns - 4);
  if (dim < 1) throw std::invalid_argument("malformed csv header in " + path);

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(std::strtod(field.c_str(), nullptr));
    if (static_cast<long>(row.size()) != columns)
      throw std::invalid_argument("ragged csv row in " + path);
    rows.push_back(std::move(row));
  }

  WeightedSampleSet set;
  set.dim = dim;
  set.pseudo = 1;
  for (const auto& r : rows) set.pseudo = std::max(set.pseudo, static_cast<int>(r[1]) + 1);
  const long T = static_cast<long>(rows.size()) / set.pseudo;
  set.draws.resize(T * set.pseudo, dim);
  set.log_weights.resize(T, set.pseudo);
  set.betas.resize(T, set.pseudo);
  for (const auto& r : rows) {
    const long t = static_cast<long>(r[0]);
    const int i = static_cast<int>(r[1]);
    for (int k = 0; k < dim; ++k) set.draws(t * set.pseudo + i, k) = r[static_cast<std::size_t>(2 + k)];
    set.betas(t, i) = r[static_cast<std::size_t>(2 + dim)];
    set.log_weights(t, i) = r[static_cast<std::size_t>(3 + dim)];
  }
  return set;
}

nlohmann::json summary_json(const WeightedSampleSet& set, const nlohmann::json& estimates) {
  nlohmann::json j;
  j["method"] = set.method;
  j["seed"] = set.seed;
  j["iterations"] = set.iterations();
  j["pseudo_samples"] = set.pseudo;
  j["acceptance_rate"] = set.acceptance_rate;
  j["excluded"] = set.excluded_count;
  j["estimates"] = estimates;
  return j;
}

}  // namespace pseudoext
