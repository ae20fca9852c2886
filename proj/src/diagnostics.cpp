#include "pseudoext/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

namespace pseudoext {

EssResult compute_ess(const std::vector<double>& chain) {
  const auto T = static_cast<long>(chain.size());
  if (T < 10) throw std::invalid_argument("compute_ess: need at least 10 samples");
  double mean = 0.0;
  for (double v : chain) mean += v;
  mean /= static_cast<double>(T);
  double c0 = 0.0;
  for (double v : chain) c0 += (v - mean) * (v - mean);
  c0 /= static_cast<double>(T);

  EssResult out;
  if (c0 <= 1e-24 * (1.0 + mean * mean)) {
    out.value = 1.0;
    out.degenerate = true;
    return out;
  }

  auto autocov = [&](long k) {
    double c = 0.0;
    for (long t = 0; t + k < T; ++t) c += (chain[t] - mean) * (chain[t + k] - mean);
    return c / static_cast<double>(T);
  };

  // Geyer initial positive sequence: sum pair sums Gamma_m = rho_2m + rho_2m+1
  // while they stay positive.
  double tau = -1.0;
  for (long m = 0; 2 * m + 1 < T; ++m) {
    const double gamma = (autocov(2 * m) + autocov(2 * m + 1)) / c0;
    if (gamma <= 0.0) break;
    tau += 2.0 * gamma;
  }

  if (tau <= 0.0) {
    out.value = static_cast<double>(T);
    out.negative_correlation = true;
    return out;
  }
  const double raw = static_cast<double>(T) / tau;
  out.negative_correlation = raw > static_cast<double>(T);
  out.value = std::min(std::max(raw, 1.0), static_cast<double>(T));
  return out;
}

double compute_rmse(const std::vector<Eigen::VectorXd>& estimates, const Eigen::VectorXd& truth) {
  if (estimates.empty()) throw std::invalid_argument("compute_rmse: no estimates");
  double sum = 0.0;
  long count = 0;
  for (const auto& est : estimates) {
    if (est.size() != truth.size())
      throw std::invalid_argument("compute_rmse: estimate/truth dimension mismatch");
    sum += (est - truth).squaredNorm();
    count += est.size();
  }
  return std::sqrt(sum / static_cast<double>(count));
}

}  // namespace pseudoext
