#include "pseudoext/boltzmann.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "pseudoext/numerics.hpp"
#include "pseudoext/rng.hpp"

namespace pseudoext {

namespace {

constexpr double kShiftEpsilon = 1e-8;
constexpr long kChunkSize = 4096;  // states per Gray-code chunk

Eigen::VectorXd spins_from_gray(std::uint64_t gray, int n) {
  Eigen::VectorXd s(n);
  for (int k = 0; k < n; ++k) s[k] = (gray >> k) & 1ULL ? 1.0 : -1.0;
  return s;
}

// Walks states index = begin..end (exclusive) in Gray-code order and calls
// visit(energy, spins) for each. The spin vector for index i is
// spins_from_gray(i ^ (i >> 1)). Energy is E(s) = s^T W s / 2 + b^T s,
// maintained incrementally via h = W s (valid for general symmetric W).
template <class Visit>
void walk_states(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, long begin, long end,
                 Visit&& visit) {
  const int n = static_cast<int>(b.size());
  const auto gray = [](std::uint64_t i) { return i ^ (i >> 1); };
  Eigen::VectorXd s = spins_from_gray(gray(static_cast<std::uint64_t>(begin)), n);
  Eigen::VectorXd h = W * s;
  double energy = 0.5 * s.dot(h) + b.dot(s);
  for (long i = begin; i < end; ++i) {
    visit(energy, s);
    if (i + 1 == end) break;
    const int j = std::countr_zero(static_cast<std::uint64_t>(i) + 1);
    energy += -2.0 * s[j] * (h[j] - W(j, j) * s[j] + b[j]);
    h -= 2.0 * s[j] * W.col(j);
    s[j] = -s[j];
  }
}

struct ChunkAccum {
  double max_energy = kNegInf;
  double sum_p = 0.0;
  Eigen::VectorXd sum_s;
  Eigen::MatrixXd sum_ss;
};

}  // namespace

SpinMoments enumerate_spin_moments(const Eigen::MatrixXd& coupling, const Eigen::VectorXd& bias) {
  const int n = static_cast<int>(bias.size());
  const long total = 1L << n;
  const long chunk = std::min<long>(kChunkSize, total);
  const long num_chunks = (total + chunk - 1) / chunk;

  // Pass 1: global max energy (order-independent, exact).
  std::vector<double> chunk_max(static_cast<std::size_t>(num_chunks), kNegInf);
#pragma omp parallel for schedule(dynamic)
  for (long c = 0; c < num_chunks; ++c) {
    double m = kNegInf;
    walk_states(coupling, bias, c * chunk, std::min(total, (c + 1) * chunk),
                [&](double e, const Eigen::VectorXd&) { m = std::max(m, e); });
    chunk_max[static_cast<std::size_t>(c)] = m;
  }
  double max_e = kNegInf;
  for (double m : chunk_max) max_e = std::max(max_e, m);

  // Pass 2: per-chunk accumulators, combined in chunk order so the reduction
  // is deterministic regardless of thread count.
  std::vector<ChunkAccum> acc(static_cast<std::size_t>(num_chunks));
#pragma omp parallel for schedule(dynamic)
  for (long c = 0; c < num_chunks; ++c) {
    ChunkAccum a;
    a.sum_s = Eigen::VectorXd::Zero(n);
    a.sum_ss = Eigen::MatrixXd::Zero(n, n);
    walk_states(coupling, bias, c * chunk, std::min(total, (c + 1) * chunk),
                [&](double e, const Eigen::VectorXd& s) {
                  const double p = std::exp(e - max_e);
                  a.sum_p += p;
                  a.sum_s += p * s;
                  a.sum_ss.selfadjointView<Eigen::Upper>().rankUpdate(s, p);
                });
    acc[static_cast<std::size_t>(c)] = std::move(a);
  }

  double sum_p = 0.0;
  Eigen::VectorXd sum_s = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd sum_ss = Eigen::MatrixXd::Zero(n, n);
  for (const auto& a : acc) {
    sum_p += a.sum_p;
    sum_s += a.sum_s;
    sum_ss += a.sum_ss;
  }

  SpinMoments out;
  out.log_zb = max_e + std::log(sum_p);
  out.mean_s = sum_s / sum_p;
  out.second_s = sum_ss / sum_p;
  out.second_s = out.second_s.selfadjointView<Eigen::Upper>();
  return out;
}

SpinMoments enumerate_spin_moments_serial(const Eigen::MatrixXd& coupling,
                                          const Eigen::VectorXd& bias) {
  const int n = static_cast<int>(bias.size());
  const long total = 1L << n;
  auto energy_of = [&](long index) {
    Eigen::VectorXd s(n);
    for (int k = 0; k < n; ++k) s[k] = (index >> k) & 1L ? 1.0 : -1.0;
    return std::make_pair(0.5 * s.dot(coupling * s) + bias.dot(s), s);
  };
  double max_e = kNegInf;
  for (long i = 0; i < total; ++i) max_e = std::max(max_e, energy_of(i).first);
  double sum_p = 0.0;
  Eigen::VectorXd sum_s = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd sum_ss = Eigen::MatrixXd::Zero(n, n);
  for (long i = 0; i < total; ++i) {
    const auto [e, s] = energy_of(i);
    const double p = std::exp(e - max_e);
    sum_p += p;
    sum_s += p * s;
    sum_ss += p * s * s.transpose();
  }
  SpinMoments out;
  out.log_zb = max_e + std::log(sum_p);
  out.mean_s = sum_s / sum_p;
  out.second_s = sum_ss / sum_p;
  return out;
}

void BoltzmannRelaxation::validate() const {
  if (spin_count < 2) throw std::invalid_argument("boltzmann: spin_count must be >= 2");
  if (coupling.rows() != spin_count || coupling.cols() != spin_count ||
      bias.size() != spin_count || shift_diag.size() != spin_count ||
      factor.rows() != spin_count || factor.cols() != relaxed_dim)
    throw std::invalid_argument("boltzmann: inconsistent dimensions");
  if ((coupling - coupling.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("boltzmann: coupling matrix is not symmetric");
  if (coupling.diagonal().cwiseAbs().maxCoeff() > 0.0)
    throw std::invalid_argument("boltzmann: coupling diagonal must be zero");
  Eigen::MatrixXd shifted = coupling;
  shifted.diagonal() += shift_diag;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(shifted, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw std::invalid_argument("boltzmann: W + D is not positive semi-definite");
  if ((factor * factor.transpose() - shifted).cwiseAbs().maxCoeff() > 1e-8)
    throw std::invalid_argument("boltzmann: Q Q^T does not reproduce W + D");
}

Eigen::VectorXd choose_diagonal(const Eigen::MatrixXd& coupling) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(coupling, Eigen::EigenvaluesOnly);
  const double shift = -es.eigenvalues().minCoeff() + kShiftEpsilon;
  return Eigen::VectorXd::Constant(coupling.rows(), shift);
}

BoltzmannRelaxation generate_relaxation(std::uint64_t seed, int spin_count, double lambda1,
                                        double lambda2) {
  if (spin_count < 2) throw std::invalid_argument("boltzmann: spin_count must be >= 2");
  auto rng = make_rng(seed, 0);
  BoltzmannRelaxation r;
  r.spin_count = spin_count;
  r.seed = seed;
  r.lambda1 = lambda1;
  r.lambda2 = lambda2;

  r.bias.resize(spin_count);
  for (int i = 0; i < spin_count; ++i) r.bias[i] = 0.1 * draw_normal(rng);
  Eigen::VectorXd evals(spin_count);
  for (int i = 0; i < spin_count; ++i) evals[i] = lambda1 * std::tanh(lambda2 * draw_normal(rng));

  // Haar orthogonal matrix: QR of a Gaussian matrix with sign correction.
  Eigen::MatrixXd gauss(spin_count, spin_count);
  for (int j = 0; j < spin_count; ++j)
    for (int i = 0; i < spin_count; ++i) gauss(i, j) = draw_normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
  Eigen::MatrixXd rot = qr.householderQ();
  for (int j = 0; j < spin_count; ++j)
    if (qr.matrixQR()(j, j) < 0.0) rot.col(j) = -rot.col(j);

  r.coupling = rot * evals.asDiagonal() * rot.transpose();
  r.coupling = 0.5 * (r.coupling + r.coupling.transpose()).eval();
  r.coupling.diagonal().setZero();

  r.shift_diag = choose_diagonal(r.coupling);
  Eigen::MatrixXd shifted = r.coupling;
  shifted.diagonal() += r.shift_diag;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(shifted);
  r.shifted_max_eigenvalue = es.eigenvalues().maxCoeff();

  // Keep eigenpairs above 2*eps; the uniform shift leaves the smallest
  // eigenvalue at eps, so that direction is dropped (d_b=28 -> d=27).
  std::vector<int> kept;
  for (int i = 0; i < spin_count; ++i)
    if (es.eigenvalues()[i] > 2.0 * kShiftEpsilon) kept.push_back(i);
  r.relaxed_dim = static_cast<int>(kept.size());
  r.factor.resize(spin_count, r.relaxed_dim);
  for (int k = 0; k < r.relaxed_dim; ++k)
    r.factor.col(k) = es.eigenvectors().col(kept[static_cast<std::size_t>(k)]) *
                      std::sqrt(es.eigenvalues()[kept[static_cast<std::size_t>(k)]]);
  return r;
}

TargetDensity relaxation_target(const BoltzmannRelaxation& relax) {
  const Eigen::MatrixXd Q = relax.factor;
  const Eigen::VectorXd b = relax.bias;
  TargetDensity t;
  t.dim = relax.relaxed_dim;
  t.label = "boltzmann_relaxation";
  t.potential = [Q, b](const Eigen::VectorXd& x) {
    const Eigen::VectorXd a = Q * x + b;
    double sum = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k) sum += log_cosh(a[k]);
    return 0.5 * x.squaredNorm() - sum;
  };
  t.gradient = [Q, b](const Eigen::VectorXd& x) {
    const Eigen::VectorXd a = Q * x + b;
    return (x - Q.transpose() * a.array().tanh().matrix()).eval();
  };
  t.potential_gradient = [Q, b](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const Eigen::VectorXd a = Q * x + b;
    double sum = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k) sum += log_cosh(a[k]);
    g = x - Q.transpose() * a.array().tanh().matrix();
    return 0.5 * x.squaredNorm() - sum;
  };
  return t;
}

BoltzmannMoments enumerate_exact(const BoltzmannRelaxation& relax) {
  if (relax.spin_count > kEnumerationCap)
    throw std::invalid_argument("boltzmann: enumeration infeasible for d_b > 22 (2^d_b states)");
  const SpinMoments sm = enumerate_spin_moments(relax.coupling, relax.bias);
  BoltzmannMoments out;
  out.log_zb = sm.log_zb;
  out.mean_s = sm.mean_s;
  out.second_s = sm.second_s;
  out.mean_x = relax.factor.transpose() * sm.mean_s;
  out.second_x = relax.factor.transpose() * sm.second_s * relax.factor +
                 Eigen::MatrixXd::Identity(relax.relaxed_dim, relax.relaxed_dim);
  out.log_z = sm.log_zb + 0.5 * relax.shift_diag.sum() +
              0.5 * relax.relaxed_dim * std::log(2.0 * std::numbers::pi) -
              relax.spin_count * std::numbers::ln2;
  return out;
}

std::vector<Eigen::VectorXd> exact_sampler(const BoltzmannRelaxation& relax, long n,
                                           std::uint64_t seed) {
  if (relax.spin_count > kEnumerationCap)
    throw std::invalid_argument("boltzmann: enumeration infeasible for d_b > 22 (2^d_b states)");
  std::vector<Eigen::VectorXd> samples;
  if (n <= 0) return samples;

  const long total = 1L << relax.spin_count;
  std::vector<double> cum(static_cast<std::size_t>(total));
  double max_e = kNegInf;
  walk_states(relax.coupling, relax.bias, 0, total,
              [&](double e, const Eigen::VectorXd&) { max_e = std::max(max_e, e); });
  {
    long i = 0;
    double running = 0.0;
    walk_states(relax.coupling, relax.bias, 0, total, [&](double e, const Eigen::VectorXd&) {
      running += std::exp(e - max_e);
      cum[static_cast<std::size_t>(i++)] = running;
    });
  }
  const double mass = cum.back();

  auto rng = make_rng(seed, 0);
  samples.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const double u = draw_uniform(rng) * mass;
    const auto it = std::lower_bound(cum.begin(), cum.end(), u);
    const auto index = std::min<std::uint64_t>(static_cast<std::uint64_t>(it - cum.begin()),
                                               static_cast<std::uint64_t>(total - 1));
    const Eigen::VectorXd s = spins_from_gray(index ^ (index >> 1), relax.spin_count);
    Eigen::VectorXd x = relax.factor.transpose() * s;
    for (Eigen::Index k = 0; k < x.size(); ++k) x[k] += draw_normal(rng);
    samples.push_back(std::move(x));
  }
  return samples;
}

nlohmann::json BoltzmannRelaxation::to_json() const {
  auto mat = [](const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(m.cols()));
      for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
      rows.push_back(row);
    }
    return rows;
  };
  nlohmann::json j;
  j["d_b"] = spin_count;
  j["d"] = relaxed_dim;
  j["seed"] = seed;
  j["lambda1"] = lambda1;
  j["lambda2"] = lambda2;
  j["W"] = mat(coupling);
  j["Q"] = mat(factor);
  j["b"] = std::vector<double>(bias.data(), bias.data() + bias.size());
  j["D"] = std::vector<double>(shift_diag.data(), shift_diag.data() + shift_diag.size());
  j["shifted_max_eigenvalue"] = shifted_max_eigenvalue;
  return j;
}

BoltzmannRelaxation BoltzmannRelaxation::from_json(const nlohmann::json& j) {
  auto mat = [](const nlohmann::json& rows) {
    const auto r = static_cast<Eigen::Index>(rows.size());
    const auto c = static_cast<Eigen::Index>(rows.at(0).size());
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index k = 0; k < c; ++k)
        m(i, k) = rows.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(k)).get<double>();
    return m;
  };
  BoltzmannRelaxation r;
  r.spin_count = j.at("d_b").get<int>();
  r.relaxed_dim = j.at("d").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.lambda1 = j.at("lambda1").get<double>();
  r.lambda2 = j.at("lambda2").get<double>();
  r.coupling = mat(j.at("W"));
  r.factor = mat(j.at("Q"));
  const auto b = j.at("b").get<std::vector<double>>();
  const auto d = j.at("D").get<std::vector<double>>();
  r.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  r.shift_diag = Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
  r.shifted_max_eigenvalue = j.value("shifted_max_eigenvalue", 0.0);
  r.validate();
  return r;
}

BoltzmannRelaxation BoltzmannRelaxation::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("boltzmann: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

void BoltzmannRelaxation::to_json_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("boltzmann: cannot write " + path);
  out << to_json().dump(1) << "\n";
}

}  // namespace pseudoext
