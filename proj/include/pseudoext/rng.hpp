#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>

namespace pseudoext {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Independent generator for (root_seed, stream).
///
/// This is the documented split function for concurrent work: chains and
/// replications take stream = 0, 1, 2, ...; auxiliary draws (initial states,
/// swap decisions) take streams offset by kInitStream / kSwapStream so they
/// never collide with chain streams.
inline std::mt19937_64 make_rng(std::uint64_t root_seed, std::uint64_t stream = 0) {
  std::uint64_t s = root_seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
  const std::uint64_t a = splitmix64(s);
  const std::uint64_t b = splitmix64(s);
  return std::mt19937_64(a ^ (b << 1));
}

inline constexpr std::uint64_t kInitStream = 1ULL << 32;
inline constexpr std::uint64_t kSwapStream = 1ULL << 33;

inline double draw_uniform(std::mt19937_64& g) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(g);
}

inline double draw_normal(std::mt19937_64& g) {
  return std::normal_distribution<double>(0.0, 1.0)(g);
}

inline Eigen::VectorXd draw_normal_vector(std::mt19937_64& g, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = draw_normal(g);
  return v;
}

/// Uniform(-2, 2) per coordinate; the default chain initialization.
inline Eigen::VectorXd draw_uniform_init(std::mt19937_64& g, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = 4.0 * draw_uniform(g) - 2.0;
  return v;
}

}  // namespace pseudoext
