#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace rgd {

// All randomness flows through named substreams of a single user seed:
//
//   engine = substream(seed, stream, index)
//
// mixes (seed, stream, index) through SplitMix64 and seeds a fresh
// mt19937_64.  Problem generation, permutation sampling, Monte-Carlo trials
// and experiment cells therefore never share state, and trial `i` produces
// the same draws no matter how work is scheduled across threads.
enum class Stream : std::uint64_t {
  features = 1,
  noise = 2,
  beta = 3,
  permutations = 4,
  trials = 5,
  cells = 6,
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, Stream stream,
                              std::uint64_t index = 0) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s ^= static_cast<std::uint64_t>(stream) * 0xda942042e4dd58b5ULL;
  std::uint64_t b = splitmix64(s);
  s ^= index * 0x2545f4914f6cdd1dULL;
  std::uint64_t c = splitmix64(s);
  return a ^ (b + 0x9e3779b97f4a7c15ULL) ^ (c << 1);
}

inline std::mt19937_64 substream(std::uint64_t seed, Stream stream,
                                 std::uint64_t index = 0) {
  return std::mt19937_64(mix_seed(seed, stream, index));
}

// Uniform double in [0, 1) with 53 random bits.  Hand-rolled instead of
// std::uniform_real_distribution so that streams are bit-reproducible across
// standard libraries.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller.  Stateless (no cached spare), two engine
// draws per variate.
inline double standard_normal(std::mt19937_64& rng) {
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

// Unbiased integer in [0, n) by rejection; avoids the implementation-defined
// std::uniform_int_distribution.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % n;
}

inline std::vector<int> random_permutation(std::mt19937_64& rng, int n) {
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(bounded(rng, static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

// Row-major fill: entry (i, j) is the (i*cols + j)-th draw.
inline Eigen::MatrixXd normal_matrix(std::mt19937_64& rng, Eigen::Index rows,
                                     Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = standard_normal(rng);
  return m;
}

inline Eigen::VectorXd normal_vector(std::mt19937_64& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = standard_normal(rng);
  return v;
}

}  // namespace rgd
