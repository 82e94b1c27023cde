#pragma once

#include <optional>

#include "rgd/reshuffling.hpp"

namespace rgd {

enum class Method {
  full_batch,
  reshuffle_empirical,
  reshuffle_exact_mean,
  with_replacement_exact_mean,
};

const char* to_string(Method m);

// Norm beyond which the empirical simulator declares divergence and freezes,
// so a diverging curve can still be recorded without overflow.
inline constexpr double kDivergenceNorm = 1e12;

struct Trajectory {
  Method method = Method::reshuffle_exact_mean;
  double alpha = 0.0;
  int B = 1;
  std::uint64_t seed = 0;

  Matrix iterates;  // (epochs+1) x p, row k is the end of epoch k
  Vector err_l2;    // ||beta_k - beta_star||_2 per epoch
  bool diverged = false;
  long divergence_epoch = -1;
  std::optional<Matrix> per_iteration;  // every mini-batch step, when recorded

  long epochs() const { return iterates.rows() - 1; }
};

// One empirical run: each epoch draws a fresh uniform permutation of the
// batches and performs B updates beta -= (B alpha / n) X_b^T (X_b beta - y_b)
// in that order.  Deterministic for a fixed seed.
Trajectory simulate_reshuffle(const RegressionProblem& problem,
                              const BatchPartition& partition, double alpha,
                              long epochs, std::uint64_t seed,
                              const Vector& beta0 = Vector(),
                              bool record_iterations = false);

// Mean iterate over the per-epoch permutations:
//   mean_k - b* = (I - B a Z)^k (b0 - b*)
//              + (1/n)[I - (I - B a Z)^k] Z^+ Xt^T eta
//              + (B a k / n) P_{Z,0} Xt^T eta.
// The last term vanishes exactly when range(Xt^T) is contained in range(Z);
// when that containment fails (and the noise is nonzero) the call throws
// HypothesisViolated unless override_hypothesis is set, in which case the
// linearly growing component is reported faithfully.  The closed form and the
// unrolled one-step recursion are both computed and must agree.
Trajectory exact_mean_reshuffle(const RegressionProblem& problem,
                                const ReshuffleOperators& ops, long epochs,
                                const Vector& beta0 = Vector(),
                                bool override_hypothesis = false);

Trajectory exact_mean_full_batch(const RegressionProblem& problem, double alpha,
                                 long epochs, const Vector& beta0 = Vector());

// Sampling batches with replacement: full-batch dynamics with k replaced by
// B k (a pure time change).
Trajectory exact_mean_with_replacement(const RegressionProblem& problem,
                                       const BatchPartition& partition,
                                       double alpha, long epochs,
                                       const Vector& beta0 = Vector());

struct LimitVector {
  Vector reshuffle;    // P_{Z,0} b0 + (Xt^T X)^+ Xt^T y
  Vector full_batch;   // P_{X,0} b0 + (X^T X)^+ X^T y
  bool converged = false;
  double spectral_radius_restricted = 0.0;  // ||(I - B a Z) P_Z||
};

LimitVector limit_vector(const RegressionProblem& problem,
                         const ReshuffleOperators& ops,
                         const Vector& beta0 = Vector());

// || mean_k(B, alpha/B) - full_k(alpha) ||_2 per epoch; the linear scaling
// rule makes this O(alpha) uniformly over epochs.
Vector linear_scaling_residual(const RegressionProblem& problem,
                               const BatchPartition& partition, double alpha,
                               long epochs, const Vector& beta0 = Vector());

}  // namespace rgd
