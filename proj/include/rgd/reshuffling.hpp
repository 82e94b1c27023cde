#pragma once

#include <cstdint>
#include <vector>

#include "rgd/problem.hpp"

namespace rgd {

// The permutation-averaged batch modifiers Pi_b, the modified features
// Xtilde (batch b left-multiplied by Pi_b), and the cross-covariance
//   Z = (1/n) Xtilde^T X = (1/B) sum_b Pi_b W_b,
// the symmetric operator driving the mean reshuffling dynamics.
//
// Convention: a permutation is the visit order (tau(1), ..., tau(B)) and
// per-epoch factors multiply right to left, so the earliest batch sits
// rightmost in every product.  All three computation routes share this
// convention; the two-batch identity Pi_1 = I - (alpha/2) W_2 pins it in the
// tests.

enum class PiMethod { enumerate, closed_form, monte_carlo };

inline const char* to_string(PiMethod m) {
  switch (m) {
    case PiMethod::enumerate: return "enumerate";
    case PiMethod::closed_form: return "closed_form";
    case PiMethod::monte_carlo: return "monte_carlo";
  }
  return "?";
}

struct AssembleOptions {
  long mc_trials = 100000;
  std::uint64_t mc_seed = 0;
  int workers = 1;
  int enumerate_cap = 8;   // B! permutations; factorial blow-up beyond this
  int closed_form_cap = 7; // ordered-subset DP over 2^(B-1) masks
};

// Ground truth: averages the prefix products over all B! permutations.
// Batch index b is 0-based.
Matrix pi_enumerate(const BatchPartition& partition, double alpha, int b,
                    const AssembleOptions& opts = {});

// Polynomial expansion: Pi_b = I - sum_{i>=1} (-1)^{i+1}/(i+1)! alpha^i S_i,
// where S_i sums the products of i distinct W's excluding batch b over all
// orderings.  S_i is built by a subset-sum dynamic program that reuses the
// ordered sums of each (i-1)-subset, so the cost is O(2^B B) matrix products
// instead of B! permutations.
Matrix pi_closed_form(const BatchPartition& partition, double alpha, int b,
                      const AssembleOptions& opts = {});

struct PiEstimate {
  Matrix mean;
  Matrix standard_error;  // entrywise SE of the mean
  long trials = 0;
};

// Unbiased sampled estimator of Pi_b.  Trial t draws its permutation from
// substream(seed, trials, t), so results do not depend on scheduling, and the
// pairwise-tree reduction makes the sum independent of the worker count bit
// for bit.
PiEstimate pi_monte_carlo(const BatchPartition& partition, double alpha, int b,
                          long trials, std::uint64_t seed,
                          const AssembleOptions& opts = {});

struct ReshuffleOperators {
  double alpha = 0.0;
  int B = 1;
  PiMethod method = PiMethod::closed_form;
  Index n = 0;

  std::vector<Matrix> Pi;
  Matrix Xtilde;               // n x p, batches stacked in partition order
  SymmetricMatrix Z;           // symmetrized (1/B) sum_b Pi_b W_b
  SymmetricMatrix XtildeGram;  // (1/n) Xtilde^T Xtilde
  SymmetricEigen Zeig;
  double rank_cut = 0.0;       // |eigenvalue| cutoff defining the nullspace
  Projector P_Z, P_Z0;
  double symmetry_residual = 0.0;  // max |Z - Z^T| before symmetrization

  Index p() const { return Z.dim(); }
  // ||(I - B alpha Z) P_Z||: contraction factor on the learnable subspace.
  double restricted_norm() const;
  // Relative size of the component of Xtilde^T outside range(Z); the mean
  // dynamics are exact only when this vanishes.
  double hypothesis_residual() const;
};

ReshuffleOperators assemble(const BatchPartition& partition, double alpha,
                            PiMethod method, const AssembleOptions& opts = {});

struct RangeInclusionReport {
  Index rank_X = 0, rank_Xtilde = 0, rank_Z = 0;
  double res_Z_in_Xtilde = 0.0;   // sin(max principal angle)
  double res_Xtilde_in_X = 0.0;
  double res_hypothesis = 0.0;    // range(Xtilde^T) vs range(Z)
  bool hypothesis_holds = false;
};

// Diagnostic: numerical ranks and subspace-containment residuals for
// Range(Z) in Range(Xtilde^T) in Range(X^T), plus the mean-dynamics
// hypothesis range(Xtilde^T) in range(Xtilde^T X).
RangeInclusionReport range_inclusion_check(const ReshuffleOperators& ops,
                                           const RegressionProblem& problem,
                                           double tol = kHypothesisTol);

}  // namespace rgd
