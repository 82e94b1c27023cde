#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rgd/linalg.hpp"

namespace rgd {

enum class BetaSpec { unit_sphere, standard_gaussian, fixed };

// A least squares instance y = X beta_star + eta, together with the feature
// covariance Sigma and the noise level used to draw eta.  Immutable after
// construction; freely shared across threads.
struct RegressionProblem {
  Matrix X;
  Vector y;
  Vector beta_star;
  Vector eta;
  SymmetricMatrix Sigma;
  double sigma2 = 0.0;
  std::uint64_t seed = 0;
  SymmetricMatrix W;  // (1/n) X^T X, cached at construction

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }
};

// Draws X with i.i.d. rows x_i = Sigma^{1/2} z_i (z_i standard normal) and
// eta ~ N(0, sigma2 I).  Deterministic for a fixed seed; features, noise and
// beta_star come from independent substreams.
RegressionProblem generate_gaussian(Index n, Index p,
                                    const SymmetricMatrix& Sigma,
                                    double sigma2, BetaSpec beta_spec,
                                    std::uint64_t seed,
                                    const Vector* fixed_beta = nullptr);

// Assembles a problem from explicit parts (y is recomputed as X b + eta).
RegressionProblem make_problem(Matrix X, Vector beta_star, Vector eta,
                               SymmetricMatrix Sigma, double sigma2,
                               std::uint64_t seed = 0);

struct Batch {
  Matrix X;
  Vector y;
  Vector eta;
  SymmetricMatrix W;  // (B/n) X_b^T X_b
};

// Contiguous equal split of the rows into B mini-batches.  The partition is
// fixed once; epochs only permute the visit order.
struct BatchPartition {
  int B = 1;
  Index rows_per_batch = 0;
  std::vector<Batch> batches;

  std::pair<Index, Index> row_range(int b) const {
    return {static_cast<Index>(b) * rows_per_batch,
            static_cast<Index>(b + 1) * rows_per_batch};
  }
};

BatchPartition partition(const RegressionProblem& problem, int B);

// Conditional prediction risk (beta - beta_star)^T Sigma (beta - beta_star).
double generalization_risk(const Vector& beta, const RegressionProblem& problem);

// Symmetric PSD square root, for Sigma^{1/2}.
Matrix psd_sqrt(const SymmetricMatrix& a);

}  // namespace rgd
