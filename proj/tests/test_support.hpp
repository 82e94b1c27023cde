#pragma once

#include <random>

#include "rgd/problem.hpp"
#include "rgd/rng.hpp"

namespace rgd::test {

inline Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  return normal_matrix(rng, rows, cols);
}

inline Matrix random_orthogonal(std::mt19937_64& rng, Index dim) {
  const Matrix g = normal_matrix(rng, dim, dim);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  return q;
}

// Symmetric matrix with eigenvalues uniform in [lo, hi].
inline SymmetricMatrix random_symmetric_with_spectrum(std::mt19937_64& rng,
                                                      Index dim, double lo,
                                                      double hi) {
  const Matrix q = random_orthogonal(rng, dim);
  Vector vals(dim);
  for (Index i = 0; i < dim; ++i) vals(i) = lo + (hi - lo) * uniform01(rng);
  return SymmetricMatrix(q * vals.asDiagonal() * q.transpose());
}

inline RegressionProblem gaussian_problem(Index n, Index p, double sigma2,
                                          std::uint64_t seed) {
  return generate_gaussian(n, p, SymmetricMatrix::identity(p), sigma2,
                           BetaSpec::unit_sphere, seed);
}

// Joint rotation X -> X Q, Sigma -> Q^T Sigma Q, beta -> Q^T beta; leaves y
// and every risk quantity invariant.
inline RegressionProblem rotate_problem(const RegressionProblem& prob,
                                        const Matrix& q) {
  return make_problem(prob.X * q, q.transpose() * prob.beta_star, prob.eta,
                      SymmetricMatrix(q.transpose() * prob.Sigma.matrix() * q),
                      prob.sigma2, prob.seed);
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace rgd::test
