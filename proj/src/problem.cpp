#include "rgd/problem.hpp"

#include "rgd/rng.hpp"

namespace rgd {

Matrix psd_sqrt(const SymmetricMatrix& a) {
  const SymmetricEigen eig = eigh(a);
  Vector roots(eig.dim());
  for (Index i = 0; i < eig.dim(); ++i)
    roots(i) = std::sqrt(std::max(0.0, eig.values(i)));
  return eig.vectors * roots.asDiagonal() * eig.vectors.transpose();
}

static void check_psd(const SymmetricMatrix& sigma) {
  const SymmetricEigen eig = eigh(sigma);
  const double scale = std::max(1.0, eig.values.cwiseAbs().maxCoeff());
  if (eig.values.minCoeff() < -kTolProj * scale)
    throw InvalidInput("generate_gaussian: Sigma is not positive semidefinite");
}

RegressionProblem generate_gaussian(Index n, Index p,
                                    const SymmetricMatrix& Sigma,
                                    double sigma2, BetaSpec beta_spec,
                                    std::uint64_t seed,
                                    const Vector* fixed_beta) {
  if (n < 1 || p < 1) throw InvalidInput("generate_gaussian: n, p must be >= 1");
  if (Sigma.dim() != p) throw InvalidInput("generate_gaussian: Sigma dim != p");
  if (sigma2 < 0) throw InvalidInput("generate_gaussian: sigma2 < 0");
  check_psd(Sigma);

  RegressionProblem prob;
  prob.seed = seed;
  prob.sigma2 = sigma2;
  prob.Sigma = Sigma;

  auto rng_x = substream(seed, Stream::features);
  Matrix Z = normal_matrix(rng_x, n, p);
  if (Sigma.matrix().isIdentity(0.0)) {
    prob.X = std::move(Z);
  } else {
    prob.X = Z * psd_sqrt(Sigma);
  }

  auto rng_b = substream(seed, Stream::beta);
  switch (beta_spec) {
    case BetaSpec::unit_sphere: {
      Vector g = normal_vector(rng_b, p);
      prob.beta_star = g / g.norm();
      break;
    }
    case BetaSpec::standard_gaussian:
      prob.beta_star = normal_vector(rng_b, p);
      break;
    case BetaSpec::fixed:
      if (fixed_beta == nullptr || fixed_beta->size() != p)
        throw InvalidInput("generate_gaussian: fixed beta missing or wrong size");
      prob.beta_star = *fixed_beta;
      break;
  }

  if (sigma2 == 0.0) {
    prob.eta = Vector::Zero(n);
  } else {
    auto rng_e = substream(seed, Stream::noise);
    prob.eta = std::sqrt(sigma2) * normal_vector(rng_e, n);
  }

  prob.y = prob.X * prob.beta_star + prob.eta;
  prob.W = SymmetricMatrix((prob.X.transpose() * prob.X) / double(n));
  return prob;
}

RegressionProblem make_problem(Matrix X, Vector beta_star, Vector eta,
                               SymmetricMatrix Sigma, double sigma2,
                               std::uint64_t seed) {
  if (X.cols() != beta_star.size() || X.rows() != eta.size() ||
      Sigma.dim() != X.cols())
    throw InvalidInput("make_problem: dimension mismatch");
  RegressionProblem prob;
  prob.X = std::move(X);
  prob.beta_star = std::move(beta_star);
  prob.eta = std::move(eta);
  prob.Sigma = std::move(Sigma);
  prob.sigma2 = sigma2;
  prob.seed = seed;
  prob.y = prob.X * prob.beta_star + prob.eta;
  prob.W = SymmetricMatrix((prob.X.transpose() * prob.X) / double(prob.X.rows()));
  return prob;
}

BatchPartition partition(const RegressionProblem& problem, int B) {
  const Index n = problem.n();
  if (B < 1 || n % B != 0)
    throw InvalidInput("partition: B must divide n");
  BatchPartition part;
  part.B = B;
  part.rows_per_batch = n / B;
  part.batches.reserve(B);
  for (int b = 0; b < B; ++b) {
    const Index lo = static_cast<Index>(b) * part.rows_per_batch;
    Batch batch;
    batch.X = problem.X.middleRows(lo, part.rows_per_batch);
    batch.y = problem.y.segment(lo, part.rows_per_batch);
    batch.eta = problem.eta.segment(lo, part.rows_per_batch);
    // (B X_b^T X_b) / n rounds like (X^T X) / n, so B = 1 reproduces the
    // problem-level W bit for bit.
    batch.W = SymmetricMatrix(
        (static_cast<double>(B) * (batch.X.transpose() * batch.X)) /
        static_cast<double>(n));
    part.batches.push_back(std::move(batch));
  }
  return part;
}

double generalization_risk(const Vector& beta, const RegressionProblem& problem) {
  if (beta.size() != problem.p())
    throw InvalidInput("generalization_risk: dimension mismatch");
  const Vector d = beta - problem.beta_star;
  return d.dot(problem.Sigma.matrix() * d);
}

}  // namespace rgd
