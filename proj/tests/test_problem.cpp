#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "rgd/io.hpp"
#include "test_support.hpp"

using namespace rgd;
using test::max_abs;

TEST_CASE("generate_gaussian: zero noise gives y == X beta exactly") {
  const RegressionProblem prob = test::gaussian_problem(30, 5, 0.0, 42);
  CHECK(prob.eta.cwiseAbs().maxCoeff() == 0.0);
  CHECK((prob.y - prob.X * prob.beta_star).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("generate_gaussian: sample covariance approaches Sigma") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const RegressionProblem prob = test::gaussian_problem(50000, 4, 0.0, seed);
    CHECK(max_abs(prob.W.matrix() - Matrix::Identity(4, 4)) <= 0.05);
  }
}

TEST_CASE("generate_gaussian: anisotropic Sigma is honored") {
  Vector d(3);
  d << 4.0, 1.0, 0.25;
  const SymmetricMatrix Sigma{Matrix(d.asDiagonal())};
  const RegressionProblem prob =
      generate_gaussian(60000, 3, Sigma, 0.0, BetaSpec::unit_sphere, 5);
  CHECK(max_abs(prob.W.matrix() - Sigma.matrix()) <= 0.15);
}

TEST_CASE("generate_gaussian: determinism and substream independence") {
  const RegressionProblem a = test::gaussian_problem(40, 6, 0.5, 99);
  const RegressionProblem b = test::gaussian_problem(40, 6, 0.5, 99);
  CHECK(a.X == b.X);
  CHECK(a.y == b.y);
  CHECK(a.eta == b.eta);
  CHECK(a.beta_star == b.beta_star);

  const RegressionProblem c = test::gaussian_problem(40, 6, 0.5, 100);
  CHECK(a.X != c.X);
}

TEST_CASE("generate_gaussian: rejects invalid inputs") {
  Matrix bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3, -1
  CHECK_THROWS_AS(generate_gaussian(10, 2, SymmetricMatrix(bad), 0.0,
                                    BetaSpec::unit_sphere, 1),
                  InvalidInput);
  CHECK_THROWS_AS(test::gaussian_problem(0, 2, 0.0, 1), InvalidInput);
}

TEST_CASE("generate_gaussian: beta specs") {
  const RegressionProblem sphere = test::gaussian_problem(10, 7, 0.0, 3);
  CHECK(sphere.beta_star.norm() == doctest::Approx(1.0).epsilon(1e-12));

  Vector fixed(3);
  fixed << 1.0, -2.0, 0.5;
  const RegressionProblem fixed_prob = generate_gaussian(
      9, 3, SymmetricMatrix::identity(3), 0.0, BetaSpec::fixed, 4, &fixed);
  CHECK(fixed_prob.beta_star == fixed);
}

TEST_CASE("partition: B = 1 reproduces the full covariance bitwise") {
  const RegressionProblem prob = test::gaussian_problem(24, 4, 0.3, 7);
  const BatchPartition part = partition(prob, 1);
  CHECK(part.batches.size() == 1);
  CHECK(part.batches[0].W.matrix() == prob.W.matrix());
}

TEST_CASE("partition: hand-computed two-batch covariances") {
  Matrix X(4, 2);
  X << 1.0, 2.0,
       3.0, 4.0,
       5.0, 6.0,
       7.0, 8.0;
  Vector beta(2);
  beta << 1.0, -1.0;
  const RegressionProblem prob = make_problem(
      X, beta, Vector::Zero(4), SymmetricMatrix::identity(2), 0.0, 0);
  const BatchPartition part = partition(prob, 2);

  // W_1 = (2/4) X_1^T X_1 with X_1 the first two rows.
  Matrix w1_expected(2, 2);
  w1_expected << 0.5 * (1 * 1 + 3 * 3), 0.5 * (1 * 2 + 3 * 4),
                 0.5 * (1 * 2 + 3 * 4), 0.5 * (2 * 2 + 4 * 4);
  Matrix w2_expected(2, 2);
  w2_expected << 0.5 * (5 * 5 + 7 * 7), 0.5 * (5 * 6 + 7 * 8),
                 0.5 * (5 * 6 + 7 * 8), 0.5 * (6 * 6 + 8 * 8);
  CHECK(max_abs(part.batches[0].W.matrix() - w1_expected) <= 1e-12);
  CHECK(max_abs(part.batches[1].W.matrix() - w2_expected) <= 1e-12);
}

TEST_CASE("partition: B = n gives rank-one outer products") {
  const RegressionProblem prob = test::gaussian_problem(6, 3, 0.0, 8);
  const BatchPartition part = partition(prob, 6);
  for (int b = 0; b < 6; ++b) {
    const Vector x = prob.X.row(b).transpose();
    CHECK(max_abs(part.batches[b].W.matrix() - x * x.transpose()) <= 1e-12);
    CHECK(numerical_rank(part.batches[b].W.matrix()) <= 1);
  }
}

TEST_CASE("partition: rejects B not dividing n") {
  const RegressionProblem prob = test::gaussian_problem(10, 2, 0.0, 1);
  CHECK_THROWS_AS(partition(prob, 3), InvalidInput);
}

TEST_CASE("partition: blocks reassemble the problem bit-exactly") {
  const RegressionProblem prob = test::gaussian_problem(36, 5, 0.4, 21);
  const BatchPartition part = partition(prob, 4);
  Matrix X(prob.n(), prob.p());
  Vector y(prob.n());
  for (int b = 0; b < part.B; ++b) {
    const auto [lo, hi] = part.row_range(b);
    X.middleRows(lo, hi - lo) = part.batches[b].X;
    y.segment(lo, hi - lo) = part.batches[b].y;
  }
  CHECK(X == prob.X);
  CHECK(y == prob.y);
}

TEST_CASE("partition: batch covariances average to the full one") {
  const RegressionProblem prob = test::gaussian_problem(60, 6, 0.0, 31);
  for (int B : {2, 3, 5, 6}) {
    const BatchPartition part = partition(prob, B);
    Matrix avg = Matrix::Zero(6, 6);
    for (const auto& batch : part.batches) avg += batch.W.matrix();
    avg /= B;
    CHECK(max_abs(avg - prob.W.matrix()) <= 1e-12);
  }
}

TEST_CASE("generalization_risk: exact cases") {
  const RegressionProblem prob = test::gaussian_problem(20, 4, 0.1, 11);
  CHECK(generalization_risk(prob.beta_star, prob) == 0.0);

  auto rng = substream(55, Stream::trials);
  const Vector beta = prob.beta_star + normal_vector(rng, 4);
  // Sigma = I reduces to the squared distance.
  CHECK(generalization_risk(beta, prob) ==
        doctest::Approx((beta - prob.beta_star).squaredNorm()).epsilon(1e-12));
}

TEST_CASE("generalization_risk: Monte-Carlo oracle over fresh draws") {
  Vector d(3);
  d << 2.0, 1.0, 0.5;
  const SymmetricMatrix Sigma{Matrix(d.asDiagonal())};
  const RegressionProblem prob =
      generate_gaussian(50, 3, Sigma, 0.0, BetaSpec::unit_sphere, 13);
  auto rng = substream(77, Stream::trials);
  Vector beta = prob.beta_star;
  beta(0) += 0.7;
  beta(2) -= 0.3;

  const Matrix sqrt_sigma = psd_sqrt(Sigma);
  const long draws = 1000000;
  double acc = 0.0;
  const Vector diff = beta - prob.beta_star;
  for (long t = 0; t < draws; ++t) {
    const Vector x = sqrt_sigma * normal_vector(rng, 3);
    const double err = x.dot(diff);
    acc += err * err;
  }
  acc /= static_cast<double>(draws);
  const double exact = generalization_risk(beta, prob);
  CHECK(std::abs(acc - exact) <= 0.01 * exact);
}

TEST_CASE("problem serialization round-trips bit-exactly") {
  const RegressionProblem prob = test::gaussian_problem(18, 5, 0.7, 123);
  const std::string path = "problem_roundtrip.rgd";
  save_problem(prob, path);
  const RegressionProblem back = load_problem(path);
  std::remove(path.c_str());
  CHECK(back.X == prob.X);
  CHECK(back.y == prob.y);
  CHECK(back.beta_star == prob.beta_star);
  CHECK(back.eta == prob.eta);
  CHECK(back.Sigma.matrix() == prob.Sigma.matrix());
  CHECK(back.sigma2 == prob.sigma2);
  CHECK(back.seed == prob.seed);
}
