#include "rgd/reshuffling.hpp"

#include <array>
#include <cmath>

#include "rgd/parallel.hpp"
#include "rgd/rng.hpp"

namespace rgd {
namespace {

std::int64_t factorial(int n) {
  std::int64_t f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Lexicographic unranking so that permutation `index` is well defined
// independently of iteration order.
std::vector<int> nth_permutation(int B, std::int64_t index) {
  std::vector<int> avail(B);
  for (int i = 0; i < B; ++i) avail[i] = i;
  std::vector<int> perm(B);
  std::int64_t f = factorial(B - 1);
  for (int i = 0; i < B; ++i) {
    const int j = static_cast<int>(index / f);
    index %= f;
    perm[i] = avail[j];
    avail.erase(avail.begin() + j);
    if (i + 1 < B) f /= (B - 1 - i);
  }
  return perm;
}

using MatrixList = std::vector<Matrix>;

MatrixList combine_lists(MatrixList a, MatrixList b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

// Prefix products of one visit order: position q contributes
// (I - a W_{tau(q-1)}) ... (I - a W_{tau(0)}) to the accumulator of batch
// tau(q); the empty product is the identity.
MatrixList prefix_contributions(const BatchPartition& part, double alpha,
                                const std::vector<int>& tau) {
  const int B = part.B;
  const Index p = part.batches[0].W.dim();
  MatrixList contrib(B);
  Matrix running = Matrix::Identity(p, p);
  for (int q = 0; q < B; ++q) {
    contrib[tau[q]] = running;
    if (q + 1 < B)
      running = (Matrix::Identity(p, p) -
                 alpha * part.batches[tau[q]].W.matrix()) *
                running;
  }
  return contrib;
}

MatrixList enumerate_all_pi(const BatchPartition& part, double alpha,
                            int workers) {
  const int B = part.B;
  const std::int64_t total = factorial(B);
  MatrixList sums = tree_reduce<MatrixList>(
      0, total,
      [&](std::int64_t idx) {
        return prefix_contributions(part, alpha, nth_permutation(B, idx));
      },
      combine_lists, workers);
  for (auto& m : sums) m /= static_cast<double>(total);
  return sums;
}

MatrixList monte_carlo_all_pi(const BatchPartition& part, double alpha,
                              long trials, std::uint64_t seed, int workers) {
  const int B = part.B;
  MatrixList sums = tree_reduce<MatrixList>(
      0, trials,
      [&](std::int64_t t) {
        auto rng = substream(seed, Stream::trials, static_cast<std::uint64_t>(t));
        return prefix_contributions(part, alpha, random_permutation(rng, B));
      },
      combine_lists, workers);
  for (auto& m : sums) m /= static_cast<double>(trials);
  return sums;
}

int popcount(unsigned v) { return __builtin_popcount(v); }

}  // namespace

Matrix pi_enumerate(const BatchPartition& part, double alpha, int b,
                    const AssembleOptions& opts) {
  if (alpha < 0) throw InvalidInput("pi_enumerate: alpha must be >= 0");
  if (b < 0 || b >= part.B) throw InvalidInput("pi_enumerate: bad batch index");
  if (part.B > opts.enumerate_cap)
    throw CapacityExceeded("pi_enumerate: B exceeds enumeration cap");
  const Index p = part.batches[0].W.dim();
  if (part.B == 1 || alpha == 0.0) return Matrix::Identity(p, p);
  return enumerate_all_pi(part, alpha, opts.workers)[b];
}

Matrix pi_closed_form(const BatchPartition& part, double alpha, int b,
                      const AssembleOptions& opts) {
  if (alpha < 0) throw InvalidInput("pi_closed_form: alpha must be >= 0");
  if (b < 0 || b >= part.B)
    throw InvalidInput("pi_closed_form: bad batch index");
  if (part.B > opts.closed_form_cap)
    throw CapacityExceeded("pi_closed_form: B exceeds closed-form cap");
  const Index p = part.batches[0].W.dim();
  const int m = part.B - 1;
  if (m == 0 || alpha == 0.0) return Matrix::Identity(p, p);

  std::vector<int> others;
  others.reserve(m);
  for (int j = 0; j < part.B; ++j)
    if (j != b) others.push_back(j);

  // Layered subset DP: f[mask] = sum over all orderings of the batches in
  // `mask` of the corresponding product, built by peeling off the leftmost
  // factor.  Only two popcount layers are alive at a time.
  std::vector<std::vector<unsigned>> by_size(m + 1);
  for (unsigned mask = 1; mask < (1u << m); ++mask)
    by_size[popcount(mask)].push_back(mask);

  std::vector<Matrix> f(1u << m);
  f[0] = Matrix::Identity(p, p);

  Matrix pi = Matrix::Identity(p, p);
  double alpha_pow = 1.0;
  double fact = 1.0;  // (i+1)! accumulator
  for (int i = 1; i <= m; ++i) {
    Matrix level_sum = Matrix::Zero(p, p);
    for (unsigned mask : by_size[i]) {
      Matrix acc = Matrix::Zero(p, p);
      for (int j = 0; j < m; ++j)
        if (mask & (1u << j))
          acc.noalias() +=
              part.batches[others[j]].W.matrix() * f[mask ^ (1u << j)];
      f[mask] = std::move(acc);
      level_sum += f[mask];
    }
    if (i >= 2)
      for (unsigned mask : by_size[i - 1]) f[mask].resize(0, 0);

    alpha_pow *= alpha;
    fact *= static_cast<double>(i + 1);
    const double sign = (i % 2 == 1) ? 1.0 : -1.0;  // (-1)^{i+1}
    pi -= (sign * alpha_pow / fact) * level_sum;
  }
  return pi;
}

PiEstimate pi_monte_carlo(const BatchPartition& part, double alpha, int b,
                          long trials, std::uint64_t seed,
                          const AssembleOptions& opts) {
  if (trials < 1) throw InvalidInput("pi_monte_carlo: trials must be >= 1");
  if (b < 0 || b >= part.B)
    throw InvalidInput("pi_monte_carlo: bad batch index");
  const int B = part.B;
  const Index p = part.batches[0].W.dim();

  using Moments = std::pair<Matrix, Matrix>;  // (sum, sum of squares)
  Moments acc = tree_reduce<Moments>(
      0, trials,
      [&](std::int64_t t) {
        auto rng = substream(seed, Stream::trials, static_cast<std::uint64_t>(t));
        const auto tau = random_permutation(rng, B);
        Matrix running = Matrix::Identity(p, p);
        for (int q = 0; q < B && tau[q] != b; ++q)
          running = (Matrix::Identity(p, p) -
                     alpha * part.batches[tau[q]].W.matrix()) *
                    running;
        Matrix sq = running.cwiseProduct(running);
        return Moments{std::move(running), std::move(sq)};
      },
      [](Moments a, Moments c) {
        a.first += c.first;
        a.second += c.second;
        return a;
      },
      opts.workers);

  PiEstimate est;
  est.trials = trials;
  est.mean = acc.first / static_cast<double>(trials);
  if (trials > 1) {
    Matrix var = (acc.second - static_cast<double>(trials) *
                                   est.mean.cwiseProduct(est.mean)) /
                 static_cast<double>(trials - 1);
    est.standard_error =
        (var.cwiseMax(0.0) / static_cast<double>(trials)).cwiseSqrt();
  } else {
    est.standard_error = Matrix::Zero(p, p);
  }
  return est;
}

double ReshuffleOperators::restricted_norm() const {
  double norm = 0.0;
  for (Index i = 0; i < Zeig.dim(); ++i)
    if (std::abs(Zeig.values(i)) > rank_cut)
      norm = std::max(norm, std::abs(1.0 - B * alpha * Zeig.values(i)));
  return norm;
}

double ReshuffleOperators::hypothesis_residual() const {
  std::vector<Index> frozen;
  for (Index i = 0; i < Zeig.dim(); ++i)
    if (std::abs(Zeig.values(i)) <= rank_cut) frozen.push_back(i);
  if (frozen.empty()) return 0.0;
  Matrix Q0(Zeig.dim(), static_cast<Index>(frozen.size()));
  for (std::size_t j = 0; j < frozen.size(); ++j)
    Q0.col(static_cast<Index>(j)) = Zeig.vectors.col(frozen[j]);
  // ||P_{Z,0} Xtilde^T||_F == ||Xtilde Q0||_F since Q0 has orthonormal cols.
  const double num = (Xtilde * Q0).norm();
  return num / std::max(1.0, Xtilde.norm());
}

ReshuffleOperators assemble(const BatchPartition& part, double alpha,
                            PiMethod method, const AssembleOptions& opts) {
  if (alpha < 0) throw InvalidInput("assemble: alpha must be >= 0");
  const int B = part.B;
  const Index p = part.batches[0].X.cols();
  const Index n = part.rows_per_batch * B;

  ReshuffleOperators ops;
  ops.alpha = alpha;
  ops.B = B;
  ops.method = method;
  ops.n = n;

  if (B == 1 || alpha == 0.0) {
    ops.Pi.assign(B, Matrix::Identity(p, p));
  } else {
    switch (method) {
      case PiMethod::enumerate:
        if (B > opts.enumerate_cap)
          throw CapacityExceeded("assemble: B exceeds enumeration cap");
        ops.Pi = enumerate_all_pi(part, alpha, opts.workers);
        break;
      case PiMethod::closed_form:
        ops.Pi.resize(B);
        for (int b = 0; b < B; ++b)
          ops.Pi[b] = pi_closed_form(part, alpha, b, opts);
        break;
      case PiMethod::monte_carlo:
        ops.Pi = monte_carlo_all_pi(part, alpha, opts.mc_trials, opts.mc_seed,
                                    opts.workers);
        // The exact permutation average is symmetric (reversing a prefix
        // transposes its product and is a bijection on S_B); symmetrizing the
        // sampled estimate keeps it unbiased and restores Xtilde^T X
        // consistency with sum_b Pi_b W_b.
        for (auto& pi : ops.Pi) pi = 0.5 * (pi + pi.transpose()).eval();
        break;
    }
  }

  ops.Xtilde.resize(n, p);
  Matrix z_raw = Matrix::Zero(p, p);
  for (int b = 0; b < B; ++b) {
    const Index lo = static_cast<Index>(b) * part.rows_per_batch;
    if (B == 1 || alpha == 0.0) {
      ops.Xtilde.middleRows(lo, part.rows_per_batch) = part.batches[b].X;
      z_raw += part.batches[b].W.matrix();
    } else {
      ops.Xtilde.middleRows(lo, part.rows_per_batch).noalias() =
          part.batches[b].X * ops.Pi[b];
      z_raw.noalias() += ops.Pi[b] * part.batches[b].W.matrix();
    }
  }
  z_raw /= static_cast<double>(B);

  ops.symmetry_residual = (z_raw - z_raw.transpose()).cwiseAbs().maxCoeff();
  // The permutation average makes Z symmetric identically; a residual beyond
  // roundoff is a bug in the Pi computation, not a data property.  The
  // Monte-Carlo route is exempt: a finite sample of permutations is only
  // symmetric in expectation.
  if (method != PiMethod::monte_carlo &&
      ops.symmetry_residual > kSymmetryCheckTol)
    throw NumericalInconsistency("assemble: Z symmetry residual " +
                                 std::to_string(ops.symmetry_residual));
  ops.Z = SymmetricMatrix(z_raw);
  ops.XtildeGram = SymmetricMatrix((ops.Xtilde.transpose() * ops.Xtilde) /
                                   static_cast<double>(n));

  ops.Zeig = eigh(ops.Z);
  ops.rank_cut = ops.Zeig.rank_cut();
  Vector learn = Vector::Zero(p);
  for (Index i = 0; i < p; ++i)
    if (std::abs(ops.Zeig.values(i)) > ops.rank_cut) learn(i) = 1.0;
  Matrix pz = ops.Zeig.vectors * learn.asDiagonal() *
              ops.Zeig.vectors.transpose();
  ops.P_Z = Projector{pz, ProjectorKind::range};
  ops.P_Z0 =
      Projector{Matrix::Identity(p, p) - pz, ProjectorKind::nullspace};
  return ops;
}

RangeInclusionReport range_inclusion_check(const ReshuffleOperators& ops,
                                           const RegressionProblem& problem,
                                           double tol) {
  RangeInclusionReport rep;
  const Index p = ops.p();

  Matrix basis_z(p, 0);
  {
    std::vector<Index> keep;
    for (Index i = 0; i < p; ++i)
      if (std::abs(ops.Zeig.values(i)) > ops.rank_cut) keep.push_back(i);
    basis_z.resize(p, static_cast<Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j)
      basis_z.col(static_cast<Index>(j)) = ops.Zeig.vectors.col(keep[j]);
  }
  const Matrix basis_xt = orthonormal_range_basis(ops.Xtilde.transpose());
  const Matrix basis_x = orthonormal_range_basis(problem.X.transpose());

  rep.rank_Z = basis_z.cols();
  rep.rank_Xtilde = basis_xt.cols();
  rep.rank_X = basis_x.cols();
  rep.res_Z_in_Xtilde = subspace_containment_residual(basis_z, basis_xt);
  rep.res_Xtilde_in_X = subspace_containment_residual(basis_xt, basis_x);
  rep.res_hypothesis = subspace_containment_residual(basis_xt, basis_z);
  rep.hypothesis_holds = rep.res_hypothesis <= tol;
  return rep;
}

}  // namespace rgd
