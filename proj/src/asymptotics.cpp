#include "rgd/asymptotics.hpp"

#include <cmath>

#include "rgd/parallel.hpp"
#include "rgd/reshuffling.hpp"
#include "rgd/rng.hpp"

namespace rgd {
namespace {

double binom(int n, int k) {
  double acc = 1.0;
  for (int i = 1; i <= k; ++i)
    acc = acc * static_cast<double>(n - k + i) / static_cast<double>(i);
  return acc;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

double spectral_norm_sym(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()));
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

Matrix ShrinkagePolynomial::limit_matrix(const SymmetricMatrix& Sigma) const {
  const SymmetricEigen eig = eigh(Sigma);
  Vector shrunk(eig.dim());
  for (Index i = 0; i < eig.dim(); ++i)
    shrunk(i) = eig.values(i) * (1.0 - (*this)(eig.values(i)));
  return eig.vectors * shrunk.asDiagonal() * eig.vectors.transpose();
}

ShrinkagePolynomial shrinkage_polynomial(int B, double alpha,
                                         CoefficientForm form) {
  if (B < 1) throw InvalidInput("shrinkage_polynomial: B must be >= 1");
  ShrinkagePolynomial poly;
  poly.B = B;
  poly.alpha = alpha;
  poly.coefficients = Vector::Zero(std::max(0, B - 1));
  const double step = alpha / static_cast<double>(B);
  double step_pow = 1.0;
  for (int i = 1; i <= B - 1; ++i) {
    step_pow *= step;
    const double sign = (i % 2 == 1) ? 1.0 : -1.0;
    const double count = form == CoefficientForm::binomial
                             ? binom(B - 1, i) / static_cast<double>(i + 1)
                             : factorial(B - 1) * factorial(B - 1 - i) /
                                   factorial(i + 1);
    poly.coefficients(i - 1) = sign * count * step_pow;
  }
  return poly;
}

LimitConvergenceReport verify_limit(int B, double alpha,
                                    const SymmetricMatrix& Sigma,
                                    const std::vector<long>& n_schedule,
                                    int seeds, std::uint64_t base_seed,
                                    int workers) {
  const Index p = Sigma.dim();
  if (p > 8)
    throw InvalidInput("verify_limit: intended for small fixed p (<= 8)");

  LimitConvergenceReport rep;
  rep.B = B;
  rep.alpha = alpha;
  rep.n_schedule = n_schedule;

  const Matrix limit_bin =
      shrinkage_polynomial(B, alpha, CoefficientForm::binomial)
          .limit_matrix(Sigma);
  const Matrix limit_fac =
      shrinkage_polynomial(B, alpha, CoefficientForm::factorial)
          .limit_matrix(Sigma);

  const std::int64_t cells =
      static_cast<std::int64_t>(n_schedule.size()) * seeds;
  rep.rows.resize(cells);
  auto run_cell = [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t c = lo; c < hi; ++c) {
      const std::size_t ni = static_cast<std::size_t>(c) / seeds;
      long n = n_schedule[ni];
      if (n % B != 0) n += B - n % B;  // keep B | n
      const std::uint64_t seed =
          mix_seed(base_seed, Stream::cells, static_cast<std::uint64_t>(c));
      const RegressionProblem prob = generate_gaussian(
          n, p, Sigma, 0.0, BetaSpec::unit_sphere, seed);
      const BatchPartition part = partition(prob, B);
      const ReshuffleOperators ops = assemble(
          part, alpha / static_cast<double>(B), PiMethod::closed_form);
      LimitConvergenceRow row;
      row.n = n;
      row.seed = seed;
      row.err_binomial = spectral_norm_sym(ops.Z.matrix() - limit_bin);
      row.err_factorial = spectral_norm_sym(ops.Z.matrix() - limit_fac);
      rep.rows[static_cast<std::size_t>(c)] = row;
    }
  };
  parallel_for_chunked(cells, 1, workers, run_cell);

  rep.mean_binomial.assign(n_schedule.size(), 0.0);
  rep.mean_factorial.assign(n_schedule.size(), 0.0);
  for (std::size_t c = 0; c < rep.rows.size(); ++c) {
    const std::size_t ni = c / static_cast<std::size_t>(seeds);
    rep.mean_binomial[ni] += rep.rows[c].err_binomial / seeds;
    rep.mean_factorial[ni] += rep.rows[c].err_factorial / seeds;
  }

  // Least-squares slope of log(mean err) against log(n).
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(n_schedule.size());
  for (std::size_t i = 0; i < n_schedule.size(); ++i) {
    const double x = std::log(static_cast<double>(n_schedule[i]));
    const double y = std::log(rep.mean_binomial[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  rep.slope_binomial = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  rep.discrimination_ratio =
      rep.mean_factorial.back() / rep.mean_binomial.back();
  return rep;
}

DecoupledDynamics decoupled_dynamics(const RegressionProblem& problem, int B,
                                     double alpha,
                                     const ShrinkagePolynomial& poly,
                                     long epochs, const Vector& beta0) {
  if (poly.B != B)
    throw InvalidInput("decoupled_dynamics: polynomial batch count mismatch");
  const Index p = problem.p();
  const Index n = problem.n();
  const Svd svd = thin_svd(problem.X);
  const double cut = default_rank_tol(n, p) * svd.singular_values(0);
  if (p > n || svd.singular_values(p - 1) <= cut)
    throw AssumptionViolated("decoupled_dynamics: X must have full column rank");

  DecoupledDynamics dyn;
  dyn.V = svd.V;
  dyn.sample_eigenvalues.resize(p);
  for (Index i = 0; i < p; ++i)
    dyn.sample_eigenvalues(i) =
        svd.singular_values(i) * svd.singular_values(i) / static_cast<double>(n);

  const Matrix sigma_v =
      svd.V.transpose() * problem.Sigma.matrix() * svd.V;
  const double sigma_scale =
      std::max(1.0, sigma_v.cwiseAbs().maxCoeff());
  Matrix offdiag = sigma_v;
  offdiag.diagonal().setZero();
  if (offdiag.cwiseAbs().maxCoeff() > 1e-8 * sigma_scale)
    throw AssumptionViolated(
        "decoupled_dynamics: V^T Sigma V is not diagonal");
  dyn.sigma_eigenvalues = sigma_v.diagonal();

  dyn.rates.resize(p);
  for (Index i = 0; i < p; ++i) {
    const double lhat = dyn.sample_eigenvalues(i);
    dyn.rates(i) = 1.0 - alpha * lhat * (1.0 - poly(lhat));
  }

  Vector b0 = beta0.size() ? beta0 : Vector::Zero(p);
  if (b0.size() != p) throw InvalidInput("beta0: dimension mismatch");
  const Vector d0 = svd.V.transpose() * (b0 - problem.beta_star);
  const Vector noise = svd.U.transpose() * problem.eta;  // thin U, p entries

  dyn.coordinates.resize(epochs + 1, p);
  dyn.risk.resize(epochs + 1);
  for (long k = 0; k <= epochs; ++k) {
    double risk = 0.0;
    for (Index i = 0; i < p; ++i) {
      const double rk = std::pow(dyn.rates(i), static_cast<double>(k));
      const double s_i = svd.singular_values(i);
      dyn.coordinates(k, i) = rk * d0(i) + (1.0 - rk) * noise(i) / s_i;
      risk += dyn.sigma_eigenvalues(i) * rk * rk * d0(i) * d0(i);
      risk += problem.sigma2 / static_cast<double>(n) *
              dyn.sigma_eigenvalues(i) / dyn.sample_eigenvalues(i) *
              (1.0 - rk) * (1.0 - rk);
    }
    dyn.risk(k) = risk;
  }
  return dyn;
}

std::vector<ShrinkageRow> shrinkage_comparison(int B, double alpha,
                                               const SymmetricMatrix& Sigma) {
  const SymmetricEigen eig = eigh(Sigma);
  const double norm = eig.values.cwiseAbs().maxCoeff();
  if (alpha * norm > 1.0 + 1e-12)
    throw InvalidInput("shrinkage_comparison: requires alpha ||Sigma|| <= 1");
  const ShrinkagePolynomial poly = shrinkage_polynomial(B, alpha);
  std::vector<ShrinkageRow> rows;
  rows.reserve(eig.dim());
  for (Index i = 0; i < eig.dim(); ++i) {
    const double l = eig.values(i);
    rows.push_back({l, l * (1.0 - poly(l))});
  }
  return rows;
}

}  // namespace rgd
