#include "rgd/dynamics.hpp"

#include <cmath>

#include "rgd/rng.hpp"

namespace rgd {

const char* to_string(Method m) {
  switch (m) {
    case Method::full_batch: return "full_batch";
    case Method::reshuffle_empirical: return "reshuffle_empirical";
    case Method::reshuffle_exact_mean: return "reshuffle_exact_mean";
    case Method::with_replacement_exact_mean:
      return "with_replacement_exact_mean";
  }
  return "?";
}

namespace {

Vector resolve_beta0(const Vector& beta0, Index p) {
  if (beta0.size() == 0) return Vector::Zero(p);
  if (beta0.size() != p) throw InvalidInput("beta0: dimension mismatch");
  return beta0;
}

void fill_errors(Trajectory& traj, const Vector& beta_star) {
  traj.err_l2.resize(traj.iterates.rows());
  for (Index k = 0; k < traj.iterates.rows(); ++k)
    traj.err_l2(k) = (traj.iterates.row(k).transpose() - beta_star).norm();
}

// Shared closed-form evaluator.  Works in the eigenbasis of the symmetric
// driver S (Z for reshuffling, W for full batch): with rates
// r_i = 1 - step * lambda_i,
//   e_k = V [ r^k bd + (1 - r^k) pinv(lambda) g / n + step * k * frozen g / n ] ,
// where bd, g are the initial error and driver-noise X^T eta in eigen
// coordinates.  The frozen term realizes the k P_0 branch of the truncated
// geometric series; it vanishes identically when the noise lies in the range
// of the driver.
struct ExactMeanEval {
  const SymmetricEigen* eig;
  double step;  // B * alpha (or alpha for full batch)
  double n;
  Vector bd, g, pinv_vals, frozen;

  ExactMeanEval(const SymmetricEigen& e, double step_, double n_,
                const Vector& d0, const Vector& driver_noise, double rank_cut)
      : eig(&e), step(step_), n(n_) {
    bd = e.vectors.transpose() * d0;
    g = e.vectors.transpose() * driver_noise;
    pinv_vals = Vector::Zero(e.dim());
    frozen = Vector::Zero(e.dim());
    for (Index i = 0; i < e.dim(); ++i) {
      if (std::abs(e.values(i)) > rank_cut)
        pinv_vals(i) = 1.0 / e.values(i);
      else
        frozen(i) = 1.0;
    }
  }

  Vector error_at(double k) const {
    Vector coords(eig->dim());
    for (Index i = 0; i < eig->dim(); ++i) {
      const double r = 1.0 - step * eig->values(i);
      const double rk = std::pow(r, k);
      coords(i) = rk * bd(i) + (1.0 - rk) * pinv_vals(i) * g(i) / n +
                  step * k * frozen(i) * g(i) / n;
    }
    return eig->vectors * coords;
  }
};

}  // namespace

Trajectory simulate_reshuffle(const RegressionProblem& problem,
                              const BatchPartition& partition, double alpha,
                              long epochs, std::uint64_t seed,
                              const Vector& beta0, bool record_iterations) {
  if (alpha < 0) throw InvalidInput("simulate_reshuffle: alpha must be >= 0");
  const Index p = problem.p();
  const int B = partition.B;
  const double step = static_cast<double>(B) * alpha /
                      static_cast<double>(problem.n());

  Trajectory traj;
  traj.method = Method::reshuffle_empirical;
  traj.alpha = alpha;
  traj.B = B;
  traj.seed = seed;
  traj.iterates.resize(epochs + 1, p);
  if (record_iterations) traj.per_iteration = Matrix(epochs * B + 1, p);

  Vector beta = resolve_beta0(beta0, p);
  traj.iterates.row(0) = beta.transpose();
  if (record_iterations) traj.per_iteration->row(0) = beta.transpose();

  auto rng = substream(seed, Stream::permutations);
  bool frozen = false;
  for (long k = 1; k <= epochs; ++k) {
    if (!frozen) {
      const auto tau = random_permutation(rng, B);
      for (int q = 0; q < B; ++q) {
        const Batch& batch = partition.batches[tau[q]];
        beta -= step * (batch.X.transpose() * (batch.X * beta - batch.y));
        if (record_iterations)
          traj.per_iteration->row((k - 1) * B + q + 1) = beta.transpose();
      }
      if (!beta.allFinite() || beta.norm() > kDivergenceNorm) {
        traj.diverged = true;
        traj.divergence_epoch = k;
        frozen = true;
        if (!beta.allFinite())
          beta = traj.iterates.row(k - 1).transpose();
      }
    } else if (record_iterations) {
      for (int q = 0; q < B; ++q)
        traj.per_iteration->row((k - 1) * B + q + 1) = beta.transpose();
    }
    traj.iterates.row(k) = beta.transpose();
  }
  fill_errors(traj, problem.beta_star);
  return traj;
}

Trajectory exact_mean_reshuffle(const RegressionProblem& problem,
                                const ReshuffleOperators& ops, long epochs,
                                const Vector& beta0, bool override_hypothesis) {
  const Index p = problem.p();
  const Vector b0 = resolve_beta0(beta0, p);
  const Vector driver_noise = ops.Xtilde.transpose() * problem.eta;

  if (driver_noise.norm() > 0 && !override_hypothesis) {
    const double res = ops.hypothesis_residual();
    if (res > kHypothesisTol)
      throw HypothesisViolated(
          "exact_mean_reshuffle: range(Xtilde^T) not contained in range(Z), "
          "residual " +
          std::to_string(res));
  }

  const double step = static_cast<double>(ops.B) * ops.alpha;
  const Vector d0 = b0 - problem.beta_star;
  ExactMeanEval eval(ops.Zeig, step, static_cast<double>(ops.n), d0,
                     driver_noise, ops.rank_cut);

  Trajectory traj;
  traj.method = Method::reshuffle_exact_mean;
  traj.alpha = ops.alpha;
  traj.B = ops.B;
  traj.seed = problem.seed;
  traj.iterates.resize(epochs + 1, p);

  // One-step recursion e_k = (I - B a Z) e_{k-1} + (B a / n) Xt^T eta runs in
  // parallel with the closed form; disagreement signals a bug.
  Vector e_rec = d0;
  const Vector noise_step = (step / static_cast<double>(ops.n)) * driver_noise;
  const Matrix& Zm = ops.Z.matrix();

  double max_rel_dev = 0.0;
  traj.iterates.row(0) = b0.transpose();
  for (long k = 1; k <= epochs; ++k) {
    e_rec = e_rec - step * (Zm * e_rec) + noise_step;
    const Vector e_closed = eval.error_at(static_cast<double>(k));
    const double scale = std::max(1.0, e_closed.cwiseAbs().maxCoeff());
    max_rel_dev = std::max(max_rel_dev,
                           (e_closed - e_rec).cwiseAbs().maxCoeff() / scale);
    traj.iterates.row(k) = (problem.beta_star + e_closed).transpose();
  }
  if (max_rel_dev > 1e-10)
    throw NumericalInconsistency(
        "exact_mean_reshuffle: closed form and recursion disagree, rel dev " +
        std::to_string(max_rel_dev));

  fill_errors(traj, problem.beta_star);
  return traj;
}

Trajectory exact_mean_full_batch(const RegressionProblem& problem, double alpha,
                                 long epochs, const Vector& beta0) {
  if (alpha < 0)
    throw InvalidInput("exact_mean_full_batch: alpha must be >= 0");
  const Index p = problem.p();
  const Vector b0 = resolve_beta0(beta0, p);
  const Vector d0 = b0 - problem.beta_star;
  const Vector driver_noise = problem.X.transpose() * problem.eta;

  const SymmetricEigen eig = eigh(problem.W);
  ExactMeanEval eval(eig, alpha, static_cast<double>(problem.n()), d0,
                     driver_noise, eig.rank_cut());
  // range(X^T) always lies in range(X^T X): drop the frozen noise branch,
  // which is zero up to roundoff here.
  eval.frozen.setZero();

  Trajectory traj;
  traj.method = Method::full_batch;
  traj.alpha = alpha;
  traj.B = 1;
  traj.seed = problem.seed;
  traj.iterates.resize(epochs + 1, p);
  traj.iterates.row(0) = b0.transpose();
  for (long k = 1; k <= epochs; ++k)
    traj.iterates.row(k) =
        (problem.beta_star + eval.error_at(static_cast<double>(k))).transpose();
  fill_errors(traj, problem.beta_star);
  return traj;
}

Trajectory exact_mean_with_replacement(const RegressionProblem& problem,
                                       const BatchPartition& partition,
                                       double alpha, long epochs,
                                       const Vector& beta0) {
  if (alpha < 0)
    throw InvalidInput("exact_mean_with_replacement: alpha must be >= 0");
  const Index p = problem.p();
  const Vector b0 = resolve_beta0(beta0, p);
  const Vector d0 = b0 - problem.beta_star;
  const Vector driver_noise = problem.X.transpose() * problem.eta;

  const SymmetricEigen eig = eigh(problem.W);
  ExactMeanEval eval(eig, alpha, static_cast<double>(problem.n()), d0,
                     driver_noise, eig.rank_cut());
  eval.frozen.setZero();

  Trajectory traj;
  traj.method = Method::with_replacement_exact_mean;
  traj.alpha = alpha;
  traj.B = partition.B;
  traj.seed = problem.seed;
  traj.iterates.resize(epochs + 1, p);
  traj.iterates.row(0) = b0.transpose();
  for (long k = 1; k <= epochs; ++k) {
    const double t = static_cast<double>(partition.B) * static_cast<double>(k);
    traj.iterates.row(k) =
        (problem.beta_star + eval.error_at(t)).transpose();
  }
  fill_errors(traj, problem.beta_star);
  return traj;
}

LimitVector limit_vector(const RegressionProblem& problem,
                         const ReshuffleOperators& ops, const Vector& beta0) {
  const Index p = problem.p();
  const Vector b0 = resolve_beta0(beta0, p);

  LimitVector lim;
  lim.spectral_radius_restricted = ops.restricted_norm();

  const double z_norm =
      ops.Zeig.dim() ? ops.Zeig.values.cwiseAbs().maxCoeff() : 0.0;
  const bool psd = ops.Zeig.values.minCoeff() >= -ops.rank_cut;
  lim.converged = psd && (ops.B * ops.alpha * z_norm < 2.0);

  // (Xt^T X)^+ Xt^T y = (1/n) Z^+ Xt^T y.
  const Matrix z_pinv = pseudoinverse_sym(ops.Zeig);
  lim.reshuffle = ops.P_Z0.P * b0 +
                  z_pinv * (ops.Xtilde.transpose() * problem.y) /
                      static_cast<double>(ops.n);

  const Svd svd = thin_svd(problem.X);
  const double cut =
      default_rank_tol(problem.n(), p) *
      (svd.singular_values.size() ? svd.singular_values(0) : 0.0);
  Index r = 0;
  while (r < svd.singular_values.size() && svd.singular_values(r) > cut) ++r;
  const Matrix Vr = svd.V.leftCols(r);
  Vector pinv_y = Vector::Zero(p);
  for (Index i = 0; i < r; ++i)
    pinv_y += (svd.U.col(i).dot(problem.y) / svd.singular_values(i)) *
              svd.V.col(i);
  lim.full_batch = b0 - Vr * (Vr.transpose() * b0) + pinv_y;
  return lim;
}

Vector linear_scaling_residual(const RegressionProblem& problem,
                               const BatchPartition& partition, double alpha,
                               long epochs, const Vector& beta0) {
  const int B = partition.B;
  const ReshuffleOperators ops =
      assemble(partition, alpha / static_cast<double>(B),
               PiMethod::closed_form);
  const Trajectory mini = exact_mean_reshuffle(problem, ops, epochs, beta0);
  const Trajectory full = exact_mean_full_batch(problem, alpha, epochs, beta0);
  Vector residual(epochs + 1);
  for (long k = 0; k <= epochs; ++k)
    residual(k) = (mini.iterates.row(k) - full.iterates.row(k)).norm();
  return residual;
}

}  // namespace rgd
