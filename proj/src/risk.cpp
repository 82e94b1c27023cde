#include "rgd/risk.hpp"

#include <cmath>

namespace rgd {
namespace {

// All per-epoch quantities reduce to scalar powers in the eigenbasis of the
// driver: O(p^3) once, then O(p^2) per epoch.
struct RiskEngine {
  double step;      // B * alpha (alpha for full batch)
  double n;
  double sigma2;
  Vector lambda;    // driver eigenvalues, descending
  Vector d_coord;   // Q^T (beta0 - beta_star)
  Vector pinv_vals;
  Vector frozen;    // 1 on the numerical nullspace
  Matrix SigmaT;    // Q^T Sigma Q
  Matrix E;         // SigmaT (hadamard) Q^T C Q, C the noise gram
  double bias_frozen = 0.0;
  bool include_frozen_noise = true;

  RiskEngine(const SymmetricEigen& eig, double rank_cut, double step_,
             double n_, double sigma2_, const Matrix& Sigma, const Matrix& C,
             const Vector& d0)
      : step(step_), n(n_), sigma2(sigma2_) {
    lambda = eig.values;
    d_coord = eig.vectors.transpose() * d0;
    pinv_vals = Vector::Zero(eig.dim());
    frozen = Vector::Zero(eig.dim());
    for (Index i = 0; i < eig.dim(); ++i) {
      if (std::abs(lambda(i)) > rank_cut)
        pinv_vals(i) = 1.0 / lambda(i);
      else
        frozen(i) = 1.0;
    }
    SigmaT = eig.vectors.transpose() * Sigma * eig.vectors;
    const Matrix CT = eig.vectors.transpose() * C * eig.vectors;
    E = SigmaT.cwiseProduct(CT);
    const Vector w = frozen.cwiseProduct(d_coord);
    bias_frozen = w.dot(SigmaT * w);
  }

  double bias_total(double k) const {
    Vector v(lambda.size());
    for (Index i = 0; i < lambda.size(); ++i)
      v(i) = std::pow(1.0 - step * lambda(i), k) * d_coord(i);
    return v.dot(SigmaT * v);
  }

  // Entrywise coefficient of the learned noise in eigen coordinates; the
  // frozen branch carries the k P_0 term and only contributes when the noise
  // has mass outside range of the driver.
  double variance_at(double k) const {
    if (sigma2 == 0.0) return 0.0;
    Vector D(lambda.size());
    for (Index i = 0; i < lambda.size(); ++i) {
      const double mk = 1.0 - std::pow(1.0 - step * lambda(i), k);
      D(i) = mk * pinv_vals(i) / n;
      if (include_frozen_noise) D(i) += step * k * frozen(i) / n;
    }
    return sigma2 * n * D.dot(E * D);
  }

  double variance_limit() const {
    if (sigma2 == 0.0) return 0.0;
    const Vector D = pinv_vals / n;
    return sigma2 * n * D.dot(E * D);
  }

  // (sigma^2/n) Tr([I - (I - s S)^k] Sigma [..] S^+): the Z-only trace used
  // by the two-batch envelope.
  double z_trace(double k) const {
    if (sigma2 == 0.0) return 0.0;
    double acc = 0.0;
    for (Index i = 0; i < lambda.size(); ++i) {
      const double mk = 1.0 - std::pow(1.0 - step * lambda(i), k);
      acc += mk * mk * SigmaT(i, i) * pinv_vals(i);
    }
    return sigma2 / n * acc;
  }

  double z_trace_limit() const {
    if (sigma2 == 0.0) return 0.0;
    double acc = 0.0;
    for (Index i = 0; i < lambda.size(); ++i)
      acc += SigmaT(i, i) * pinv_vals(i);
    return sigma2 / n * acc;
  }

  double restricted_norm() const {
    double norm = 0.0;
    for (Index i = 0; i < lambda.size(); ++i)
      if (frozen(i) == 0.0)
        norm = std::max(norm, std::abs(1.0 - step * lambda(i)));
    return norm;
  }
};

Vector resolve_beta0(const Vector& beta0, Index p) {
  if (beta0.size() == 0) return Vector::Zero(p);
  if (beta0.size() != p) throw InvalidInput("beta0: dimension mismatch");
  return beta0;
}

void check_hypothesis(const RegressionProblem& problem,
                      const ReshuffleOperators& ops, bool override_hypothesis) {
  if (override_hypothesis || problem.sigma2 == 0.0) return;
  const double res = ops.hypothesis_residual();
  if (res > kHypothesisTol)
    throw HypothesisViolated(
        "risk: range(Xtilde^T) not contained in range(Z), residual " +
        std::to_string(res));
}

RiskEngine reshuffle_engine(const RegressionProblem& problem,
                            const ReshuffleOperators& ops,
                            const Vector& beta0) {
  const Vector b0 = resolve_beta0(beta0, problem.p());
  return RiskEngine(ops.Zeig, ops.rank_cut,
                    static_cast<double>(ops.B) * ops.alpha,
                    static_cast<double>(ops.n), problem.sigma2,
                    problem.Sigma.matrix(), ops.XtildeGram.matrix(),
                    b0 - problem.beta_star);
}

RiskReport run_engine(const RiskEngine& eng, long epochs) {
  RiskReport rep;
  rep.bias_frozen = eng.bias_frozen;
  rep.bias_decaying.resize(epochs + 1);
  rep.variance.resize(epochs + 1);
  rep.total.resize(epochs + 1);
  for (long k = 0; k <= epochs; ++k) {
    const double kk = static_cast<double>(k);
    const double bias = eng.bias_total(kk);
    rep.bias_decaying(k) = bias - eng.bias_frozen;
    rep.variance(k) = eng.variance_at(kk);
    rep.total(k) = eng.bias_frozen + rep.bias_decaying(k) + rep.variance(k);
  }
  if (eng.restricted_norm() < 1.0) {
    RiskLimit lim;
    lim.bias_frozen = eng.bias_frozen;
    lim.variance = eng.variance_limit();
    lim.total = lim.bias_frozen + lim.variance;
    rep.limit = lim;
  }
  return rep;
}

}  // namespace

RiskReport risk_exact_reshuffle(const RegressionProblem& problem,
                                const ReshuffleOperators& ops, long epochs,
                                const Vector& beta0,
                                bool override_hypothesis) {
  check_hypothesis(problem, ops, override_hypothesis);
  return run_engine(reshuffle_engine(problem, ops, beta0), epochs);
}

RiskReport risk_exact_full_batch(const RegressionProblem& problem, double alpha,
                                 long epochs, const Vector& beta0) {
  if (alpha < 0) throw InvalidInput("risk_exact_full_batch: alpha < 0");
  const Vector b0 = resolve_beta0(beta0, problem.p());
  const SymmetricEigen eig = eigh(problem.W);
  RiskEngine eng(eig, eig.rank_cut(), alpha, static_cast<double>(problem.n()),
                 problem.sigma2, problem.Sigma.matrix(), problem.W.matrix(),
                 b0 - problem.beta_star);
  eng.include_frozen_noise = false;  // X^T eta lies in range(W) always
  return run_engine(eng, epochs);
}

RiskLimit risk_limit_reshuffle(const RegressionProblem& problem,
                               const ReshuffleOperators& ops,
                               const Vector& beta0) {
  const RiskEngine eng = reshuffle_engine(problem, ops, beta0);
  if (eng.restricted_norm() >= 1.0)
    throw NotConvergent("risk_limit_reshuffle: ||(I - B a Z) P_Z|| >= 1");
  RiskLimit lim;
  lim.bias_frozen = eng.bias_frozen;
  lim.variance = eng.variance_limit();
  lim.total = lim.bias_frozen + lim.variance;
  return lim;
}

RiskLimit risk_limit_full_batch(const RegressionProblem& problem, double alpha,
                                const Vector& beta0) {
  const Vector b0 = resolve_beta0(beta0, problem.p());
  const SymmetricEigen eig = eigh(problem.W);
  RiskEngine eng(eig, eig.rank_cut(), alpha, static_cast<double>(problem.n()),
                 problem.sigma2, problem.Sigma.matrix(), problem.W.matrix(),
                 b0 - problem.beta_star);
  eng.include_frozen_noise = false;
  if (eng.restricted_norm() >= 1.0)
    throw NotConvergent("risk_limit_full_batch: alpha too large");
  RiskLimit lim;
  lim.bias_frozen = eng.bias_frozen;
  lim.variance = eng.variance_limit();
  lim.total = lim.bias_frozen + lim.variance;
  return lim;
}

RiskBounds risk_bounds_twobatch(const RegressionProblem& problem,
                                const ReshuffleOperators& ops, long epochs,
                                const Vector& beta0, bool enforce_step_bound) {
  if (ops.B != 2)
    throw InvalidInput("risk_bounds_twobatch: requires B == 2");
  const SymmetricEigen weig = eigh(problem.W);
  const double w_norm = weig.values.cwiseAbs().maxCoeff();
  if (enforce_step_bound && ops.alpha * w_norm > 1.0 + 1e-12)
    throw InvalidInput("risk_bounds_twobatch: requires alpha <= 1 / ||W||");

  const RiskEngine eng = reshuffle_engine(problem, ops, beta0);
  RiskBounds bounds;
  bounds.envelope = ops.alpha * w_norm;
  bounds.r_minus.resize(epochs + 1);
  bounds.r_plus.resize(epochs + 1);
  bounds.trace_term.resize(epochs + 1);
  for (long k = 0; k <= epochs; ++k) {
    const double kk = static_cast<double>(k);
    const double bias = eng.bias_total(kk);
    const double trace = eng.z_trace(kk);
    bounds.trace_term(k) = trace;
    bounds.r_minus(k) = bias + (1.0 - bounds.envelope) * trace;
    bounds.r_plus(k) = bias + (1.0 + bounds.envelope) * trace;
  }
  const double tl = eng.z_trace_limit();
  bounds.limit_minus = eng.bias_frozen + (1.0 - bounds.envelope) * tl;
  bounds.limit_plus = eng.bias_frozen + (1.0 + bounds.envelope) * tl;
  return bounds;
}

}  // namespace rgd
