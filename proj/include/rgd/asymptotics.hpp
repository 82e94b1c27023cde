#pragma once

#include "rgd/problem.hpp"

namespace rgd {

// Large-n, fixed-p limit of Z(alpha/B): Sigma (I - p_{B,alpha}(Sigma)) with
// the shrinkage polynomial p_{B,alpha}(l) = sum_i c_i l^i.
//
// Two candidate coefficient laws are implemented because the two printed
// statements of the result disagree for B >= 4:
//   binomial:  c_i = (-1)^{i+1} C(B-1, i) / (i+1) * (alpha/B)^i
//   factorial: c_i = (-1)^{i+1} (B-1)!(B-1-i)!/(i+1)! * (alpha/B)^i
// They coincide for B <= 3.  The binomial form is the production law; it is
// the one consistent with the ordered-subset counting in the closed-form
// Pi_b expansion, and verify_limit discriminates the two empirically.
enum class CoefficientForm { binomial, factorial };

struct ShrinkagePolynomial {
  int B = 1;
  double alpha = 0.0;
  Vector coefficients;  // c_1 .. c_{B-1}; empty for B == 1

  double operator()(double lambda) const {
    double acc = 0.0;
    double pow_l = 1.0;
    for (Index i = 0; i < coefficients.size(); ++i) {
      pow_l *= lambda;
      acc += coefficients(i) * pow_l;
    }
    return acc;
  }

  // Sigma (I - p(Sigma)) for PSD Sigma.
  Matrix limit_matrix(const SymmetricMatrix& Sigma) const;
};

ShrinkagePolynomial shrinkage_polynomial(
    int B, double alpha, CoefficientForm form = CoefficientForm::binomial);

struct LimitConvergenceRow {
  long n = 0;
  std::uint64_t seed = 0;
  double err_binomial = 0.0;   // ||Z(alpha/B) - limit||_2, binomial law
  double err_factorial = 0.0;  // same against the factorial law
};

struct LimitConvergenceReport {
  int B = 1;
  double alpha = 0.0;
  std::vector<long> n_schedule;
  std::vector<LimitConvergenceRow> rows;
  std::vector<double> mean_binomial;   // per n in schedule order
  std::vector<double> mean_factorial;
  double slope_binomial = 0.0;  // log-log fit of mean_binomial vs n
  // mean factorial-law residual / mean binomial-law residual at the
  // largest n; > 1 favours the binomial law.
  double discrimination_ratio = 0.0;
};

// Draws Gaussian problems of growing n, assembles Z at step alpha/B, and
// measures the distance to both candidate limits.
LimitConvergenceReport verify_limit(int B, double alpha,
                                    const SymmetricMatrix& Sigma,
                                    const std::vector<long>& n_schedule,
                                    int seeds, std::uint64_t base_seed,
                                    int workers = 1);

// Per-coordinate mean dynamics when every batch modifier equals
// Pi = I - p(W): in the right singular basis V of X the error decouples with
// rates 1 - alpha lhat_i (1 - p(lhat_i)).  `alpha` is the full-batch-scale
// step; the underlying engine runs at alpha/B per batch.
struct DecoupledDynamics {
  Vector sample_eigenvalues;  // lhat, descending
  Vector sigma_eigenvalues;   // diag of V^T Sigma V
  Vector rates;
  Matrix coordinates;  // (epochs+1) x p rows of V^T (mean_k - beta_star)
  Vector risk;         // length epochs+1
  Matrix V;
};

DecoupledDynamics decoupled_dynamics(const RegressionProblem& problem, int B,
                                     double alpha,
                                     const ShrinkagePolynomial& poly,
                                     long epochs,
                                     const Vector& beta0 = Vector());

struct ShrinkageRow {
  double lambda = 0.0;
  double shrunk = 0.0;  // lambda (1 - p(lambda))
};

// Requires alpha ||Sigma|| <= 1.
std::vector<ShrinkageRow> shrinkage_comparison(int B, double alpha,
                                               const SymmetricMatrix& Sigma);

}  // namespace rgd
