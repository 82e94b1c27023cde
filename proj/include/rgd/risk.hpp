#pragma once

#include <optional>

#include "rgd/reshuffling.hpp"

namespace rgd {

// Exact conditional generalization risk of the mean iterate.  Decomposition:
//   bias_frozen    = d^T P_{S,0} Sigma P_{S,0} d          (constant in k)
//   bias_decaying  = d^T (I - s S)^k Sigma (I - s S)^k d - bias_frozen
//   variance       = sigma^2 Tr of the learned-noise quadratic form
// with d = beta0 - beta_star and S the driver (Z, or W for full batch).
// bias_decaying absorbs the frozen/learnable cross term so that the total is
// the exact expected risk for every Sigma, not only when Sigma commutes with
// the driver; the cross term dies off as k grows and vanishes identically in
// the isotropic case.
struct RiskLimit {
  double bias_frozen = 0.0;
  double variance = 0.0;
  double total = 0.0;
};

// Two-batch envelope: same bias terms as the exact risk; the variance trace
// is bracketed by (1 -+ alpha ||W||) times the Z-only trace term.
struct RiskBounds {
  Vector r_minus, r_plus;  // length epochs+1
  Vector trace_term;       // (sigma^2/n) Tr([I-(I-2aZ)^k] Sigma [..] Z^+)
  double envelope = 0.0;   // alpha * ||W||
  double limit_minus = 0.0, limit_plus = 0.0;
};

struct RiskReport {
  double bias_frozen = 0.0;
  Vector bias_decaying;  // length epochs+1
  Vector variance;
  Vector total;
  std::optional<RiskLimit> limit;  // present when the restricted norm is < 1
  std::optional<RiskBounds> bounds;

  long epochs() const { return total.size() - 1; }
};

RiskReport risk_exact_reshuffle(const RegressionProblem& problem,
                                const ReshuffleOperators& ops, long epochs,
                                const Vector& beta0 = Vector(),
                                bool override_hypothesis = false);

RiskReport risk_exact_full_batch(const RegressionProblem& problem, double alpha,
                                 long epochs, const Vector& beta0 = Vector());

// Limiting risk components; throws NotConvergent when ||(I - B a Z) P_Z|| >= 1.
RiskLimit risk_limit_reshuffle(const RegressionProblem& problem,
                               const ReshuffleOperators& ops,
                               const Vector& beta0 = Vector());

// Full-batch limit: frozen term + (sigma^2/n) Tr(Sigma W^+); requires
// alpha < 2 / ||W||.
RiskLimit risk_limit_full_batch(const RegressionProblem& problem, double alpha,
                                const Vector& beta0 = Vector());

// Requires B == 2 and alpha <= 1 / ||W||.  The containment guarantee only
// holds under that step bound; enforce_step_bound = false evaluates the
// envelope formulas anyway (the equality case of the upper bound lives at
// alpha ||W|| = 2, where the modified features vanish).
RiskBounds risk_bounds_twobatch(const RegressionProblem& problem,
                                const ReshuffleOperators& ops, long epochs,
                                const Vector& beta0 = Vector(),
                                bool enforce_step_bound = true);

}  // namespace rgd
