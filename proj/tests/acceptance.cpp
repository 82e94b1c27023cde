// Acceptance suite: ten quantitative criteria covering permutation-oracle
// equivalence, exactness of the mean dynamics and risk, the two-batch step
// bound and risk envelope, the fixed-dimension limit of Z, the divergence
// split, linear-scaling tracking, the free-probability pipeline, and the
// algebraic invariant sweeps.  Prints one line per criterion and exits with
// the number of failures.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "rgd/asymptotics.hpp"
#include "rgd/dynamics.hpp"
#include "rgd/freeprob.hpp"
#include "rgd/risk.hpp"
#include "rgd/rng.hpp"
#include "test_support.hpp"

using namespace rgd;
using test::max_abs;

namespace {

// ---------- shared oracle helpers -------------------------------------------

Vector run_epoch(const RegressionProblem& prob, const BatchPartition& part,
                 double alpha, const std::vector<int>& order, Vector beta) {
  const double step =
      static_cast<double>(part.B) * alpha / static_cast<double>(prob.n());
  for (int b : order) {
    const Batch& batch = part.batches[b];
    beta -= step * (batch.X.transpose() * (batch.X * beta - batch.y));
  }
  return beta;
}

std::vector<std::vector<int>> all_permutations(int B) {
  std::vector<int> perm(B);
  for (int i = 0; i < B; ++i) perm[i] = i;
  std::vector<std::vector<int>> out;
  do {
    out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

Vector exhaustive_mean(const RegressionProblem& prob,
                       const BatchPartition& part, double alpha, int epochs,
                       const Vector& beta0) {
  const auto perms = all_permutations(part.B);
  std::vector<Vector> current = {beta0};
  for (int k = 0; k < epochs; ++k) {
    std::vector<Vector> next;
    next.reserve(current.size() * perms.size());
    for (const Vector& beta : current)
      for (const auto& tau : perms)
        next.push_back(run_epoch(prob, part, alpha, tau, beta));
    current = std::move(next);
  }
  Vector mean = Vector::Zero(prob.p());
  for (const Vector& beta : current) mean += beta;
  return mean / static_cast<double>(current.size());
}

struct Sweep {
  RegressionProblem problem;
  double alpha;
  ReshuffleOperators ops;
};

// 200 problems per regime with alpha < 1 / ||W||, shared by criteria 4 and 5.
const std::vector<Sweep>& contraction_sweep() {
  static const std::vector<Sweep> sweeps = [] {
    std::vector<Sweep> out;
    out.reserve(400);
    auto rng = substream(4040, Stream::trials);
    for (int trial = 0; trial < 400; ++trial) {
      const bool over = trial % 2 == 0;
      const Index n = over ? 20 : 60;
      const Index p = over ? 30 : 12;
      RegressionProblem prob = generate_gaussian(
          n, p, SymmetricMatrix::identity(p), 0.1 + 0.4 * uniform01(rng),
          BetaSpec::unit_sphere, 7000 + trial);
      const SymmetricEigen weig = eigh(prob.W);
      const double alpha =
          (0.05 + 0.94 * uniform01(rng)) / weig.values(0);
      ReshuffleOperators ops =
          assemble(partition(prob, 2), alpha, PiMethod::closed_form);
      out.push_back({std::move(prob), alpha, std::move(ops)});
    }
    return out;
  }();
  return sweeps;
}

// ---------- criteria ---------------------------------------------------------

bool criterion1(std::string& detail) {
  double worst = 0.0;
  auto rng = substream(101, Stream::trials);
  for (int B : {2, 3, 4, 5}) {
    for (int rep = 0; rep < 20; ++rep) {
      const Index p = 2 + static_cast<Index>(bounded(rng, 5));  // 2..6
      Index n = B * (1 + static_cast<Index>(bounded(rng, 20 / B)));
      if (n > 20) n = 20 - 20 % B;
      const RegressionProblem prob = generate_gaussian(
          n, p, SymmetricMatrix::identity(p), 0.0, BetaSpec::unit_sphere,
          1000 + 100 * B + rep);
      const BatchPartition part = partition(prob, B);
      const double alpha = 0.05 + 0.3 * uniform01(rng);
      for (int b = 0; b < B; ++b)
        worst = std::max(worst, max_abs(pi_enumerate(part, alpha, b) -
                                        pi_closed_form(part, alpha, b)));
    }
  }
  std::ostringstream os;
  os << "max |enumerate - closed_form| = " << worst;
  detail = os.str();
  return worst <= 1e-11;
}

bool criterion2(std::string& detail) {
  std::ostringstream os;
  bool ok = true;

  // exhaustive permutation sequences
  {
    const RegressionProblem prob = test::gaussian_problem(6, 2, 0.4, 201);
    const BatchPartition part = partition(prob, 3);
    const double alpha = 0.12;
    const Vector oracle = exhaustive_mean(prob, part, alpha, 2, Vector::Zero(2));
    const ReshuffleOperators ops = assemble(part, alpha, PiMethod::closed_form);
    const Trajectory traj = exact_mean_reshuffle(prob, ops, 2);
    const double dev = (traj.iterates.row(2).transpose() - oracle).norm();
    os << "B=3 k=2 dev " << dev;
    ok = ok && dev <= 1e-12;
  }
  {
    const RegressionProblem prob = test::gaussian_problem(8, 3, 0.5, 202);
    const BatchPartition part = partition(prob, 2);
    const double alpha = 0.1;
    const Vector oracle = exhaustive_mean(prob, part, alpha, 4, Vector::Zero(3));
    const ReshuffleOperators ops = assemble(part, alpha, PiMethod::closed_form);
    const Trajectory traj = exact_mean_reshuffle(prob, ops, 4);
    const double dev = (traj.iterates.row(4).transpose() - oracle).norm();
    os << "; B=2 k=4 dev " << dev;
    ok = ok && dev <= 1e-12;
  }

  // Monte-Carlo agreement at B = 4, k = 3
  {
    const RegressionProblem prob = test::gaussian_problem(16, 5, 0.36, 203);
    const BatchPartition part = partition(prob, 4);
    const double alpha = 0.07;
    const int epochs = 3;
    const ReshuffleOperators ops = assemble(part, alpha, PiMethod::closed_form);
    const Trajectory exact = exact_mean_reshuffle(prob, ops, epochs);
    const Vector target = exact.iterates.row(epochs).transpose();

    const long trials = 100000;
    Vector sum = Vector::Zero(5), sumsq = Vector::Zero(5);
    for (long t = 0; t < trials; ++t) {
      const std::uint64_t seed =
          mix_seed(204, Stream::trials, static_cast<std::uint64_t>(t));
      const Trajectory traj =
          simulate_reshuffle(prob, part, alpha, epochs, seed);
      const Vector last = traj.iterates.row(epochs).transpose();
      sum += last;
      sumsq += last.cwiseProduct(last);
    }
    const Vector mean = sum / trials;
    double worst_z = 0.0;
    for (Index i = 0; i < 5; ++i) {
      const double var =
          (sumsq(i) - trials * mean(i) * mean(i)) / (trials - 1.0);
      const double se = std::sqrt(var / trials);
      worst_z = std::max(worst_z, std::abs(mean(i) - target(i)) / se);
    }
    os << "; B=4 k=3 max |z| over coords " << worst_z;
    ok = ok && worst_z <= 4.0;
  }
  detail = os.str();
  return ok;
}

bool criterion3(std::string& detail) {
  const RegressionProblem base = test::gaussian_problem(40, 10, 0.25, 301);
  const double alpha = 0.06;
  const ReshuffleOperators ops =
      assemble(partition(base, 2), alpha, PiMethod::closed_form);
  const std::vector<long> ks = {1, 5, 25};
  const RiskReport rep = risk_exact_reshuffle(base, ops, 25);

  const long draws = 10000;
  const double sigma = std::sqrt(base.sigma2);
  std::vector<double> sum(ks.size(), 0.0), sumsq(ks.size(), 0.0);
  for (long t = 0; t < draws; ++t) {
    auto rng = substream(302, Stream::noise, static_cast<std::uint64_t>(t));
    const Vector eta = sigma * normal_vector(rng, base.n());
    const RegressionProblem prob = make_problem(
        base.X, base.beta_star, eta, base.Sigma, base.sigma2, base.seed);
    const Trajectory traj = exact_mean_reshuffle(prob, ops, 25);
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const double risk =
          generalization_risk(traj.iterates.row(ks[i]).transpose(), prob);
      sum[i] += risk;
      sumsq[i] += risk * risk;
    }
  }
  double worst_z = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double mean = sum[i] / draws;
    const double var = (sumsq[i] - draws * mean * mean) / (draws - 1.0);
    const double se = std::sqrt(var / draws);
    worst_z = std::max(worst_z, std::abs(mean - rep.total(ks[i])) / se);
  }

  RegressionProblem noiseless = make_problem(
      base.X, base.beta_star, Vector::Zero(base.n()), base.Sigma, 0.0,
      base.seed);
  const RiskReport bias_only = risk_exact_reshuffle(noiseless, ops, 25);
  bool bias_exact = rep.bias_frozen == bias_only.bias_frozen;
  for (long k = 0; k <= 25; ++k)
    bias_exact =
        bias_exact && rep.bias_decaying(k) == bias_only.bias_decaying(k);

  std::ostringstream os;
  os << "max |z| over k in {1,5,25}: " << worst_z
     << (bias_exact ? "; bias terms exact" : "; bias terms DIFFER");
  detail = os.str();
  return worst_z <= 4.0 && bias_exact;
}

bool criterion4(std::string& detail) {
  double worst = 0.0;
  for (const Sweep& s : contraction_sweep())
    worst = std::max(worst, s.ops.restricted_norm());
  std::ostringstream os;
  os << "max ||(I - 2aZ)P_Z|| over 400 trials = " << worst;
  detail = os.str();
  return worst < 1.0;
}

bool criterion5(std::string& detail) {
  bool ok = true;
  double worst_slack = 0.0, worst_width = 0.0;
  const long epochs = 25;
  for (const Sweep& s : contraction_sweep()) {
    const RiskReport rep = risk_exact_reshuffle(s.problem, s.ops, epochs);
    const RiskBounds bounds =
        risk_bounds_twobatch(s.problem, s.ops, epochs);
    for (long k = 0; k <= epochs; ++k) {
      worst_slack = std::max(worst_slack, bounds.r_minus(k) - rep.total(k));
      worst_slack = std::max(worst_slack, rep.total(k) - bounds.r_plus(k));
      const double width = bounds.r_plus(k) - bounds.r_minus(k);
      const double expected = 2.0 * bounds.envelope * bounds.trace_term(k);
      worst_width = std::max(
          worst_width,
          std::abs(width - expected) / std::max(1.0, std::abs(expected)));
    }
  }
  ok = ok && worst_slack <= 1e-10 && worst_width <= 1e-12;

  // tightness witness: W_1 = W_2 = c^2 I via orthogonal design, alpha = 2/c.
  // At these parameters equality requires c = 1 (alpha ||W|| = 2), where the
  // modified features vanish; evaluated past the containment step gate.
  double tight_dev = 0.0;
  {
    const Index n = 12, p = 3;
    auto rng = substream(501, Stream::trials);
    const Matrix q1 = test::random_orthogonal(rng, n / 2).leftCols(p);
    const Matrix q2 = test::random_orthogonal(rng, n / 2).leftCols(p);
    const double c = 1.0;
    Matrix X(n, p);
    X.topRows(n / 2) = std::sqrt(n / 2.0) * c * q1;
    X.bottomRows(n / 2) = std::sqrt(n / 2.0) * c * q2;
    const Vector eta = 0.5 * normal_vector(rng, n);
    const Vector beta_star = normal_vector(rng, p);
    const RegressionProblem prob = make_problem(
        X, beta_star, eta, SymmetricMatrix::identity(p), 0.25, 0);
    const ReshuffleOperators ops =
        assemble(partition(prob, 2), 2.0 / c, PiMethod::closed_form);
    const RiskReport rep = risk_exact_reshuffle(prob, ops, 10);
    const RiskBounds bounds =
        risk_bounds_twobatch(prob, ops, 10, Vector(), false);
    for (long k = 0; k <= 10; ++k)
      tight_dev =
          std::max(tight_dev, std::abs(rep.total(k) - bounds.r_plus(k)));
    ok = ok && tight_dev <= 1e-9;
  }

  std::ostringstream os;
  os << "containment slack " << worst_slack << ", width residual "
     << worst_width << ", tightness dev " << tight_dev;
  detail = os.str();
  return ok;
}

bool criterion6(std::string& detail) {
  const SymmetricMatrix Sigma = SymmetricMatrix::identity(3);
  const std::vector<long> schedule = {1000, 10000, 100000};
  std::ostringstream os;
  bool ok = true;
  double ratio = 0.0;
  for (int B : {2, 3, 4}) {
    const LimitConvergenceReport rep =
        verify_limit(B, 0.5, Sigma, schedule, 20, 600 + B, 2);
    const bool decreasing = rep.mean_binomial[0] > rep.mean_binomial[1] &&
                            rep.mean_binomial[1] > rep.mean_binomial[2];
    os << "B=" << B << " slope " << rep.slope_binomial << "; ";
    ok = ok && decreasing && rep.slope_binomial <= -0.35;
    if (B == 4) {
      ratio = rep.discrimination_ratio;
      ok = ok && ratio >= 2.0;
    }
  }
  os << "B=4 coefficient-law residual ratio " << ratio;
  detail = os.str();
  return ok;
}

bool criterion7(std::string& detail) {
  // Reference configuration: standard Gaussian X, eta, and beta_star at
  // n = 1000, p = 1500, alpha = 0.5.
  const RegressionProblem prob = generate_gaussian(
      1000, 1500, SymmetricMatrix::identity(1500), 1.0,
      BetaSpec::standard_gaussian, 701);
  const double alpha = 0.5;
  const SymmetricEigen weig = eigh(prob.W);
  const bool full_unstable = alpha * weig.values(0) > 2.0;

  const Trajectory full = exact_mean_full_batch(prob, alpha, 100);
  const bool full_diverges = full.err_l2(100) > 1e6;

  const BatchPartition part = partition(prob, 2);
  const ReshuffleOperators half_ops =
      assemble(part, alpha / 2.0, PiMethod::closed_form);
  const bool half_contracts = half_ops.restricted_norm() < 1.0;
  const Trajectory mini = exact_mean_reshuffle(prob, half_ops, 100);
  bool bounded = mini.err_l2.maxCoeff() < 100.0 * mini.err_l2(0);
  bool decreasing = true;
  for (long k = 50; k < 100; ++k)
    decreasing = decreasing &&
                 mini.err_l2(k + 1) <= mini.err_l2(k) * (1.0 + 1e-9);

  // the raw-step reading, reported for completeness
  const ReshuffleOperators raw_ops =
      assemble(part, alpha, PiMethod::closed_form);
  std::ostringstream os;
  os << "full err(100) = " << full.err_l2(100) << " (unstable "
     << full_unstable << "), half-step restricted norm "
     << half_ops.restricted_norm() << ", raw-step restricted norm "
     << raw_ops.restricted_norm();
  detail = os.str();
  return full_unstable && full_diverges && half_contracts && bounded &&
         decreasing;
}

bool criterion8(std::string& detail) {
  const RegressionProblem prob = test::gaussian_problem(500, 750, 0.25, 801);
  const double alpha = 0.2;
  const long epochs = 300;

  const RiskReport full = risk_exact_full_batch(prob, alpha, epochs);
  const RiskLimit full_limit = risk_limit_full_batch(prob, alpha);

  double worst_gap = 0.0, worst_limit_gap = 0.0;
  for (int B : {2, 4}) {
    const ReshuffleOperators ops = assemble(
        partition(prob, B), alpha / static_cast<double>(B),
        PiMethod::closed_form);
    const RiskReport mini = risk_exact_reshuffle(prob, ops, epochs);
    for (long k = 0; k <= epochs; ++k)
      worst_gap = std::max(worst_gap, std::abs(mini.total(k) - full.total(k)));
    const RiskLimit lim = risk_limit_reshuffle(prob, ops);
    worst_limit_gap =
        std::max(worst_limit_gap, std::abs(lim.total - full_limit.total));
  }
  std::ostringstream os;
  os << "max curve gap " << worst_gap << ", max limit gap " << worst_limit_gap;
  detail = os.str();
  return worst_gap <= 0.05 && worst_limit_gap <= 1e-6;
}

bool criterion9(std::string& detail) {
  std::ostringstream os;
  bool ok = true;

  // (a) scalar-inversion MP reference against the analytic density
  for (const auto& [gamma, var] :
       std::vector<std::pair<double, double>>{{0.25, 0.4}, {1.5, 0.2}}) {
    const SpectralDensity ref = mp_reference_density(gamma, var, 800, 1e-8);
    const MarchenkoPastur mp{gamma, var};
    double sup = 0.0;
    for (Index i = 0; i < ref.grid.size(); ++i)
      sup = std::max(sup, std::abs(std::max(0.0, ref.density(i)) -
                                   mp.density(ref.grid(i))));
    os << "mp(" << gamma << "," << var << ") sup " << sup << "; ";
    ok = ok && sup <= 1e-3;
  }

  // (b)(c)(d) polynomial densities at the two regimes
  const SpectralDensity under = spectral_density(0.25, 0.4, {}, {}, 2);
  const SpectralDensity over = spectral_density(1.5, 0.2, {}, {}, 2);

  ok = ok && std::abs(over.point_mass_at_zero - 1.0 / 3.0) <= 0.02;
  os << "atom(over) " << over.point_mass_at_zero << "; ";

  auto esd = [](Index n, Index p, double alpha, std::uint64_t seed) {
    const RegressionProblem prob = generate_gaussian(
        n, p, SymmetricMatrix::identity(p), 0.0, BetaSpec::unit_sphere, seed);
    const ReshuffleOperators ops = assemble(
        partition(prob, 2), alpha / 2.0, PiMethod::closed_form);
    return Vector(alpha * ops.Zeig.values);
  };
  const double ks_under = kolmogorov_smirnov(under, esd(4000, 1000, 0.4, 901));
  const double ks_over = kolmogorov_smirnov(over, esd(1000, 1500, 0.2, 902));
  os << "KS under " << ks_under << ", over " << ks_over << "; ";
  ok = ok && ks_under <= 0.05 && ks_over <= 0.05;

  os << "mass under " << under.total_mass << ", over " << over.total_mass;
  ok = ok && under.total_mass >= 0.99 && under.total_mass <= 1.01;
  ok = ok && over.total_mass >= 0.99 && over.total_mass <= 1.01;

  detail = os.str();
  return ok;
}

bool criterion10(std::string& detail) {
  std::ostringstream os;
  bool ok = true;
  auto rng = substream(1001, Stream::trials);

  // projector idempotence
  double proj_residual = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = test::random_matrix(
        rng, 3 + static_cast<Index>(bounded(rng, 6)),
        3 + static_cast<Index>(bounded(rng, 6)));
    for (const Projector& p : {range_projector(a), nullspace_projector(a)}) {
      proj_residual = std::max(proj_residual, max_abs(p.P * p.P - p.P));
      proj_residual = std::max(proj_residual, max_abs(p.P - p.P.transpose()));
    }
  }
  ok = ok && proj_residual <= 1e-10;
  os << "projector residual " << proj_residual;

  // Z symmetry before symmetrization
  double sym_residual = 0.0;
  for (int B : {2, 3, 4, 5}) {
    const RegressionProblem prob =
        test::gaussian_problem(8 * B, 6, 0.2, 1100 + B);
    const ReshuffleOperators ops =
        assemble(partition(prob, B), 0.21, PiMethod::closed_form);
    sym_residual = std::max(sym_residual, ops.symmetry_residual);
  }
  ok = ok && sym_residual <= 1e-12;
  os << ", Z symmetry " << sym_residual;

  // permutation-average identities for B <= 5
  double identity_residual = 0.0;
  for (int B = 2; B <= 5; ++B) {
    const RegressionProblem prob =
        test::gaussian_problem(4 * B, 3, 0.0, 1200 + B);
    const BatchPartition part = partition(prob, B);
    const double alpha = 0.19;
    const Index p = 3;

    Matrix left = Matrix::Zero(p, p), right = Matrix::Zero(p, p);
    for (int b = 0; b < B; ++b) {
      const Matrix pi = pi_enumerate(part, alpha, b);
      left += pi * part.batches[b].W.matrix();
      right += part.batches[b].W.matrix() * pi;
    }
    identity_residual = std::max(identity_residual, max_abs(left - right));

    Matrix lhs = Matrix::Zero(p, p), rhs_sum = Matrix::Zero(p, p);
    const auto perms = all_permutations(B);
    for (const auto& tau : perms) {
      Matrix suffix = Matrix::Identity(p, p);
      for (int q = B - 1; q >= 0; --q) {
        // suffix currently holds the right-to-left product over positions > q
        lhs += suffix * (alpha * part.batches[tau[q]].W.matrix());
        suffix = suffix * (Matrix::Identity(p, p) -
                           alpha * part.batches[tau[q]].W.matrix());
      }
      rhs_sum += suffix;  // full epoch product
    }
    lhs /= static_cast<double>(perms.size());
    const Matrix rhs =
        Matrix::Identity(p, p) - rhs_sum / static_cast<double>(perms.size());
    identity_residual = std::max(identity_residual, max_abs(lhs - rhs));
  }
  ok = ok && identity_residual <= 1e-11;
  os << ", averaging identities " << identity_residual;

  // truncated geometric against brute force
  double geo_residual = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const Index dim = 2 + static_cast<Index>(bounded(rng, 5));
    const double radius = 0.1 + 1.9 * uniform01(rng);
    const SymmetricMatrix a =
        test::random_symmetric_with_spectrum(rng, dim, -radius, radius);
    const long k = static_cast<long>(bounded(rng, 21));
    Matrix naive = Matrix::Zero(dim, dim);
    Matrix power = Matrix::Identity(dim, dim);
    for (long j = 0; j < k; ++j) {
      naive += power;
      power = a.matrix() * power;
    }
    geo_residual = std::max(
        geo_residual, max_abs(truncated_geometric(a, k) - naive) /
                          std::max(1.0, max_abs(naive)));
  }
  ok = ok && geo_residual <= 1e-10;
  os << ", truncated geometric " << geo_residual;

  // rotation equivariance of the risk
  double rot_residual = 0.0;
  {
    Vector d(5);
    d << 2.0, 1.5, 1.0, 0.7, 0.3;
    const RegressionProblem prob = generate_gaussian(
        20, 5, SymmetricMatrix(Matrix(d.asDiagonal())), 0.36,
        BetaSpec::unit_sphere, 1301);
    const Matrix q = test::random_orthogonal(rng, 5);
    const RegressionProblem rotated = test::rotate_problem(prob, q);
    const RiskReport a = risk_exact_reshuffle(
        prob, assemble(partition(prob, 2), 0.07, PiMethod::closed_form), 25);
    const RiskReport b = risk_exact_reshuffle(
        rotated, assemble(partition(rotated, 2), 0.07, PiMethod::closed_form),
        25);
    for (long k = 0; k <= 25; ++k)
      rot_residual = std::max(
          rot_residual,
          std::abs(a.total(k) - b.total(k)) / std::max(1.0, a.total(k)));
  }
  ok = ok && rot_residual <= 1e-9;
  os << ", rotation equivariance " << rot_residual;

  detail = os.str();
  return ok;
}

struct Criterion {
  int number;
  const char* name;
  std::function<bool(std::string&)> body;
  double budget_seconds;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "permutation-oracle equivalence (B in 2..5, 20 problems each)",
       criterion1, 10.0},
      {2, "mean-iterate exactness (exhaustive and Monte-Carlo)", criterion2,
       120.0},
      {3, "risk exactness (noise-resampling Monte-Carlo)", criterion3, 120.0},
      {4, "two-batch restricted contraction sweep", criterion4, 120.0},
      {5, "two-batch risk envelope (containment, width, tightness)",
       criterion5, 120.0},
      {6, "fixed-dimension limit of Z (slope and coefficient law)",
       criterion6, 120.0},
      {7, "divergence split at the reference configuration", criterion7, 60.0},
      {8, "linear-scaling tracking at desk scale", criterion8, 60.0},
      {9, "free-probability pipeline (reference law, atom, KS, mass)",
       criterion9, 300.0},
      {10, "algebraic invariant suites", criterion10, 30.0},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = c.body(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
      ok = false;
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    const bool in_budget = seconds <= c.budget_seconds;
    if (!in_budget) detail += " [over budget]";
    ok = ok && in_budget;
    std::printf("[%s] criterion %2d: %s  (%.1f s)  %s\n", ok ? "PASS" : "FAIL",
                c.number, c.name, seconds, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  if (failures == 0)
    std::printf("acceptance: all %zu criteria passed\n", criteria.size());
  else
    std::printf("acceptance: %d criteria FAILED\n", failures);
  return failures;
}
