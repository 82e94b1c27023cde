#pragma once

#include <complex>
#include <vector>

#include "rgd/linalg.hpp"

namespace rgd {

using Complex = std::complex<double>;
using Matrix4c = Eigen::Matrix4cd;
using Matrix4r = Eigen::Matrix4d;

// Marchenko-Pastur law with ratio parameter gamma and variance scale var:
// density on [x_-, x_+] with x_+- = var (1 +- sqrt(gamma))^2 plus an atom of
// mass (1 - 1/gamma)_+ at zero.
struct MarchenkoPastur {
  double gamma = 1.0;
  double var = 1.0;

  double x_minus() const;
  double x_plus() const;
  double point_mass_at_zero() const;
  double density(double x) const;       // absolutely continuous part
  Complex stieltjes(Complex z) const;   // m(z), Im z > 0; Cauchy G = -m
};

// m(z) for MP(gamma, var); branch of the square root with positive
// imaginary part.  Throws InvalidInput off the upper half-plane.
Complex mp_stieltjes(Complex z, double gamma, double var);

// Discretized spectral measure: point atoms plus a quadrature rule for the
// absolutely continuous part, so that  int g dnu ~ sum_j w_j g(t_j) +
// sum_atoms mass g(x).
struct SpectralMeasure {
  std::vector<std::pair<double, double>> atoms;  // (location, mass)
  Vector nodes;
  Vector weights;

  double total_mass() const;
};

// Test support: the deterministic measure delta_c.
SpectralMeasure delta_measure(double c);

// Gauss-Legendre rule on the MP support after the sine substitution that
// absorbs the square-root edge factors; node densities are read off
// (1/pi) Im m(t + i eps).
SpectralMeasure mp_quadrature(const MarchenkoPastur& mp, int nodes,
                              double eps);

// 4x4 linearization of w1 + w2 - (w2 w1 + w1 w2)/2: the Schur complement of
// b0 + b1 w1 + b2 w2 against its leading entry reproduces the polynomial.
struct Linearization {
  Matrix4r b0, b1, b2;
};

Linearization build_linearization();

struct OperatorCauchyState {
  double epsilon = 1e-6;       // half-plane regularization
  int quad_nodes = 2000;
  double fixed_point_tol = 1e-6;
  double damping = 0.5;        // relaxation factor in (0, 1]
  int max_iters = 20000;
};

// G_{b_j (x) w}(b) = int (b - t b_j)^{-1} dnu(t) for b with positive
// definite imaginary part.
Matrix4c operator_cauchy(const Matrix4c& b, const Matrix4r& bj,
                         const SpectralMeasure& nu);

struct FixedPointResult {
  Matrix4c omega;
  int iterations = 0;
  double residual = 0.0;  // max entrywise |f(omega) - omega| at return
};

// Subordination: the unique fixed point of
//   f_b(a) = h2(h1(a) + b) + b,   h_j(a) = G_j(a)^{-1} - a,
// through which the operator Cauchy transform of b1 (x) w1 + b2 (x) w2
// factors.  Damped iteration from omega0 = b (or the warm start); throws
// NonConvergence past max_iters.
FixedPointResult subordination_fixed_point(const Matrix4c& b,
                                           const Linearization& lin,
                                           const SpectralMeasure& nu1,
                                           const SpectralMeasure& nu2,
                                           const OperatorCauchyState& state,
                                           const Matrix4c* warm_start = nullptr);

// Scalar Cauchy transform of the polynomial at z in the upper half-plane:
// [G_{L_p}(diag(z, i eps, i eps, i eps))]_{0,0}.
struct PolynomialCauchyResult {
  Complex value;
  int iterations = 0;
  Matrix4c omega;  // reusable as a warm start for a nearby z
};

PolynomialCauchyResult polynomial_cauchy(Complex z, const Linearization& lin,
                                         const SpectralMeasure& nu1,
                                         const SpectralMeasure& nu2,
                                         const OperatorCauchyState& state,
                                         const Matrix4c* warm_start = nullptr);

struct DensityGridSpec {
  int points = 800;
  double x_min = -0.05;
  double x_max_factor = 1.1;  // times x_+ of MP(gamma, alpha)
  int refine_passes = 2;
  double refine_threshold = 0.04;  // fraction of the density range per step
  int max_points = 2400;
  double tol_norm = 0.01;
  int chunk = 64;  // warm-start window; fixed so results ignore worker count
};

struct SpectralDensity {
  Vector grid;
  Vector density;
  double point_mass_at_zero = 0.0;
  double gamma = 0.0;   // data aspect ratio p/n
  double alpha = 0.0;
  double epsilon = 0.0;
  double total_mass = 0.0;
  std::vector<int> iteration_counts;

  // Right-continuous CDF including the atom at zero.
  double cdf(double x) const;
  double moment(int order) const;  // of the continuous part + atom
};

// Limiting spectral density of alpha Z(alpha/2) for two batches in the
// proportional regime gamma = lim p/n: the law of
// w1 + w2 - (w2 w1 + w1 w2)/2 with w_j free MP(2 gamma, alpha/2) elements.
// The atom at zero is estimated by Richardson extrapolation of
// i eps G_p(i eps) and its smeared Lorentzian is subtracted from the grid
// density before normalization.
SpectralDensity spectral_density(double gamma_data, double alpha,
                                 const DensityGridSpec& grid = {},
                                 const OperatorCauchyState& state = {},
                                 int workers = 1);

// Scalar-inversion reference for the pure MP law (no linearization): used to
// sanity-check the Stieltjes machinery against the analytic density.
SpectralDensity mp_reference_density(double gamma, double var, int points,
                                     double eps);

// Two-sided Kolmogorov-Smirnov distance between the computed law and an
// empirical spectrum; eigenvalues within 1e-8 of zero are matched against
// the atom.
double kolmogorov_smirnov(const SpectralDensity& law, Vector eigenvalues);

}  // namespace rgd
