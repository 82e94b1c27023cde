#include "rgd/freeprob.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rgd/parallel.hpp"

namespace rgd {
namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Matrix4cd im_part(const Matrix4c& m) {
  return (m - m.adjoint()) / Complex(0.0, 2.0);
}

bool upper_half_plane(const Matrix4c& m) {
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(im_part(m));
  return es.eigenvalues().minCoeff() > 0.0;
}

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on the
// three-term recurrence.
void gauss_legendre(int n, Vector& nodes, Vector& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes(n - 1 - i) = x;
    weights(n - 1 - i) = 2.0 / ((1.0 - x * x) * pp * pp);
  }
}

}  // namespace

double MarchenkoPastur::x_minus() const {
  const double s = 1.0 - std::sqrt(gamma);
  return var * s * s;
}

double MarchenkoPastur::x_plus() const {
  const double s = 1.0 + std::sqrt(gamma);
  return var * s * s;
}

double MarchenkoPastur::point_mass_at_zero() const {
  return std::max(0.0, 1.0 - 1.0 / gamma);
}

double MarchenkoPastur::density(double x) const {
  if (x <= x_minus() || x >= x_plus()) return 0.0;
  return std::sqrt((x_plus() - x) * (x - x_minus())) /
         (2.0 * kPi * var * gamma * x);
}

Complex mp_stieltjes(Complex z, double gamma, double var) {
  if (z.imag() <= 0.0)
    throw InvalidInput("mp_stieltjes: requires Im(z) > 0");
  const Complex a(var * (1.0 - gamma), 0.0);
  const Complex b = z - var * (gamma + 1.0);
  Complex root = std::sqrt(b * b - 4.0 * gamma * var * var);
  if (root.imag() < 0.0) root = -root;
  return (a - z + root) / (2.0 * var * gamma * z);
}

Complex MarchenkoPastur::stieltjes(Complex z) const {
  return mp_stieltjes(z, gamma, var);
}

double SpectralMeasure::total_mass() const {
  double m = weights.size() ? weights.sum() : 0.0;
  for (const auto& a : atoms) m += a.second;
  return m;
}

SpectralMeasure delta_measure(double c) {
  SpectralMeasure nu;
  nu.atoms.push_back({c, 1.0});
  return nu;
}

SpectralMeasure mp_quadrature(const MarchenkoPastur& mp, int nodes,
                              double eps) {
  SpectralMeasure nu;
  if (mp.point_mass_at_zero() > 0.0)
    nu.atoms.push_back({0.0, mp.point_mass_at_zero()});

  Vector gl_nodes, gl_weights;
  gauss_legendre(nodes, gl_nodes, gl_weights);

  const double center = 0.5 * (mp.x_plus() + mp.x_minus());
  const double radius = 0.5 * (mp.x_plus() - mp.x_minus());
  nu.nodes.resize(nodes);
  nu.weights.resize(nodes);
  for (int j = 0; j < nodes; ++j) {
    // t = center + radius sin(theta): cos(theta) absorbs the edge roots.
    const double theta = 0.5 * kPi * gl_nodes(j);
    const double t = center + radius * std::sin(theta);
    const double jac = 0.5 * kPi * radius * std::cos(theta);
    const double f = mp_stieltjes(Complex(t, eps), mp.gamma, mp.var).imag() / kPi;
    nu.nodes(j) = t;
    nu.weights(j) = gl_weights(j) * jac * f;
  }
  return nu;
}

Linearization build_linearization() {
  Linearization lin;
  lin.b0 << 0, 1, 0, 0,
            1, -1, -1, -1,
            0, -1, -1, 1,
            0, -1, 1, -1;
  lin.b1 = Matrix4r::Zero();
  lin.b1(0, 2) = lin.b1(2, 0) = 1.0;
  lin.b2 = Matrix4r::Zero();
  lin.b2(0, 3) = lin.b2(3, 0) = 1.0;
  return lin;
}

namespace {

// Resolvent average without the half-plane gate; iterates of the
// subordination map can brush the boundary by roundoff and are integrated
// anyway.  Non-finite resolvents still abort.
Matrix4c resolvent_sum(const Matrix4c& b, const Matrix4r& bj,
                       const SpectralMeasure& nu) {
  const Matrix4c bjc = bj.cast<Complex>();
  Matrix4c acc = Matrix4c::Zero();
  for (const auto& [x, mass] : nu.atoms) {
    const Matrix4c inv = (b - x * bjc).inverse();
    if (!inv.allFinite())
      throw QuadratureFailure("operator_cauchy: singular resolvent at atom");
    acc += mass * inv;
  }
  for (Index j = 0; j < nu.nodes.size(); ++j) {
    const Matrix4c inv = (b - nu.nodes(j) * bjc).inverse();
    if (!inv.allFinite())
      throw QuadratureFailure(
          "operator_cauchy: singular resolvent at quadrature node");
    acc += nu.weights(j) * inv;
  }
  return acc;
}

}  // namespace

Matrix4c operator_cauchy(const Matrix4c& b, const Matrix4r& bj,
                         const SpectralMeasure& nu) {
  if (!upper_half_plane(b))
    throw InvalidInput("operator_cauchy: Im(b) must be positive definite");
  return resolvent_sum(b, bj, nu);
}

namespace {

Matrix4c h_transform(const Matrix4c& b, const Matrix4r& bj,
                     const SpectralMeasure& nu) {
  return resolvent_sum(b, bj, nu).inverse() - b;
}

Matrix4c subordination_map(const Matrix4c& a, const Matrix4c& b,
                           const Linearization& lin,
                           const SpectralMeasure& nu1,
                           const SpectralMeasure& nu2) {
  return h_transform(h_transform(a, lin.b1, nu1) + b, lin.b2, nu2) + b;
}

FixedPointResult iterate_subordination(const Matrix4c& b,
                                       const Linearization& lin,
                                       const SpectralMeasure& nu1,
                                       const SpectralMeasure& nu2,
                                       double damping, double tol,
                                       int max_iters, const Matrix4c* warm) {
  Matrix4c omega = warm ? *warm : b;
  FixedPointResult res;
  for (int it = 1; it <= max_iters; ++it) {
    const Matrix4c fo = subordination_map(omega, b, lin, nu1, nu2);
    const double residual = (fo - omega).cwiseAbs().maxCoeff();
    omega = damping * fo + (1.0 - damping) * omega;
    if (residual <= tol) {
      res.omega = omega;
      res.iterations = it;
      res.residual = residual;
      return res;
    }
  }
  throw NonConvergence("subordination_fixed_point: max iterations reached");
}

}  // namespace

FixedPointResult subordination_fixed_point(const Matrix4c& b,
                                           const Linearization& lin,
                                           const SpectralMeasure& nu1,
                                           const SpectralMeasure& nu2,
                                           const OperatorCauchyState& state,
                                           const Matrix4c* warm_start) {
  if (state.damping <= 0.0 || state.damping > 1.0)
    throw InvalidInput("subordination_fixed_point: damping must be in (0, 1]");
  if (state.epsilon <= 0.0 || state.fixed_point_tol <= 0.0)
    throw InvalidInput(
        "subordination_fixed_point: epsilon and tolerance must be positive");
  if (!upper_half_plane(b))
    throw InvalidInput("subordination_fixed_point: b not in upper half-plane");
  try {
    return iterate_subordination(b, lin, nu1, nu2, state.damping,
                                 state.fixed_point_tol, state.max_iters,
                                 warm_start);
  } catch (const NonConvergence&) {
    // Undamped retry; some points converge plainly where relaxation stalls.
    return iterate_subordination(b, lin, nu1, nu2, 1.0, state.fixed_point_tol,
                                 state.max_iters, nullptr);
  }
}

PolynomialCauchyResult polynomial_cauchy(Complex z, const Linearization& lin,
                                         const SpectralMeasure& nu1,
                                         const SpectralMeasure& nu2,
                                         const OperatorCauchyState& state,
                                         const Matrix4c* warm_start) {
  if (z.imag() <= 0.0)
    throw InvalidInput("polynomial_cauchy: requires Im(z) > 0");
  // The regularization of the non-scalar slots must vanish faster than the
  // evaluation height, or it biases the [0,0] entry near spectral atoms; a
  // floor of 1e-8 keeps the 4x4 inversions clear of roundoff.
  const double lam_eps =
      std::max(1e-8, std::min(state.epsilon, 1e-3 * z.imag()));
  Matrix4c lambda = Matrix4c::Zero();
  lambda(0, 0) = z;
  lambda(1, 1) = lambda(2, 2) = lambda(3, 3) = Complex(0.0, lam_eps);
  const Matrix4c b = lambda - lin.b0.cast<Complex>();
  const FixedPointResult fp =
      subordination_fixed_point(b, lin, nu1, nu2, state, warm_start);
  PolynomialCauchyResult out;
  out.omega = fp.omega;
  out.iterations = fp.iterations;
  out.value = resolvent_sum(fp.omega, lin.b1, nu1)(0, 0);
  return out;
}

double SpectralDensity::cdf(double x) const {
  double acc = (x >= 0.0) ? point_mass_at_zero : 0.0;
  for (Index i = 0; i + 1 < grid.size(); ++i) {
    const double f0 = std::max(0.0, density(i));
    const double f1 = std::max(0.0, density(i + 1));
    if (grid(i + 1) <= x) {
      acc += 0.5 * (f0 + f1) * (grid(i + 1) - grid(i));
    } else if (grid(i) < x) {
      const double t = (x - grid(i)) / (grid(i + 1) - grid(i));
      const double fx = f0 + t * (f1 - f0);
      acc += 0.5 * (f0 + fx) * (x - grid(i));
      break;
    } else {
      break;
    }
  }
  return acc;
}

double SpectralDensity::moment(int order) const {
  double acc = 0.0;  // the atom sits at zero and never contributes
  for (Index i = 0; i + 1 < grid.size(); ++i) {
    const double f0 = std::max(0.0, density(i)) * std::pow(grid(i), order);
    const double f1 =
        std::max(0.0, density(i + 1)) * std::pow(grid(i + 1), order);
    acc += 0.5 * (f0 + f1) * (grid(i + 1) - grid(i));
  }
  return acc;
}

namespace {

struct DensitySolver {
  Linearization lin = build_linearization();
  SpectralMeasure nu;
  OperatorCauchyState state;

  // Re(i eta G_p(i eta)): converges to the atom at zero as eta drops.
  double atom_probe(double eta) const {
    const PolynomialCauchyResult r =
        polynomial_cauchy(Complex(0.0, eta), lin, nu, nu, state, nullptr);
    return (Complex(0.0, eta) * r.value).real();
  }
};

}  // namespace

SpectralDensity spectral_density(double gamma_data, double alpha,
                                 const DensityGridSpec& grid,
                                 const OperatorCauchyState& state,
                                 int workers) {
  if (gamma_data <= 0.0)
    throw InvalidInput("spectral_density: gamma must be > 0");
  // Free model of alpha Z(alpha/2): ratio 2 gamma, variance alpha/2.
  const MarchenkoPastur mp{2.0 * gamma_data, alpha / 2.0};

  DensitySolver solver;
  solver.nu = mp_quadrature(mp, state.quad_nodes, state.epsilon);
  solver.state = state;

  SpectralDensity out;
  out.gamma = gamma_data;
  out.alpha = alpha;
  out.epsilon = state.epsilon;

  // Atom at zero by two-level Richardson extrapolation over the probe
  // heights {1e-3, 1e-4, 1e-5}; the leading probe error is O(eta^2) since
  // the continuous support stays away from the origin.
  const double v3 = solver.atom_probe(1e-3);
  const double v4 = solver.atom_probe(1e-4);
  const double v5 = solver.atom_probe(1e-5);
  const double r1 = (100.0 * v4 - v3) / 99.0;
  const double r2 = (100.0 * v5 - v4) / 99.0;
  double atom = (100.0 * r2 - r1) / 99.0;
  atom = std::clamp(atom, 0.0, 1.0);
  if (atom < 1e-4) atom = 0.0;
  out.point_mass_at_zero = atom;

  const double x_hi =
      grid.x_max_factor * MarchenkoPastur{gamma_data, alpha}.x_plus();
  std::vector<double> xs;
  xs.reserve(grid.points);
  // Inside ~1e-3 of an atom the grid would only sample its smeared Poisson
  // kernel, whose subtraction cannot reach the needed relative accuracy;
  // the continuous part is resolved from outside that window.
  const double atom_window = atom > 0.0 ? 1e-3 : 0.0;
  for (int i = 0; i < grid.points; ++i) {
    const double x = grid.x_min + (x_hi - grid.x_min) *
                                      static_cast<double>(i) /
                                      (grid.points - 1);
    if (std::abs(x) < atom_window) continue;
    xs.push_back(x);
  }

  std::vector<double> fs;
  std::vector<int> iters;
  auto evaluate = [&](const std::vector<double>& pts, std::vector<double>& vals,
                      std::vector<int>& its) {
    vals.assign(pts.size(), 0.0);
    its.assign(pts.size(), 0);
    parallel_for_chunked(
        static_cast<std::int64_t>(pts.size()), grid.chunk, workers,
        [&](std::int64_t lo, std::int64_t hi) {
          Matrix4c warm;
          bool have_warm = false;
          for (std::int64_t i = lo; i < hi; ++i) {
            PolynomialCauchyResult r = polynomial_cauchy(
                Complex(pts[static_cast<std::size_t>(i)], state.epsilon),
                solver.lin, solver.nu, solver.nu, state,
                have_warm ? &warm : nullptr);
            warm = r.omega;
            have_warm = true;
            vals[static_cast<std::size_t>(i)] = -r.value.imag() / kPi;
            its[static_cast<std::size_t>(i)] = r.iterations;
          }
        });
  };
  evaluate(xs, fs, iters);

  // Refine where the sampled density jumps, up to the point budget.
  for (int pass = 0; pass < grid.refine_passes; ++pass) {
    const double range =
        *std::max_element(fs.begin(), fs.end()) -
        *std::min_element(fs.begin(), fs.end());
    std::vector<double> new_pts;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      if (std::abs(fs[i + 1] - fs[i]) <= grid.refine_threshold * range)
        continue;
      const double mid = 0.5 * (xs[i] + xs[i + 1]);
      if (std::abs(mid) < atom_window) continue;
      new_pts.push_back(mid);
    }
    if (new_pts.empty()) break;
    if (xs.size() + new_pts.size() > static_cast<std::size_t>(grid.max_points))
      new_pts.resize(grid.max_points - xs.size());
    if (new_pts.empty()) break;
    std::vector<double> new_fs;
    std::vector<int> new_iters;
    evaluate(new_pts, new_fs, new_iters);
    std::vector<std::pair<double, std::pair<double, int>>> merged;
    merged.reserve(xs.size() + new_pts.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
      merged.push_back({xs[i], {fs[i], iters[i]}});
    for (std::size_t i = 0; i < new_pts.size(); ++i)
      merged.push_back({new_pts[i], {new_fs[i], new_iters[i]}});
    std::sort(merged.begin(), merged.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    xs.resize(merged.size());
    fs.resize(merged.size());
    iters.resize(merged.size());
    for (std::size_t i = 0; i < merged.size(); ++i) {
      xs[i] = merged[i].first;
      fs[i] = merged[i].second.first;
      iters[i] = merged[i].second.second;
    }
  }

  // Remove the Lorentzian smear of the atom so the grid holds only the
  // absolutely continuous part.
  out.grid.resize(static_cast<Index>(xs.size()));
  out.density.resize(static_cast<Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out.grid(static_cast<Index>(i)) = xs[i];
    double f = fs[i];
    if (atom > 0.0)
      f -= atom * (state.epsilon / kPi) /
           (xs[i] * xs[i] + state.epsilon * state.epsilon);
    out.density(static_cast<Index>(i)) = f;
  }
  out.iteration_counts = iters;

  double mass = atom;
  for (Index i = 0; i + 1 < out.grid.size(); ++i)
    mass += 0.5 *
            (std::max(0.0, out.density(i)) + std::max(0.0, out.density(i + 1))) *
            (out.grid(i + 1) - out.grid(i));
  out.total_mass = mass;
  if (std::abs(mass - 1.0) > grid.tol_norm)
    throw NormalizationFailure("spectral_density: total mass " +
                               std::to_string(mass));
  return out;
}

SpectralDensity mp_reference_density(double gamma, double var, int points,
                                     double eps) {
  const MarchenkoPastur mp{gamma, var};
  SpectralDensity out;
  out.gamma = gamma;
  out.alpha = var;
  out.epsilon = eps;
  out.point_mass_at_zero = mp.point_mass_at_zero();

  const double lo = std::min(-0.05, mp.x_minus() - 0.05);
  const double hi = 1.1 * mp.x_plus();
  out.grid.resize(points);
  out.density.resize(points);
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
    double f = mp_stieltjes(Complex(x, eps), gamma, var).imag() / kPi;
    if (out.point_mass_at_zero > 0.0)
      f -= out.point_mass_at_zero * (eps / kPi) / (x * x + eps * eps);
    out.grid(i) = x;
    out.density(i) = f;
  }
  double mass = out.point_mass_at_zero;
  for (Index i = 0; i + 1 < out.grid.size(); ++i)
    mass += 0.5 *
            (std::max(0.0, out.density(i)) + std::max(0.0, out.density(i + 1))) *
            (out.grid(i + 1) - out.grid(i));
  out.total_mass = mass;
  return out;
}

double kolmogorov_smirnov(const SpectralDensity& law, Vector eigenvalues) {
  for (Index i = 0; i < eigenvalues.size(); ++i)
    if (std::abs(eigenvalues(i)) <= 1e-8) eigenvalues(i) = 0.0;
  std::sort(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
  const double m = static_cast<double>(eigenvalues.size());
  double ks = 0.0;
  Index i = 0;
  while (i < eigenvalues.size()) {
    Index j = i;
    while (j + 1 < eigenvalues.size() && eigenvalues(j + 1) == eigenvalues(i))
      ++j;
    const double x = eigenvalues(i);
    // Tie groups (the rank-deficient zeros matching the atom) compare the
    // right-continuous CDF on top and its left limit underneath.
    const double upper = law.cdf(x);
    const double lower =
        upper - (x == 0.0 ? law.point_mass_at_zero : 0.0);
    ks = std::max(ks, std::abs(upper - static_cast<double>(j + 1) / m));
    ks = std::max(ks, std::abs(lower - static_cast<double>(i) / m));
    i = j + 1;
  }
  return ks;
}

}  // namespace rgd
