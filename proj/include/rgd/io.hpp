#pragma once

#include <string>
#include <vector>

#include "rgd/asymptotics.hpp"
#include "rgd/dynamics.hpp"
#include "rgd/freeprob.hpp"
#include "rgd/risk.hpp"

namespace rgd {

// Self-describing binary container (magic RGDPRB01): dims and scalars, then
// X row-major, y, beta_star, eta, Sigma row-major.  Round trips bit-exact on
// a fixed platform.
void save_problem(const RegressionProblem& problem, const std::string& path);
RegressionProblem load_problem(const std::string& path);

// Assembled operators cached next to their problem (magic RGDOPS01): the
// stored Pi, Xtilde and Z round-trip bit-exactly; eigendecomposition and
// projectors are recomputed on load.
void save_operators(const ReshuffleOperators& ops, const std::string& path);
ReshuffleOperators load_operators(const std::string& path);

struct Provenance {
  std::string preset;       // empty for ad-hoc runs
  std::string caption_ref;  // figure tag the preset reproduces
};

// Trajectory CSV: epoch,method,alpha,B,seed,err_l2,risk (long format; the
// risk column is the conditional risk of each recorded iterate).
long write_trajectory_csv(const std::string& path,
                          const std::vector<Trajectory>& trajectories,
                          const RegressionProblem& problem,
                          const Provenance& prov = {});

// Risk CSV: epoch,bias_frozen,bias_decaying,variance,total,r_minus,r_plus.
long write_risk_csv(const std::string& path, const RiskReport& report,
                    const Provenance& prov = {});

// Density CSV (x,f) plus a JSON sidecar with the atom and solver stats.
long write_density_csv(const std::string& path, const SpectralDensity& density,
                       const Provenance& prov = {});
void write_density_json(const std::string& path,
                        const SpectralDensity& density);

// Eigenvalue pairs: index,alpha_w_eig,alpha_z_eig.
long write_esd_csv(const std::string& path, const Vector& w_eigs,
                   const Vector& z_eigs, const Provenance& prov = {});

// Convergence rows: n,seed,error_norm,error_norm_factorial.
long write_limit_csv(const std::string& path,
                     const LimitConvergenceReport& report,
                     const Provenance& prov = {});
void write_limit_json(const std::string& path,
                      const LimitConvergenceReport& report);

std::string sha256_file(const std::string& path);

struct ManifestEntry {
  std::string file;
  std::string sha256;
  long rows = 0;
  std::string preset;
  std::string caption_ref;
};

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries);

}  // namespace rgd
