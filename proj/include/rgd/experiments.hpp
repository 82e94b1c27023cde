#pragma once

#include <string>
#include <vector>

#include "rgd/io.hpp"

namespace rgd {

struct SigmaSpec {
  std::string kind = "identity";  // identity | scaled | diag
  double scale = 1.0;
  std::vector<double> diag;

  SymmetricMatrix materialize(Index p) const;
};

struct ProblemSpec {
  long n = 0;
  long p = 0;
  SigmaSpec sigma;
  double sigma2 = 0.0;
  std::string beta_kind = "sphere";  // sphere | gaussian | fixed
  std::vector<double> beta_values;
  std::uint64_t seed = 0;

  RegressionProblem materialize() const;
};

// One output cell of an experiment.  `kind` selects the engine:
//   simulate               empirical trajectories (trials > 1 averages risk)
//   exact_reshuffle        mean-iterate trajectory
//   exact_full_batch       full-batch trajectory
//   exact_with_replacement time-changed full-batch trajectory
//   risk                   exact risk curves (bounds optional, B == 2)
//   spectrum               limiting density of alpha Z(alpha/2)
//   mp_density             scalar-inversion MP reference density
//   empirical_esd          eigenvalues of alpha W and alpha Z(alpha/2)
struct MethodSpec {
  std::string kind;
  int B = 1;
  double alpha = 0.0;
  long epochs = 0;
  long trials = 1;
  bool bounds = false;
  double gamma = 0.0;   // spectrum / mp_density
  int grid = 800;
  int quad = 2000;
};

struct ExperimentConfig {
  std::string name;
  ProblemSpec problem;
  std::vector<MethodSpec> methods;
  std::string out_dir;  // optional; CLI --out overrides
  std::string preset;
  std::string caption_ref;
};

// Strict parse: unknown keys are errors (reported with their JSON path);
// syntax errors carry a line number.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

const std::vector<std::string>& preset_names();
// Frozen parameter sets reproducing the reference figures.
ExperimentConfig preset_config(const std::string& name);

struct RunResult {
  std::vector<ManifestEntry> manifest;
  std::string manifest_path;
};

RunResult run(const ExperimentConfig& config, const std::string& out_dir,
              int workers, bool verbose);

}  // namespace rgd
