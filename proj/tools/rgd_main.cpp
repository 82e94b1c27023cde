// Command-line harness over the library: empirical and exact trajectory
// engines, risk curves and bounds, the batch modifiers Pi_b, limiting
// spectra, fixed-dimension limits, and the frozen figure presets.
//
// Exit codes: 0 success, 2 invalid configuration or arguments, 3 numerical
// failure (named module error printed on stderr).

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "rgd/experiments.hpp"
#include "rgd/parallel.hpp"
#include "rgd/rng.hpp"

namespace {

using namespace rgd;

struct CommonProblemArgs {
  long n = 100;
  long p = 20;
  double sigma2 = 0.0;
  std::uint64_t seed = 1;
  std::string load_path;
  std::string save_path;

  void attach(CLI::App* cmd) {
    cmd->add_option("--n", n, "rows (ignored with --problem)");
    cmd->add_option("--p", p, "columns (ignored with --problem)");
    cmd->add_option("--sigma2", sigma2, "noise variance");
    cmd->add_option("--seed", seed, "problem seed");
    cmd->add_option("--problem", load_path, "load a saved problem");
    cmd->add_option("--save-problem", save_path, "save the generated problem");
  }

  RegressionProblem make() const {
    RegressionProblem prob =
        load_path.empty()
            ? generate_gaussian(n, p, SymmetricMatrix::identity(p), sigma2,
                                BetaSpec::unit_sphere, seed)
            : load_problem(load_path);
    if (!save_path.empty()) save_problem(prob, save_path);
    return prob;
  }
};

void ensure_dir(const std::string& dir) {
  std::filesystem::create_directories(dir);
}

int run_cli(int argc, char** argv) {
  CLI::App app{"mini-batch gradient descent with random reshuffling: exact "
               "dynamics, risk, and limiting spectra"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  int workers = default_workers();
  bool verbose = false;
  app.add_option("--workers", workers, "worker threads");
  app.add_flag("--verbose", verbose, "chatty progress on stderr");

  // --- run --------------------------------------------------------------
  auto* cmd_run = app.add_subcommand("run", "run a JSON experiment config");
  std::string config_path, run_out;
  cmd_run->add_option("--config", config_path, "config file")->required();
  cmd_run->add_option("--out", run_out, "output directory");

  // --- preset -----------------------------------------------------------
  auto* cmd_preset = app.add_subcommand("preset", "run a frozen preset");
  std::string preset_name, preset_out;
  std::uint64_t preset_seed = 0;
  long preset_trials = -1;
  bool preset_seed_set = false, list_presets = false;
  cmd_preset->add_option("name", preset_name, "preset name");
  cmd_preset->add_option("--out", preset_out, "output directory");
  cmd_preset
      ->add_option_function<std::uint64_t>(
          "--seed",
          [&](const std::uint64_t& s) {
            preset_seed = s;
            preset_seed_set = true;
          },
          "override the pinned seed")
      ->expected(1);
  cmd_preset->add_option("--trials", preset_trials,
                         "override the empirical trial count");
  cmd_preset->add_flag("--list", list_presets, "list preset names");

  // --- simulate ---------------------------------------------------------
  auto* cmd_sim = app.add_subcommand("simulate", "empirical reshuffled run");
  CommonProblemArgs sim_prob;
  sim_prob.attach(cmd_sim);
  int sim_B = 2;
  double sim_alpha = 0.1;
  long sim_epochs = 50;
  std::string sim_out = "out";
  cmd_sim->add_option("--B", sim_B, "batch count");
  cmd_sim->add_option("--alpha", sim_alpha, "step size");
  cmd_sim->add_option("--epochs", sim_epochs, "epochs");
  cmd_sim->add_option("--out", sim_out, "output directory");

  // --- exact ------------------------------------------------------------
  auto* cmd_exact = app.add_subcommand("exact", "exact mean trajectory");
  CommonProblemArgs exact_prob;
  exact_prob.attach(cmd_exact);
  int exact_B = 2;
  double exact_alpha = 0.1;
  long exact_epochs = 50;
  std::string exact_method = "reshuffle";
  std::string exact_out = "out";
  cmd_exact->add_option("--B", exact_B, "batch count");
  cmd_exact->add_option("--alpha", exact_alpha, "step size");
  cmd_exact->add_option("--epochs", exact_epochs, "epochs");
  cmd_exact->add_option("--method", exact_method,
                        "reshuffle | full | with_replacement");
  cmd_exact->add_option("--out", exact_out, "output directory");

  // --- risk ---------------------------------------------------------
  auto* cmd_risk = app.add_subcommand("risk", "exact risk curves");
  CommonProblemArgs risk_prob;
  risk_prob.attach(cmd_risk);
  int risk_B = 2;
  double risk_alpha = 0.1;
  long risk_epochs = 50;
  bool risk_bounds = false;
  std::string risk_out = "out";
  cmd_risk->add_option("--B", risk_B, "batch count");
  cmd_risk->add_option("--alpha", risk_alpha, "step size");
  cmd_risk->add_option("--epochs", risk_epochs, "epochs");
  cmd_risk->add_flag("--bounds", risk_bounds, "two-batch envelope (B == 2)");
  cmd_risk->add_option("--out", risk_out, "output directory");

  // --- pi -----------------------------------------------------------
  auto* cmd_pi = app.add_subcommand("pi", "batch modifiers Pi_b");
  CommonProblemArgs pi_prob;
  pi_prob.attach(cmd_pi);
  int pi_B = 3, pi_b = 0;
  double pi_alpha = 0.1;
  std::string pi_route = "both";
  long pi_trials = 100000;
  cmd_pi->add_option("--B", pi_B, "batch count");
  cmd_pi->add_option("--b", pi_b, "batch index (0-based)");
  cmd_pi->add_option("--alpha", pi_alpha, "step size");
  cmd_pi->add_option("--route", pi_route, "enumerate | closed | mc | both");
  cmd_pi->add_option("--trials", pi_trials, "Monte-Carlo trials");

  // --- spectrum -------------------------------------------------------
  auto* cmd_spec = app.add_subcommand("spectrum", "limiting spectral density");
  double spec_gamma = 0.25, spec_alpha = 0.4;
  int spec_grid = 800, spec_quad = 2000;
  double spec_eps = 1e-6;
  std::string spec_law = "polynomial";
  std::string spec_out = "out";
  cmd_spec->add_option("--gamma", spec_gamma, "aspect ratio p/n")->required();
  cmd_spec->add_option("--alpha", spec_alpha, "step size")->required();
  cmd_spec->add_option("--grid", spec_grid, "grid points");
  cmd_spec->add_option("--quad", spec_quad, "quadrature nodes");
  cmd_spec->add_option("--eps", spec_eps, "half-plane regularization");
  cmd_spec->add_option("--law", spec_law, "polynomial | mp");
  cmd_spec->add_option("--out", spec_out, "output directory");

  // --- limits ---------------------------------------------------------
  auto* cmd_lim = app.add_subcommand(
      "limits", "fixed-p limit of Z and the limiting vectors");
  int lim_B = 2;
  double lim_alpha = 0.5;
  long lim_p = 3;
  int lim_seeds = 20;
  std::uint64_t lim_seed = 1;
  std::vector<long> lim_schedule = {1000, 10000, 100000};
  std::string lim_out = "out";
  cmd_lim->add_option("--B", lim_B, "batch count");
  cmd_lim->add_option("--alpha", lim_alpha, "step size");
  cmd_lim->add_option("--p", lim_p, "fixed dimension (<= 8)");
  cmd_lim->add_option("--seeds", lim_seeds, "seeds per n");
  cmd_lim->add_option("--seed", lim_seed, "base seed");
  cmd_lim->add_option("--n-schedule", lim_schedule, "sample sizes");
  cmd_lim->add_option("--out", lim_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  if (cmd_run->parsed()) {
    ExperimentConfig cfg = load_config(config_path);
    const RunResult res = run(cfg, run_out, workers, verbose);
    std::cout << "wrote " << res.manifest.size() << " artifacts, manifest "
              << res.manifest_path << "\n";
  } else if (cmd_preset->parsed()) {
    if (list_presets) {
      for (const auto& name : preset_names()) std::cout << name << "\n";
      return 0;
    }
    if (preset_name.empty())
      throw InvalidConfig("preset: name required (or --list)");
    ExperimentConfig cfg = preset_config(preset_name);
    if (preset_seed_set) cfg.problem.seed = preset_seed;
    if (preset_trials >= 1)
      for (auto& m : cfg.methods)
        if (m.kind == "simulate" && m.trials > 1) m.trials = preset_trials;
    const std::string dir =
        preset_out.empty() ? ("out/" + preset_name) : preset_out;
    const RunResult res = run(cfg, dir, workers, verbose);
    std::cout << "wrote " << res.manifest.size() << " artifacts, manifest "
              << res.manifest_path << "\n";
  } else if (cmd_sim->parsed()) {
    const RegressionProblem prob = sim_prob.make();
    const BatchPartition part = partition(prob, sim_B);
    const Trajectory traj =
        simulate_reshuffle(prob, part, sim_alpha, sim_epochs, prob.seed);
    ensure_dir(sim_out);
    const std::string file = sim_out + "/simulate.csv";
    write_trajectory_csv(file, {traj}, prob);
    std::cout << "wrote " << file << " (final err_l2 "
              << traj.err_l2(traj.epochs()) << ")\n";
  } else if (cmd_exact->parsed()) {
    const RegressionProblem prob = exact_prob.make();
    Trajectory traj;
    if (exact_method == "full") {
      traj = exact_mean_full_batch(prob, exact_alpha, exact_epochs);
    } else if (exact_method == "with_replacement") {
      const BatchPartition part = partition(prob, exact_B);
      traj = exact_mean_with_replacement(prob, part, exact_alpha, exact_epochs);
    } else if (exact_method == "reshuffle") {
      const BatchPartition part = partition(prob, exact_B);
      const ReshuffleOperators ops =
          assemble(part, exact_alpha, PiMethod::closed_form);
      traj = exact_mean_reshuffle(prob, ops, exact_epochs);
    } else {
      throw InvalidConfig("exact: unknown --method '" + exact_method + "'");
    }
    ensure_dir(exact_out);
    const std::string file = exact_out + "/exact.csv";
    write_trajectory_csv(file, {traj}, prob);
    std::cout << "wrote " << file << " (final err_l2 "
              << traj.err_l2(traj.epochs()) << ")\n";
  } else if (cmd_risk->parsed()) {
    const RegressionProblem prob = risk_prob.make();
    const BatchPartition part = partition(prob, risk_B);
    const ReshuffleOperators ops =
        assemble(part, risk_alpha, PiMethod::closed_form);
    RiskReport rep = risk_exact_reshuffle(prob, ops, risk_epochs);
    if (risk_bounds) rep.bounds = risk_bounds_twobatch(prob, ops, risk_epochs);
    ensure_dir(risk_out);
    const std::string file = risk_out + "/risk.csv";
    write_risk_csv(file, rep);
    std::cout << "wrote " << file << " (limit total "
              << (rep.limit ? rep.limit->total : std::nan("")) << ")\n";
  } else if (cmd_pi->parsed()) {
    const RegressionProblem prob = pi_prob.make();
    const BatchPartition part = partition(prob, pi_B);
    AssembleOptions opts;
    opts.workers = workers;
    if (pi_route == "both") {
      double max_dev = 0.0;
      for (int b = 0; b < pi_B; ++b) {
        const Matrix pe = pi_enumerate(part, pi_alpha, b, opts);
        const Matrix pc = pi_closed_form(part, pi_alpha, b, opts);
        max_dev = std::max(max_dev, (pe - pc).cwiseAbs().maxCoeff());
      }
      std::cout << "max discrepancy enumerate vs closed_form: " << max_dev
                << "\n";
    } else {
      Matrix pi;
      if (pi_route == "enumerate")
        pi = pi_enumerate(part, pi_alpha, pi_b, opts);
      else if (pi_route == "closed")
        pi = pi_closed_form(part, pi_alpha, pi_b, opts);
      else if (pi_route == "mc")
        pi = pi_monte_carlo(part, pi_alpha, pi_b, pi_trials, prob.seed, opts)
                 .mean;
      else
        throw InvalidConfig("pi: unknown --route '" + pi_route + "'");
      std::cout << pi << "\n";
    }
  } else if (cmd_spec->parsed()) {
    SpectralDensity density;
    if (spec_law == "polynomial") {
      DensityGridSpec gspec;
      gspec.points = spec_grid;
      OperatorCauchyState state;
      state.quad_nodes = spec_quad;
      state.epsilon = spec_eps;
      density = spectral_density(spec_gamma, spec_alpha, gspec, state, workers);
    } else if (spec_law == "mp") {
      density = mp_reference_density(spec_gamma, spec_alpha, spec_grid,
                                     std::min(spec_eps, 1e-8));
    } else {
      throw InvalidConfig("spectrum: unknown --law '" + spec_law + "'");
    }
    ensure_dir(spec_out);
    write_density_csv(spec_out + "/density.csv", density);
    write_density_json(spec_out + "/density.json", density);
    std::cout << "wrote " << spec_out << "/density.csv (point mass "
              << density.point_mass_at_zero << ", mass "
              << density.total_mass << ")\n";
  } else if (cmd_lim->parsed()) {
    const SymmetricMatrix Sigma = SymmetricMatrix::identity(lim_p);
    const LimitConvergenceReport rep = verify_limit(
        lim_B, lim_alpha, Sigma, lim_schedule, lim_seeds, lim_seed, workers);
    ensure_dir(lim_out);
    write_limit_csv(lim_out + "/limit_convergence.csv", rep);
    write_limit_json(lim_out + "/limit_convergence.json", rep);
    std::cout << "slope " << rep.slope_binomial << ", discrimination ratio "
              << rep.discrimination_ratio << "\n";

    // Limiting-vector comparison on a desk-scale problem.
    const RegressionProblem prob = generate_gaussian(
        240, 24, SymmetricMatrix::identity(24), 0.25, BetaSpec::unit_sphere,
        lim_seed);
    const BatchPartition part = partition(prob, lim_B);
    for (double a : {0.05, 0.1, 0.2}) {
      const ReshuffleOperators ops = assemble(part, a, PiMethod::closed_form);
      const LimitVector lim = limit_vector(prob, ops);
      std::cout << "alpha " << a << ": ||reshuffle_limit - full_batch_limit|| "
                << (lim.reshuffle - lim.full_batch).norm() << " (converged "
                << lim.converged << ")\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 2;
  } catch (const rgd::InvalidConfig& e) {
    std::cerr << "InvalidConfig: " << e.what() << "\n";
    return 2;
  } catch (const rgd::InvalidInput& e) {
    std::cerr << "InvalidInput: " << e.what() << "\n";
    return 2;
  } catch (const rgd::CapacityExceeded& e) {
    std::cerr << "CapacityExceeded: " << e.what() << "\n";
    return 3;
  } catch (const rgd::NumericalInconsistency& e) {
    std::cerr << "NumericalInconsistency: " << e.what() << "\n";
    return 3;
  } catch (const rgd::HypothesisViolated& e) {
    std::cerr << "HypothesisViolated: " << e.what() << "\n";
    return 3;
  } catch (const rgd::NotConvergent& e) {
    std::cerr << "NotConvergent: " << e.what() << "\n";
    return 3;
  } catch (const rgd::NonConvergence& e) {
    std::cerr << "NonConvergence: " << e.what() << "\n";
    return 3;
  } catch (const rgd::QuadratureFailure& e) {
    std::cerr << "QuadratureFailure: " << e.what() << "\n";
    return 3;
  } catch (const rgd::NormalizationFailure& e) {
    std::cerr << "NormalizationFailure: " << e.what() << "\n";
    return 3;
  } catch (const rgd::AssumptionViolated& e) {
    std::cerr << "AssumptionViolated: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
