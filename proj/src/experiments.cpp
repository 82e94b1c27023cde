#include "rgd/experiments.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <json.hpp>

#include "rgd/parallel.hpp"
#include "rgd/rng.hpp"

namespace rgd {
namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& what) {
  throw InvalidConfig("config: " + what);
}

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      config_error("unknown key '" + it.key() + "' in " + where);
}

long line_of_offset(const std::string& text, std::size_t byte) {
  long line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

SigmaSpec parse_sigma(const json& j) {
  require_keys(j, "problem.sigma", {"kind", "value", "values"});
  SigmaSpec spec;
  spec.kind = j.value("kind", "identity");
  if (spec.kind == "identity") {
  } else if (spec.kind == "scaled") {
    if (!j.contains("value")) config_error("sigma.scaled needs 'value'");
    spec.scale = j.at("value").get<double>();
  } else if (spec.kind == "diag") {
    if (!j.contains("values")) config_error("sigma.diag needs 'values'");
    spec.diag = j.at("values").get<std::vector<double>>();
  } else {
    config_error("unknown sigma kind '" + spec.kind + "'");
  }
  return spec;
}

ProblemSpec parse_problem(const json& j) {
  require_keys(j, "problem",
               {"n", "p", "sigma", "sigma2", "beta", "seed"});
  ProblemSpec spec;
  if (!j.contains("n") || !j.contains("p"))
    config_error("problem needs 'n' and 'p'");
  spec.n = j.at("n").get<long>();
  spec.p = j.at("p").get<long>();
  if (j.contains("sigma")) spec.sigma = parse_sigma(j.at("sigma"));
  spec.sigma2 = j.value("sigma2", 0.0);
  if (j.contains("beta")) {
    const json& b = j.at("beta");
    require_keys(b, "problem.beta", {"kind", "values"});
    spec.beta_kind = b.value("kind", "sphere");
    if (spec.beta_kind == "fixed") {
      if (!b.contains("values")) config_error("beta.fixed needs 'values'");
      spec.beta_values = b.at("values").get<std::vector<double>>();
    } else if (spec.beta_kind != "sphere" && spec.beta_kind != "gaussian") {
      config_error("unknown beta kind '" + spec.beta_kind + "'");
    }
  }
  spec.seed = j.value("seed", std::uint64_t{0});
  return spec;
}

MethodSpec parse_method(const json& j, std::size_t idx) {
  const std::string where = "methods[" + std::to_string(idx) + "]";
  require_keys(j, where,
               {"kind", "B", "alpha", "epochs", "trials", "bounds", "gamma",
                "grid", "quad"});
  MethodSpec m;
  if (!j.contains("kind")) config_error(where + " needs 'kind'");
  m.kind = j.at("kind").get<std::string>();
  static const std::set<std::string> kinds = {
      "simulate",       "exact_reshuffle", "exact_full_batch",
      "exact_with_replacement", "risk",    "spectrum",
      "mp_density",     "empirical_esd"};
  if (!kinds.count(m.kind)) config_error(where + ": unknown kind '" + m.kind + "'");
  m.B = j.value("B", 1);
  m.alpha = j.value("alpha", 0.0);
  m.epochs = j.value("epochs", 0L);
  m.trials = j.value("trials", 1L);
  m.bounds = j.value("bounds", false);
  m.gamma = j.value("gamma", 0.0);
  m.grid = j.value("grid", 800);
  m.quad = j.value("quad", 2000);
  return m;
}

}  // namespace

SymmetricMatrix SigmaSpec::materialize(Index p) const {
  if (kind == "identity") return SymmetricMatrix::identity(p);
  if (kind == "scaled")
    return SymmetricMatrix(scale * Matrix::Identity(p, p));
  if (kind == "diag") {
    if (static_cast<Index>(diag.size()) != p)
      throw InvalidConfig("sigma.diag: wrong length");
    Vector d(p);
    for (Index i = 0; i < p; ++i) d(i) = diag[static_cast<std::size_t>(i)];
    return SymmetricMatrix(Matrix(d.asDiagonal()));
  }
  throw InvalidConfig("sigma: unknown kind");
}

RegressionProblem ProblemSpec::materialize() const {
  const SymmetricMatrix S = sigma.materialize(p);
  BetaSpec bs = BetaSpec::unit_sphere;
  Vector fixed;
  if (beta_kind == "gaussian") bs = BetaSpec::standard_gaussian;
  if (beta_kind == "fixed") {
    bs = BetaSpec::fixed;
    fixed.resize(static_cast<Index>(beta_values.size()));
    for (std::size_t i = 0; i < beta_values.size(); ++i)
      fixed(static_cast<Index>(i)) = beta_values[i];
  }
  return generate_gaussian(n, p, S, sigma2, bs, seed,
                           fixed.size() ? &fixed : nullptr);
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_error("parse error at line " +
                 std::to_string(line_of_offset(json_text, e.byte)) + ": " +
                 e.what());
  }
  require_keys(j, "top level", {"name", "problem", "methods", "out_dir"});
  ExperimentConfig cfg;
  cfg.name = j.value("name", "experiment");
  if (!j.contains("problem")) config_error("missing 'problem'");
  cfg.problem = parse_problem(j.at("problem"));
  if (!j.contains("methods") || !j.at("methods").is_array() ||
      j.at("methods").empty())
    config_error("'methods' must be a non-empty array");
  for (std::size_t i = 0; i < j.at("methods").size(); ++i)
    cfg.methods.push_back(parse_method(j.at("methods")[i], i));
  cfg.out_dir = j.value("out_dir", "");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config(text);
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "fig1_under", "fig1_over", "appD_diverge", "appD_traj_over",
      "appD_traj_under"};
  return names;
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.preset = name;
  if (name == "fig1_under") {
    // gamma = 1/4, alpha = 0.4: theory densities plus one empirical draw.
    cfg.caption_ref = "fig1a";
    cfg.problem = {4000, 1000, {}, 0.0, "sphere", {}, 811};
    cfg.methods.push_back({"spectrum", 2, 0.4, 0, 1, false, 0.25, 800, 2000});
    cfg.methods.push_back({"mp_density", 1, 0.4, 0, 1, false, 0.25, 800, 2000});
    cfg.methods.push_back({"empirical_esd", 2, 0.4, 0, 1, false, 0.0, 0, 0});
  } else if (name == "fig1_over") {
    cfg.caption_ref = "fig1b";
    cfg.problem = {1000, 1500, {}, 0.0, "sphere", {}, 812};
    cfg.methods.push_back({"spectrum", 2, 0.2, 0, 1, false, 1.5, 800, 2000});
    cfg.methods.push_back({"mp_density", 1, 0.2, 0, 1, false, 1.5, 800, 2000});
    cfg.methods.push_back({"empirical_esd", 2, 0.2, 0, 1, false, 0.0, 0, 0});
  } else if (name == "appD_diverge") {
    // Full batch at alpha = 0.5 diverges; the two-batch mean iterate is run
    // at both step readings (alpha and alpha/2) and labeled by its alpha.
    cfg.caption_ref = "figD1";
    cfg.problem = {1000, 1500, {}, 1.0, "gaussian", {}, 813};
    cfg.methods.push_back({"exact_full_batch", 1, 0.5, 100});
    cfg.methods.push_back({"exact_reshuffle", 2, 0.5, 100});
    cfg.methods.push_back({"exact_reshuffle", 2, 0.25, 100});
    cfg.methods.push_back({"simulate", 1, 0.5, 100});
  } else if (name == "appD_traj_over") {
    cfg.caption_ref = "fig2";
    cfg.problem = {1000, 1500, {}, 0.25, "sphere", {}, 814};
    cfg.methods.push_back({"risk", 1, 0.2, 300});
    cfg.methods.push_back({"risk", 2, 0.1, 300});
    cfg.methods.push_back({"risk", 4, 0.05, 300});
    cfg.methods.push_back({"simulate", 1, 0.2, 300, 100});
    cfg.methods.push_back({"simulate", 2, 0.1, 300, 100});
    cfg.methods.push_back({"simulate", 4, 0.05, 300, 100});
  } else if (name == "appD_traj_under") {
    cfg.caption_ref = "figD3";
    cfg.problem = {4000, 1000, {}, 1.0, "sphere", {}, 815};
    cfg.methods.push_back({"risk", 1, 0.4, 100});
    cfg.methods.push_back({"risk", 2, 0.2, 100});
    cfg.methods.push_back({"risk", 4, 0.1, 100});
    cfg.methods.push_back({"simulate", 1, 0.4, 100, 100});
    cfg.methods.push_back({"simulate", 2, 0.2, 100, 100});
    cfg.methods.push_back({"simulate", 4, 0.1, 100, 100});
  } else {
    throw InvalidConfig("unknown preset '" + name + "'");
  }
  return cfg;
}

namespace {

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// Trial-averaged empirical risk: epoch,method,alpha,B,trials,risk_mean,risk_se.
long write_average_risk_csv(const std::string& path, const MethodSpec& m,
                            const RegressionProblem& problem,
                            const BatchPartition& part, int workers,
                            const Provenance& prov) {
  const long epochs = m.epochs;
  Matrix risks(m.trials, epochs + 1);
  parallel_for_chunked(m.trials, 8, workers, [&](std::int64_t lo,
                                                 std::int64_t hi) {
    for (std::int64_t t = lo; t < hi; ++t) {
      const std::uint64_t trial_seed =
          mix_seed(problem.seed, Stream::trials, static_cast<std::uint64_t>(t));
      const Trajectory traj =
          simulate_reshuffle(problem, part, m.alpha, epochs, trial_seed);
      for (long k = 0; k <= epochs; ++k)
        risks(t, k) =
            generalization_risk(traj.iterates.row(k).transpose(), problem);
    }
  });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open for writing: " + path);
  if (!prov.preset.empty())
    out << "# provenance: preset=" << prov.preset
        << " caption=" << prov.caption_ref << "\n";
  out << "epoch,method,alpha,B,trials,risk_mean,risk_se\n";
  char buf[64];
  for (long k = 0; k <= epochs; ++k) {
    const double mean = risks.col(k).mean();
    const double var =
        (risks.col(k).array() - mean).square().sum() /
        std::max<long>(1, m.trials - 1);
    const double se = std::sqrt(var / m.trials);
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g", mean, se);
    out << k << ",reshuffle_empirical," << fmt_short(m.alpha) << ',' << m.B
        << ',' << m.trials << ',' << buf << "\n";
  }
  return epochs + 1;
}

}  // namespace

RunResult run(const ExperimentConfig& config, const std::string& out_dir,
              int workers, bool verbose) {
  namespace fs = std::filesystem;
  const std::string dir = out_dir.empty()
                              ? (config.out_dir.empty() ? "out" : config.out_dir)
                              : out_dir;
  fs::create_directories(dir);
  const Provenance prov{config.preset, config.caption_ref};

  RegressionProblem problem = config.problem.materialize();
  if (verbose)
    std::cerr << "[run] " << config.name << ": n=" << problem.n()
              << " p=" << problem.p() << " seed=" << problem.seed << "\n";

  RunResult result;
  auto add = [&](const std::string& file, long rows) {
    ManifestEntry e;
    e.file = file;
    e.sha256 = sha256_file(dir + "/" + file);
    e.rows = rows;
    e.preset = config.preset;
    e.caption_ref = config.caption_ref;
    result.manifest.push_back(e);
  };

  for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
    const MethodSpec& m = config.methods[mi];
    const std::string stem =
        config.name + "_" + std::to_string(mi) + "_" + m.kind;
    if (verbose) std::cerr << "[run] method " << mi << ": " << m.kind << "\n";

    if (m.kind == "simulate" && m.trials > 1) {
      const BatchPartition part = partition(problem, m.B);
      const std::string file = stem + ".csv";
      add(file, write_average_risk_csv(dir + "/" + file, m, problem, part,
                                       workers, prov));
    } else if (m.kind == "simulate") {
      const BatchPartition part = partition(problem, m.B);
      const Trajectory traj = simulate_reshuffle(problem, part, m.alpha,
                                                 m.epochs, problem.seed);
      const std::string file = stem + ".csv";
      add(file, write_trajectory_csv(dir + "/" + file, {traj}, problem, prov));
    } else if (m.kind == "exact_reshuffle") {
      const BatchPartition part = partition(problem, m.B);
      const ReshuffleOperators ops =
          assemble(part, m.alpha, PiMethod::closed_form);
      const Trajectory traj = exact_mean_reshuffle(problem, ops, m.epochs);
      const std::string file = stem + "_B" + std::to_string(m.B) + "_a" +
                               fmt_short(m.alpha) + ".csv";
      add(file, write_trajectory_csv(dir + "/" + file, {traj}, problem, prov));
    } else if (m.kind == "exact_full_batch") {
      const Trajectory traj = exact_mean_full_batch(problem, m.alpha, m.epochs);
      const std::string file = stem + ".csv";
      add(file, write_trajectory_csv(dir + "/" + file, {traj}, problem, prov));
    } else if (m.kind == "exact_with_replacement") {
      const BatchPartition part = partition(problem, m.B);
      const Trajectory traj = exact_mean_with_replacement(
          problem, part, m.alpha, m.epochs);
      const std::string file = stem + ".csv";
      add(file, write_trajectory_csv(dir + "/" + file, {traj}, problem, prov));
    } else if (m.kind == "risk") {
      const BatchPartition part = partition(problem, m.B);
      const ReshuffleOperators ops =
          assemble(part, m.alpha, PiMethod::closed_form);
      RiskReport rep = risk_exact_reshuffle(problem, ops, m.epochs);
      if (m.bounds)
        rep.bounds = risk_bounds_twobatch(problem, ops, m.epochs);
      const std::string file = stem + "_B" + std::to_string(m.B) + "_a" +
                               fmt_short(m.alpha) + ".csv";
      add(file, write_risk_csv(dir + "/" + file, rep, prov));
    } else if (m.kind == "spectrum") {
      DensityGridSpec gspec;
      gspec.points = m.grid;
      OperatorCauchyState state;
      state.quad_nodes = m.quad;
      const SpectralDensity density =
          spectral_density(m.gamma, m.alpha, gspec, state, workers);
      const std::string file = stem + ".csv";
      add(file, write_density_csv(dir + "/" + file, density, prov));
      write_density_json(dir + "/" + stem + ".json", density);
      add(stem + ".json", 1);
    } else if (m.kind == "mp_density") {
      const SpectralDensity density =
          mp_reference_density(m.gamma, m.alpha, m.grid, 1e-8);
      const std::string file = stem + ".csv";
      add(file, write_density_csv(dir + "/" + file, density, prov));
    } else if (m.kind == "empirical_esd") {
      const BatchPartition part = partition(problem, 2);
      const ReshuffleOperators ops =
          assemble(part, m.alpha / 2.0, PiMethod::closed_form);
      const SymmetricEigen weig = eigh(problem.W);
      const std::string file = stem + ".csv";
      add(file, write_esd_csv(dir + "/" + file, m.alpha * weig.values,
                              m.alpha * ops.Zeig.values, prov));
    }
  }

  result.manifest_path = dir + "/manifest.json";
  write_manifest(result.manifest_path, result.manifest);
  return result;
}

}  // namespace rgd
