#include "rgd/io.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>

#include <json.hpp>

namespace rgd {
namespace {

constexpr char kMagic[8] = {'R', 'G', 'D', 'P', 'R', 'B', '0', '1'};
constexpr char kOpsMagic[8] = {'R', 'G', 'D', 'O', 'P', 'S', '0', '1'};

void write_doubles(std::ofstream& out, const double* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(double)));
}

void read_doubles(std::ifstream& in, double* data, std::size_t count) {
  in.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw InvalidInput("load_problem: truncated file");
}

// %.17g round-trips doubles exactly and keeps reruns byte-identical.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_provenance(std::ofstream& out, const Provenance& prov) {
  if (!prov.preset.empty() || !prov.caption_ref.empty())
    out << "# provenance: preset=" << prov.preset
        << " caption=" << prov.caption_ref << "\n";
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open for writing: " + path);
  return out;
}

}  // namespace

void save_problem(const RegressionProblem& problem, const std::string& path) {
  std::ofstream out = open_out(path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t n = static_cast<std::uint64_t>(problem.n());
  const std::uint64_t p = static_cast<std::uint64_t>(problem.p());
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(&p), sizeof(p));
  out.write(reinterpret_cast<const char*>(&problem.seed), sizeof(problem.seed));
  write_doubles(out, &problem.sigma2, 1);
  // Eigen stores column-major; emit row-major explicitly.
  for (Index i = 0; i < problem.X.rows(); ++i)
    for (Index j = 0; j < problem.X.cols(); ++j) {
      const double v = problem.X(i, j);
      write_doubles(out, &v, 1);
    }
  write_doubles(out, problem.y.data(), static_cast<std::size_t>(problem.n()));
  write_doubles(out, problem.beta_star.data(),
                static_cast<std::size_t>(problem.p()));
  write_doubles(out, problem.eta.data(), static_cast<std::size_t>(problem.n()));
  const Matrix& S = problem.Sigma.matrix();
  for (Index i = 0; i < S.rows(); ++i)
    for (Index j = 0; j < S.cols(); ++j) {
      const double v = S(i, j);
      write_doubles(out, &v, 1);
    }
  if (!out) throw InvalidInput("save_problem: write failed: " + path);
}

RegressionProblem load_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw InvalidInput("load_problem: bad magic in " + path);
  std::uint64_t n = 0, p = 0, seed = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  in.read(reinterpret_cast<char*>(&p), sizeof(p));
  in.read(reinterpret_cast<char*>(&seed), sizeof(seed));
  double sigma2 = 0.0;
  read_doubles(in, &sigma2, 1);

  Matrix X(static_cast<Index>(n), static_cast<Index>(p));
  for (Index i = 0; i < X.rows(); ++i)
    for (Index j = 0; j < X.cols(); ++j) read_doubles(in, &X(i, j), 1);
  Vector y(static_cast<Index>(n)), beta(static_cast<Index>(p)),
      eta(static_cast<Index>(n));
  read_doubles(in, y.data(), n);
  read_doubles(in, beta.data(), p);
  read_doubles(in, eta.data(), n);
  Matrix S(static_cast<Index>(p), static_cast<Index>(p));
  for (Index i = 0; i < S.rows(); ++i)
    for (Index j = 0; j < S.cols(); ++j) read_doubles(in, &S(i, j), 1);

  RegressionProblem prob;
  prob.X = std::move(X);
  prob.y = std::move(y);
  prob.beta_star = std::move(beta);
  prob.eta = std::move(eta);
  prob.Sigma = SymmetricMatrix(S);
  prob.sigma2 = sigma2;
  prob.seed = seed;
  prob.W = SymmetricMatrix((prob.X.transpose() * prob.X) /
                           static_cast<double>(prob.X.rows()));
  return prob;
}

namespace {

void write_matrix(std::ofstream& out, const Matrix& m) {
  const std::uint64_t rows = static_cast<std::uint64_t>(m.rows());
  const std::uint64_t cols = static_cast<std::uint64_t>(m.cols());
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      write_doubles(out, &v, 1);
    }
}

Matrix read_matrix(std::ifstream& in) {
  std::uint64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in || rows > (1u << 20) || cols > (1u << 20))
    throw InvalidInput("load_operators: corrupt matrix header");
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) read_doubles(in, &m(i, j), 1);
  return m;
}

}  // namespace

void save_operators(const ReshuffleOperators& ops, const std::string& path) {
  std::ofstream out = open_out(path);
  out.write(kOpsMagic, sizeof(kOpsMagic));
  const std::uint64_t B = static_cast<std::uint64_t>(ops.B);
  const std::uint64_t n = static_cast<std::uint64_t>(ops.n);
  const std::uint64_t method = static_cast<std::uint64_t>(ops.method);
  out.write(reinterpret_cast<const char*>(&B), sizeof(B));
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(&method), sizeof(method));
  write_doubles(out, &ops.alpha, 1);
  write_doubles(out, &ops.symmetry_residual, 1);
  for (const Matrix& pi : ops.Pi) write_matrix(out, pi);
  write_matrix(out, ops.Xtilde);
  write_matrix(out, ops.Z.matrix());
  if (!out) throw InvalidInput("save_operators: write failed: " + path);
}

ReshuffleOperators load_operators(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kOpsMagic, sizeof(kOpsMagic)) != 0)
    throw InvalidInput("load_operators: bad magic in " + path);
  std::uint64_t B = 0, n = 0, method = 0;
  in.read(reinterpret_cast<char*>(&B), sizeof(B));
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  in.read(reinterpret_cast<char*>(&method), sizeof(method));

  ReshuffleOperators ops;
  ops.B = static_cast<int>(B);
  ops.n = static_cast<Index>(n);
  ops.method = static_cast<PiMethod>(method);
  read_doubles(in, &ops.alpha, 1);
  read_doubles(in, &ops.symmetry_residual, 1);
  ops.Pi.reserve(ops.B);
  for (int b = 0; b < ops.B; ++b) ops.Pi.push_back(read_matrix(in));
  ops.Xtilde = read_matrix(in);
  const Matrix z = read_matrix(in);
  if (z.rows() != z.cols() || z != z.transpose())
    throw InvalidInput("load_operators: stored Z is not symmetric");
  ops.Z = SymmetricMatrix(z);

  const Index p = z.rows();
  ops.XtildeGram = SymmetricMatrix((ops.Xtilde.transpose() * ops.Xtilde) /
                                   static_cast<double>(ops.n));
  ops.Zeig = eigh(ops.Z);
  ops.rank_cut = ops.Zeig.rank_cut();
  Vector learn = Vector::Zero(p);
  for (Index i = 0; i < p; ++i)
    if (std::abs(ops.Zeig.values(i)) > ops.rank_cut) learn(i) = 1.0;
  const Matrix pz =
      ops.Zeig.vectors * learn.asDiagonal() * ops.Zeig.vectors.transpose();
  ops.P_Z = Projector{pz, ProjectorKind::range};
  ops.P_Z0 = Projector{Matrix::Identity(p, p) - pz, ProjectorKind::nullspace};
  return ops;
}

long write_trajectory_csv(const std::string& path,
                          const std::vector<Trajectory>& trajectories,
                          const RegressionProblem& problem,
                          const Provenance& prov) {
  std::ofstream out = open_out(path);
  write_provenance(out, prov);
  out << "epoch,method,alpha,B,seed,err_l2,risk\n";
  long rows = 0;
  for (const Trajectory& traj : trajectories) {
    for (Index k = 0; k < traj.iterates.rows(); ++k) {
      const double risk =
          generalization_risk(traj.iterates.row(k).transpose(), problem);
      out << k << ',' << to_string(traj.method) << ',' << fmt(traj.alpha)
          << ',' << traj.B << ',' << traj.seed << ',' << fmt(traj.err_l2(k))
          << ',' << fmt(risk) << "\n";
      ++rows;
    }
  }
  return rows;
}

long write_risk_csv(const std::string& path, const RiskReport& report,
                    const Provenance& prov) {
  std::ofstream out = open_out(path);
  write_provenance(out, prov);
  out << "epoch,bias_frozen,bias_decaying,variance,total,r_minus,r_plus\n";
  for (long k = 0; k <= report.epochs(); ++k) {
    out << k << ',' << fmt(report.bias_frozen) << ','
        << fmt(report.bias_decaying(k)) << ',' << fmt(report.variance(k))
        << ',' << fmt(report.total(k)) << ',';
    if (report.bounds) {
      out << fmt(report.bounds->r_minus(k)) << ','
          << fmt(report.bounds->r_plus(k));
    } else {
      out << "nan,nan";
    }
    out << "\n";
  }
  return report.epochs() + 1;
}

long write_density_csv(const std::string& path, const SpectralDensity& density,
                       const Provenance& prov) {
  std::ofstream out = open_out(path);
  write_provenance(out, prov);
  out << "x,f\n";
  for (Index i = 0; i < density.grid.size(); ++i)
    out << fmt(density.grid(i)) << ','
        << fmt(std::max(0.0, density.density(i))) << "\n";
  return density.grid.size();
}

void write_density_json(const std::string& path,
                        const SpectralDensity& density) {
  nlohmann::ordered_json j;
  j["gamma"] = density.gamma;
  j["alpha"] = density.alpha;
  j["epsilon"] = density.epsilon;
  j["point_mass"] = density.point_mass_at_zero;
  j["mass_check"] = density.total_mass;
  std::map<std::string, int> hist;
  for (int it : density.iteration_counts) {
    int bucket = 1;
    while (bucket < it) bucket *= 2;
    hist["<=" + std::to_string(bucket)]++;
  }
  j["iterations_histogram"] = hist;
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
}

long write_esd_csv(const std::string& path, const Vector& w_eigs,
                   const Vector& z_eigs, const Provenance& prov) {
  if (w_eigs.size() != z_eigs.size())
    throw InvalidInput("write_esd_csv: size mismatch");
  std::ofstream out = open_out(path);
  write_provenance(out, prov);
  out << "index,alpha_w_eig,alpha_z_eig\n";
  for (Index i = 0; i < w_eigs.size(); ++i)
    out << i << ',' << fmt(w_eigs(i)) << ',' << fmt(z_eigs(i)) << "\n";
  return w_eigs.size();
}

long write_limit_csv(const std::string& path,
                     const LimitConvergenceReport& report,
                     const Provenance& prov) {
  std::ofstream out = open_out(path);
  write_provenance(out, prov);
  out << "n,seed,error_norm,error_norm_factorial\n";
  for (const auto& row : report.rows)
    out << row.n << ',' << row.seed << ',' << fmt(row.err_binomial) << ','
        << fmt(row.err_factorial) << "\n";
  return static_cast<long>(report.rows.size());
}

void write_limit_json(const std::string& path,
                      const LimitConvergenceReport& report) {
  nlohmann::ordered_json j;
  j["B"] = report.B;
  j["alpha"] = report.alpha;
  j["n_schedule"] = report.n_schedule;
  j["mean_error"] = report.mean_binomial;
  j["mean_error_factorial"] = report.mean_factorial;
  j["loglog_slope"] = report.slope_binomial;
  j["discrimination_ratio"] = report.discrimination_ratio;
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("sha256_file: cannot open " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    nlohmann::ordered_json item;
    item["file"] = e.file;
    item["sha256"] = e.sha256;
    item["rows"] = e.rows;
    item["preset"] = e.preset;
    item["caption_ref"] = e.caption_ref;
    j.push_back(item);
  }
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
}

}  // namespace rgd
