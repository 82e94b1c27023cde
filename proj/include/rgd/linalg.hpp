#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "rgd/errors.hpp"

namespace rgd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

template <class Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kTolPinv = 1e-10;
inline constexpr double kTolProj = 1e-10;
inline constexpr double kTolEig = 1e-10;
// Residual beyond which a computed cross-covariance is treated as a bug.
inline constexpr double kSymmetryCheckTol = 1e-8;
inline constexpr double kHypothesisTol = 1e-8;

// Relative singular-value cutoff: max(rows, cols) * machine epsilon.  The
// absolute threshold is always cutoff * sigma_max.
inline double default_rank_tol(Index rows, Index cols) {
  return static_cast<double>(std::max(rows, cols)) *
         std::numeric_limits<double>::epsilon();
}

template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

// Dense square matrix with exactly symmetric storage: construction mirrors
// the strict upper triangle into the lower one, so entries (i,j) and (j,i)
// are the same double bit for bit.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;

  explicit SymmetricMatrix(const Matrix& a) {
    if (a.rows() != a.cols()) throw InvalidInput("SymmetricMatrix: not square");
    m_ = 0.5 * (a + a.transpose());
    for (Index j = 0; j < m_.cols(); ++j)
      for (Index i = j + 1; i < m_.rows(); ++i) m_(i, j) = m_(j, i);
  }

  static SymmetricMatrix identity(Index dim) {
    SymmetricMatrix s;
    s.m_ = Matrix::Identity(dim, dim);
    return s;
  }

  static SymmetricMatrix zero(Index dim) {
    SymmetricMatrix s;
    s.m_ = Matrix::Zero(dim, dim);
    return s;
  }

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  operator const Matrix&() const { return m_; }

 private:
  Matrix m_;
};

enum class ProjectorKind { range, nullspace };

struct Projector {
  Matrix P;
  ProjectorKind kind = ProjectorKind::range;
  Index dim() const { return P.rows(); }
};

// Eigenvalues in descending order, eigenvectors as matching columns.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;

  Index dim() const { return values.size(); }

  // Absolute eigenvalue cutoff under which a direction counts as nullspace.
  double rank_cut(double rank_tol = -1.0) const {
    const double scale = values.size() ? values.cwiseAbs().maxCoeff() : 0.0;
    if (rank_tol < 0) rank_tol = default_rank_tol(dim(), dim());
    return rank_tol * scale;
  }
};

struct Svd {
  Matrix U;
  Vector singular_values;  // descending
  Matrix V;
};

inline SymmetricEigen eigh(const SymmetricMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.matrix());
  if (es.info() != Eigen::Success)
    throw NumericalInconsistency("eigh: eigensolver failed");
  SymmetricEigen out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  return out;
}

inline Svd thin_svd(const Matrix& a) {
  Svd out;
  if (std::min(a.rows(), a.cols()) <= 32) {
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.U = svd.matrixU();
    out.singular_values = svd.singularValues();
    out.V = svd.matrixV();
  } else {
    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.U = svd.matrixU();
    out.singular_values = svd.singularValues();
    out.V = svd.matrixV();
  }
  return out;
}

// Moore-Penrose pseudoinverse by SVD truncation: singular values at or below
// rank_tol * sigma_max are treated as zero.
template <class Svd>
DenseMatrix<typename Svd::MatrixType::Scalar> pinv_from_svd(const Svd& svd,
                                                            double rank_tol) {
  const auto& sv = svd.singularValues();
  const double cut = sv.size() ? rank_tol * sv(0) : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

template <class Scalar>
DenseMatrix<Scalar> pseudoinverse(const DenseMatrix<Scalar>& a,
                                  double rank_tol = -1.0) {
  if (!a.allFinite()) throw InvalidInput("pseudoinverse: non-finite entries");
  if (rank_tol < 0) rank_tol = default_rank_tol(a.rows(), a.cols());
  if (std::min(a.rows(), a.cols()) <= 32) {
    Eigen::JacobiSVD<DenseMatrix<Scalar>> svd(
        a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return pinv_from_svd(svd, rank_tol);
  }
  Eigen::BDCSVD<DenseMatrix<Scalar>> svd(
      a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return pinv_from_svd(svd, rank_tol);
}

inline Matrix pseudoinverse_sym(const SymmetricEigen& eig,
                                double rank_tol = -1.0) {
  const double cut = eig.rank_cut(rank_tol);
  Vector inv = Vector::Zero(eig.dim());
  for (Index i = 0; i < eig.dim(); ++i)
    if (std::abs(eig.values(i)) > cut) inv(i) = 1.0 / eig.values(i);
  return eig.vectors * inv.asDiagonal() * eig.vectors.transpose();
}

// A^k for symmetric A through its eigendecomposition; stable for large k.
inline Matrix sym_power(const SymmetricEigen& eig, long k) {
  Vector powered(eig.dim());
  for (Index i = 0; i < eig.dim(); ++i)
    powered(i) = std::pow(eig.values(i), static_cast<double>(k));
  return eig.vectors * powered.asDiagonal() * eig.vectors.transpose();
}

// Orthonormal columns spanning range(A).
inline Matrix orthonormal_range_basis(const Matrix& a, double rank_tol = -1.0) {
  if (rank_tol < 0) rank_tol = default_rank_tol(a.rows(), a.cols());
  const Svd svd = thin_svd(a);
  const double cut =
      svd.singular_values.size() ? rank_tol * svd.singular_values(0) : 0.0;
  Index r = 0;
  while (r < svd.singular_values.size() && svd.singular_values(r) > cut) ++r;
  return svd.U.leftCols(r);
}

inline Index numerical_rank(const Matrix& a, double rank_tol = -1.0) {
  if (rank_tol < 0) rank_tol = default_rank_tol(a.rows(), a.cols());
  const Svd svd = thin_svd(a);
  const double cut =
      svd.singular_values.size() ? rank_tol * svd.singular_values(0) : 0.0;
  Index r = 0;
  while (r < svd.singular_values.size() && svd.singular_values(r) > cut) ++r;
  return r;
}

// Projector onto the row space of A (equivalently range(A^T)); realizes
// A^+ A without forming the pseudoinverse.
inline Projector range_projector(const Matrix& a, double rank_tol = -1.0) {
  if (!a.allFinite()) throw InvalidInput("range_projector: non-finite entries");
  const Matrix basis = orthonormal_range_basis(a.transpose(), rank_tol);
  return Projector{basis * basis.transpose(), ProjectorKind::range};
}

inline Projector nullspace_projector(const Matrix& a, double rank_tol = -1.0) {
  if (!a.allFinite())
    throw InvalidInput("nullspace_projector: non-finite entries");
  const Matrix basis = orthonormal_range_basis(a.transpose(), rank_tol);
  const Index p = a.cols();
  return Projector{Matrix::Identity(p, p) - basis * basis.transpose(),
                   ProjectorKind::nullspace};
}

// sin of the largest principal angle between range(basis_a) and range(basis_b):
// || (I - P_b) U_a ||_2.  The residual matrix is formed explicitly (never
// through its Gram matrix) so nested subspaces resolve to ~1e-15 instead of
// the sqrt(eps) floor.  Zero means range(basis_a) lies in range(basis_b).
inline double subspace_containment_residual(const Matrix& basis_a,
                                            const Matrix& basis_b) {
  if (basis_a.cols() == 0) return 0.0;
  Matrix residual = basis_a;
  if (basis_b.cols() > 0)
    residual.noalias() -= basis_b * (basis_b.transpose() * basis_a);
  Eigen::BDCSVD<Matrix> svd(residual);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

// Sum of the first k powers of a symmetric matrix,
//   I + A + ... + A^{k-1} = (I - A^k)(I - A)^+ + k P0,
// with P0 the orthogonal projector onto nullspace(I - A).  Evaluated in the
// eigenbasis of A so the unit-eigenvalue branch is exact.
inline Matrix truncated_geometric(const SymmetricMatrix& a, long k) {
  if (k < 0) throw InvalidInput("truncated_geometric: k must be >= 0");
  if (!a.matrix().allFinite())
    throw InvalidInput("truncated_geometric: non-finite entries");
  const SymmetricEigen eig = eigh(a);
  // Nullspace cutoff for I - A, in terms of |1 - lambda|.
  double one_minus_max = 0.0;
  for (Index i = 0; i < eig.dim(); ++i)
    one_minus_max = std::max(one_minus_max, std::abs(1.0 - eig.values(i)));
  const double cut = default_rank_tol(eig.dim(), eig.dim()) * one_minus_max;
  Vector sums(eig.dim());
  for (Index i = 0; i < eig.dim(); ++i) {
    const double mu = eig.values(i);
    if (std::abs(1.0 - mu) <= cut) {
      sums(i) = static_cast<double>(k);
    } else {
      sums(i) =
          (1.0 - std::pow(mu, static_cast<double>(k))) / (1.0 - mu);
    }
  }
  return eig.vectors * sums.asDiagonal() * eig.vectors.transpose();
}

}  // namespace rgd
