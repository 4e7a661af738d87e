#pragma once

#include <Eigen/Dense>

namespace khl::linalg {

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
///
/// Each eigenvector is sign-normalized so that its entry of largest magnitude
/// is positive (first such entry on ties), which makes downstream projections
/// reproducible.
struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

/// Full eigendecomposition (LAPACK dsyevd). Only the lower triangle is read.
SymmetricEigen eigen_descending(const Eigen::MatrixXd& a);

/// Leading `count` eigenpairs (LAPACK dsyevr, index range). Falls back to the
/// full decomposition when `count` covers the whole matrix.
SymmetricEigen eigen_leading(const Eigen::MatrixXd& a, Eigen::Index count);

/// Flip column signs so the largest-magnitude entry of each column is positive.
void normalize_signs(Eigen::MatrixXd& vectors);

/// Number of leading eigenvalues strictly above rel_tol * values(0).
/// `values` must be sorted in descending order.
Eigen::Index leading_rank(const Eigen::VectorXd& values, double rel_tol);

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix; eigenvalues at or
/// below rel_tol times the largest are treated as zero.
Eigen::MatrixXd pinv_symmetric(const Eigen::MatrixXd& a, double rel_tol = 1e-12);

/// Symmetric part (A + A') / 2.
Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a);

}  // namespace khl::linalg
