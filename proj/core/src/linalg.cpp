#include "khl/linalg.hpp"

#include <lapacke.h>

#include <cmath>
#include <string>
#include <vector>

#include "khl/errors.hpp"

namespace khl::linalg {

namespace {

SymmetricEigen reversed(const Eigen::VectorXd& ascending_values, const Eigen::MatrixXd& ascending_vectors) {
  SymmetricEigen out;
  out.values = ascending_values.reverse();
  out.vectors = ascending_vectors.rowwise().reverse();
  normalize_signs(out.vectors);
  return out;
}

void check_square(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw InputError("eigendecomposition requires a square matrix");
  if (!a.allFinite()) throw InputError("eigendecomposition input has non-finite entries");
}

}  // namespace

SymmetricEigen eigen_descending(const Eigen::MatrixXd& a) {
  check_square(a);
  const Eigen::Index n = a.rows();
  if (n == 0) return {};
  Eigen::MatrixXd work = a;
  Eigen::VectorXd w(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(n), work.data(),
                                         static_cast<lapack_int>(n), w.data());
  if (info != 0) throw DegenerateFitError("dsyevd failed with info=" + std::to_string(info));
  return reversed(w, work);
}

SymmetricEigen eigen_leading(const Eigen::MatrixXd& a, Eigen::Index count) {
  check_square(a);
  const Eigen::Index n = a.rows();
  if (count >= n) return eigen_descending(a);
  if (count <= 0) return {Eigen::VectorXd(0), Eigen::MatrixXd(n, 0)};

  Eigen::MatrixXd work = a;
  Eigen::VectorXd w(n);
  Eigen::MatrixXd z(n, count);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(count));
  lapack_int found = 0;
  const auto ln = static_cast<lapack_int>(n);
  const lapack_int info =
      LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', ln, work.data(), ln, 0.0, 0.0, ln - static_cast<lapack_int>(count) + 1,
                     ln, 0.0, &found, w.data(), z.data(), ln, support.data());
  if (info != 0 || found != count) throw DegenerateFitError("dsyevr failed with info=" + std::to_string(info));
  return reversed(w.head(count), z);
}

void normalize_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
      const double v = std::abs(vectors(i, j));
      if (v > best) {
        best = v;
        arg = i;
      }
    }
    if (vectors.rows() > 0 && vectors(arg, j) < 0.0) vectors.col(j) *= -1.0;
  }
}

Eigen::Index leading_rank(const Eigen::VectorXd& values, double rel_tol) {
  if (values.size() == 0 || !(values(0) > 0.0)) return 0;
  const double cutoff = rel_tol * values(0);
  Eigen::Index r = 0;
  while (r < values.size() && values(r) > cutoff) ++r;
  return r;
}

Eigen::MatrixXd pinv_symmetric(const Eigen::MatrixXd& a, double rel_tol) {
  const SymmetricEigen es = eigen_descending(symmetrized(a));
  const Eigen::Index r = leading_rank(es.values, rel_tol);
  const Eigen::MatrixXd v = es.vectors.leftCols(r);
  return v * es.values.head(r).cwiseInverse().asDiagonal() * v.transpose();
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

}  // namespace khl::linalg
