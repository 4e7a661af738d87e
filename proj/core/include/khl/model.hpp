#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "khl/design.hpp"
#include "khl/kernel.hpp"

namespace khl {

/// Eigenvalues at or below this fraction of the largest are discarded.
inline constexpr double kEigenRetentionTol = 1e-10;

struct FitOptions {
  /// Compute only this many leading eigenpairs of K_E (partial solver).
  /// Empty means the full spectrum. Tests with T above the computed count
  /// are capped like any other truncation beyond the rank.
  std::optional<Eigen::Index> max_components;
};

/// The RKHS linear model fitted through its residual Gram matrix
/// K_E = P_X^perp K_Y P_X^perp / n, with the retained eigensystem of K_E
/// (the dual representation of the residual covariance operator).
class FittedModel {
 public:
  FittedModel(GramMatrix gram, DesignBundle design, Eigen::MatrixXd k_e, Eigen::VectorXd eigvals,
              Eigen::MatrixXd eigvecs);

  const GramMatrix& gram() const noexcept { return gram_; }
  const DesignBundle& design() const noexcept { return design_; }
  const Eigen::MatrixXd& k_e() const noexcept { return k_e_; }
  /// Descending, all strictly above kEigenRetentionTol * largest.
  const Eigen::VectorXd& eigvals() const noexcept { return eigvals_; }
  /// n x rank, orthonormal columns, largest-|entry| positive.
  const Eigen::MatrixXd& eigvecs() const noexcept { return eigvecs_; }
  Eigen::Index rank() const noexcept { return eigvals_.size(); }
  Eigen::Index n() const noexcept { return gram_.n(); }

 private:
  GramMatrix gram_;
  DesignBundle design_;
  Eigen::MatrixXd k_e_;
  Eigen::VectorXd eigvals_;
  Eigen::MatrixXd eigvecs_;
};

enum class TestMethod { exact, nystrom };

std::string to_string(TestMethod method);

struct TestResult {
  double statistic = 0.0;  ///< trace(K_T D K_T'), i.e. n times the normalized TKHL statistic
  int df = 0;              ///< d * truncation
  double p_value = 1.0;
  int truncation = 0;            ///< T actually used
  int requested_truncation = 0;  ///< T asked for
  bool truncation_capped = false;
  TestMethod method = TestMethod::exact;
};

/// Throws InputError on a size mismatch and DegenerateFitError when the
/// residual Gram matrix is numerically zero.
FittedModel fit(GramMatrix gram, DesignBundle design, const FitOptions& options = {});

/// T x n matrix with rows n^{-1/2} lambda_s^{-1} u_s' P_X^perp K_Y; entry
/// (s, i) is lambda_s^{-1/2} <f_s, phi(y_i)>. Throws TruncationError unless
/// 1 <= t <= rank.
Eigen::MatrixXd kt_matrix(const FittedModel& model, Eigen::Index t);

/// trace(K D K') for any T x n coordinate matrix K; returns 0 when the
/// projection is at round-off level relative to K.
double trace_statistic(const Eigen::MatrixXd& kt, const HypothesisProjector& projector);

/// Builds a TestResult from a statistic, attaching df = d * t and the
/// chi-square p-value (1 for a zero statistic).
TestResult make_result(double statistic, Eigen::Index d, Eigen::Index t, Eigen::Index requested, TestMethod method);

/// Truncated kernel Hotelling-Lawley test of H0: L Theta = 0. T above the
/// numerical rank is capped and flagged.
TestResult tkhl_test(const FittedModel& model, const ContrastMatrix& contrast, Eigen::Index t);

struct PairwiseResult {
  std::string level_a;
  std::string level_b;
  Eigen::Index index_a = 0;
  Eigen::Index index_b = 0;
  TestResult result;
  double adjusted_p = 1.0;  ///< Benjamini-Hochberg across all pairs
};

/// One single-pair test per unordered pair of levels of `factor_name`
/// (pairs enumerated a < b in level order), with BH-adjusted p-values.
std::vector<PairwiseResult> pairwise_tests(const FittedModel& model, const std::string& factor_name, Eigen::Index t);

}  // namespace khl
