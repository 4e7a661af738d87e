#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace khl {

/// One categorical factor of a design: its levels (first-appearance order),
/// the design columns they occupy, and each observation's level index.
struct Factor {
  std::string name;
  std::vector<std::string> levels;
  Eigen::Index column_offset = 0;
  std::vector<Eigen::Index> codes;  ///< level index per observation

  Eigen::Index level_count() const { return static_cast<Eigen::Index>(levels.size()); }
  Eigen::Index level_index(const std::string& level) const;  ///< throws InputError if unknown
};

/// Design matrix X together with the quantities every test needs: the
/// Moore-Penrose inverse of X'X, an orthonormal basis Q of Im(X)
/// (so P_X = QQ'), and the leverages diag(P_X). Immutable.
class DesignBundle {
 public:
  DesignBundle() = default;
  /// Builds from an arbitrary design matrix (factor metadata optional).
  explicit DesignBundle(Eigen::MatrixXd x, std::vector<Factor> factors = {});

  const Eigen::MatrixXd& x() const noexcept { return x_; }
  const Eigen::MatrixXd& xtx_pinv() const noexcept { return xtx_pinv_; }
  const Eigen::MatrixXd& basis() const noexcept { return basis_; }
  const Eigen::VectorXd& leverages() const noexcept { return leverages_; }
  Eigen::Index rank() const noexcept { return basis_.cols(); }
  Eigen::Index n() const noexcept { return x_.rows(); }
  Eigen::Index p() const noexcept { return x_.cols(); }
  const std::vector<Factor>& factors() const noexcept { return factors_; }
  const Factor& factor(const std::string& name) const;

  /// Dense n x n projector onto Im(X).
  Eigen::MatrixXd p_x() const;
  /// Dense n x n projector onto Im(X)^perp.
  Eigen::MatrixXd p_x_perp() const;

  /// P_X * a without forming P_X.
  Eigen::MatrixXd project(const Eigen::MatrixXd& a) const;
  /// P_X^perp * a without forming P_X^perp.
  Eigen::MatrixXd residualize(const Eigen::MatrixXd& a) const;

  /// Design restricted to the rows `indices` (in that order). Columns that
  /// become identically zero are kept; the pseudo-inverse absorbs them.
  DesignBundle subset(const std::vector<Eigen::Index>& indices) const;
  /// Indices of all-zero columns (levels absent from this design's rows).
  std::vector<Eigen::Index> empty_columns() const;

 private:
  Eigen::MatrixXd x_;
  Eigen::MatrixXd xtx_pinv_;
  Eigen::MatrixXd basis_;
  Eigen::VectorXd leverages_;
  std::vector<Factor> factors_;
};

/// One-hot design for a single factor, levels in first-appearance order.
DesignBundle one_way_design(const std::vector<std::string>& labels, const std::string& name = "factor");

/// Additive two-factor design X = [A | B] without interaction.
DesignBundle two_way_additive_design(const std::vector<std::string>& labels_a,
                                     const std::vector<std::string>& labels_b,
                                     const std::string& name_a = "factor_a",
                                     const std::string& name_b = "factor_b");

/// Full-row-rank d x p contrast matrix L encoding H0: L Theta = 0.
class ContrastMatrix {
 public:
  /// Throws InputError if L is empty or rank(L) < d (tolerance 1e-10 times
  /// the largest singular value).
  explicit ContrastMatrix(Eigen::MatrixXd l);

  const Eigen::MatrixXd& matrix() const noexcept { return l_; }
  Eigen::Index d() const noexcept { return l_.rows(); }
  Eigen::Index p() const noexcept { return l_.cols(); }

 private:
  Eigen::MatrixXd l_;
};

/// (u-1) x u matrix with rows e_k - e_{k+1}: tests equality of all u levels.
ContrastMatrix pairwise_contrast(Eigen::Index u);

/// Embeds `inner` at column `offset` of a matrix with `total_cols` columns.
ContrastMatrix padded_contrast(const ContrastMatrix& inner, Eigen::Index offset, Eigen::Index total_cols);

/// Single-row contrast (+1 at level a, -1 at level b) on the columns of `factor`.
ContrastMatrix level_pair_contrast(const Factor& factor, Eigen::Index level_a, Eigen::Index level_b,
                                   Eigen::Index total_cols);

/// Global test of one factor: its pairwise contrast padded into the design.
ContrastMatrix factor_contrast(const DesignBundle& design, const std::string& factor_name);

/// Orthogonal projector D = W C^{-1} W' with W = X (X'X)^- L' and
/// C = L (X'X)^- L'. Stored in factored form: D = B B' with the n x d
/// orthonormal basis B = W C^{-1/2}.
class HypothesisProjector {
 public:
  HypothesisProjector(const DesignBundle& design, const ContrastMatrix& contrast);

  Eigen::Index d() const noexcept { return basis_.cols(); }
  /// n x d matrix W = X (X'X)^- L'.
  const Eigen::MatrixXd& w() const noexcept { return w_; }
  /// (L (X'X)^- L')^{-1}.
  const Eigen::MatrixXd& c_inv() const noexcept { return c_inv_; }
  /// Orthonormal basis of Im(D).
  const Eigen::MatrixXd& basis() const noexcept { return basis_; }
  /// Dense n x n D.
  Eigen::MatrixXd matrix() const;

 private:
  Eigen::MatrixXd w_;
  Eigen::MatrixXd c_inv_;
  Eigen::MatrixXd basis_;
};

/// Throws NonTestableContrastError when L (X'X)^- L' is singular (condition
/// number >= 1e12) or L is not estimable under X.
HypothesisProjector hypothesis_projector(const DesignBundle& design, const ContrastMatrix& contrast);

}  // namespace khl
