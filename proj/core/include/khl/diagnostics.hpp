#pragma once

#include <vector>

#include <Eigen/Dense>

#include "khl/design.hpp"
#include "khl/model.hpp"

namespace khl {

/// Projections of the response embeddings, the residuals and the predicted
/// embeddings on the first T eigenfunctions f_t of the residual covariance.
/// Each table is n x T; response = residual + prediction.
struct DiagnosticsBundle {
  Eigen::MatrixXd response_proj;
  Eigen::MatrixXd residual_proj;
  Eigen::MatrixXd prediction_proj;
  Eigen::Index truncation = 0;
};

DiagnosticsBundle projection_tables(const FittedModel& model, Eigen::Index t);

/// Eigen-analysis of K_T D K_T' and the coordinates of the observations on
/// the unit discriminant eigenfunctions g_j of Sigma_T^{-1} H_L.
struct DiscriminantAxes {
  Eigen::VectorXd axis_eigvals;   ///< all t eigenvalues, descending; they sum to the statistic
  Eigen::MatrixXd sample_coords;  ///< n x a
  Eigen::Index axes = 0;          ///< a, number of retained axes
  std::vector<Eigen::Index> dropped_axes;  ///< requested axes with a vanishing eigenvalue
  /// a x n; coordinate of a point y0 on axis j is weights.row(j) * k(Y, y0).
  Eigen::MatrixXd weights;

  /// Coordinates of new points from the n x m cross-Gram block k(Y, Y0).
  Eigen::MatrixXd project(const Eigen::MatrixXd& cross) const;
};

/// Axis j is the unit eigenfunction g_j = Psi* v_j / |Psi* v_j| of
/// Sigma_T^{-1} H_L, where v_j is the j-th eigenvector of K_T D K_T' and
/// Psi = n^{-1/2} Lambda^{-1} U' P_X^perp Phi(Y); observation i has coordinate
/// (K_T' v_j)_i / sqrt(v_j' Lambda^{-1} v_j).
/// `axes` = 0 keeps min(t, d) axes. Each axis is oriented so that the
/// observations of the first level named in the contrast (its first column
/// with a nonzero entry) have a nonpositive mean coordinate.
DiscriminantAxes discriminant_coordinates(const FittedModel& model, const ContrastMatrix& contrast, Eigen::Index t,
                                          Eigen::Index axes = 0);

/// Truncated kernel Cook distance of every observation:
/// W_i C^{-1} W_i' / (d n (1 - pi_ii)^2) * (P^perp K P^perp U Lambda^{-2} U' P^perp K P^perp)_ii.
/// Throws LeverageError for an observation with pi_ii >= 1 - 1e-10.
Eigen::VectorXd cook_distances(const FittedModel& model, const ContrastMatrix& contrast, Eigen::Index t);

}  // namespace khl
