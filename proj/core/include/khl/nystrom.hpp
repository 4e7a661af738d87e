#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "khl/design.hpp"
#include "khl/kernel.hpp"
#include "khl/model.hpp"

namespace khl {

enum class LandmarkStrategy { uniform, stratified };

std::string to_string(LandmarkStrategy strategy);
LandmarkStrategy parse_landmark_strategy(const std::string& name);

/// Indices of the q observations used as landmarks (sorted ascending).
struct LandmarkPlan {
  std::vector<Eigen::Index> indices;
  Eigen::Index q = 0;
  LandmarkStrategy strategy = LandmarkStrategy::uniform;
  std::uint64_t seed = 0;
};

/// Draws q distinct indices from [0, n) without replacement.
///
/// Uniform: simple random sample. Stratified: `groups` gives a group code per
/// observation; each group receives floor(q * w_g / sum(w)) landmarks (w_g is
/// `weights[g]` or the group size), capped at the group size, and the
/// remaining landmarks go one at a time to groups in code order. Deterministic
/// in `seed`.
LandmarkPlan sample_landmarks(Eigen::Index n, Eigen::Index q, const std::vector<Eigen::Index>* groups,
                              LandmarkStrategy strategy, std::uint64_t seed,
                              const std::vector<double>* weights = nullptr);

/// K_e^Z = P_{X^I}^perp K_Z P_{X^I}^perp / q.
Eigen::MatrixXd landmark_residual_gram(const GramMatrix& gram_z, const DesignBundle& landmark_design);

/// Leading eigensystem of the landmark residual Gram matrix; the anchors are
/// the matching unit eigenfunctions of the landmark residual covariance.
struct AnchorSystem {
  Eigen::MatrixXd u_z;       ///< q x m
  Eigen::VectorXd lambda_z;  ///< m, descending, positive
  Eigen::Index m = 0;
  DesignBundle landmark_design;
  std::vector<Eigen::Index> lost_columns;  ///< design columns with no landmark
};

/// Throws AnchorRankError when m exceeds the numerical rank of k_e_z.
AnchorSystem build_anchors(const Eigen::MatrixXd& k_e_z, Eigen::Index m, DesignBundle landmark_design);

/// m x n matrix Lambda_Z^{-1/2} U_Z' P_{X^I}^perp K_{Z,Y}; column i holds
/// sqrt(q) <a_s, phi(y_i)> for each anchor a_s.
Eigen::MatrixXd anchor_coordinates(const AnchorSystem& anchors, const Eigen::MatrixXd& cross);

/// m x m Nystrom residual Gram matrix
/// K_e^a = (1/(nq)) Lambda_Z^{-1/2} U_Z' P_I^perp K_{Z,Y} P_X^perp K_{Y,Z} P_I^perp U_Z Lambda_Z^{-1/2},
/// whose spectrum is that of the Nystrom residual covariance.
Eigen::MatrixXd nystrom_gram(const AnchorSystem& anchors, const Eigen::MatrixXd& cross, const DesignBundle& design);

/// Everything the Nystrom statistic needs, built once per landmark plan.
struct NystromModel {
  AnchorSystem anchors;
  DesignBundle design;
  Eigen::MatrixXd coordinates;  ///< anchor_coordinates(anchors, cross)
  Eigen::MatrixXd k_e_a;
  Eigen::VectorXd eigvals;  ///< retained spectrum of k_e_a (descending)
  Eigen::MatrixXd eigvecs;  ///< m x rank
  Eigen::Index q() const { return anchors.u_z.rows(); }
  Eigen::Index n() const { return coordinates.cols(); }
  Eigen::Index rank() const { return eigvals.size(); }
};

NystromModel nystrom_model(AnchorSystem anchors, const Eigen::MatrixXd& cross, DesignBundle design);

/// Builds landmarks design, K_e^Z, anchors and the Nystrom model from a plan,
/// the q x q landmark Gram matrix and the q x n cross-Gram matrix.
NystromModel nystrom_fit(const LandmarkPlan& plan, const GramMatrix& gram_z, const Eigen::MatrixXd& cross,
                         const DesignBundle& design, Eigen::Index m);

/// T x n matrix (q Lambda_a)^{-1/2} U_a' Lambda_Z^{-1/2} U_Z' P_I^perp K_{Z,Y}.
Eigen::MatrixXd nystrom_kt_matrix(const NystromModel& model, Eigen::Index t);

/// Nystrom TKHL test: trace(K_T^a D K_T^a'). D is exact (never approximated).
/// t > m throws TruncationError; t above the numerical rank of K_e^a is capped
/// and flagged.
TestResult nystrom_test(const NystromModel& model, const ContrastMatrix& contrast, Eigen::Index t);
TestResult nystrom_test(const AnchorSystem& anchors, const Eigen::MatrixXd& cross, const DesignBundle& design,
                        const ContrastMatrix& contrast, Eigen::Index t);

/// min(n, max(100, n / 10)).
Eigen::Index default_landmark_count(Eigen::Index n);
/// min(q - rank(X^I), 50), at least 1.
Eigen::Index default_anchor_count(Eigen::Index q, Eigen::Index landmark_design_rank);

}  // namespace khl
