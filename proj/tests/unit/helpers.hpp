#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace khl::testing {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double shift = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng) + shift;
  return m;
}

// Balanced labels "L0", "L1", ... cycling through `levels`.
inline std::vector<std::string> cyclic_labels(Eigen::Index n, Eigen::Index levels, const std::string& prefix = "L") {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i % levels));
  return out;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()));
}

// Column-wise comparison allowing one sign flip per column.
inline double rel_diff_up_to_sign(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double plus = rel_diff(Eigen::MatrixXd(a.col(j)), Eigen::MatrixXd(b.col(j)));
    const double minus = rel_diff(Eigen::MatrixXd(a.col(j)), Eigen::MatrixXd(-b.col(j)));
    worst = std::max(worst, std::min(plus, minus));
  }
  return worst;
}

}  // namespace khl::testing
