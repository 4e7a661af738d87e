#include "khl/design.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "khl/errors.hpp"
#include "khl/linalg.hpp"

namespace khl {

namespace {

constexpr double kPinvTol = 1e-12;
constexpr double kContrastRankTol = 1e-10;
constexpr double kContrastConditionLimit = 1e12;

Factor encode_factor(const std::vector<std::string>& labels, const std::string& name, Eigen::Index offset) {
  Factor f;
  f.name = name;
  f.column_offset = offset;
  f.codes.reserve(labels.size());
  std::map<std::string, Eigen::Index> seen;
  for (const auto& label : labels) {
    auto [it, inserted] = seen.emplace(label, static_cast<Eigen::Index>(f.levels.size()));
    if (inserted) f.levels.push_back(label);
    f.codes.push_back(it->second);
  }
  if (f.levels.size() < 2)
    throw DegenerateDesignError("factor '" + name + "' needs at least 2 levels, got " + std::to_string(f.levels.size()));
  return f;
}

void fill_one_hot(Eigen::MatrixXd& x, const Factor& f) {
  for (std::size_t i = 0; i < f.codes.size(); ++i) x(static_cast<Eigen::Index>(i), f.column_offset + f.codes[i]) = 1.0;
}

}  // namespace

Eigen::Index Factor::level_index(const std::string& level) const {
  const auto it = std::find(levels.begin(), levels.end(), level);
  if (it == levels.end()) throw InputError("factor '" + name + "' has no level '" + level + "'");
  return static_cast<Eigen::Index>(it - levels.begin());
}

DesignBundle::DesignBundle(Eigen::MatrixXd x, std::vector<Factor> factors)
    : x_(std::move(x)), factors_(std::move(factors)) {
  if (x_.rows() == 0 || x_.cols() == 0) throw InputError("design matrix is empty");
  if (!x_.allFinite()) throw InputError("design matrix has non-finite entries");
  for (const auto& f : factors_) {
    if (static_cast<Eigen::Index>(f.codes.size()) != x_.rows())
      throw InputError("factor '" + f.name + "' does not match the design row count");
  }

  const linalg::SymmetricEigen es = linalg::eigen_descending(x_.transpose() * x_);
  const Eigen::Index r = linalg::leading_rank(es.values, kPinvTol);
  const Eigen::MatrixXd v = es.vectors.leftCols(r);
  const Eigen::VectorXd lambda = es.values.head(r);
  xtx_pinv_ = v * lambda.cwiseInverse().asDiagonal() * v.transpose();
  basis_ = x_ * v * lambda.cwiseSqrt().cwiseInverse().asDiagonal();
  leverages_ = basis_.rowwise().squaredNorm().cwiseMax(0.0).cwiseMin(1.0);
}

const Factor& DesignBundle::factor(const std::string& name) const {
  for (const auto& f : factors_)
    if (f.name == name) return f;
  throw InputError("design has no factor named '" + name + "'");
}

Eigen::MatrixXd DesignBundle::p_x() const { return basis_ * basis_.transpose(); }

Eigen::MatrixXd DesignBundle::p_x_perp() const {
  return Eigen::MatrixXd::Identity(n(), n()) - p_x();
}

Eigen::MatrixXd DesignBundle::project(const Eigen::MatrixXd& a) const {
  if (a.rows() != n()) throw InputError("project: row count does not match the design");
  return basis_ * (basis_.transpose() * a);
}

Eigen::MatrixXd DesignBundle::residualize(const Eigen::MatrixXd& a) const { return a - project(a); }

DesignBundle DesignBundle::subset(const std::vector<Eigen::Index>& indices) const {
  for (auto i : indices)
    if (i < 0 || i >= n()) throw InputError("design subset index out of range");
  std::vector<Factor> factors = factors_;
  for (auto& f : factors) {
    std::vector<Eigen::Index> codes;
    codes.reserve(indices.size());
    for (auto i : indices) codes.push_back(f.codes[static_cast<std::size_t>(i)]);
    f.codes = std::move(codes);
  }
  return DesignBundle(x_(indices, Eigen::all), std::move(factors));
}

std::vector<Eigen::Index> DesignBundle::empty_columns() const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index j = 0; j < p(); ++j)
    if (x_.col(j).cwiseAbs().maxCoeff() == 0.0) out.push_back(j);
  return out;
}

DesignBundle one_way_design(const std::vector<std::string>& labels, const std::string& name) {
  Factor f = encode_factor(labels, name, 0);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), f.level_count());
  fill_one_hot(x, f);
  return DesignBundle(std::move(x), {std::move(f)});
}

DesignBundle two_way_additive_design(const std::vector<std::string>& labels_a,
                                     const std::vector<std::string>& labels_b, const std::string& name_a,
                                     const std::string& name_b) {
  if (labels_a.size() != labels_b.size()) throw InputError("two-way design: factor lengths differ");
  if (name_a == name_b) throw InputError("two-way design: factor names must differ");
  Factor a = encode_factor(labels_a, name_a, 0);
  Factor b = encode_factor(labels_b, name_b, a.level_count());
  Eigen::MatrixXd x =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels_a.size()), a.level_count() + b.level_count());
  fill_one_hot(x, a);
  fill_one_hot(x, b);
  return DesignBundle(std::move(x), {std::move(a), std::move(b)});
}

ContrastMatrix::ContrastMatrix(Eigen::MatrixXd l) : l_(std::move(l)) {
  if (l_.rows() == 0 || l_.cols() == 0) throw InputError("contrast matrix is empty");
  if (!l_.allFinite()) throw InputError("contrast matrix has non-finite entries");
  if (l_.rows() > l_.cols()) throw InputError("contrast matrix has more rows than columns");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(l_);
  const Eigen::VectorXd s = svd.singularValues();
  if (!(s(0) > 0.0) || s(s.size() - 1) <= kContrastRankTol * s(0))
    throw InputError("contrast matrix is not of full row rank");
}

ContrastMatrix pairwise_contrast(Eigen::Index u) {
  if (u < 2) throw InputError("pairwise contrast needs at least 2 levels");
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(u - 1, u);
  for (Eigen::Index k = 0; k + 1 < u; ++k) {
    l(k, k) = 1.0;
    l(k, k + 1) = -1.0;
  }
  return ContrastMatrix(std::move(l));
}

ContrastMatrix padded_contrast(const ContrastMatrix& inner, Eigen::Index offset, Eigen::Index total_cols) {
  if (offset < 0 || offset + inner.p() > total_cols)
    throw InputError("padded contrast does not fit in " + std::to_string(total_cols) + " columns");
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(inner.d(), total_cols);
  l.middleCols(offset, inner.p()) = inner.matrix();
  return ContrastMatrix(std::move(l));
}

ContrastMatrix level_pair_contrast(const Factor& factor, Eigen::Index level_a, Eigen::Index level_b,
                                   Eigen::Index total_cols) {
  const Eigen::Index u = factor.level_count();
  if (level_a < 0 || level_b < 0 || level_a >= u || level_b >= u || level_a == level_b)
    throw InputError("invalid level pair for factor '" + factor.name + "'");
  Eigen::MatrixXd inner = Eigen::MatrixXd::Zero(1, u);
  inner(0, level_a) = 1.0;
  inner(0, level_b) = -1.0;
  return padded_contrast(ContrastMatrix(std::move(inner)), factor.column_offset, total_cols);
}

ContrastMatrix factor_contrast(const DesignBundle& design, const std::string& factor_name) {
  const Factor& f = design.factor(factor_name);
  return padded_contrast(pairwise_contrast(f.level_count()), f.column_offset, design.p());
}

HypothesisProjector::HypothesisProjector(const DesignBundle& design, const ContrastMatrix& contrast) {
  const Eigen::MatrixXd& l = contrast.matrix();
  if (l.cols() != design.p())
    throw InputError("contrast has " + std::to_string(l.cols()) + " columns but the design has " +
                     std::to_string(design.p()));
  const Eigen::MatrixXd& g = design.xtx_pinv();

  // Estimability: L must lie in the row space of X, i.e. L G X'X = L.
  const Eigen::MatrixXd xtx = design.x().transpose() * design.x();
  const double l_scale = std::max(1.0, l.cwiseAbs().maxCoeff());
  if ((l * g * xtx - l).cwiseAbs().maxCoeff() > 1e-8 * l_scale)
    throw NonTestableContrastError("contrast is not estimable under the design (L outside the row space of X)");

  const Eigen::MatrixXd c = linalg::symmetrized(l * g * l.transpose());
  const linalg::SymmetricEigen es = linalg::eigen_descending(c);
  const double hi = es.values(0);
  const double lo = es.values(es.values.size() - 1);
  if (!(hi > 0.0) || !(lo > hi / kContrastConditionLimit))
    throw NonTestableContrastError("L (X'X)^- L' is singular; the contrast is not testable");

  w_ = design.x() * g * l.transpose();
  c_inv_ = es.vectors * es.values.cwiseInverse().asDiagonal() * es.vectors.transpose();
  const Eigen::MatrixXd c_inv_sqrt = es.vectors * es.values.cwiseSqrt().cwiseInverse().asDiagonal() * es.vectors.transpose();
  basis_ = w_ * c_inv_sqrt;
}

Eigen::MatrixXd HypothesisProjector::matrix() const { return basis_ * basis_.transpose(); }

HypothesisProjector hypothesis_projector(const DesignBundle& design, const ContrastMatrix& contrast) {
  return HypothesisProjector(design, contrast);
}

}  // namespace khl
