#include "khl/model.hpp"

#include <cmath>

#include "khl/errors.hpp"
#include "khl/linalg.hpp"
#include "khl/stats.hpp"

namespace khl {

namespace {

constexpr double kZeroStatisticTol = 1e-12;

}  // namespace

FittedModel::FittedModel(GramMatrix gram, DesignBundle design, Eigen::MatrixXd k_e, Eigen::VectorXd eigvals,
                         Eigen::MatrixXd eigvecs)
    : gram_(std::move(gram)),
      design_(std::move(design)),
      k_e_(std::move(k_e)),
      eigvals_(std::move(eigvals)),
      eigvecs_(std::move(eigvecs)) {}

std::string to_string(TestMethod method) { return method == TestMethod::exact ? "exact" : "nystrom"; }

FittedModel fit(GramMatrix gram, DesignBundle design, const FitOptions& options) {
  const Eigen::Index n = gram.n();
  if (design.n() != n)
    throw InputError("fit: Gram matrix has " + std::to_string(n) + " rows but the design has " +
                     std::to_string(design.n()));
  if (options.max_components && *options.max_components < 1)
    throw InputError("fit: max_components must be >= 1");

  const Eigen::MatrixXd& k = gram.values();
  const Eigen::MatrixXd left = design.residualize(k);
  Eigen::MatrixXd k_e = linalg::symmetrized(design.residualize(left.transpose())) / static_cast<double>(n);

  const double k_scale = k.cwiseAbs().maxCoeff();
  if (!(k_e.cwiseAbs().maxCoeff() > 1e-12 * k_scale / static_cast<double>(n)))
    throw DegenerateFitError("residual Gram matrix is zero: the design fits the embeddings exactly");

  linalg::SymmetricEigen es = options.max_components ? linalg::eigen_leading(k_e, *options.max_components)
                                                     : linalg::eigen_descending(k_e);
  const Eigen::Index r = linalg::leading_rank(es.values, kEigenRetentionTol);
  if (r == 0) throw DegenerateFitError("residual Gram matrix has no positive eigenvalue");
  Eigen::VectorXd values = es.values.head(r);
  Eigen::MatrixXd vectors = es.vectors.leftCols(r);
  return FittedModel(std::move(gram), std::move(design), std::move(k_e), std::move(values), std::move(vectors));
}

Eigen::MatrixXd kt_matrix(const FittedModel& model, Eigen::Index t) {
  if (t < 1 || t > model.rank())
    throw TruncationError("truncation " + std::to_string(t) + " outside [1, " + std::to_string(model.rank()) + "]",
                          static_cast<std::size_t>(model.rank()));
  const Eigen::MatrixXd u = model.design().residualize(model.eigvecs().leftCols(t));
  const Eigen::VectorXd scale =
      model.eigvals().head(t).cwiseInverse() / std::sqrt(static_cast<double>(model.n()));
  return scale.asDiagonal() * (u.transpose() * model.gram().values());
}

double trace_statistic(const Eigen::MatrixXd& kt, const HypothesisProjector& projector) {
  if (kt.cols() != projector.basis().rows()) throw InputError("statistic: coordinate matrix and projector disagree on n");
  const Eigen::MatrixXd m = kt * projector.basis();
  const double norm = m.norm();
  if (norm <= kZeroStatisticTol * kt.norm()) return 0.0;
  return norm * norm;
}

TestResult make_result(double statistic, Eigen::Index d, Eigen::Index t, Eigen::Index requested, TestMethod method) {
  TestResult r;
  r.statistic = statistic;
  r.df = static_cast<int>(d * t);
  r.p_value = statistic > 0.0 ? chi2_sf(statistic, r.df) : 1.0;
  r.truncation = static_cast<int>(t);
  r.requested_truncation = static_cast<int>(requested);
  r.truncation_capped = requested > t;
  r.method = method;
  return r;
}

TestResult tkhl_test(const FittedModel& model, const ContrastMatrix& contrast, Eigen::Index t) {
  if (t < 1) throw InputError("truncation must be >= 1");
  const HypothesisProjector projector = hypothesis_projector(model.design(), contrast);
  const Eigen::Index used = std::min(t, model.rank());
  const double stat = trace_statistic(kt_matrix(model, used), projector);
  return make_result(stat, projector.d(), used, t, TestMethod::exact);
}

std::vector<PairwiseResult> pairwise_tests(const FittedModel& model, const std::string& factor_name, Eigen::Index t) {
  const DesignBundle& design = model.design();
  const Factor& f = design.factor(factor_name);
  if (f.level_count() < 2) throw InputError("pairwise tests need a factor with at least 2 levels");

  std::vector<PairwiseResult> out;
  std::vector<double> raw;
  for (Eigen::Index a = 0; a < f.level_count(); ++a) {
    for (Eigen::Index b = a + 1; b < f.level_count(); ++b) {
      PairwiseResult pr;
      pr.level_a = f.levels[static_cast<std::size_t>(a)];
      pr.level_b = f.levels[static_cast<std::size_t>(b)];
      pr.index_a = a;
      pr.index_b = b;
      pr.result = tkhl_test(model, level_pair_contrast(f, a, b, design.p()), t);
      raw.push_back(pr.result.p_value);
      out.push_back(std::move(pr));
    }
  }
  const std::vector<double> adjusted = bh_adjust(raw);
  for (std::size_t k = 0; k < out.size(); ++k) out[k].adjusted_p = adjusted[k];
  return out;
}

}  // namespace khl
