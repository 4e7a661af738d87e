#include "khl/diagnostics.hpp"

#include <cmath>

#include "khl/errors.hpp"
#include "khl/linalg.hpp"

namespace khl {

namespace {

constexpr double kLeverageLimit = 1.0 - 1e-10;
constexpr double kAxisTol = 1e-12;

void check_truncation(const FittedModel& model, Eigen::Index t) {
  if (t < 1 || t > model.rank())
    throw TruncationError("truncation " + std::to_string(t) + " outside [1, " + std::to_string(model.rank()) + "]",
                          static_cast<std::size_t>(model.rank()));
}

// P_X^perp K_Y P_X^perp U_T, an n x t matrix.
Eigen::MatrixXd residual_kernel_times_u(const FittedModel& model, Eigen::Index t) {
  const DesignBundle& design = model.design();
  const Eigen::MatrixXd pu = design.residualize(model.eigvecs().leftCols(t));
  return design.residualize(model.gram().values() * pu);
}

}  // namespace

DiagnosticsBundle projection_tables(const FittedModel& model, Eigen::Index t) {
  check_truncation(model, t);
  const DesignBundle& design = model.design();
  const Eigen::MatrixXd pu = design.residualize(model.eigvecs().leftCols(t));
  const Eigen::VectorXd scale =
      model.eigvals().head(t).cwiseSqrt().cwiseInverse() / std::sqrt(static_cast<double>(model.n()));

  DiagnosticsBundle out;
  out.truncation = t;
  out.response_proj = (model.gram().values() * pu) * scale.asDiagonal();
  out.residual_proj = design.residualize(out.response_proj);
  out.prediction_proj = design.project(out.response_proj);
  return out;
}

Eigen::MatrixXd DiscriminantAxes::project(const Eigen::MatrixXd& cross) const {
  if (cross.rows() != weights.cols()) throw InputError("cross-Gram rows do not match the fitted sample size");
  return (weights * cross).transpose();
}

DiscriminantAxes discriminant_coordinates(const FittedModel& model, const ContrastMatrix& contrast, Eigen::Index t,
                                          Eigen::Index axes) {
  check_truncation(model, t);
  if (axes < 0) throw InputError("axis count must be >= 0");
  const HypothesisProjector projector = hypothesis_projector(model.design(), contrast);
  const Eigen::MatrixXd kt = kt_matrix(model, t);
  const Eigen::MatrixXd& k = model.gram().values();

  const Eigen::MatrixXd ktb = kt * projector.basis();  // t x d; K_T D K_T' = ktb ktb'
  const linalg::SymmetricEigen es = linalg::eigen_descending(ktb * ktb.transpose());

  DiscriminantAxes out;
  out.axis_eigvals = es.values.cwiseMax(0.0);
  const Eigen::Index wanted = axes == 0 ? std::min<Eigen::Index>(t, projector.d()) : std::min(axes, t);

  // Observations of the first level named in the contrast fix each axis sign.
  const Eigen::MatrixXd& l = contrast.matrix();
  Eigen::Index ref_col = 0;
  while (ref_col < l.cols() && (l.col(ref_col).array() == 0.0).all()) ++ref_col;
  const Eigen::VectorXd ref_rows = model.design().x().col(ref_col);

  // Unit eigenfunction g = Psi* v / |Psi* v| with |Psi* v|^2 = v' Lambda^{-1} v; its
  // representer weights over k(Y, .) are n^{-1/2} P^perp U Lambda^{-1} v / |Psi* v|.
  const Eigen::MatrixXd pu = model.design().residualize(model.eigvecs().leftCols(t));
  const Eigen::VectorXd inv_lambda = model.eigvals().head(t).cwiseInverse();
  std::vector<Eigen::VectorXd> rows;
  const double top = out.axis_eigvals.size() > 0 ? out.axis_eigvals(0) : 0.0;
  const bool null_effect = trace_statistic(kt, projector) == 0.0;
  for (Eigen::Index j = 0; j < wanted; ++j) {
    const Eigen::VectorXd v = es.vectors.col(j);
    if (null_effect || !(out.axis_eigvals(j) > kAxisTol * top)) {
      out.dropped_axes.push_back(j);
      continue;
    }
    const double norm = std::sqrt(v.dot(inv_lambda.asDiagonal() * v));
    Eigen::VectorXd weight = pu * (inv_lambda.asDiagonal() * v) / (std::sqrt(static_cast<double>(model.n())) * norm);
    const Eigen::VectorXd coords = k * weight;
    double ref_sum = 0.0;
    double ref_count = 0.0;
    for (Eigen::Index i = 0; i < coords.size(); ++i) {
      if (ref_rows(i) != 0.0) {
        ref_sum += coords(i);
        ref_count += 1.0;
      }
    }
    if (ref_count > 0.0 && ref_sum / ref_count > 0.0) weight = -weight;
    rows.push_back(std::move(weight));
  }

  out.axes = static_cast<Eigen::Index>(rows.size());
  out.weights.resize(out.axes, model.n());
  for (Eigen::Index j = 0; j < out.axes; ++j) out.weights.row(j) = rows[static_cast<std::size_t>(j)].transpose();
  out.sample_coords = (out.weights * k).transpose();
  return out;
}

Eigen::VectorXd cook_distances(const FittedModel& model, const ContrastMatrix& contrast, Eigen::Index t) {
  check_truncation(model, t);
  const DesignBundle& design = model.design();
  const Eigen::VectorXd& leverage = design.leverages();
  for (Eigen::Index i = 0; i < leverage.size(); ++i)
    if (leverage(i) >= kLeverageLimit) throw LeverageError(static_cast<std::size_t>(i), leverage(i));

  const HypothesisProjector projector = hypothesis_projector(design, contrast);
  const Eigen::MatrixXd& w = projector.w();
  const Eigen::Index n = model.n();
  const auto d = static_cast<double>(projector.d());

  // diag(M Lambda^{-2} M') with M = P^perp K P^perp U.
  const Eigen::MatrixXd m = residual_kernel_times_u(model, t) * model.eigvals().head(t).cwiseInverse().asDiagonal();
  const Eigen::VectorXd kernel_part = m.rowwise().squaredNorm();
  const Eigen::VectorXd design_part = ((w * projector.c_inv()).cwiseProduct(w)).rowwise().sum();

  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double one_minus = 1.0 - leverage(i);
    out(i) = std::max(0.0, design_part(i)) * kernel_part(i) / (d * static_cast<double>(n) * one_minus * one_minus);
  }
  return out;
}

}  // namespace khl
