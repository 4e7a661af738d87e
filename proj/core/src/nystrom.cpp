#include "khl/nystrom.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "khl/errors.hpp"
#include "khl/linalg.hpp"

namespace khl {

std::string to_string(LandmarkStrategy strategy) {
  return strategy == LandmarkStrategy::uniform ? "uniform" : "stratified";
}

LandmarkStrategy parse_landmark_strategy(const std::string& name) {
  if (name == "uniform") return LandmarkStrategy::uniform;
  if (name == "stratified") return LandmarkStrategy::stratified;
  throw InputError("unknown landmark strategy '" + name + "'");
}

namespace {

// First `count` entries of `pool` after a partial Fisher-Yates shuffle.
std::vector<Eigen::Index> draw_without_replacement(std::vector<Eigen::Index> pool, Eigen::Index count,
                                                   std::mt19937_64& rng) {
  const auto size = static_cast<Eigen::Index>(pool.size());
  for (Eigen::Index k = 0; k < count; ++k) {
    std::uniform_int_distribution<Eigen::Index> pick(k, size - 1);
    std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(count));
  return pool;
}

}  // namespace

LandmarkPlan sample_landmarks(Eigen::Index n, Eigen::Index q, const std::vector<Eigen::Index>* groups,
                              LandmarkStrategy strategy, std::uint64_t seed, const std::vector<double>* weights) {
  if (q < 2 || q > n)
    throw InputError("landmark count " + std::to_string(q) + " outside [2, " + std::to_string(n) + "]");
  std::mt19937_64 rng(seed);
  LandmarkPlan plan;
  plan.q = q;
  plan.strategy = strategy;
  plan.seed = seed;

  if (strategy == LandmarkStrategy::uniform) {
    std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});
    plan.indices = draw_without_replacement(std::move(pool), q, rng);
  } else {
    if (groups == nullptr || static_cast<Eigen::Index>(groups->size()) != n)
      throw InputError("stratified landmark sampling needs one group code per observation");
    const Eigen::Index g_count = *std::max_element(groups->begin(), groups->end()) + 1;
    std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(g_count));
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index g = (*groups)[static_cast<std::size_t>(i)];
      if (g < 0) throw InputError("group codes must be >= 0");
      members[static_cast<std::size_t>(g)].push_back(i);
    }
    std::vector<double> w(static_cast<std::size_t>(g_count));
    if (weights != nullptr) {
      if (static_cast<Eigen::Index>(weights->size()) != g_count)
        throw InputError("stratified sampling: one weight per group required");
      w = *weights;
    } else {
      for (std::size_t g = 0; g < w.size(); ++g) w[g] = static_cast<double>(members[g].size());
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(total > 0.0) || std::any_of(w.begin(), w.end(), [](double v) { return !(v >= 0.0); }))
      throw InputError("stratified sampling: weights must be >= 0 with a positive sum");

    std::vector<Eigen::Index> alloc(w.size());
    Eigen::Index assigned = 0;
    for (std::size_t g = 0; g < w.size(); ++g) {
      const auto share = static_cast<Eigen::Index>(std::floor(static_cast<double>(q) * w[g] / total));
      alloc[g] = std::min(share, static_cast<Eigen::Index>(members[g].size()));
      assigned += alloc[g];
    }
    while (assigned < q) {
      bool progressed = false;
      for (std::size_t g = 0; g < w.size() && assigned < q; ++g) {
        if (alloc[g] < static_cast<Eigen::Index>(members[g].size())) {
          ++alloc[g];
          ++assigned;
          progressed = true;
        }
      }
      if (!progressed) break;
    }
    for (std::size_t g = 0; g < w.size(); ++g) {
      auto drawn = draw_without_replacement(members[g], alloc[g], rng);
      plan.indices.insert(plan.indices.end(), drawn.begin(), drawn.end());
    }
  }
  std::sort(plan.indices.begin(), plan.indices.end());
  return plan;
}

Eigen::MatrixXd landmark_residual_gram(const GramMatrix& gram_z, const DesignBundle& landmark_design) {
  const Eigen::Index q = gram_z.n();
  if (landmark_design.n() != q) throw InputError("landmark Gram matrix and landmark design disagree on q");
  const Eigen::MatrixXd left = landmark_design.residualize(gram_z.values());
  return linalg::symmetrized(landmark_design.residualize(left.transpose())) / static_cast<double>(q);
}

AnchorSystem build_anchors(const Eigen::MatrixXd& k_e_z, Eigen::Index m, DesignBundle landmark_design) {
  if (m < 1) throw InputError("anchor count must be >= 1");
  if (k_e_z.rows() != k_e_z.cols() || k_e_z.rows() != landmark_design.n())
    throw InputError("landmark residual Gram matrix has the wrong shape");
  const linalg::SymmetricEigen es = linalg::eigen_descending(linalg::symmetrized(k_e_z));
  const Eigen::Index rank = linalg::leading_rank(es.values, kEigenRetentionTol);
  if (m > rank) throw AnchorRankError(static_cast<std::size_t>(m), static_cast<std::size_t>(rank));
  AnchorSystem a;
  a.u_z = es.vectors.leftCols(m);
  a.lambda_z = es.values.head(m);
  a.m = m;
  a.lost_columns = landmark_design.empty_columns();
  a.landmark_design = std::move(landmark_design);
  return a;
}

Eigen::MatrixXd anchor_coordinates(const AnchorSystem& anchors, const Eigen::MatrixXd& cross) {
  if (cross.rows() != anchors.u_z.rows()) throw InputError("cross-Gram rows do not match the landmark count");
  const Eigen::MatrixXd u_res = anchors.landmark_design.residualize(anchors.u_z);
  return anchors.lambda_z.cwiseSqrt().cwiseInverse().asDiagonal() * (u_res.transpose() * cross);
}

namespace {

Eigen::MatrixXd nystrom_gram_from_coordinates(const Eigen::MatrixXd& coords, const DesignBundle& design,
                                              Eigen::Index q) {
  if (coords.cols() != design.n()) throw InputError("cross-Gram columns do not match the design");
  // P_X^perp is idempotent, so B P^perp B' = (P^perp B')' (P^perp B').
  const Eigen::MatrixXd res = design.residualize(coords.transpose());
  return (res.transpose() * res) / (static_cast<double>(design.n()) * static_cast<double>(q));
}

}  // namespace

Eigen::MatrixXd nystrom_gram(const AnchorSystem& anchors, const Eigen::MatrixXd& cross, const DesignBundle& design) {
  return nystrom_gram_from_coordinates(anchor_coordinates(anchors, cross), design, anchors.u_z.rows());
}

NystromModel nystrom_model(AnchorSystem anchors, const Eigen::MatrixXd& cross, DesignBundle design) {
  NystromModel model{std::move(anchors), std::move(design), {}, {}, {}, {}};
  model.coordinates = anchor_coordinates(model.anchors, cross);
  model.k_e_a = nystrom_gram_from_coordinates(model.coordinates, model.design, model.q());
  const linalg::SymmetricEigen es = linalg::eigen_descending(model.k_e_a);
  const Eigen::Index r = linalg::leading_rank(es.values, kEigenRetentionTol);
  model.eigvals = es.values.head(r);
  model.eigvecs = es.vectors.leftCols(r);
  return model;
}

NystromModel nystrom_fit(const LandmarkPlan& plan, const GramMatrix& gram_z, const Eigen::MatrixXd& cross,
                         const DesignBundle& design, Eigen::Index m) {
  if (gram_z.n() != plan.q || cross.rows() != plan.q) throw InputError("landmark Gram blocks do not match the plan");
  DesignBundle landmark_design = design.subset(plan.indices);
  const Eigen::MatrixXd k_e_z = landmark_residual_gram(gram_z, landmark_design);
  AnchorSystem anchors = build_anchors(k_e_z, m, std::move(landmark_design));
  return nystrom_model(std::move(anchors), cross, design);
}

Eigen::MatrixXd nystrom_kt_matrix(const NystromModel& model, Eigen::Index t) {
  if (t < 1 || t > model.rank())
    throw TruncationError("truncation " + std::to_string(t) + " outside [1, " + std::to_string(model.rank()) + "]",
                          static_cast<std::size_t>(model.rank()));
  const Eigen::VectorXd scale =
      (static_cast<double>(model.q()) * model.eigvals.head(t)).cwiseSqrt().cwiseInverse();
  return scale.asDiagonal() * (model.eigvecs.leftCols(t).transpose() * model.coordinates);
}

TestResult nystrom_test(const NystromModel& model, const ContrastMatrix& contrast, Eigen::Index t) {
  if (t < 1) throw InputError("truncation must be >= 1");
  if (t > model.anchors.m)
    throw TruncationError("truncation " + std::to_string(t) + " exceeds the anchor count " +
                              std::to_string(model.anchors.m),
                          static_cast<std::size_t>(model.anchors.m));
  const HypothesisProjector projector = hypothesis_projector(model.design, contrast);
  const Eigen::Index used = std::min(t, model.rank());
  const double stat = trace_statistic(nystrom_kt_matrix(model, used), projector);
  return make_result(stat, projector.d(), used, t, TestMethod::nystrom);
}

TestResult nystrom_test(const AnchorSystem& anchors, const Eigen::MatrixXd& cross, const DesignBundle& design,
                        const ContrastMatrix& contrast, Eigen::Index t) {
  return nystrom_test(nystrom_model(anchors, cross, design), contrast, t);
}

Eigen::Index default_landmark_count(Eigen::Index n) { return std::min(n, std::max<Eigen::Index>(100, n / 10)); }

Eigen::Index default_anchor_count(Eigen::Index q, Eigen::Index landmark_design_rank) {
  return std::max<Eigen::Index>(1, std::min<Eigen::Index>(q - landmark_design_rank, 50));
}

}  // namespace khl
