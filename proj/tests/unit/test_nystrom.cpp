#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "helpers.hpp"
#include "khl/errors.hpp"
#include "khl/nystrom.hpp"
#include "oracle.hpp"

using namespace khl;
using namespace khl::testing;

namespace {

std::vector<Eigen::Index> all_indices(Eigen::Index n) {
  std::vector<Eigen::Index> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), Eigen::Index{0});
  return v;
}

}  // namespace

TEST_CASE("landmark sampling") {
  const LandmarkPlan all = sample_landmarks(10, 10, nullptr, LandmarkStrategy::uniform, 3);
  CHECK(all.indices == all_indices(10));

  const LandmarkPlan a = sample_landmarks(100, 17, nullptr, LandmarkStrategy::uniform, 42);
  const LandmarkPlan b = sample_landmarks(100, 17, nullptr, LandmarkStrategy::uniform, 42);
  CHECK(a.indices == b.indices);
  CHECK(a.indices.size() == 17);
  CHECK(std::is_sorted(a.indices.begin(), a.indices.end()));
  CHECK(std::adjacent_find(a.indices.begin(), a.indices.end()) == a.indices.end());
  CHECK(a.indices.back() < 100);
  CHECK(sample_landmarks(100, 17, nullptr, LandmarkStrategy::uniform, 43).indices != a.indices);

  std::vector<Eigen::Index> groups(100, 0);
  for (int i = 90; i < 100; ++i) groups[i] = 1;
  const LandmarkPlan s = sample_landmarks(100, 10, &groups, LandmarkStrategy::stratified, 1);
  const auto second = std::count_if(s.indices.begin(), s.indices.end(), [](Eigen::Index i) { return i >= 90; });
  CHECK(second == 1);

  const std::vector<double> weights{1.0, 1.0};
  const LandmarkPlan w = sample_landmarks(100, 10, &groups, LandmarkStrategy::stratified, 1, &weights);
  CHECK(std::count_if(w.indices.begin(), w.indices.end(), [](Eigen::Index i) { return i >= 90; }) == 5);

  CHECK_THROWS_AS(sample_landmarks(10, 1, nullptr, LandmarkStrategy::uniform, 0), InputError);
  CHECK_THROWS_AS(sample_landmarks(10, 11, nullptr, LandmarkStrategy::uniform, 0), InputError);
  CHECK_THROWS_AS(sample_landmarks(10, 4, nullptr, LandmarkStrategy::stratified, 0), InputError);
  CHECK(parse_landmark_strategy("stratified") == LandmarkStrategy::stratified);
  CHECK_THROWS_AS(parse_landmark_strategy("leverage"), InputError);
}

TEST_CASE("landmark residual gram") {
  const Eigen::MatrixXd data = random_matrix(20, 3, 1);
  const DesignBundle design = one_way_design(cyclic_labels(20, 2));
  const GramMatrix k = gram(data, KernelSpec::gaussian(1.0));
  const FittedModel m = fit(k, design);
  CHECK((landmark_residual_gram(k, design) - m.k_e()).cwiseAbs().maxCoeff() < 1e-14);

  // Landmarks from a single group: within-group centering.
  const std::vector<Eigen::Index> idx{0, 2, 4, 6, 8};
  const GramMatrix kz = k.submatrix(idx);
  const Eigen::MatrixXd centering = Eigen::MatrixXd::Identity(5, 5) - Eigen::MatrixXd::Constant(5, 5, 0.2);
  const Eigen::MatrixXd expected = centering * kz.values() * centering / 5.0;
  const DesignBundle sub = design.subset(idx);
  const Eigen::MatrixXd kez = landmark_residual_gram(kz, sub);
  CHECK((kez - expected).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kez);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("anchors") {
  const Eigen::MatrixXd data = random_matrix(20, 2, 2);
  const DesignBundle design = one_way_design(cyclic_labels(20, 2));
  const GramMatrix k = gram(data, KernelSpec::linear());
  const Eigen::MatrixXd kez = landmark_residual_gram(k, design);

  const AnchorSystem one = build_anchors(kez, 1, design);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kez);
  CHECK(one.lambda_z(0) == doctest::Approx(es.eigenvalues()(19)));
  CHECK(std::abs(std::abs(one.u_z.col(0).dot(es.eigenvectors().col(19))) - 1.0) < 1e-10);

  // Linear kernel in R^2: residual rank 2.
  try {
    build_anchors(kez, 20, design);
    FAIL("expected an anchor rank error");
  } catch (const AnchorRankError& e) {
    CHECK(e.achievable() == 2);
  }

  const Eigen::MatrixXd g = gram(random_matrix(20, 3, 5), KernelSpec::gaussian(1.0)).values();
  const Eigen::MatrixXd kg = landmark_residual_gram(GramMatrix(g), design);
  const AnchorSystem anchors = build_anchors(kg, 6, design);
  const Eigen::MatrixXd u = anchors.u_z;
  CHECK((u.transpose() * u - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-8);
  const Eigen::MatrixXd scale = anchors.lambda_z.cwiseSqrt().cwiseInverse().asDiagonal();
  const Eigen::MatrixXd dual = scale * u.transpose() * (20.0 * kg) * u * scale / 20.0;
  CHECK((dual - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("nystrom statistic equals the exact one without compression") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Eigen::MatrixXd data = random_matrix(30, 3, seed, 0.0);
    const DesignBundle design = one_way_design(cyclic_labels(30, 3));
    const GramMatrix k = gram(data, KernelSpec::gaussian(1.3));
    const FittedModel m = fit(k, design);
    const ContrastMatrix l = factor_contrast(design, "factor");
    const LandmarkPlan plan = sample_landmarks(30, 30, nullptr, LandmarkStrategy::uniform, seed);
    const NystromModel ny = nystrom_fit(plan, k.submatrix(plan.indices), k.rows(plan.indices), design, m.rank());
    CHECK(rel_diff(Eigen::MatrixXd(ny.eigvals), Eigen::MatrixXd(m.eigvals())) < 1e-8);
    for (Eigen::Index t : {1, 3, 7}) {
      const TestResult exact = tkhl_test(m, l, t);
      const TestResult approx = nystrom_test(ny, l, t);
      CHECK(approx.method == TestMethod::nystrom);
      CHECK(approx.df == exact.df);
      CHECK(rel_diff(approx.statistic, exact.statistic) < 1e-8);
    }
  }
}

TEST_CASE("nystrom gram and statistic against the explicit feature space") {
  const Eigen::MatrixXd data = random_matrix(40, 10, 3);
  const DesignBundle design = one_way_design(cyclic_labels(40, 2));
  const GramMatrix k = gram(data, KernelSpec::linear());
  const ContrastMatrix l = factor_contrast(design, "factor");
  const oracle::ExplicitModel em = oracle::explicit_model(data, design.x());
  const LandmarkPlan plan = sample_landmarks(40, 20, nullptr, LandmarkStrategy::uniform, 9);

  const NystromModel five = nystrom_fit(plan, k.submatrix(plan.indices), k.rows(plan.indices), design, 5);
  const Eigen::VectorXd spectrum = oracle::oracle_nystrom_spectrum(em, plan.indices, 5);
  CHECK(rel_diff(Eigen::MatrixXd(five.eigvals), Eigen::MatrixXd(spectrum.head(five.rank()))) < 1e-8);
  CHECK(five.k_e_a == five.k_e_a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(five.k_e_a);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);

  const NystromModel eight = nystrom_fit(plan, k.submatrix(plan.indices), k.rows(plan.indices), design, 8);
  const TestResult r = nystrom_test(eight, l, 3);
  CHECK(rel_diff(r.statistic, oracle::oracle_nystrom_statistic(em, plan.indices, 8, l.matrix(), 3)) < 1e-8);
  CHECK_THROWS_AS(nystrom_test(eight, l, 9), TruncationError);
}

TEST_CASE("nystrom statistic on duplicated groups, permutations and determinism") {
  const Eigen::MatrixXd half = random_matrix(10, 2, 4);
  Eigen::MatrixXd data(20, 2);
  data << half, half;
  std::vector<std::string> labels(20, "a");
  for (int i = 10; i < 20; ++i) labels[i] = "b";
  const DesignBundle design = one_way_design(labels);
  const GramMatrix k = gram(data, KernelSpec::gaussian(1.0));
  const LandmarkPlan plan = sample_landmarks(20, 12, nullptr, LandmarkStrategy::uniform, 5);
  const NystromModel ny = nystrom_fit(plan, k.submatrix(plan.indices), k.rows(plan.indices), design, 4);
  const TestResult zero = nystrom_test(ny, factor_contrast(design, "factor"), 3);
  CHECK(zero.statistic == 0.0);
  CHECK(zero.p_value == 1.0);

  const Eigen::MatrixXd d2 = random_matrix(30, 3, 8, 0.0);
  const DesignBundle des = one_way_design(cyclic_labels(30, 3));
  const GramMatrix k2 = gram(d2, KernelSpec::gaussian(1.0));
  const ContrastMatrix l = factor_contrast(des, "factor");
  const LandmarkPlan p2 = sample_landmarks(30, 15, nullptr, LandmarkStrategy::uniform, 6);
  const double s1 = nystrom_test(nystrom_fit(p2, k2.submatrix(p2.indices), k2.rows(p2.indices), des, 6), l, 4).statistic;
  const double s2 = nystrom_test(nystrom_fit(p2, k2.submatrix(p2.indices), k2.rows(p2.indices), des, 6), l, 4).statistic;
  CHECK(s1 == s2);
  CHECK(s1 >= 0.0);

  // Relabel observations: the same landmarks (as observations) give the same statistic.
  std::vector<Eigen::Index> perm(30);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::reverse(perm.begin(), perm.end());
  std::vector<Eigen::Index> inverse(30);
  for (Eigen::Index i = 0; i < 30; ++i) inverse[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i;
  const GramMatrix kp = gram(d2(perm, Eigen::all), KernelSpec::gaussian(1.0));
  const DesignBundle dp = des.subset(perm);
  LandmarkPlan pp = p2;
  for (Eigen::Index& i : pp.indices) i = inverse[static_cast<std::size_t>(i)];
  std::sort(pp.indices.begin(), pp.indices.end());
  const double s3 = nystrom_test(nystrom_fit(pp, kp.submatrix(pp.indices), kp.rows(pp.indices), dp, 6), l, 4).statistic;
  CHECK(rel_diff(s1, s3) < 1e-8);
}

TEST_CASE("lost levels are reported") {
  const Eigen::MatrixXd data = random_matrix(12, 2, 1);
  const DesignBundle design = one_way_design(cyclic_labels(12, 3));
  const GramMatrix k = gram(data, KernelSpec::gaussian(1.0));
  LandmarkPlan plan;
  plan.indices = {0, 1, 3, 4, 6, 7};  // level L2 never sampled
  plan.q = 6;
  const NystromModel ny = nystrom_fit(plan, k.submatrix(plan.indices), k.rows(plan.indices), design, 3);
  CHECK(ny.anchors.lost_columns == std::vector<Eigen::Index>{2});
  CHECK(nystrom_test(ny, factor_contrast(design, "factor"), 2).statistic >= 0.0);
}

TEST_CASE("default sizes") {
  CHECK(default_landmark_count(50) == 50);
  CHECK(default_landmark_count(500) == 100);
  CHECK(default_landmark_count(5000) == 500);
  CHECK(default_anchor_count(100, 2) == 50);
  CHECK(default_anchor_count(20, 2) == 18);
  CHECK(default_anchor_count(2, 2) == 1);
}
