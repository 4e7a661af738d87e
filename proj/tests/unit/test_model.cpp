#include <doctest.h>

#include <numeric>

#include "helpers.hpp"
#include "khl/errors.hpp"
#include "khl/model.hpp"
#include "khl/stats.hpp"
#include "oracle.hpp"

using namespace khl;
using namespace khl::testing;

namespace {

struct Instance {
  Eigen::MatrixXd data;
  DesignBundle design;
};

Instance one_way(Eigen::Index n, Eigen::Index u, std::uint64_t seed, double shift = 0.0) {
  Instance inst{random_matrix(n, 3, seed), one_way_design(cyclic_labels(n, u))};
  for (Eigen::Index i = 0; i < n; i += u) inst.data(i, 0) += shift;
  return inst;
}

}  // namespace

TEST_CASE("fit produces an orthonormal descending eigensystem") {
  const Instance inst = one_way(25, 3, 1);
  const FittedModel m = fit(gram(inst.data, KernelSpec::gaussian(1.5)), inst.design);
  CHECK(m.rank() <= m.n() - inst.design.rank());
  const Eigen::MatrixXd& u = m.eigvecs();
  CHECK((u.transpose() * u - Eigen::MatrixXd::Identity(m.rank(), m.rank())).cwiseAbs().maxCoeff() < 1e-8);
  for (Eigen::Index s = 1; s < m.rank(); ++s) CHECK(m.eigvals()(s) <= m.eigvals()(s - 1));
  CHECK(m.eigvals()(m.rank() - 1) > kEigenRetentionTol * m.eigvals()(0));
  for (Eigen::Index s = 0; s < m.rank(); ++s) {
    Eigen::Index arg = 0;
    u.col(s).cwiseAbs().maxCoeff(&arg);
    CHECK(u(arg, s) > 0.0);
  }
  const Eigen::MatrixXd dense = inst.design.p_x_perp() * m.gram().values() * inst.design.p_x_perp() / 25.0;
  CHECK((dense - m.k_e()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(m.k_e() == m.k_e().transpose());
}

TEST_CASE("fit errors") {
  const DesignBundle d = one_way_design({"a", "b", "a", "b"});
  CHECK_THROWS_AS(fit(gram(d.x(), KernelSpec::linear()), d), DegenerateFitError);
  CHECK_THROWS_AS(fit(gram(random_matrix(5, 2, 1), KernelSpec::linear()), d), InputError);
  const DesignBundle exact = one_way_design({"a", "b"});
  CHECK_THROWS_AS(fit(gram(random_matrix(2, 2, 1), KernelSpec::linear()), exact), DegenerateFitError);
}

TEST_CASE("spectrum and K_T agree with the explicit feature space") {
  const Instance inst = one_way(20, 2, 7);
  const FittedModel m = fit(gram(inst.data, KernelSpec::linear()), inst.design);
  const oracle::ExplicitModel em = oracle::explicit_model(inst.data, inst.design.x());
  REQUIRE(m.rank() == em.rank());
  CHECK(rel_diff(Eigen::MatrixXd(m.eigvals()), Eigen::MatrixXd(em.eigvals)) < 1e-8);

  const Eigen::MatrixXd kt = kt_matrix(m, m.rank());
  const Eigen::MatrixXd expected =
      em.eigvals.cwiseSqrt().cwiseInverse().asDiagonal() * em.eigvecs.transpose() * inst.data.transpose();
  CHECK(rel_diff(kt, expected) < 1e-8);
  CHECK_THROWS_AS(kt_matrix(m, m.rank() + 1), TruncationError);
  CHECK_THROWS_AS(kt_matrix(m, 0), TruncationError);
}

TEST_CASE("K_T restricted to residual directions") {
  // K_T P^perp K_T' = Lambda^{-1}: the rows are lambda^{-1/2} f_s evaluated on residuals.
  const Instance inst = one_way(20, 2, 3);
  const FittedModel m = fit(gram(inst.data, KernelSpec::gaussian(1.0)), inst.design);
  const Eigen::Index t = std::min<Eigen::Index>(5, m.rank());
  const Eigen::MatrixXd kt = kt_matrix(m, t);
  const Eigen::MatrixXd lhs = kt * inst.design.residualize(kt.transpose()) / 20.0;
  const Eigen::MatrixXd rhs = Eigen::MatrixXd::Identity(t, t);
  CHECK(rel_diff(lhs, rhs) < 1e-8);
}

TEST_CASE("statistic matches the oracle and the classical MANOVA trace") {
  const Instance inst = one_way(30, 3, 11, 0.7);
  const FittedModel m = fit(gram(inst.data, KernelSpec::linear()), inst.design);
  const ContrastMatrix l = factor_contrast(inst.design, "factor");
  const oracle::ExplicitModel em = oracle::explicit_model(inst.data, inst.design.x());
  const TestResult r = tkhl_test(m, l, 2);
  CHECK(r.df == 4);
  CHECK(rel_diff(r.statistic, oracle::oracle_statistic(em, l.matrix(), 2)) < 1e-8);
  CHECK(r.p_value == doctest::Approx(chi2_sf(r.statistic, r.df)));

  // With T = rank the statistic is n tr(E'E^{-1} H) of the textbook MANOVA.
  const TestResult full = tkhl_test(m, l, m.rank());
  const Eigen::MatrixXd resid = inst.design.residualize(inst.data);
  // Between-group SSCP from group means.
  const Eigen::RowVectorXd grand = inst.data.colwise().mean();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, 3);
  for (Eigen::Index g = 0; g < 3; ++g) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(3);
    for (Eigen::Index i = g; i < 30; i += 3) mean += inst.data.row(i);
    mean /= 10.0;
    h += 10.0 * (mean - grand).transpose() * (mean - grand);
  }
  const Eigen::MatrixXd e = resid.transpose() * resid;
  CHECK(rel_diff(full.statistic, 30.0 * (e.inverse() * h).trace()) < 1e-8);
}

TEST_CASE("duplicated groups give a zero statistic") {
  const Eigen::MatrixXd half = random_matrix(6, 2, 5);
  Eigen::MatrixXd data(12, 2);
  data << half, half;
  std::vector<std::string> labels(12, "a");
  for (int i = 6; i < 12; ++i) labels[i] = "b";
  const DesignBundle d = one_way_design(labels);
  const FittedModel m = fit(gram(data, KernelSpec::gaussian(1.0)), d);
  const TestResult r = tkhl_test(m, factor_contrast(d, "factor"), m.rank());
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == 1.0);
  CHECK(std::isfinite(kt_matrix(m, m.rank()).sum()));
}

TEST_CASE("truncation bookkeeping") {
  const Instance inst = one_way(12, 2, 2);
  const FittedModel m = fit(gram(inst.data, KernelSpec::linear()), inst.design);
  const ContrastMatrix l = factor_contrast(inst.design, "factor");
  const TestResult r = tkhl_test(m, l, 2);
  CHECK(r.df == 2);
  CHECK_FALSE(r.truncation_capped);
  const TestResult capped = tkhl_test(m, l, 50);
  CHECK(capped.truncation_capped);
  CHECK(capped.truncation == m.rank());
  CHECK(capped.requested_truncation == 50);
  CHECK(capped.df == m.rank());
  CHECK_THROWS_AS(tkhl_test(m, l, 0), InputError);

  const FittedModel g = fit(gram(random_matrix(40, 3, 8), KernelSpec::gaussian(1.0)), one_way_design(cyclic_labels(40, 2)));
  CHECK(tkhl_test(g, factor_contrast(g.design(), "factor"), 5).df == 5);
}

TEST_CASE("statistic invariances") {
  const Instance inst = one_way(24, 3, 21, 0.5);
  const KernelSpec spec = KernelSpec::gaussian(1.2);
  const GramMatrix k = gram(inst.data, spec);
  const FittedModel m = fit(k, inst.design);
  const ContrastMatrix l = factor_contrast(inst.design, "factor");

  std::vector<Eigen::Index> perm(24);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::mt19937_64 rng(4);
  std::shuffle(perm.begin(), perm.end(), rng);
  const Eigen::MatrixXd permuted = inst.data(perm, Eigen::all);
  const FittedModel mp = fit(gram(permuted, spec), inst.design.subset(perm));

  const FittedModel scaled = fit(k.scaled(3.5), inst.design);
  double previous = -1.0;
  for (Eigen::Index t = 1; t <= 8; ++t) {
    const double s = tkhl_test(m, l, t).statistic;
    CHECK(s >= 0.0);
    CHECK(s >= previous - 1e-10);
    previous = s;
    CHECK(rel_diff(s, tkhl_test(mp, l, t).statistic) < 1e-8);
    CHECK(rel_diff(s, tkhl_test(scaled, l, t).statistic) < 1e-8);
  }
  for (Eigen::Index s = 0; s < m.rank(); ++s) CHECK(scaled.eigvals()(s) == doctest::Approx(3.5 * m.eigvals()(s)));
}

TEST_CASE("partial eigensolver agrees with the full fit") {
  const Instance inst = one_way(60, 2, 31, 0.3);
  const GramMatrix k = gram(inst.data, KernelSpec::gaussian(1.0));
  const FittedModel full = fit(k, inst.design);
  const FittedModel part = fit(k, inst.design, FitOptions{5});
  REQUIRE(part.rank() == 5);
  const ContrastMatrix l = factor_contrast(inst.design, "factor");
  for (Eigen::Index t = 1; t <= 5; ++t)
    CHECK(rel_diff(tkhl_test(full, l, t).statistic, tkhl_test(part, l, t).statistic) < 1e-9);
  CHECK(rel_diff(Eigen::MatrixXd(full.eigvecs().leftCols(5)), Eigen::MatrixXd(part.eigvecs())) < 1e-8);
}

TEST_CASE("pairwise tests") {
  const Instance inst = one_way(40, 4, 13, 1.0);
  const FittedModel m = fit(gram(inst.data, KernelSpec::gaussian(1.5)), inst.design);
  const std::vector<PairwiseResult> pairs = pairwise_tests(m, "factor", 3);
  REQUIRE(pairs.size() == 6);
  std::vector<double> raw;
  for (const PairwiseResult& p : pairs) {
    raw.push_back(p.result.p_value);
    CHECK(p.index_a < p.index_b);
    CHECK(p.result.df == 3);
    CHECK(p.adjusted_p >= p.result.p_value);
    CHECK(p.adjusted_p <= 1.0);
  }
  const std::vector<double> adj = bh_adjust(raw);
  for (std::size_t k = 0; k < pairs.size(); ++k) CHECK(pairs[k].adjusted_p == adj[k]);
  CHECK(pairs[0].level_a == "L0");
  CHECK(pairs[0].level_b == "L1");
  CHECK_THROWS_AS(pairwise_tests(m, "nope", 3), InputError);
}
