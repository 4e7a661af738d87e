#include <doctest.h>

#include <cmath>
#include <functional>

#include <boost/math/special_functions/gamma.hpp>

#include "khl/errors.hpp"
#include "khl/stats.hpp"

using namespace khl;

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
               double whole, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps) return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return simpson(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), 1e-13, 50);
}

}  // namespace

TEST_CASE("chi-square survival examples") {
  for (int k : {1, 2, 3, 10, 57}) CHECK(chi2_sf(0.0, k) == 1.0);
  for (double x : {0.1, 1.0, 2.5, 7.0, 40.0}) CHECK(chi2_sf(x, 2) == doctest::Approx(std::exp(-x / 2.0)).epsilon(1e-15));
  CHECK(std::abs(chi2_sf(3.8415, 1) - 0.05) < 1e-4);
}

TEST_CASE("chi-square survival against numerical integration") {
  // P(chi2_1 <= a) = int_0^sqrt(a) 2 phi(u) du after substituting x = u^2.
  const auto density = [](double u) { return 2.0 * std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI); };
  for (double a : {0.3, 1.0, 3.8415, 9.0}) {
    const double cdf = adaptive_simpson(density, 0.0, std::sqrt(a));
    CHECK(std::abs(chi2_sf(a, 1) - (1.0 - cdf)) < 1e-10);
  }
  // df = 5 density is smooth at the origin.
  const auto d5 = [](double x) { return std::pow(x, 1.5) * std::exp(-x / 2.0) / (std::pow(2.0, 2.5) * std::tgamma(2.5)); };
  for (double a : {0.5, 4.0, 11.07}) CHECK(std::abs(chi2_sf(a, 5) - (1.0 - adaptive_simpson(d5, 0.0, a))) < 1e-10);
}

TEST_CASE("chi-square survival against boost") {
  for (int df : {1, 2, 3, 4, 7, 15, 30, 100, 250}) {
    for (double x : {1e-6, 0.01, 0.5, 1.0, 3.0, 10.0, 25.0, 60.0, 150.0, 400.0}) {
      const double expected = boost::math::gamma_q(df / 2.0, x / 2.0);
      CHECK(std::abs(chi2_sf(x, df) - expected) <= 1e-12);
      CHECK(std::abs(gamma_p(df / 2.0, x / 2.0) - boost::math::gamma_p(df / 2.0, x / 2.0)) <= 1e-12);
    }
  }
}

TEST_CASE("chi-square quantile inverts the survival function") {
  CHECK(chi2_quantile_upper(0.05, 1) == doctest::Approx(3.841458820694124).epsilon(1e-10));
  CHECK(chi2_quantile_upper(0.05, 2) == doctest::Approx(5.991464547107979).epsilon(1e-10));
  for (int df : {1, 3, 10, 50})
    for (double p : {0.5, 0.05, 0.01, 1e-6}) CHECK(chi2_sf(chi2_quantile_upper(p, df), df) == doctest::Approx(p).epsilon(1e-9));
  CHECK_THROWS_AS(chi2_quantile_upper(0.0, 3), InputError);
  CHECK_THROWS_AS(chi2_quantile_upper(1.0, 3), InputError);
}

TEST_CASE("chi-square input validation") {
  CHECK_THROWS_AS(chi2_sf(-1.0, 3), InputError);
  CHECK_THROWS_AS(chi2_sf(1.0, 0), InputError);
  CHECK_THROWS_AS(chi2_sf(std::nan(""), 2), InputError);
}

TEST_CASE("Benjamini-Hochberg adjustment") {
  const std::vector<double> adj = bh_adjust({0.01, 0.02, 0.03, 0.04});
  for (double a : adj) CHECK(a == doctest::Approx(0.04));

  const std::vector<double> same = bh_adjust({0.2, 0.2, 0.2});
  for (double a : same) CHECK(a == doctest::Approx(0.2));

  const std::vector<double> mixed = bh_adjust({0.04, 0.001, 0.9, 0.03});
  CHECK(mixed[1] == doctest::Approx(0.004));
  CHECK(mixed[3] == doctest::Approx(0.04 * 4 / 3));
  CHECK(mixed[0] == doctest::Approx(0.04 * 4 / 3));
  CHECK(mixed[2] == doctest::Approx(0.9));
  CHECK(bh_adjust({0.9, 0.95})[0] == doctest::Approx(0.95));
  for (double a : bh_adjust({0.6, 0.7, 0.8})) CHECK(a <= 1.0);
  CHECK(bh_adjust({}).empty());
  CHECK_THROWS_AS(bh_adjust({1.5}), InputError);
}
