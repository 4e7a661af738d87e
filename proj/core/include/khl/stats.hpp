#pragma once

#include <vector>

namespace khl {

/// Upper tail P(X > x) of the chi-square distribution with `df` degrees of
/// freedom, through the regularized upper incomplete gamma Q(df/2, x/2).
/// Throws InputError for x < 0, non-finite x, or df < 1.
double chi2_sf(double x, int df);

/// Value x with chi2_sf(x, df) = p, for p in (0, 1).
double chi2_quantile_upper(double p, int df);

/// Regularized lower incomplete gamma P(a, x) and upper Q(a, x), a > 0, x >= 0.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

/// Benjamini-Hochberg step-up adjustment: adj_(i) = min_{j >= i} p_(j) m / j,
/// capped at 1, returned in the input order.
std::vector<double> bh_adjust(const std::vector<double>& p_values);

}  // namespace khl
