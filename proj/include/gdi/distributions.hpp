#pragma once

namespace gdi {

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double regularized_gamma_q(double a, double x);
/// Regularized incomplete beta I_x(a, b).
double regularized_beta(double a, double b, double x);

/// Upper tail of chi-squared with `df` degrees of freedom.
double chi_squared_sf(double x, double df);
/// Quantile of chi-squared: the x with P(X <= x) = probability.
double chi_squared_quantile(double probability, double df);

/// Upper tail of F(df1, df2).
double f_sf(double f, double df1, double df2);

}  // namespace gdi
