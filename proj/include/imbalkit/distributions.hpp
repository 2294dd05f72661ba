#pragma once

namespace imbalkit {

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed directly.
double gamma_q(double a, double x);

/// Regularized incomplete beta I_x(a, b), a, b > 0, 0 <= x <= 1.
double beta_inc(double a, double b, double x);

/// Upper tail of the chi-square distribution.
double chi2_sf(double x, double df);
double chi2_cdf(double x, double df);

/// Student t cumulative distribution.
double t_cdf(double t, double df);
/// P(|T| >= |t|).
double t_two_tailed_p(double t, double df);

}  // namespace imbalkit
