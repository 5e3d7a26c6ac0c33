#pragma once

#include <cstdint>

namespace ipdmeta {

// Scalar distribution functions used for Wald inference and heterogeneity
// tests. Everything here is implemented in-repo (Lanczos log-gamma,
// regularized incomplete gamma via series/continued fraction, adaptive
// Simpson quadrature for the t tail) so results are identical across
// platforms and libm versions.

// ln Γ(x) for x > 0. Lanczos approximation, relative error < 1e-13.
double log_gamma(double x);

// Regularized incomplete gamma functions P(a,x) and Q(a,x) = 1 - P(a,x),
// a > 0, x >= 0. Absolute error well below 1e-10.
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

// Standard normal CDF. Absolute error <= 1e-7 for |x| <= 8 (actual
// accuracy is near machine precision). Satisfies
// normal_cdf(x) + normal_cdf(-x) == 1 exactly by construction.
double normal_cdf(double x);

// Standard normal density.
double normal_pdf(double x);

// Inverse of normal_cdf on (0,1). Bisection plus Newton polish; absolute
// error < 1e-12.
double normal_quantile(double p);

// Upper tail of the chi-square distribution with df >= 1 degrees of
// freedom. Throws ValidationError for df == 0 or x < 0.
double chisq_sf(double x, int df);

// Student t upper tail P(T > x) with dof > 0, computed by adaptive
// Simpson quadrature of the density (absolute error <= 1e-9).
double student_t_sf(double x, double dof);
double student_t_cdf(double x, double dof);

// Inverse of student_t_cdf for p in (0,1).
double student_t_quantile(double p, double dof);

}  // namespace ipdmeta
