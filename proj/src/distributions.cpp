#include "ipdmeta/distributions.hpp"

#include <cmath>
#include <limits>

#include "ipdmeta/errors.hpp"

namespace ipdmeta {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt2 = 1.41421356237309504880;

// Series expansion of P(a,x), converges fast for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

// Modified Lentz continued fraction for Q(a,x), converges for x > a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - log_gamma(a)) * h;
}

template <typename F>
double simpson_recurse(const F& f, double a, double fa, double b, double fb, double m,
                       double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_recurse(f, a, fa, b, fb, m, fm, whole, tol, 60);
}

double t_log_pdf(double u, double dof) {
  return log_gamma(0.5 * (dof + 1.0)) - log_gamma(0.5 * dof) -
         0.5 * std::log(dof * kPi) - 0.5 * (dof + 1.0) * std::log1p(u * u / dof);
}

}  // namespace

double log_gamma(double x) {
  // Lanczos, g = 7, 9 terms.
  static const double coef[9] = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x < 0.5) {
    // Reflection keeps the approximation in its accurate region.
    return std::log(kPi / std::sin(kPi * x)) - log_gamma(1.0 - x);
  }
  x -= 1.0;
  double a = coef[0];
  const double t = x + 7.5;
  for (int i = 1; i < 9; ++i) a += coef[i] / (x + static_cast<double>(i));
  return 0.5 * std::log(2.0 * kPi) + (x + 0.5) * std::log(t) - t + std::log(a);
}

double regularized_gamma_p(double a, double x) {
  if (a <= 0.0) throw ValidationError("regularized_gamma_p: shape must be positive");
  if (x < 0.0) throw ValidationError("regularized_gamma_p: x must be non-negative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double regularized_gamma_q(double a, double x) {
  if (a <= 0.0) throw ValidationError("regularized_gamma_q: shape must be positive");
  if (x < 0.0) throw ValidationError("regularized_gamma_q: x must be non-negative");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double normal_cdf(double x) {
  if (!std::isfinite(x)) {
    if (std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
    return x > 0.0 ? 1.0 : 0.0;
  }
  const double z = std::fabs(x) / kSqrt2;
  // erf(z) = P(1/2, z^2) for z >= 0.
  const double erf_abs = z == 0.0 ? 0.0 : regularized_gamma_p(0.5, z * z);
  const double upper_half = 0.5 * (1.0 + erf_abs);
  return x >= 0.0 ? upper_half : 1.0 - upper_half;
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ValidationError("normal_quantile: p must be in (0,1)");
  }
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 3; ++i) {
    const double d = normal_pdf(x);
    if (d <= 0.0) break;
    x -= (normal_cdf(x) - p) / d;
  }
  return x;
}

double chisq_sf(double x, int df) {
  if (df < 1) throw ValidationError("chisq_sf: degrees of freedom must be >= 1");
  if (x < 0.0) throw ValidationError("chisq_sf: statistic must be non-negative");
  return regularized_gamma_q(0.5 * static_cast<double>(df), 0.5 * x);
}

double student_t_sf(double x, double dof) {
  if (dof <= 0.0) throw ValidationError("student_t_sf: dof must be positive");
  if (std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
  if (x < 0.0) return 1.0 - student_t_sf(-x, dof);
  if (x == 0.0) return 0.5;
  if (std::isinf(x)) return 0.0;
  if (x < 1.0) {
    const auto pdf = [dof](double u) { return std::exp(t_log_pdf(u, dof)); };
    return 0.5 - adaptive_simpson(pdf, 0.0, x, 1e-12);
  }
  // Tail integral with the substitution u = x / v, v in (0,1]. The
  // integrand limit at v = 0 is zero for dof > 1 and the Cauchy tail
  // constant for dof = 1; heavy tails make a finite cutoff unusable.
  const auto tail = [x, dof](double v) {
    if (v <= 0.0) {
      if (dof > 1.0) return 0.0;
      return std::exp(t_log_pdf(0.0, dof) + 0.5 * (dof + 1.0) * std::log(dof) -
                      dof * std::log(x));
    }
    return std::exp(t_log_pdf(x / v, dof) + std::log(x) - 2.0 * std::log(v));
  };
  return adaptive_simpson(tail, 0.0, 1.0, 1e-12);
}

double student_t_cdf(double x, double dof) { return 1.0 - student_t_sf(x, dof); }

double student_t_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ValidationError("student_t_quantile: p must be in (0,1)");
  }
  if (dof <= 0.0) throw ValidationError("student_t_quantile: dof must be positive");
  // Expand the bracket until it straddles p, then bisect. Heavy tails for
  // small dof make a fixed bracket unsafe.
  double hi = 2.0;
  while (student_t_cdf(hi, dof) < p && hi < 1e12) hi *= 2.0;
  double lo = -2.0;
  while (student_t_cdf(lo, dof) > p && lo > -1e12) lo *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (student_t_cdf(mid, dof) < p ? lo : hi) = mid;
    if (hi - lo < 1e-12 * (1.0 + std::fabs(hi))) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace ipdmeta
