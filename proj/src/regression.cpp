#include "ipdmeta/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ipdmeta/distributions.hpp"
#include "ipdmeta/errors.hpp"

namespace ipdmeta {

DesignMatrix::DesignMatrix(std::vector<std::string> labels, std::size_t n_rows)
    : labels_(std::move(labels)), n_rows_(n_rows), values_(n_rows * labels_.size(), 0.0) {}

DesignMatrix DesignMatrix::from_columns(std::vector<std::string> labels,
                                        const std::vector<std::vector<double>>& columns) {
  if (labels.size() != columns.size()) {
    throw ValidationError("design matrix: label/column count mismatch");
  }
  for (std::size_t c = 1; c < columns.size(); ++c) {
    if (columns[c].size() != columns[0].size()) {
      throw ValidationError("design matrix: columns have unequal length");
    }
  }
  const std::size_t n = columns.empty() ? 0 : columns[0].size();
  DesignMatrix m(std::move(labels), n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) m.at(r, c) = columns[c][r];
  }
  return m;
}

std::size_t FitResult::index_of(const std::string& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw ValidationError("unknown coefficient label '" + label + "'");
  return static_cast<std::size_t>(it - labels.begin());
}

bool FitResult::has(const std::string& label) const {
  return std::find(labels.begin(), labels.end(), label) != labels.end();
}

double FitResult::coefficient(const std::string& label) const {
  return coefficients[index_of(label)];
}

double FitResult::se(const std::string& label) const {
  const std::size_t i = index_of(label);
  return std::sqrt(vcov[i * labels.size() + i]);
}

FitResult fit_least_squares(const DesignMatrix& design, std::span<const double> y) {
  const std::size_t n = design.n_rows();
  const std::size_t p = design.n_cols();
  if (y.size() != n) throw ValidationError("outcome length does not match design rows");
  if (p == 0) throw ValidationError("design matrix has no columns");
  {
    auto sorted = design.labels();
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ValidationError("design matrix has duplicate column labels");
    }
  }
  if (n <= p) {
    throw NumericError("under-determined system: " + std::to_string(n) + " rows for " +
                       std::to_string(p) + " columns");
  }

  // Working copies: A is factored in place, qty accumulates Q'y.
  std::vector<double> a(design.values());
  std::vector<double> qty(y.begin(), y.end());
  std::vector<std::size_t> perm(p);
  std::iota(perm.begin(), perm.end(), 0);

  const auto col_norm2_below = [&](std::size_t col, std::size_t from) {
    double s = 0.0;
    for (std::size_t r = from; r < n; ++r) s += a[r * p + col] * a[r * p + col];
    return s;
  };

  double largest_pivot = 0.0;
  for (std::size_t k = 0; k < p; ++k) {
    // Greedy column pivoting on remaining norms.
    std::size_t best = k;
    double best_norm = col_norm2_below(k, k);
    for (std::size_t c = k + 1; c < p; ++c) {
      const double nc = col_norm2_below(c, k);
      if (nc > best_norm) {
        best_norm = nc;
        best = c;
      }
    }
    if (best != k) {
      for (std::size_t r = 0; r < n; ++r) std::swap(a[r * p + k], a[r * p + best]);
      std::swap(perm[k], perm[best]);
    }

    const double pivot = std::sqrt(best_norm);
    if (k == 0) largest_pivot = pivot;
    if (pivot < 1e-10 * largest_pivot || pivot == 0.0) {
      throw NumericError("design matrix is rank deficient: column '" +
                         design.labels()[perm[k]] + "' is linearly dependent");
    }

    // Householder reflector for column k, applied to A[:, k..] and Q'y.
    const double alpha = a[k * p + k] >= 0.0 ? -pivot : pivot;
    std::vector<double> v(n - k);
    v[0] = a[k * p + k] - alpha;
    for (std::size_t r = k + 1; r < n; ++r) v[r - k] = a[r * p + k];
    const double vtv = best_norm - 2.0 * alpha * a[k * p + k] + alpha * alpha;
    a[k * p + k] = alpha;
    for (std::size_t r = k + 1; r < n; ++r) a[r * p + k] = 0.0;
    if (vtv > 0.0) {
      for (std::size_t c = k + 1; c < p; ++c) {
        double dot = 0.0;
        for (std::size_t r = k; r < n; ++r) dot += v[r - k] * a[r * p + c];
        const double f = 2.0 * dot / vtv;
        for (std::size_t r = k; r < n; ++r) a[r * p + c] -= f * v[r - k];
      }
      double dot = 0.0;
      for (std::size_t r = k; r < n; ++r) dot += v[r - k] * qty[r];
      const double f = 2.0 * dot / vtv;
      for (std::size_t r = k; r < n; ++r) qty[r] -= f * v[r - k];
    }
  }

  // Back-substitution R beta' = (Q'y)[0..p).
  std::vector<double> beta_p(p, 0.0);
  for (std::size_t k = p; k-- > 0;) {
    double s = qty[k];
    for (std::size_t c = k + 1; c < p; ++c) s -= a[k * p + c] * beta_p[c];
    beta_p[k] = s / a[k * p + k];
  }

  // Residual sum of squares is the tail of Q'y.
  double rss = 0.0;
  for (std::size_t r = p; r < n; ++r) rss += qty[r] * qty[r];

  FitResult fit;
  fit.labels = design.labels();
  fit.n_rows = n;
  fit.dof = static_cast<std::int64_t>(n - p);
  fit.sigma2 = rss / static_cast<double>(fit.dof);
  fit.coefficients.assign(p, 0.0);
  for (std::size_t k = 0; k < p; ++k) fit.coefficients[perm[k]] = beta_p[k];

  // (X'X)^-1 = P R^-1 R^-T P'. Compute R^-1 column by column.
  std::vector<double> rinv(p * p, 0.0);
  for (std::size_t c = 0; c < p; ++c) {
    rinv[c * p + c] = 1.0 / a[c * p + c];
    for (std::size_t k = c; k-- > 0;) {
      double s = 0.0;
      for (std::size_t j = k + 1; j <= c; ++j) s += a[k * p + j] * rinv[j * p + c];
      rinv[k * p + c] = -s / a[k * p + k];
    }
  }
  fit.vcov.assign(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      double s = 0.0;
      for (std::size_t k = std::max(i, j); k < p; ++k) s += rinv[i * p + k] * rinv[j * p + k];
      const double v = fit.sigma2 * s;
      fit.vcov[perm[i] * p + perm[j]] = v;
      fit.vcov[perm[j] * p + perm[i]] = v;
    }
  }
  return fit;
}

WaldSummary wald(const FitResult& fit, const std::string& label, Reference reference) {
  const std::size_t i = fit.index_of(label);
  WaldSummary w;
  w.estimate = fit.coefficients[i];
  w.se = std::sqrt(fit.vcov[i * fit.labels.size() + i]);
  if (!(w.se > 0.0)) {
    throw NumericError("degenerate inference: coefficient '" + label +
                       "' has zero standard error");
  }
  w.statistic = w.estimate / w.se;
  double q975;
  if (reference == Reference::normal) {
    w.p_value = 2.0 * normal_cdf(-std::fabs(w.statistic));
    q975 = normal_quantile(0.975);
  } else {
    if (fit.dof < 1) throw NumericError("degenerate inference: no residual dof for t test");
    const auto dof = static_cast<double>(fit.dof);
    w.p_value = 2.0 * student_t_sf(std::fabs(w.statistic), dof);
    q975 = student_t_quantile(0.975, dof);
  }
  w.p_value = std::min(w.p_value, 1.0);
  w.ci_low = w.estimate - q975 * w.se;
  w.ci_high = w.estimate + q975 * w.se;
  return w;
}

WaldSummary wald_from_estimate(double estimate, double se) {
  if (!(se > 0.0)) throw NumericError("degenerate inference: zero standard error");
  WaldSummary w;
  w.estimate = estimate;
  w.se = se;
  w.statistic = estimate / se;
  w.p_value = std::min(2.0 * normal_cdf(-std::fabs(w.statistic)), 1.0);
  const double q975 = normal_quantile(0.975);
  w.ci_low = estimate - q975 * se;
  w.ci_high = estimate + q975 * se;
  return w;
}

}  // namespace ipdmeta
