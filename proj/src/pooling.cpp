#include "ipdmeta/pooling.hpp"

#include <algorithm>
#include <cmath>

#include "ipdmeta/distributions.hpp"
#include "ipdmeta/errors.hpp"

namespace ipdmeta {

namespace {

void check_inputs(std::span<const TrialEstimate> estimates) {
  if (estimates.size() < 2) {
    throw ValidationError("pooling requires at least 2 estimates, got " +
                          std::to_string(estimates.size()));
  }
  for (const auto& e : estimates) {
    if (!(e.se > 0.0)) {
      throw ValidationError("pooling requires positive standard errors ('" + e.label + "')");
    }
  }
}

// Shared inverse-variance machinery; tau2 = 0 gives the fixed-effect fit.
PooledResult pool_with_tau2(std::span<const TrialEstimate> estimates, double tau2,
                            PoolMethod method, double q_fixed) {
  double sum_w = 0.0, sum_wt = 0.0;
  for (const auto& e : estimates) {
    const double w = 1.0 / (e.se * e.se + tau2);
    sum_w += w;
    sum_wt += w * e.estimate;
  }
  PooledResult out;
  out.method = method;
  out.estimate = sum_wt / sum_w;
  out.se = 1.0 / std::sqrt(sum_w);
  out.tau2 = tau2;
  out.q = q_fixed;
  const auto k = estimates.size();
  out.i2 = q_fixed > 0.0
               ? std::max(0.0, (q_fixed - static_cast<double>(k - 1)) / q_fixed)
               : 0.0;
  static const double q975 = normal_quantile(0.975);
  out.ci_low = out.estimate - q975 * out.se;
  out.ci_high = out.estimate + q975 * out.se;
  out.contributions.reserve(k);
  for (const auto& e : estimates) {
    const double w = 1.0 / (e.se * e.se + tau2);
    out.contributions.push_back({e.label, e.estimate, e.se, w / sum_w});
  }
  return out;
}

double cochran_q(std::span<const TrialEstimate> estimates) {
  // Exactly identical estimates have exactly zero dispersion; the general
  // path would leave rounding dust in Q and break the fixed/random
  // identity on homogeneous inputs.
  bool identical = true;
  for (const auto& e : estimates) identical = identical && e.estimate == estimates[0].estimate;
  if (identical) return 0.0;
  double sum_w = 0.0, sum_wt = 0.0;
  for (const auto& e : estimates) {
    const double w = 1.0 / (e.se * e.se);
    sum_w += w;
    sum_wt += w * e.estimate;
  }
  const double mean = sum_wt / sum_w;
  double q = 0.0;
  for (const auto& e : estimates) {
    const double w = 1.0 / (e.se * e.se);
    q += w * (e.estimate - mean) * (e.estimate - mean);
  }
  return q;
}

}  // namespace

PooledResult pool_fixed(std::span<const TrialEstimate> estimates) {
  check_inputs(estimates);
  return pool_with_tau2(estimates, 0.0, PoolMethod::fixed, cochran_q(estimates));
}

PooledResult pool_random_dl(std::span<const TrialEstimate> estimates) {
  check_inputs(estimates);
  const double q = cochran_q(estimates);
  double sum_w = 0.0, sum_w2 = 0.0;
  for (const auto& e : estimates) {
    const double w = 1.0 / (e.se * e.se);
    sum_w += w;
    sum_w2 += w * w;
  }
  const double c = sum_w - sum_w2 / sum_w;
  const auto k = estimates.size();
  const double tau2 =
      c > 0.0 ? std::max(0.0, (q - static_cast<double>(k - 1)) / c) : 0.0;
  return pool_with_tau2(estimates, tau2, PoolMethod::random_dl, q);
}

Heterogeneity heterogeneity(double q, std::size_t k) {
  if (k < 2) throw ValidationError("heterogeneity requires k >= 2");
  if (q < 0.0) throw ValidationError("heterogeneity requires Q >= 0");
  Heterogeneity h;
  h.i2 = q > 0.0 ? std::max(0.0, (q - static_cast<double>(k - 1)) / q) : 0.0;
  h.p_value = chisq_sf(q, static_cast<int>(k - 1));
  return h;
}

ForestData forest_data(const PooledResult& pooled) {
  static const double q975 = normal_quantile(0.975);
  ForestData f;
  f.rows.reserve(pooled.contributions.size());
  for (const auto& c : pooled.contributions) {
    f.rows.push_back({c.label, c.estimate, c.estimate - q975 * c.se,
                      c.estimate + q975 * c.se, 100.0 * c.weight_share});
  }
  std::sort(f.rows.begin(), f.rows.end(),
            [](const ForestRow& a, const ForestRow& b) { return a.label < b.label; });
  f.diamond = {"pooled", pooled.estimate, pooled.ci_low, pooled.ci_high, 100.0};
  return f;
}

}  // namespace ipdmeta
