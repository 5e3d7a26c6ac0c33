#pragma once

#include <span>
#include <string>
#include <vector>

namespace ipdmeta {

enum class PoolMethod { fixed, random_dl };

// One study-level estimate entering a meta-analysis.
struct TrialEstimate {
  std::string label;
  double estimate = 0.0;
  double se = 0.0;
};

// Inverse-variance pooled effect with heterogeneity statistics and
// per-trial contributions (weight shares sum to 1).
struct PooledResult {
  PoolMethod method = PoolMethod::fixed;
  double estimate = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double q = 0.0;
  double i2 = 0.0;    // proportion in [0,1]
  double tau2 = 0.0;  // 0 for fixed-effect
  struct Contribution {
    std::string label;
    double estimate = 0.0;
    double se = 0.0;
    double weight_share = 0.0;
  };
  std::vector<Contribution> contributions;
};

// Fixed-effect inverse-variance pooling: w_i = 1/se_i^2. Requires at
// least two entries with positive standard errors.
PooledResult pool_fixed(std::span<const TrialEstimate> estimates);

// DerSimonian-Laird random effects: tau2 from the Q moment estimator
// (truncated at zero), then inverse-variance pooling with
// w_i = 1/(se_i^2 + tau2). Homogeneous inputs reproduce pool_fixed.
PooledResult pool_random_dl(std::span<const TrialEstimate> estimates);

struct Heterogeneity {
  double i2 = 0.0;
  double p_value = 1.0;
};

// I2 = max(0, (Q - (k-1))/Q) and the chi-square p-value of Q on k-1 dof.
Heterogeneity heterogeneity(double q, std::size_t k);

// Forest-plot data: one row per trial plus a pooled summary diamond,
// rows ordered by trial label.
struct ForestRow {
  std::string label;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double weight_pct = 0.0;
};

struct ForestData {
  std::vector<ForestRow> rows;
  ForestRow diamond;
};

ForestData forest_data(const PooledResult& pooled);

}  // namespace ipdmeta
