#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "ipdmeta/dataset.hpp"
#include "ipdmeta/models.hpp"

namespace ipdmeta {

// Scenario for the built-in five-trial exemplar: two correlated binary
// covariates, a continuous outcome bounded to [outcome_min, outcome_max],
// and a planted interaction structure. Defaults live in
// configs/exemplar_default.cfg and are mirrored by defaults().
struct ExemplarConfig {
  int config_version = 1;
  std::uint64_t seed = 20150;
  std::array<int, 5> trial_sizes{200, 400, 500, 600, 1500};

  // Joint probabilities of (cov1, cov2) cells; the implied correlation
  // must not be positive.
  double p00 = 0.1725, p01 = 0.3275, p10 = 0.3275, p11 = 0.1725;

  std::array<double, 5> trial_intercepts{23.0, 24.0, 25.0, 26.0, 27.0};
  double cov1_main = 2.0;
  double cov2_main = 1.5;
  double treatment_effect = -3.0;      // negative = beneficial
  double cov1_interaction = -3.0;      // the true effect modifier
  double cov2_interaction = 0.0;       // zero: any apparent effect is confounding
  double threeway_interaction = 0.0;
  double noise_sd = 5.0;
  double outcome_min = 0.0;
  double outcome_max = 50.0;

  void validate() const;
  // Correlation between the two binary covariates implied by the joint
  // cell probabilities.
  double implied_correlation() const;

  static ExemplarConfig defaults();
  static ExemplarConfig from_stream(std::istream& in);
  static ExemplarConfig from_file(const std::string& path);
  // Key-value serialization in the config-file format.
  std::string to_key_value() const;

  bool operator==(const ExemplarConfig&) const = default;
};

struct GenerationStats {
  std::size_t rejected_draws = 0;  // out-of-bounds outcomes re-drawn
  std::size_t outcomes = 0;
};

// Deterministic generator: every trial draws from its own substream of
// config.seed, so outputs do not depend on evaluation order. Treatment is
// allocated 1:1 within each trial; outcomes falling outside the bounds are
// re-drawn (rejection) and counted. Throws ValidationError when the
// rejection rate exceeds 5%.
IpdDataset generate_exemplar(const ExemplarConfig& config, GenerationStats* stats = nullptr);

struct ComparisonRow {
  std::string covariate;
  int approach = 0;
  double estimate = 0.0;
  double se = 0.0;
  double p_value = 1.0;
};

// The approach-comparison table: for each covariate, approaches 1-3 with
// the other covariate as the additional one, plus the three-way row. All
// estimates come from two-stage fixed-effect within-trial pooling.
struct ApproachComparison {
  std::vector<ComparisonRow> rows;
};

ApproachComparison compare_approaches(const IpdDataset& dataset, const std::string& first,
                                      const std::string& second);

void write_comparison_csv(const ApproachComparison& comparison, std::ostream& out);
ApproachComparison read_comparison_csv(std::istream& in);

// Aggregation-bias demonstration: a scenario with no within-trial
// interaction but a planted across-trial association between the trial
// mean of the covariate and the trial-level treatment effect. The within
// (deft) estimator stays null while the conflated estimator absorbs the
// across-trial gradient.
struct BiasDemoReport {
  std::uint64_t seed = 0;
  double planted_slope = 0.0;
  // Independent check computed from the construction itself: per-trial
  // treatment effects regressed on trial covariate means.
  double across_trial_slope = 0.0;
  InteractionEstimate within;
  InteractionEstimate conflated;
  bool within_ci_covers_zero = false;
  bool conflated_significant = false;
};

BiasDemoReport aggregation_bias_demo(std::uint64_t seed, double planted_slope = 8.0);

}  // namespace ipdmeta
