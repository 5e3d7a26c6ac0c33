#pragma once

#include <string>
#include <vector>

#include "ipdmeta/dataset.hpp"
#include "ipdmeta/errors.hpp"
#include "ipdmeta/pooling.hpp"
#include "ipdmeta/regression.hpp"

namespace ipdmeta {

// The four ways of involving additional covariates when estimating a
// treatment-covariate interaction:
//   1 - single interaction, unadjusted
//   2 - single interaction, adjusted for additional main effects
//   3 - multiple interactions (adds treatment x additional-covariate terms)
//   4 - three-way interaction between treatment and two covariates
enum class Approach { single_unadjusted = 1, single_adjusted = 2, multiple = 3, threeway = 4 };

enum class Stage { one, two };

// Whether within- and across-trial information is separated (interaction
// terms use trial-mean-centered covariates) or conflated (raw covariates).
enum class InfoHandling { within, conflated };

struct ModelSpec {
  Approach approach = Approach::single_unadjusted;
  Stage stage = Stage::two;
  std::string effect_modifier;           // z
  std::vector<std::string> additional;   // w; empty for approach 1
  InfoHandling handling = InfoHandling::within;

  // Throws ValidationError on inconsistent combinations: approach 1 with
  // additional covariates, approaches 2-4 without, approach 4 with more
  // than one, conflated handling with a two-stage model.
  void validate() const;
};

struct InteractionEstimate {
  std::string label;
  double gamma = 0.0;
  double se = 0.0;
  WaldSummary wald;
  ModelSpec source;
};

// Coefficient label helpers ("treat", "treat:z", "treat:z:w", "z@trial").
std::string treatment_label();
std::string interaction_label(const std::string& covariate);
std::string threeway_label(const std::string& z, const std::string& w);

struct BuiltDesign {
  DesignMatrix design;
  std::vector<double> outcome;
  std::vector<Warning> warnings;  // dropped (absorbed) main-effect columns
};

// Trial-stratified one-stage design: per-trial intercepts, per-trial main
// effects for the modifier and any additional covariates, one treatment
// column, then the approach's interaction columns. Within handling centers
// every interaction covariate on its trial mean; conflated uses raw
// values. Main-effect columns constant within every trial are absorbed by
// the intercepts and dropped with a warning.
BuiltDesign build_one_stage_design(const IpdDataset& dataset, const ModelSpec& spec);

// Single-trial stage-1 design (uncentered; within one trial centering only
// shifts the treatment coefficient).
BuiltDesign build_trial_design(const IpdDataset& dataset, std::size_t trial,
                               const ModelSpec& spec);

struct OneStageFit {
  FitResult fit;
  InteractionEstimate primary;                 // the approach's coefficient of interest
  std::vector<InteractionEstimate> secondary;  // remaining interaction terms (A3/A4)
  std::vector<Warning> warnings;
};

OneStageFit fit_one_stage(const IpdDataset& dataset, const ModelSpec& spec);

struct TrialFit {
  std::string trial_id;
  FitResult fit;
  struct Interaction {
    std::string label;
    double estimate = 0.0;
    double se = 0.0;
    WaldSummary wald;  // t reference on the trial's residual dof
  };
  std::vector<Interaction> interactions;
};

struct TwoStageFit {
  std::vector<TrialFit> trials;  // trials that produced a full-rank stage-1 fit
  std::vector<Warning> warnings;
  std::string primary_label;
  PooledResult pooled_primary;
  InteractionEstimate primary;  // pooled, normal-reference Wald
  // Remaining interaction terms pooled the same way (A3/A4).
  std::vector<std::pair<std::string, PooledResult>> pooled_secondary;
};

// Stage 1 fits each trial separately; trials without covariate variation
// or with rank-deficient designs are excluded with a warning. Stage 2
// pools the per-trial interaction coefficients by inverse variance.
// Throws ValidationError when fewer than 2 trials are poolable.
TwoStageFit fit_two_stage(const IpdDataset& dataset, const ModelSpec& spec,
                          PoolMethod method = PoolMethod::fixed);

// Traditional subgroup approach: pooled treatment effect per level of a
// binary covariate, compared with a chi-square test of interaction.
struct SubgroupResult {
  struct Level {
    double level = 0.0;
    PooledResult pooled;
    std::size_t n_trials = 0;
  };
  std::vector<Level> levels;
  double q_interaction = 0.0;
  int df = 0;
  double p_value = 1.0;
  std::vector<Warning> warnings;
};

SubgroupResult subgroup_pooled_effects(const IpdDataset& dataset, const std::string& covariate);

}  // namespace ipdmeta
