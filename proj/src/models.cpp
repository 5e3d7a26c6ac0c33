#include "ipdmeta/models.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ipdmeta/distributions.hpp"

namespace ipdmeta {

namespace {

bool needs_additional(Approach a) { return a != Approach::single_unadjusted; }

bool is_constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

// True when the covariate takes a single value inside every trial (its
// per-trial main-effect columns are multiples of the trial intercepts).
bool constant_within_all_trials(const IpdDataset& ds, std::size_t cov) {
  for (std::size_t t = 0; t < ds.n_trials(); ++t) {
    const auto& rows = ds.trial_rows(t);
    const double first = ds.records()[rows.front()].covariates[cov];
    for (std::size_t i : rows) {
      if (ds.records()[i].covariates[cov] != first) return false;
    }
  }
  return true;
}

std::vector<double> covariate_column(const IpdDataset& ds, std::size_t cov) {
  std::vector<double> v;
  v.reserve(ds.n_rows());
  for (const auto& r : ds.records()) v.push_back(r.covariates[cov]);
  return v;
}

std::vector<double> treatment_column(const IpdDataset& ds) {
  std::vector<double> v;
  v.reserve(ds.n_rows());
  for (const auto& r : ds.records()) v.push_back(static_cast<double>(r.treatment));
  return v;
}

void require_nonzero(const std::vector<double>& col, const std::string& label) {
  if (is_constant(col) && col.front() == 0.0) {
    throw ValidationError("interaction column '" + label +
                          "' is identically zero (covariate is constant within every trial)");
  }
}

InteractionEstimate make_estimate(const FitResult& fit, const std::string& label,
                                  Reference ref, const ModelSpec& spec) {
  InteractionEstimate e;
  e.label = label;
  e.wald = wald(fit, label, ref);
  e.gamma = e.wald.estimate;
  e.se = e.wald.se;
  e.source = spec;
  return e;
}

}  // namespace

void ModelSpec::validate() const {
  if (effect_modifier.empty()) throw ValidationError("model spec: effect modifier is required");
  const auto a = approach;
  if (a == Approach::single_unadjusted && !additional.empty()) {
    throw ValidationError("approach 1 does not take additional covariates");
  }
  if (needs_additional(a) && additional.empty()) {
    throw ValidationError("approaches 2-4 require at least one additional covariate");
  }
  if (a == Approach::threeway && additional.size() != 1) {
    throw ValidationError("approach 4 takes exactly one additional covariate");
  }
  std::set<std::string> seen{effect_modifier};
  for (const auto& w : additional) {
    if (!seen.insert(w).second) {
      throw ValidationError("covariate '" + w + "' appears more than once in the model");
    }
  }
  if (handling == InfoHandling::conflated && stage == Stage::two) {
    throw ValidationError(
        "conflated handling applies to one-stage models only; the two-stage "
        "estimator is within-trial by construction");
  }
}

std::string treatment_label() { return "treat"; }

std::string interaction_label(const std::string& covariate) { return "treat:" + covariate; }

std::string threeway_label(const std::string& z, const std::string& w) {
  return "treat:" + z + ":" + w;
}

BuiltDesign build_one_stage_design(const IpdDataset& dataset, const ModelSpec& spec) {
  spec.validate();
  dataset.require_meta_analytic();

  const std::size_t n = dataset.n_rows();
  const std::size_t z_idx = dataset.covariate_index(spec.effect_modifier);
  std::vector<std::size_t> w_idx;
  for (const auto& w : spec.additional) w_idx.push_back(dataset.covariate_index(w));

  std::vector<std::string> labels;
  std::vector<std::vector<double>> columns;
  BuiltDesign out;

  // Per-trial membership indicators double as intercept columns.
  std::vector<std::vector<double>> trial_indicator(dataset.n_trials(),
                                                   std::vector<double>(n, 0.0));
  for (std::size_t t = 0; t < dataset.n_trials(); ++t) {
    for (std::size_t i : dataset.trial_rows(t)) trial_indicator[t][i] = 1.0;
    labels.push_back("intercept@" + dataset.trial_ids()[t]);
    columns.push_back(trial_indicator[t]);
  }

  // Per-trial main effects; covariates constant inside every trial are
  // absorbed by the intercepts and dropped.
  const auto add_main_block = [&](const std::string& name, std::size_t cov) {
    if (constant_within_all_trials(dataset, cov)) {
      out.warnings.push_back({"COLUMN_DROPPED",
                              "main-effect columns for '" + name +
                                  "' are constant within every trial and were absorbed "
                                  "by the trial intercepts"});
      return;
    }
    const auto values = covariate_column(dataset, cov);
    for (std::size_t t = 0; t < dataset.n_trials(); ++t) {
      std::vector<double> col(n, 0.0);
      for (std::size_t i : dataset.trial_rows(t)) col[i] = values[i];
      labels.push_back(name + "@" + dataset.trial_ids()[t]);
      columns.push_back(std::move(col));
    }
  };
  add_main_block(spec.effect_modifier, z_idx);
  for (std::size_t k = 0; k < w_idx.size(); ++k) add_main_block(spec.additional[k], w_idx[k]);

  const auto treat = treatment_column(dataset);
  labels.push_back(treatment_label());
  columns.push_back(treat);

  // Interaction covariate values: trial-mean centered under within
  // handling, raw under conflated.
  const auto interaction_values = [&](const std::string& name) {
    if (spec.handling == InfoHandling::within) {
      return center_within_trial(dataset, name).values;
    }
    return covariate_column(dataset, dataset.covariate_index(name));
  };

  const auto z_int = interaction_values(spec.effect_modifier);
  {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = treat[i] * z_int[i];
    const auto label = interaction_label(spec.effect_modifier);
    require_nonzero(col, label);
    labels.push_back(label);
    columns.push_back(std::move(col));
  }

  if (spec.approach == Approach::multiple || spec.approach == Approach::threeway) {
    for (const auto& w : spec.additional) {
      const auto w_int = interaction_values(w);
      std::vector<double> col(n);
      for (std::size_t i = 0; i < n; ++i) col[i] = treat[i] * w_int[i];
      const auto label = interaction_label(w);
      require_nonzero(col, label);
      labels.push_back(label);
      columns.push_back(std::move(col));
    }
  }
  if (spec.approach == Approach::threeway) {
    const auto w_int = interaction_values(spec.additional.front());
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = treat[i] * z_int[i] * w_int[i];
    const auto label = threeway_label(spec.effect_modifier, spec.additional.front());
    require_nonzero(col, label);
    labels.push_back(label);
    columns.push_back(std::move(col));
  }

  out.design = DesignMatrix::from_columns(std::move(labels), columns);
  out.outcome.reserve(n);
  for (const auto& r : dataset.records()) out.outcome.push_back(r.outcome);
  return out;
}

BuiltDesign build_trial_design(const IpdDataset& dataset, std::size_t trial,
                               const ModelSpec& spec) {
  spec.validate();
  const auto& rows = dataset.trial_rows(trial);
  const std::size_t m = rows.size();
  const std::size_t z_idx = dataset.covariate_index(spec.effect_modifier);

  const auto values_of = [&](std::size_t cov) {
    std::vector<double> v;
    v.reserve(m);
    for (std::size_t i : rows) v.push_back(dataset.records()[i].covariates[cov]);
    return v;
  };

  std::vector<std::string> labels;
  std::vector<std::vector<double>> columns;
  BuiltDesign out;

  labels.emplace_back("intercept");
  columns.emplace_back(m, 1.0);

  const auto z = values_of(z_idx);
  if (is_constant(z)) {
    throw ValidationError("covariate '" + spec.effect_modifier + "' has no variation in trial '" +
                          dataset.trial_ids()[trial] + "'");
  }
  labels.push_back(spec.effect_modifier);
  columns.push_back(z);

  std::vector<std::vector<double>> w_values;
  for (const auto& w : spec.additional) {
    auto v = values_of(dataset.covariate_index(w));
    if (is_constant(v)) {
      out.warnings.push_back({"COLUMN_DROPPED",
                              "covariate '" + w + "' is constant in trial '" +
                                  dataset.trial_ids()[trial] + "'; its main effect was absorbed "
                                  "by the intercept"});
      if (spec.approach == Approach::multiple || spec.approach == Approach::threeway) {
        throw ValidationError("covariate '" + w + "' has no variation in trial '" +
                              dataset.trial_ids()[trial] + "', so its interaction cannot be "
                              "estimated");
      }
      w_values.emplace_back();  // keep positions aligned
      continue;
    }
    labels.push_back(w);
    columns.push_back(v);
    w_values.push_back(std::move(v));
  }

  std::vector<double> treat;
  treat.reserve(m);
  for (std::size_t i : rows) treat.push_back(static_cast<double>(dataset.records()[i].treatment));
  if (is_constant(treat)) {
    throw ValidationError("trial '" + dataset.trial_ids()[trial] +
                          "' does not have both treated and control participants");
  }
  labels.push_back(treatment_label());
  columns.push_back(treat);

  {
    std::vector<double> col(m);
    for (std::size_t i = 0; i < m; ++i) col[i] = treat[i] * z[i];
    labels.push_back(interaction_label(spec.effect_modifier));
    columns.push_back(std::move(col));
  }
  if (spec.approach == Approach::multiple || spec.approach == Approach::threeway) {
    for (std::size_t k = 0; k < spec.additional.size(); ++k) {
      std::vector<double> col(m);
      for (std::size_t i = 0; i < m; ++i) col[i] = treat[i] * w_values[k][i];
      labels.push_back(interaction_label(spec.additional[k]));
      columns.push_back(std::move(col));
    }
  }
  if (spec.approach == Approach::threeway) {
    std::vector<double> col(m);
    for (std::size_t i = 0; i < m; ++i) col[i] = treat[i] * z[i] * w_values[0][i];
    labels.push_back(threeway_label(spec.effect_modifier, spec.additional.front()));
    columns.push_back(std::move(col));
  }

  out.design = DesignMatrix::from_columns(std::move(labels), columns);
  out.outcome.reserve(m);
  for (std::size_t i : rows) out.outcome.push_back(dataset.records()[i].outcome);
  return out;
}

namespace {

// Interaction labels of interest for a spec; the first entry is the
// approach's bolded coefficient.
std::vector<std::string> interaction_labels(const ModelSpec& spec) {
  std::vector<std::string> labels;
  switch (spec.approach) {
    case Approach::single_unadjusted:
    case Approach::single_adjusted:
      labels.push_back(interaction_label(spec.effect_modifier));
      break;
    case Approach::multiple:
      labels.push_back(interaction_label(spec.effect_modifier));
      for (const auto& w : spec.additional) labels.push_back(interaction_label(w));
      break;
    case Approach::threeway:
      labels.push_back(threeway_label(spec.effect_modifier, spec.additional.front()));
      labels.push_back(interaction_label(spec.effect_modifier));
      labels.push_back(interaction_label(spec.additional.front()));
      break;
  }
  return labels;
}

}  // namespace

OneStageFit fit_one_stage(const IpdDataset& dataset, const ModelSpec& spec) {
  if (spec.stage != Stage::one) {
    throw ValidationError("fit_one_stage requires a one-stage model spec");
  }
  auto built = build_one_stage_design(dataset, spec);
  OneStageFit out;
  out.warnings = built.warnings;
  out.fit = fit_least_squares(built.design, built.outcome);
  const auto labels = interaction_labels(spec);
  out.primary = make_estimate(out.fit, labels.front(), Reference::normal, spec);
  for (std::size_t i = 1; i < labels.size(); ++i) {
    out.secondary.push_back(make_estimate(out.fit, labels[i], Reference::normal, spec));
  }
  return out;
}

TwoStageFit fit_two_stage(const IpdDataset& dataset, const ModelSpec& spec,
                          PoolMethod method) {
  if (spec.stage != Stage::two) {
    throw ValidationError("fit_two_stage requires a two-stage model spec");
  }
  spec.validate();
  dataset.require_meta_analytic();
  // Resolve covariates up front so an unknown name fails fast instead of
  // excluding every trial.
  dataset.covariate_index(spec.effect_modifier);
  for (const auto& w : spec.additional) dataset.covariate_index(w);

  const auto labels = interaction_labels(spec);
  TwoStageFit out;
  out.primary_label = labels.front();

  for (std::size_t t = 0; t < dataset.n_trials(); ++t) {
    const auto& trial_id = dataset.trial_ids()[t];
    try {
      auto built = build_trial_design(dataset, t, spec);
      TrialFit tf;
      tf.trial_id = trial_id;
      tf.fit = fit_least_squares(built.design, built.outcome);
      for (const auto& label : labels) {
        TrialFit::Interaction in;
        in.label = label;
        in.wald = wald(tf.fit, label, Reference::student_t);
        in.estimate = in.wald.estimate;
        in.se = in.wald.se;
        tf.interactions.push_back(std::move(in));
      }
      for (const auto& w : built.warnings) out.warnings.push_back(w);
      out.trials.push_back(std::move(tf));
    } catch (const ValidationError& err) {
      out.warnings.push_back({"TRIAL_EXCLUDED", "trial '" + trial_id + "' excluded: " + err.what()});
    } catch (const NumericError& err) {
      out.warnings.push_back({"TRIAL_EXCLUDED", "trial '" + trial_id + "' excluded: " + err.what()});
    }
  }

  if (out.trials.size() < 2) {
    throw ValidationError("fewer than 2 poolable trials (" + std::to_string(out.trials.size()) +
                          " usable stage-1 fits)");
  }

  const auto pool_label = [&](const std::string& label) {
    std::vector<TrialEstimate> per_trial;
    per_trial.reserve(out.trials.size());
    for (const auto& tf : out.trials) {
      const auto it = std::find_if(tf.interactions.begin(), tf.interactions.end(),
                                   [&](const auto& in) { return in.label == label; });
      per_trial.push_back({tf.trial_id, it->estimate, it->se});
    }
    return method == PoolMethod::fixed ? pool_fixed(per_trial) : pool_random_dl(per_trial);
  };

  out.pooled_primary = pool_label(out.primary_label);
  out.primary.label = out.primary_label;
  out.primary.gamma = out.pooled_primary.estimate;
  out.primary.se = out.pooled_primary.se;
  out.primary.wald = wald_from_estimate(out.pooled_primary.estimate, out.pooled_primary.se);
  out.primary.source = spec;
  for (std::size_t i = 1; i < labels.size(); ++i) {
    out.pooled_secondary.emplace_back(labels[i], pool_label(labels[i]));
  }
  return out;
}

SubgroupResult subgroup_pooled_effects(const IpdDataset& dataset, const std::string& covariate) {
  dataset.require_meta_analytic();
  const std::size_t cov = dataset.covariate_index(covariate);
  {
    std::set<double> values;
    for (const auto& r : dataset.records()) values.insert(r.covariates[cov]);
    if (values != std::set<double>{0.0, 1.0}) {
      throw ValidationError("subgroup analysis requires a binary covariate; '" + covariate +
                            "' is not coded 0/1 with both levels present");
    }
  }

  SubgroupResult out;
  for (double level : {0.0, 1.0}) {
    std::vector<TrialEstimate> per_trial;
    for (std::size_t t = 0; t < dataset.n_trials(); ++t) {
      // Unadjusted mean difference within the subgroup, pooled-variance se.
      double sum[2] = {0, 0}, ss[2] = {0, 0};
      std::size_t count[2] = {0, 0};
      for (std::size_t i : dataset.trial_rows(t)) {
        const auto& r = dataset.records()[i];
        if (r.covariates[cov] != level) continue;
        sum[r.treatment] += r.outcome;
        ++count[r.treatment];
      }
      if (count[0] == 0 || count[1] == 0 || count[0] + count[1] < 3) {
        out.warnings.push_back(
            {"TRIAL_EXCLUDED", "trial '" + dataset.trial_ids()[t] + "' excluded from subgroup " +
                                   covariate + "=" + std::to_string(static_cast<int>(level)) +
                                   ": needs both arms and at least 3 participants"});
        continue;
      }
      const double mean0 = sum[0] / static_cast<double>(count[0]);
      const double mean1 = sum[1] / static_cast<double>(count[1]);
      for (std::size_t i : dataset.trial_rows(t)) {
        const auto& r = dataset.records()[i];
        if (r.covariates[cov] != level) continue;
        const double m = r.treatment == 1 ? mean1 : mean0;
        ss[r.treatment] += (r.outcome - m) * (r.outcome - m);
      }
      const double pooled_var =
          (ss[0] + ss[1]) / static_cast<double>(count[0] + count[1] - 2);
      const double se = std::sqrt(pooled_var * (1.0 / static_cast<double>(count[0]) +
                                                1.0 / static_cast<double>(count[1])));
      if (!(se > 0.0)) {
        out.warnings.push_back({"TRIAL_EXCLUDED",
                                "trial '" + dataset.trial_ids()[t] +
                                    "' excluded from subgroup: zero outcome variance"});
        continue;
      }
      per_trial.push_back({dataset.trial_ids()[t], mean1 - mean0, se});
    }
    if (per_trial.size() < 2) {
      throw ValidationError("subgroup " + covariate + "=" +
                            std::to_string(static_cast<int>(level)) +
                            " has fewer than 2 trials with both arms represented");
    }
    out.levels.push_back({level, pool_fixed(per_trial), per_trial.size()});
  }

  // Chi-square test of interaction across subgroup summary effects.
  double sum_w = 0.0, sum_wt = 0.0;
  for (const auto& lv : out.levels) {
    const double w = 1.0 / (lv.pooled.se * lv.pooled.se);
    sum_w += w;
    sum_wt += w * lv.pooled.estimate;
  }
  const double grand = sum_wt / sum_w;
  out.q_interaction = 0.0;
  for (const auto& lv : out.levels) {
    const double w = 1.0 / (lv.pooled.se * lv.pooled.se);
    out.q_interaction += w * (lv.pooled.estimate - grand) * (lv.pooled.estimate - grand);
  }
  out.df = static_cast<int>(out.levels.size()) - 1;
  out.p_value = chisq_sf(out.q_interaction, out.df);
  return out;
}

}  // namespace ipdmeta
