#include "ipdmeta/report.hpp"

#include <cmath>
#include <cstdio>

#include "ipdmeta/version.hpp"

namespace ipdmeta {

namespace {

using nlohmann::json;

// NaN is not representable in JSON; nulls keep reports parseable.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

const char* approach_name(Approach a) {
  switch (a) {
    case Approach::single_unadjusted: return "single interaction (unadjusted)";
    case Approach::single_adjusted: return "single interaction (adjusted)";
    case Approach::multiple: return "multiple interactions";
    case Approach::threeway: return "three-way interaction";
  }
  return "?";
}

json interaction_json(const InteractionEstimate& e) {
  json j;
  j["label"] = e.label;
  j["estimate"] = num(e.gamma);
  j["se"] = num(e.se);
  j["wald"] = wald_json(e.wald);
  return j;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string digest_hex(std::string_view bytes) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

nlohmann::json model_spec_json(const ModelSpec& spec, PoolMethod pooling) {
  json j;
  j["approach"] = static_cast<int>(spec.approach);
  j["approach_name"] = approach_name(spec.approach);
  j["stage"] = spec.stage == Stage::one ? "one" : "two";
  j["modifier"] = spec.effect_modifier;
  j["adjust"] = spec.additional;
  j["handling"] = spec.handling == InfoHandling::within ? "within" : "conflated";
  j["pooling"] = pooling == PoolMethod::fixed ? "fixed" : "dl";
  return j;
}

nlohmann::json wald_json(const WaldSummary& w) {
  json j;
  j["estimate"] = num(w.estimate);
  j["se"] = num(w.se);
  j["statistic"] = num(w.statistic);
  j["p_value"] = num(w.p_value);
  j["ci_low"] = num(w.ci_low);
  j["ci_high"] = num(w.ci_high);
  return j;
}

nlohmann::json pooled_json(const PooledResult& pooled) {
  json j;
  j["method"] = pooled.method == PoolMethod::fixed ? "fixed" : "dl";
  j["estimate"] = num(pooled.estimate);
  j["se"] = num(pooled.se);
  j["ci_low"] = num(pooled.ci_low);
  j["ci_high"] = num(pooled.ci_high);
  j["q"] = num(pooled.q);
  j["i2"] = num(pooled.i2);
  j["tau2"] = num(pooled.tau2);
  json contributions = json::array();
  for (const auto& c : pooled.contributions) {
    json jc;
    jc["trial"] = c.label;
    jc["estimate"] = num(c.estimate);
    jc["se"] = num(c.se);
    jc["weight_share"] = num(c.weight_share);
    contributions.push_back(std::move(jc));
  }
  j["contributions"] = std::move(contributions);
  return j;
}

nlohmann::json warnings_json(const std::vector<Warning>& warnings) {
  json j = json::array();
  for (const auto& w : warnings) {
    json jw;
    jw["code"] = w.code;
    jw["message"] = w.message;
    j.push_back(std::move(jw));
  }
  return j;
}

nlohmann::json analysis_report(const InputInfo& input, const ModelSpec& spec,
                               PoolMethod pooling, const OneStageFit* one_stage,
                               const TwoStageFit* two_stage,
                               const std::vector<Warning>& ingest_warnings) {
  json j;
  j["schema_version"] = 1;
  j["tool"] = {{"name", "ipdmeta"}, {"version", IPDMETA_VERSION}};
  j["input"] = {{"path", input.path},
                {"digest", input.digest},
                {"rows_used", input.rows_used},
                {"rows_dropped", input.rows_dropped},
                {"trials", input.n_trials}};
  j["model"] = model_spec_json(spec, pooling);

  std::vector<Warning> warnings = ingest_warnings;
  if (one_stage) {
    j["interactions"]["primary"] = interaction_json(one_stage->primary);
    json secondary = json::array();
    for (const auto& s : one_stage->secondary) secondary.push_back(interaction_json(s));
    j["interactions"]["secondary"] = std::move(secondary);
    json coef = json::object();
    for (std::size_t i = 0; i < one_stage->fit.labels.size(); ++i) {
      coef[one_stage->fit.labels[i]] = num(one_stage->fit.coefficients[i]);
    }
    j["fit"] = {{"coefficients", std::move(coef)},
                {"sigma2", num(one_stage->fit.sigma2)},
                {"dof", one_stage->fit.dof},
                {"n", one_stage->fit.n_rows}};
    warnings.insert(warnings.end(), one_stage->warnings.begin(), one_stage->warnings.end());
  }
  if (two_stage) {
    j["interactions"]["primary"] = interaction_json(two_stage->primary);
    json secondary = json::array();
    for (const auto& [label, pooled] : two_stage->pooled_secondary) {
      json js;
      js["label"] = label;
      js["pooled"] = pooled_json(pooled);
      secondary.push_back(std::move(js));
    }
    j["interactions"]["secondary"] = std::move(secondary);
    j["pooled"] = pooled_json(two_stage->pooled_primary);
    json per_trial = json::array();
    for (const auto& tf : two_stage->trials) {
      json jt;
      jt["trial"] = tf.trial_id;
      jt["n"] = tf.fit.n_rows;
      jt["dof"] = tf.fit.dof;
      json ints = json::array();
      for (const auto& in : tf.interactions) {
        json ji;
        ji["label"] = in.label;
        ji["wald"] = wald_json(in.wald);
        ints.push_back(std::move(ji));
      }
      jt["interactions"] = std::move(ints);
      per_trial.push_back(std::move(jt));
    }
    j["per_trial"] = std::move(per_trial);
    warnings.insert(warnings.end(), two_stage->warnings.begin(), two_stage->warnings.end());
  }
  j["warnings"] = warnings_json(warnings);
  return j;
}

nlohmann::json summary_json(const DatasetSummary& summary) {
  json j;
  j["n"] = summary.n;
  j["n_trials"] = summary.n_trials;
  j["covariates"] = summary.covariates;
  json pooled = json::object();
  for (std::size_t a = 0; a < summary.covariates.size(); ++a) {
    for (std::size_t b = a + 1; b < summary.covariates.size(); ++b) {
      pooled[summary.covariates[a] + ":" + summary.covariates[b]] =
          num(summary.pooled_correlation[a][b]);
    }
  }
  j["pooled_correlation"] = std::move(pooled);
  json trials = json::array();
  for (const auto& t : summary.trials) {
    json jt;
    jt["trial"] = t.trial_id;
    jt["n"] = t.n;
    jt["n_treated"] = t.n_treated;
    jt["n_control"] = t.n_control;
    jt["outcome_mean"] = num(t.outcome_mean);
    jt["outcome_sd"] = num(t.outcome_sd);
    json means = json::object(), sds = json::object(), corr = json::object();
    for (std::size_t c = 0; c < summary.covariates.size(); ++c) {
      means[summary.covariates[c]] = num(t.covariate_means[c]);
      sds[summary.covariates[c]] = num(t.covariate_sds[c]);
    }
    for (std::size_t a = 0; a < summary.covariates.size(); ++a) {
      for (std::size_t b = a + 1; b < summary.covariates.size(); ++b) {
        corr[summary.covariates[a] + ":" + summary.covariates[b]] = num(t.correlation[a][b]);
      }
    }
    jt["covariate_means"] = std::move(means);
    jt["covariate_sds"] = std::move(sds);
    jt["correlation"] = std::move(corr);
    trials.push_back(std::move(jt));
  }
  j["trials"] = std::move(trials);
  return j;
}

nlohmann::json bias_demo_json(const BiasDemoReport& report) {
  json j;
  j["schema_version"] = 1;
  j["tool"] = {{"name", "ipdmeta"}, {"version", IPDMETA_VERSION}};
  j["seed"] = report.seed;
  j["planted_across_trial_slope"] = num(report.planted_slope);
  j["observed_across_trial_slope"] = num(report.across_trial_slope);
  j["within"] = interaction_json(report.within);
  j["conflated"] = interaction_json(report.conflated);
  j["within_ci_covers_zero"] = report.within_ci_covers_zero;
  j["conflated_significant"] = report.conflated_significant;
  return j;
}

PooledResult pooled_from_json(const nlohmann::json& j) {
  PooledResult p;
  p.method = j.at("method").get<std::string>() == "dl" ? PoolMethod::random_dl
                                                       : PoolMethod::fixed;
  p.estimate = j.at("estimate").get<double>();
  p.se = j.at("se").get<double>();
  p.ci_low = j.at("ci_low").get<double>();
  p.ci_high = j.at("ci_high").get<double>();
  p.q = j.at("q").get<double>();
  p.i2 = j.at("i2").get<double>();
  p.tau2 = j.at("tau2").get<double>();
  for (const auto& jc : j.at("contributions")) {
    p.contributions.push_back({jc.at("trial").get<std::string>(),
                               jc.at("estimate").get<double>(), jc.at("se").get<double>(),
                               jc.at("weight_share").get<double>()});
  }
  return p;
}

}  // namespace ipdmeta
