#include "ipdmeta/exemplar.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "ipdmeta/regression.hpp"
#include "ipdmeta/rng.hpp"

namespace ipdmeta {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_num(const std::string& key, const std::string& s) {
  double v;
  const char* b = s.data();
  auto [ptr, ec] = std::from_chars(b, b + s.size(), v);
  if (ec != std::errc() || ptr != b + s.size()) {
    throw ValidationError("config key '" + key + "': value '" + s + "' is not numeric");
  }
  return v;
}

}  // namespace

void ExemplarConfig::validate() const {
  int total = 0;
  for (int s : trial_sizes) {
    if (s < 200 || s > 1500) {
      throw ValidationError("trial sizes must lie in [200, 1500], got " + std::to_string(s));
    }
    total += s;
  }
  if (total != 3200) {
    throw ValidationError("trial sizes must sum to 3200, got " + std::to_string(total));
  }
  const double probs[4] = {p00, p01, p10, p11};
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0 || p > 1.0) throw ValidationError("joint covariate probabilities must be in [0,1]");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-12) {
    throw ValidationError("joint covariate probabilities must sum to 1, got " + fmt(sum));
  }
  if (implied_correlation() > 0.0) {
    throw ValidationError("joint covariate probabilities must not imply a positive correlation");
  }
  if (!(noise_sd > 0.0)) throw ValidationError("noise_sd must be positive");
  if (!(outcome_min < outcome_max)) throw ValidationError("outcome bounds must satisfy min < max");
}

double ExemplarConfig::implied_correlation() const {
  const double m1 = p10 + p11;  // P(cov1 = 1)
  const double m2 = p01 + p11;  // P(cov2 = 1)
  const double denom = std::sqrt(m1 * (1.0 - m1) * m2 * (1.0 - m2));
  if (denom == 0.0) return 0.0;
  return (p11 - m1 * m2) / denom;
}

ExemplarConfig ExemplarConfig::defaults() { return ExemplarConfig{}; }

ExemplarConfig ExemplarConfig::from_stream(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (!key.empty()) kv[key] = value;
  }

  ExemplarConfig cfg;
  const auto take = [&](const char* key, double& out) {
    const auto it = kv.find(key);
    if (it != kv.end()) out = parse_num(key, it->second);
  };
  if (const auto it = kv.find("config_version"); it != kv.end()) {
    cfg.config_version = static_cast<int>(parse_num("config_version", it->second));
  }
  if (const auto it = kv.find("seed"); it != kv.end()) {
    cfg.seed = static_cast<std::uint64_t>(parse_num("seed", it->second));
  }
  if (const auto it = kv.find("trial_sizes"); it != kv.end()) {
    std::istringstream ss(it->second);
    for (auto& size : cfg.trial_sizes) {
      std::string tok;
      if (!(ss >> tok)) throw ValidationError("config key 'trial_sizes' needs 5 values");
      size = static_cast<int>(parse_num("trial_sizes", tok));
    }
  }
  if (const auto it = kv.find("trial_intercepts"); it != kv.end()) {
    std::istringstream ss(it->second);
    for (auto& a : cfg.trial_intercepts) {
      std::string tok;
      if (!(ss >> tok)) throw ValidationError("config key 'trial_intercepts' needs 5 values");
      a = parse_num("trial_intercepts", tok);
    }
  }
  take("p00", cfg.p00);
  take("p01", cfg.p01);
  take("p10", cfg.p10);
  take("p11", cfg.p11);
  take("cov1_main", cfg.cov1_main);
  take("cov2_main", cfg.cov2_main);
  take("treatment_effect", cfg.treatment_effect);
  take("cov1_interaction", cfg.cov1_interaction);
  take("cov2_interaction", cfg.cov2_interaction);
  take("threeway_interaction", cfg.threeway_interaction);
  take("noise_sd", cfg.noise_sd);
  take("outcome_min", cfg.outcome_min);
  take("outcome_max", cfg.outcome_max);
  cfg.validate();
  return cfg;
}

ExemplarConfig ExemplarConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario config '" + path + "'");
  return from_stream(in);
}

std::string ExemplarConfig::to_key_value() const {
  std::ostringstream out;
  out << "config_version = " << config_version << '\n';
  out << "seed = " << seed << '\n';
  out << "trial_sizes =";
  for (int s : trial_sizes) out << ' ' << s;
  out << '\n';
  out << "p00 = " << fmt(p00) << '\n';
  out << "p01 = " << fmt(p01) << '\n';
  out << "p10 = " << fmt(p10) << '\n';
  out << "p11 = " << fmt(p11) << '\n';
  out << "trial_intercepts =";
  for (double a : trial_intercepts) out << ' ' << fmt(a);
  out << '\n';
  out << "cov1_main = " << fmt(cov1_main) << '\n';
  out << "cov2_main = " << fmt(cov2_main) << '\n';
  out << "treatment_effect = " << fmt(treatment_effect) << '\n';
  out << "cov1_interaction = " << fmt(cov1_interaction) << '\n';
  out << "cov2_interaction = " << fmt(cov2_interaction) << '\n';
  out << "threeway_interaction = " << fmt(threeway_interaction) << '\n';
  out << "noise_sd = " << fmt(noise_sd) << '\n';
  out << "outcome_min = " << fmt(outcome_min) << '\n';
  out << "outcome_max = " << fmt(outcome_max) << '\n';
  return out.str();
}

IpdDataset generate_exemplar(const ExemplarConfig& config, GenerationStats* stats) {
  config.validate();
  GenerationStats local;
  GenerationStats& gs = stats ? *stats : local;
  gs = {};

  const double cum01 = config.p00 + config.p01;
  const double cum10 = cum01 + config.p10;

  std::vector<ParticipantRecord> records;
  records.reserve(3200);
  for (std::size_t t = 0; t < config.trial_sizes.size(); ++t) {
    const auto n = static_cast<std::size_t>(config.trial_sizes[t]);
    Rng rng = Rng::substream(config.seed, t);

    // 1:1 allocation, shuffled within the trial.
    std::vector<int> assignment(n, 0);
    for (std::size_t i = 0; i < n / 2; ++i) assignment[i] = 1;
    for (std::size_t i = n - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(rng.next_below(i + 1));
      std::swap(assignment[i], assignment[j]);
    }

    const std::string trial_id = "T" + std::to_string(t + 1);
    for (std::size_t i = 0; i < n; ++i) {
      ParticipantRecord rec;
      rec.trial_id = trial_id;
      rec.treatment = assignment[i];

      const double u = rng.next_unit();
      double cov1, cov2;
      if (u < config.p00) {
        cov1 = 0.0; cov2 = 0.0;
      } else if (u < cum01) {
        cov1 = 0.0; cov2 = 1.0;
      } else if (u < cum10) {
        cov1 = 1.0; cov2 = 0.0;
      } else {
        cov1 = 1.0; cov2 = 1.0;
      }
      rec.covariates = {cov1, cov2};

      const double x = static_cast<double>(rec.treatment);
      const double mean = config.trial_intercepts[t] + config.cov1_main * cov1 +
                          config.cov2_main * cov2 + config.treatment_effect * x +
                          config.cov1_interaction * x * cov1 +
                          config.cov2_interaction * x * cov2 +
                          config.threeway_interaction * x * cov1 * cov2;
      double y = mean + config.noise_sd * rng.next_gaussian();
      std::size_t attempts = 0;
      while (y < config.outcome_min || y > config.outcome_max) {
        ++gs.rejected_draws;
        if (++attempts > 1000) {
          throw ValidationError("outcome bounds are infeasible for the configured "
                                "coefficients (persistent rejection in trial '" +
                                trial_id + "')");
        }
        y = mean + config.noise_sd * rng.next_gaussian();
      }
      ++gs.outcomes;
      rec.outcome = y;
      records.push_back(std::move(rec));
    }
  }

  const double rate = static_cast<double>(gs.rejected_draws) /
                      static_cast<double>(gs.outcomes + gs.rejected_draws);
  if (rate > 0.05) {
    throw ValidationError("outcome bounds rejected " + fmt(100.0 * rate) +
                          "% of draws; configuration is infeasible");
  }

  return IpdDataset(std::move(records),
                    {{"cov1", CovariateKind::binary}, {"cov2", CovariateKind::binary}});
}

ApproachComparison compare_approaches(const IpdDataset& dataset, const std::string& first,
                                      const std::string& second) {
  dataset.covariate_index(first);
  dataset.covariate_index(second);

  ApproachComparison out;
  const auto run = [&](const std::string& z, const std::string& w, Approach a) {
    ModelSpec spec;
    spec.approach = a;
    spec.stage = Stage::two;
    spec.effect_modifier = z;
    if (a != Approach::single_unadjusted) spec.additional = {w};
    const auto fit = fit_two_stage(dataset, spec, PoolMethod::fixed);
    ComparisonRow row;
    row.covariate = a == Approach::threeway ? z + ":" + w : z;
    row.approach = static_cast<int>(a);
    row.estimate = fit.primary.gamma;
    row.se = fit.primary.se;
    row.p_value = fit.primary.wald.p_value;
    out.rows.push_back(row);
  };

  for (const auto& [z, w] : {std::pair{first, second}, std::pair{second, first}}) {
    run(z, w, Approach::single_unadjusted);
    run(z, w, Approach::single_adjusted);
    run(z, w, Approach::multiple);
  }
  run(second, first, Approach::threeway);
  return out;
}

void write_comparison_csv(const ApproachComparison& comparison, std::ostream& out) {
  out << "covariate,approach,estimate,se,p_value\n";
  for (const auto& r : comparison.rows) {
    out << r.covariate << ',' << r.approach << ',' << fmt(r.estimate) << ',' << fmt(r.se)
        << ',' << fmt(r.p_value) << '\n';
  }
}

ApproachComparison read_comparison_csv(std::istream& in) {
  ApproachComparison out;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("comparison CSV is empty");
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    ComparisonRow row;
    std::string tok;
    std::getline(ss, row.covariate, ',');
    const auto num = [&](double& v) {
      if (!std::getline(ss, tok, ',')) {
        throw ValidationError("comparison CSV row " + std::to_string(row_no) + " is short");
      }
      v = parse_num("comparison", tok);
    };
    double approach;
    num(approach);
    row.approach = static_cast<int>(approach);
    num(row.estimate);
    num(row.se);
    num(row.p_value);
    out.rows.push_back(row);
  }
  return out;
}

BiasDemoReport aggregation_bias_demo(std::uint64_t seed, double planted_slope) {
  // Six trials whose covariate prevalence rises with the trial index while
  // the trial-level treatment effect follows prevalence. Within any one
  // trial the treatment effect does not depend on the covariate.
  constexpr std::size_t n_trials = 6;
  constexpr std::size_t trial_size = 200;
  constexpr double base_effect = -2.0;
  constexpr double intercept = 20.0;
  constexpr double cov_main = 1.0;
  constexpr double noise_sd = 4.0;

  std::vector<ParticipantRecord> records;
  records.reserve(n_trials * trial_size);
  for (std::size_t t = 0; t < n_trials; ++t) {
    Rng rng = Rng::substream(seed, t);
    const double prevalence =
        0.15 + 0.7 * static_cast<double>(t) / static_cast<double>(n_trials - 1);
    const double trial_effect = base_effect + planted_slope * (prevalence - 0.5);

    std::vector<int> assignment(trial_size, 0);
    for (std::size_t i = 0; i < trial_size / 2; ++i) assignment[i] = 1;
    for (std::size_t i = trial_size - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(rng.next_below(i + 1));
      std::swap(assignment[i], assignment[j]);
    }

    const std::string trial_id = "B" + std::to_string(t + 1);
    for (std::size_t i = 0; i < trial_size; ++i) {
      ParticipantRecord rec;
      rec.trial_id = trial_id;
      rec.treatment = assignment[i];
      const double z = static_cast<double>(rng.next_bernoulli(prevalence));
      rec.covariates = {z};
      rec.outcome = intercept + cov_main * z + trial_effect * rec.treatment +
                    noise_sd * rng.next_gaussian();
      records.push_back(std::move(rec));
    }
  }
  IpdDataset dataset(std::move(records), {{"z", CovariateKind::binary}});

  BiasDemoReport report;
  report.seed = seed;
  report.planted_slope = planted_slope;

  ModelSpec spec;
  spec.approach = Approach::single_unadjusted;
  spec.stage = Stage::one;
  spec.effect_modifier = "z";

  spec.handling = InfoHandling::within;
  report.within = fit_one_stage(dataset, spec).primary;

  spec.handling = InfoHandling::conflated;
  report.conflated = fit_one_stage(dataset, spec).primary;

  report.within_ci_covers_zero =
      report.within.wald.ci_low <= 0.0 && 0.0 <= report.within.wald.ci_high;
  report.conflated_significant = std::fabs(report.conflated.wald.statistic) > 1.96;

  // Construction-time oracle: per-trial treatment effects against trial
  // covariate means, by plain least squares across trials.
  {
    std::vector<double> trial_mean_z, trial_effect;
    for (std::size_t t = 0; t < dataset.n_trials(); ++t) {
      // Unadjusted per-trial treatment effect.
      double sum[2] = {0, 0};
      std::size_t count[2] = {0, 0};
      double z_sum = 0.0;
      for (std::size_t i : dataset.trial_rows(t)) {
        const auto& r = dataset.records()[i];
        sum[r.treatment] += r.outcome;
        ++count[r.treatment];
        z_sum += r.covariates[0];
      }
      trial_effect.push_back(sum[1] / static_cast<double>(count[1]) -
                             sum[0] / static_cast<double>(count[0]));
      trial_mean_z.push_back(z_sum / static_cast<double>(dataset.trial_rows(t).size()));
    }
    DesignMatrix x = DesignMatrix::from_columns(
        {"intercept", "mean_z"}, {std::vector<double>(trial_mean_z.size(), 1.0), trial_mean_z});
    const auto fit = fit_least_squares(x, trial_effect);
    report.across_trial_slope = fit.coefficient("mean_z");
  }

  return report;
}

}  // namespace ipdmeta
