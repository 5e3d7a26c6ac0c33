#include "ipdmeta/mc.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "ipdmeta/rng.hpp"

namespace ipdmeta {

namespace {

struct TargetOutcome {
  bool ok = false;
  double estimate = 0.0;
  double se = 0.0;
  double p_value = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// All target results of one replication, flattened in estimator order.
using RepOutcome = std::vector<TargetOutcome>;

RepOutcome run_one(const ExemplarConfig& base, std::uint64_t rep,
                   std::span<const EstimatorSpec> estimators, std::size_t n_targets) {
  RepOutcome out(n_targets);
  ExemplarConfig config = base;
  config.seed = derive_seed(base.seed, rep);
  // No exception may escape into the parallel loop; a failed generation
  // counts as a failure of every target.
  IpdDataset dataset = [&]() -> IpdDataset {
    try {
      return generate_exemplar(config);
    } catch (const std::exception&) {
      return IpdDataset({}, {});
    }
  }();
  if (dataset.n_rows() == 0) return out;

  std::size_t slot = 0;
  for (const auto& est : estimators) {
    const std::size_t first_slot = slot;
    try {
      std::vector<std::pair<std::string, WaldSummary>> fitted;
      if (est.model.stage == Stage::one) {
        const auto fit = fit_one_stage(dataset, est.model);
        fitted.emplace_back(fit.primary.label, fit.primary.wald);
        for (const auto& s : fit.secondary) fitted.emplace_back(s.label, s.wald);
      } else {
        const auto fit = fit_two_stage(dataset, est.model, est.pooling);
        fitted.emplace_back(fit.primary.label, fit.primary.wald);
        for (const auto& [label, pooled] : fit.pooled_secondary) {
          fitted.emplace_back(label, wald_from_estimate(pooled.estimate, pooled.se));
        }
      }
      for (const auto& target : est.targets) {
        TargetOutcome& slot_out = out[slot++];
        for (const auto& [label, w] : fitted) {
          if (label == target.label) {
            slot_out = {true, w.estimate, w.se, w.p_value, w.ci_low, w.ci_high};
            break;
          }
        }
      }
    } catch (const std::exception&) {
      slot = first_slot + est.targets.size();  // all targets of this estimator failed
    }
  }
  return out;
}

OpCharTable reduce(const ExemplarConfig& config, std::size_t n_reps,
                   std::span<const EstimatorSpec> estimators,
                   const std::vector<RepOutcome>& outcomes) {
  OpCharTable table;
  table.base_seed = config.seed;
  table.n_reps = n_reps;

  std::size_t slot = 0;
  for (const auto& est : estimators) {
    for (const auto& target : est.targets) {
      OpCharRow row;
      row.estimator = est.name;
      row.target = target.label;
      row.truth = target.truth;
      row.n_reps = n_reps;

      // Fixed reduction order (replication index) keeps sums bit-identical
      // regardless of how the replications were scheduled.
      double sum = 0.0;
      for (const auto& rep : outcomes) {
        if (rep[slot].ok) {
          sum += rep[slot].estimate;
        } else {
          ++row.n_failed;
        }
      }
      const auto n_ok = static_cast<double>(n_reps - row.n_failed);
      if (static_cast<double>(row.n_failed) > 0.10 * static_cast<double>(n_reps)) {
        throw NumericError("estimator '" + est.name + "' failed in " +
                           std::to_string(row.n_failed) + " of " + std::to_string(n_reps) +
                           " replications (over the 10% tolerance)");
      }
      if (n_ok > 0.0) {
        row.mean_estimate = sum / n_ok;
        row.bias = row.mean_estimate - target.truth;
        double ss = 0.0, se_sum = 0.0;
        std::size_t covered = 0, rejected = 0;
        for (const auto& rep : outcomes) {
          const auto& r = rep[slot];
          if (!r.ok) continue;
          ss += (r.estimate - row.mean_estimate) * (r.estimate - row.mean_estimate);
          se_sum += r.se;
          if (r.ci_low <= target.truth && target.truth <= r.ci_high) ++covered;
          if (r.p_value < 0.05) ++rejected;
        }
        row.empirical_se = n_ok > 1.0 ? std::sqrt(ss / (n_ok - 1.0)) : 0.0;
        row.mean_se = se_sum / n_ok;
        row.ci_coverage = static_cast<double>(covered) / n_ok;
        row.rejection_rate = static_cast<double>(rejected) / n_ok;
      }
      table.rows.push_back(std::move(row));
      ++slot;
    }
  }
  return table;
}

std::size_t count_targets(std::span<const EstimatorSpec> estimators) {
  std::size_t n = 0;
  for (const auto& e : estimators) n += e.targets.size();
  return n;
}

}  // namespace

std::vector<EstimatorSpec> default_estimators(const ExemplarConfig& config) {
  std::vector<EstimatorSpec> out;

  const auto two_stage = [](Approach a, std::string z, std::vector<std::string> w) {
    ModelSpec m;
    m.approach = a;
    m.stage = Stage::two;
    m.effect_modifier = std::move(z);
    m.additional = std::move(w);
    return m;
  };

  out.push_back({"A1:cov1", two_stage(Approach::single_unadjusted, "cov1", {}),
                 PoolMethod::fixed,
                 {{interaction_label("cov1"), config.cov1_interaction}}});
  out.push_back({"A1:cov2", two_stage(Approach::single_unadjusted, "cov2", {}),
                 PoolMethod::fixed,
                 {{interaction_label("cov2"), config.cov2_interaction}}});
  out.push_back({"A3:cov1", two_stage(Approach::multiple, "cov1", {"cov2"}),
                 PoolMethod::fixed,
                 {{interaction_label("cov1"), config.cov1_interaction},
                  {interaction_label("cov2"), config.cov2_interaction}}});
  out.push_back({"A4:threeway", two_stage(Approach::threeway, "cov2", {"cov1"}),
                 PoolMethod::fixed,
                 {{threeway_label("cov2", "cov1"), config.threeway_interaction}}});
  return out;
}

OpCharTable replicate(const ExemplarConfig& config, std::size_t n_reps,
                      std::span<const EstimatorSpec> estimators) {
  if (n_reps < 1) throw ValidationError("replicate requires n_reps >= 1");
  config.validate();
  for (const auto& e : estimators) e.model.validate();
  const std::size_t n_targets = count_targets(estimators);

  std::vector<RepOutcome> outcomes(n_reps);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t r = 0; r < static_cast<std::int64_t>(n_reps); ++r) {
    outcomes[r] = run_one(config, static_cast<std::uint64_t>(r), estimators, n_targets);
  }
  return reduce(config, n_reps, estimators, outcomes);
}

OpCharTable replicate_serial(const ExemplarConfig& config, std::size_t n_reps,
                             std::span<const EstimatorSpec> estimators) {
  if (n_reps < 1) throw ValidationError("replicate requires n_reps >= 1");
  config.validate();
  for (const auto& e : estimators) e.model.validate();
  const std::size_t n_targets = count_targets(estimators);

  std::vector<RepOutcome> outcomes(n_reps);
  for (std::size_t r = 0; r < n_reps; ++r) {
    outcomes[r] = run_one(config, r, estimators, n_targets);
  }
  return reduce(config, n_reps, estimators, outcomes);
}

void write_opchar_csv(const OpCharTable& table, std::ostream& out) {
  const auto fmt = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "estimator,target,truth,n_reps,n_failed,mean_estimate,bias,empirical_se,"
         "mean_se,ci_coverage,rejection_rate\n";
  for (const auto& r : table.rows) {
    out << r.estimator << ',' << r.target << ',' << fmt(r.truth) << ',' << r.n_reps << ','
        << r.n_failed << ',' << fmt(r.mean_estimate) << ',' << fmt(r.bias) << ','
        << fmt(r.empirical_se) << ',' << fmt(r.mean_se) << ',' << fmt(r.ci_coverage) << ','
        << fmt(r.rejection_rate) << '\n';
  }
}

}  // namespace ipdmeta
