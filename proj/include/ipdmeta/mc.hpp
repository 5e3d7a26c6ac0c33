#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ipdmeta/exemplar.hpp"
#include "ipdmeta/models.hpp"

namespace ipdmeta {

// One coefficient tracked across replications, with its planted value.
struct TargetSpec {
  std::string label;
  double truth = 0.0;
};

struct EstimatorSpec {
  std::string name;
  ModelSpec model;
  PoolMethod pooling = PoolMethod::fixed;
  std::vector<TargetSpec> targets;
};

struct OpCharRow {
  std::string estimator;
  std::string target;
  double truth = 0.0;
  std::size_t n_reps = 0;
  std::size_t n_failed = 0;
  double mean_estimate = 0.0;
  double bias = 0.0;
  double empirical_se = 0.0;   // SD of estimates over replications
  double mean_se = 0.0;        // average model-based se
  double ci_coverage = 0.0;    // fraction of 95% CIs covering truth
  double rejection_rate = 0.0; // fraction of p-values below 0.05
};

struct OpCharTable {
  std::uint64_t base_seed = 0;
  std::size_t n_reps = 0;
  std::vector<OpCharRow> rows;
};

// The default estimator battery used by `simulate --reps`: unadjusted and
// multiple-interaction models for both covariates plus the three-way test.
std::vector<EstimatorSpec> default_estimators(const ExemplarConfig& config);

// Run `n_reps` replications of the scenario. Replication r generates its
// dataset from derive_seed(config.seed, r), fits every estimator, and the
// results are reduced in replication order, so the table is bit-identical
// however the loop is scheduled. Estimator failures are tolerated up to a
// 10% rate, after which NumericError is thrown with diagnostics.
//
// replicate() parallelizes replications with OpenMP when available;
// replicate_serial() is the plain-loop reference used by the tests and the
// benchmark to pin down equivalence.
OpCharTable replicate(const ExemplarConfig& config, std::size_t n_reps,
                      std::span<const EstimatorSpec> estimators);
OpCharTable replicate_serial(const ExemplarConfig& config, std::size_t n_reps,
                             std::span<const EstimatorSpec> estimators);

void write_opchar_csv(const OpCharTable& table, std::ostream& out);

}  // namespace ipdmeta
