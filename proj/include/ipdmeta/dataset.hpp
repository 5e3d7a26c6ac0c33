#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "ipdmeta/errors.hpp"

namespace ipdmeta {

enum class CovariateKind { binary, continuous };

struct CovariateDecl {
  std::string name;
  CovariateKind kind = CovariateKind::continuous;
  bool operator==(const CovariateDecl&) const = default;
};

// One participant row. Covariate values are stored in schema order; the
// owning dataset holds the names.
struct ParticipantRecord {
  std::string trial_id;
  int treatment = 0;  // 0 = control, 1 = treated
  double outcome = 0.0;
  std::vector<double> covariates;
  bool operator==(const ParticipantRecord&) const = default;
};

// Immutable multi-trial participant-level dataset. Construction validates
// every record (treatment in {0,1}, finite outcome and covariates, binary
// covariates coded 0/1) and builds the trial index. All member functions
// are const and safe to call concurrently.
class IpdDataset {
 public:
  IpdDataset(std::vector<ParticipantRecord> records, std::vector<CovariateDecl> schema);

  std::size_t n_rows() const { return records_.size(); }
  std::size_t n_trials() const { return trial_ids_.size(); }
  const std::vector<ParticipantRecord>& records() const { return records_; }
  const std::vector<CovariateDecl>& schema() const { return schema_; }

  // Trial ids in lexicographic order; all per-trial output follows it.
  const std::vector<std::string>& trial_ids() const { return trial_ids_; }
  // Row indices belonging to trial `t` (position in trial_ids()).
  const std::vector<std::size_t>& trial_rows(std::size_t t) const { return rows_by_trial_[t]; }

  std::size_t covariate_index(const std::string& name) const;
  bool has_covariate(const std::string& name) const;

  // Throws ValidationError unless the dataset supports meta-analytic
  // operations: at least two trials, each with both arms represented.
  void require_meta_analytic() const;

 private:
  std::vector<ParticipantRecord> records_;
  std::vector<CovariateDecl> schema_;
  std::vector<std::string> trial_ids_;
  std::vector<std::vector<std::size_t>> rows_by_trial_;
};

// Per-record values of a covariate minus its own trial's mean. trial_means
// aligns with dataset.trial_ids().
struct CenteredColumn {
  std::vector<double> values;
  std::vector<double> trial_means;
};

CenteredColumn center_within_trial(const IpdDataset& dataset, const std::string& covariate);

struct IngestResult {
  IpdDataset dataset;
  std::vector<Warning> warnings;
  std::size_t rows_dropped = 0;
};

// Parse CSV with header row. Required columns: trial_id, treatment,
// outcome (aliases trial, treat, y are accepted). Declared covariates must
// all be present. Rows with missing values ("", "NA", "NaN", ".") in any
// analysis column are listwise-deleted with a counted warning; non-numeric
// values are a parse error naming the row.
IngestResult ingest_csv(std::istream& in, const std::vector<CovariateDecl>& schema);

// As above, but every non-required column becomes a covariate; a column is
// declared binary when all its observed values are 0 or 1.
IngestResult ingest_csv(std::istream& in);

// Emit the dataset in the same CSV format. Values are written with enough
// digits to round-trip exactly.
void write_csv(const IpdDataset& dataset, std::ostream& out);

struct TrialSummary {
  std::string trial_id;
  std::size_t n = 0, n_treated = 0, n_control = 0;
  double outcome_mean = 0.0, outcome_sd = 0.0;
  std::vector<double> covariate_means;
  std::vector<double> covariate_sds;
  // Pairwise Pearson correlations within this trial (schema order). NaN
  // where a covariate is constant.
  std::vector<std::vector<double>> correlation;
};

struct DatasetSummary {
  std::size_t n = 0, n_trials = 0;
  std::vector<std::string> covariates;
  // Correlations over all participants pooled.
  std::vector<std::vector<double>> pooled_correlation;
  std::vector<TrialSummary> trials;  // ordered by trial_id
};

DatasetSummary summarize(const IpdDataset& dataset);

}  // namespace ipdmeta
