#include "ipdmeta/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace ipdmeta {

namespace {

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == ".";
}

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean_of(a), mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

IpdDataset::IpdDataset(std::vector<ParticipantRecord> records,
                       std::vector<CovariateDecl> schema)
    : records_(std::move(records)), schema_(std::move(schema)) {
  {
    std::set<std::string> names;
    for (const auto& d : schema_) {
      if (!names.insert(d.name).second) {
        throw ValidationError("duplicate covariate name '" + d.name + "' in schema");
      }
    }
  }
  std::map<std::string, std::vector<std::size_t>> index;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    const std::string where = "record " + std::to_string(i + 1);
    if (r.trial_id.empty()) throw ValidationError(where + ": empty trial_id");
    if (r.treatment != 0 && r.treatment != 1) {
      throw ValidationError(where + ": treatment must be 0 or 1, got " +
                            std::to_string(r.treatment));
    }
    if (!std::isfinite(r.outcome)) throw ValidationError(where + ": outcome is not finite");
    if (r.covariates.size() != schema_.size()) {
      throw ValidationError(where + ": expected " + std::to_string(schema_.size()) +
                            " covariate values, got " + std::to_string(r.covariates.size()));
    }
    for (std::size_t c = 0; c < schema_.size(); ++c) {
      const double v = r.covariates[c];
      if (!std::isfinite(v)) {
        throw ValidationError(where + ": covariate '" + schema_[c].name + "' is not finite");
      }
      if (schema_[c].kind == CovariateKind::binary && v != 0.0 && v != 1.0) {
        throw ValidationError(where + ": covariate '" + schema_[c].name +
                              "' is declared binary but has value " + format_value(v) +
                              " (multi-level categorical covariates are not supported)");
      }
    }
    index[r.trial_id].push_back(i);
  }
  trial_ids_.reserve(index.size());
  rows_by_trial_.reserve(index.size());
  for (auto& [id, rows] : index) {
    trial_ids_.push_back(id);
    rows_by_trial_.push_back(std::move(rows));
  }
}

std::size_t IpdDataset::covariate_index(const std::string& name) const {
  for (std::size_t c = 0; c < schema_.size(); ++c) {
    if (schema_[c].name == name) return c;
  }
  throw ValidationError("unknown covariate '" + name + "'");
}

bool IpdDataset::has_covariate(const std::string& name) const {
  return std::any_of(schema_.begin(), schema_.end(),
                     [&](const CovariateDecl& d) { return d.name == name; });
}

void IpdDataset::require_meta_analytic() const {
  if (n_trials() < 2) {
    throw ValidationError("meta-analytic operations require at least 2 trials, got " +
                          std::to_string(n_trials()));
  }
  for (std::size_t t = 0; t < n_trials(); ++t) {
    std::size_t treated = 0, control = 0;
    for (std::size_t i : rows_by_trial_[t]) {
      (records_[i].treatment == 1 ? treated : control)++;
    }
    if (treated == 0 || control == 0) {
      throw ValidationError("trial '" + trial_ids_[t] +
                            "' does not have both treated and control participants");
    }
  }
}

CenteredColumn center_within_trial(const IpdDataset& dataset, const std::string& covariate) {
  const std::size_t c = dataset.covariate_index(covariate);
  CenteredColumn out;
  out.values.assign(dataset.n_rows(), 0.0);
  out.trial_means.reserve(dataset.n_trials());
  for (std::size_t t = 0; t < dataset.n_trials(); ++t) {
    const auto& rows = dataset.trial_rows(t);
    double sum = 0.0;
    for (std::size_t i : rows) sum += dataset.records()[i].covariates[c];
    const double mean = sum / static_cast<double>(rows.size());
    out.trial_means.push_back(mean);
    for (std::size_t i : rows) out.values[i] = dataset.records()[i].covariates[c] - mean;
  }
  return out;
}

namespace {

struct HeaderLayout {
  int trial = -1, treatment = -1, outcome = -1;
  std::vector<std::pair<std::string, int>> extra;  // header order
};

HeaderLayout parse_header(const std::string& line) {
  HeaderLayout h;
  const auto cols = split_csv_line(line);
  for (int i = 0; i < static_cast<int>(cols.size()); ++i) {
    const std::string& name = cols[i];
    if (name == "trial_id" || name == "trial") {
      h.trial = i;
    } else if (name == "treatment" || name == "treat") {
      h.treatment = i;
    } else if (name == "outcome" || name == "y") {
      h.outcome = i;
    } else if (!name.empty()) {
      h.extra.emplace_back(name, i);
    }
  }
  if (h.trial < 0) throw ValidationError("CSV is missing required column 'trial_id'");
  if (h.treatment < 0) throw ValidationError("CSV is missing required column 'treatment'");
  if (h.outcome < 0) throw ValidationError("CSV is missing required column 'outcome'");
  return h;
}

IngestResult ingest_impl(std::istream& in, const std::vector<CovariateDecl>* declared) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("CSV input is empty (no header row)");
  const HeaderLayout header = parse_header(line);

  // Resolve covariate columns: declared schema, or every extra column.
  std::vector<CovariateDecl> schema;
  std::vector<int> cov_cols;
  if (declared) {
    for (const auto& d : *declared) {
      const auto it = std::find_if(header.extra.begin(), header.extra.end(),
                                   [&](const auto& p) { return p.first == d.name; });
      if (it == header.extra.end()) {
        throw ValidationError("CSV is missing declared covariate column '" + d.name + "'");
      }
      schema.push_back(d);
      cov_cols.push_back(it->second);
    }
  } else {
    for (const auto& [name, col] : header.extra) {
      schema.push_back({name, CovariateKind::continuous});
      cov_cols.push_back(col);
    }
  }

  std::vector<ParticipantRecord> records;
  std::size_t dropped = 0;
  std::size_t row_no = 1;  // header was row 1
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    const auto field_at = [&](int col, const char* what) -> const std::string& {
      if (col >= static_cast<int>(fields.size())) {
        throw ValidationError("row " + std::to_string(row_no) + ": missing field for '" +
                              std::string(what) + "'");
      }
      return fields[col];
    };

    ParticipantRecord rec;
    rec.trial_id = field_at(header.trial, "trial_id");

    bool missing = rec.trial_id.empty();
    const std::string& treat_s = field_at(header.treatment, "treatment");
    const std::string& outcome_s = field_at(header.outcome, "outcome");
    std::vector<const std::string*> cov_s;
    cov_s.reserve(cov_cols.size());
    for (std::size_t c = 0; c < cov_cols.size(); ++c) {
      cov_s.push_back(&field_at(cov_cols[c], schema[c].name.c_str()));
    }
    missing = missing || is_missing(treat_s) || is_missing(outcome_s);
    for (const auto* s : cov_s) missing = missing || is_missing(*s);
    if (missing) {
      ++dropped;
      continue;
    }

    double treat_v;
    if (!parse_double(treat_s, treat_v)) {
      throw ValidationError("row " + std::to_string(row_no) +
                            ": treatment value '" + treat_s + "' is not numeric");
    }
    if (treat_v != 0.0 && treat_v != 1.0) {
      throw ValidationError("row " + std::to_string(row_no) + ": treatment must be 0 or 1, got '" +
                            treat_s + "'");
    }
    rec.treatment = static_cast<int>(treat_v);
    if (!parse_double(outcome_s, rec.outcome)) {
      throw ValidationError("row " + std::to_string(row_no) + ": outcome value '" + outcome_s +
                            "' is not numeric");
    }
    rec.covariates.resize(cov_s.size());
    for (std::size_t c = 0; c < cov_s.size(); ++c) {
      if (!parse_double(*cov_s[c], rec.covariates[c])) {
        throw ValidationError("row " + std::to_string(row_no) + ": covariate '" +
                              schema[c].name + "' value '" + *cov_s[c] + "' is not numeric");
      }
    }
    records.push_back(std::move(rec));
  }

  if (!declared) {
    // Infer binary columns from the observed values.
    for (std::size_t c = 0; c < schema.size(); ++c) {
      bool binary = !records.empty();
      for (const auto& r : records) {
        if (r.covariates[c] != 0.0 && r.covariates[c] != 1.0) {
          binary = false;
          break;
        }
      }
      if (binary) schema[c].kind = CovariateKind::binary;
    }
  }

  IngestResult result{IpdDataset(std::move(records), std::move(schema)), {}, dropped};
  if (dropped > 0) {
    result.warnings.push_back(
        {"ROWS_DROPPED", std::to_string(dropped) +
                             " row(s) with missing values were listwise-deleted"});
  }
  return result;
}

}  // namespace

IngestResult ingest_csv(std::istream& in, const std::vector<CovariateDecl>& schema) {
  return ingest_impl(in, &schema);
}

IngestResult ingest_csv(std::istream& in) { return ingest_impl(in, nullptr); }

void write_csv(const IpdDataset& dataset, std::ostream& out) {
  out << "trial_id,treatment,outcome";
  for (const auto& d : dataset.schema()) out << ',' << d.name;
  out << '\n';
  for (const auto& r : dataset.records()) {
    out << r.trial_id << ',' << r.treatment << ',' << format_value(r.outcome);
    for (double v : r.covariates) out << ',' << format_value(v);
    out << '\n';
  }
}

DatasetSummary summarize(const IpdDataset& dataset) {
  DatasetSummary s;
  s.n = dataset.n_rows();
  s.n_trials = dataset.n_trials();
  const std::size_t p = dataset.schema().size();
  for (const auto& d : dataset.schema()) s.covariates.push_back(d.name);

  const auto correlation_matrix = [p](const std::vector<std::vector<double>>& cols) {
    std::vector<std::vector<double>> m(p, std::vector<double>(p, 0.0));
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = a; b < p; ++b) {
        const double r = a == b && sd_of(cols[a]) > 0.0 ? 1.0 : pearson(cols[a], cols[b]);
        m[a][b] = r;
        m[b][a] = r;
      }
    }
    return m;
  };

  std::vector<std::vector<double>> pooled_cols(p);
  for (const auto& r : dataset.records()) {
    for (std::size_t c = 0; c < p; ++c) pooled_cols[c].push_back(r.covariates[c]);
  }
  s.pooled_correlation = correlation_matrix(pooled_cols);

  for (std::size_t t = 0; t < dataset.n_trials(); ++t) {
    TrialSummary ts;
    ts.trial_id = dataset.trial_ids()[t];
    std::vector<double> outcomes;
    std::vector<std::vector<double>> cols(p);
    for (std::size_t i : dataset.trial_rows(t)) {
      const auto& r = dataset.records()[i];
      ++ts.n;
      (r.treatment == 1 ? ts.n_treated : ts.n_control)++;
      outcomes.push_back(r.outcome);
      for (std::size_t c = 0; c < p; ++c) cols[c].push_back(r.covariates[c]);
    }
    ts.outcome_mean = mean_of(outcomes);
    ts.outcome_sd = sd_of(outcomes);
    for (std::size_t c = 0; c < p; ++c) {
      ts.covariate_means.push_back(mean_of(cols[c]));
      ts.covariate_sds.push_back(sd_of(cols[c]));
    }
    ts.correlation = correlation_matrix(cols);
    s.trials.push_back(std::move(ts));
  }
  return s;
}

}  // namespace ipdmeta
