#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipdmeta/dataset.hpp"
#include "ipdmeta/exemplar.hpp"
#include "ipdmeta/models.hpp"

namespace ipdmeta {

// FNV-1a over raw bytes; used to stamp inputs and outputs so provenance
// and determinism are checkable by diffing manifests.
std::uint64_t fnv1a64(std::string_view bytes);
std::string digest_hex(std::string_view bytes);

struct InputInfo {
  std::string path;
  std::string digest;
  std::size_t rows_used = 0;
  std::size_t rows_dropped = 0;
  std::size_t n_trials = 0;
};

nlohmann::json model_spec_json(const ModelSpec& spec, PoolMethod pooling);
nlohmann::json wald_json(const WaldSummary& w);
nlohmann::json pooled_json(const PooledResult& pooled);
nlohmann::json warnings_json(const std::vector<Warning>& warnings);

// Full machine-readable report for `analyze`. Key order is stable and
// numbers serialize with round-trip precision, so identical runs produce
// identical bytes.
nlohmann::json analysis_report(const InputInfo& input, const ModelSpec& spec,
                               PoolMethod pooling, const OneStageFit* one_stage,
                               const TwoStageFit* two_stage,
                               const std::vector<Warning>& ingest_warnings);

nlohmann::json summary_json(const DatasetSummary& summary);
nlohmann::json bias_demo_json(const BiasDemoReport& report);

// Reconstruct the pooled section of a report for forest rendering.
PooledResult pooled_from_json(const nlohmann::json& j);

}  // namespace ipdmeta
