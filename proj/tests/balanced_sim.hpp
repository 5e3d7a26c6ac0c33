#pragma once

// Balanced equal-variance simulation shared by the model tests and the
// acceptance suite: k trials of equal size, 1:1 allocation, one binary
// covariate with the same distribution in every trial, one residual sd.

#include <string>
#include <vector>

#include "ipdmeta/dataset.hpp"
#include "ipdmeta/rng.hpp"

inline ipdmeta::IpdDataset balanced_trials(std::uint64_t seed, int n_trials, int per_trial,
                                           double interaction, double noise_sd = 5.0) {
  std::vector<ipdmeta::ParticipantRecord> records;
  records.reserve(static_cast<std::size_t>(n_trials) * per_trial);
  for (int t = 0; t < n_trials; ++t) {
    ipdmeta::Rng rng = ipdmeta::Rng::substream(seed, static_cast<std::uint64_t>(t));
    for (int i = 0; i < per_trial; ++i) {
      const int x = i < per_trial / 2 ? 1 : 0;
      const double z = static_cast<double>(rng.next_bernoulli(0.5));
      const double y =
          20.0 + 1.5 * z - 2.0 * x + interaction * x * z + noise_sd * rng.next_gaussian();
      records.push_back({"T" + std::to_string(t + 1), x, y, {z}});
    }
  }
  return ipdmeta::IpdDataset(std::move(records), {{"z", ipdmeta::CovariateKind::binary}});
}
