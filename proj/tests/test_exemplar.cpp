#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ipdmeta/exemplar.hpp"
#include "ipdmeta/rng.hpp"

using namespace ipdmeta;

TEST_CASE("defaults mirror the shipped config file") {
  const auto from_file =
      ExemplarConfig::from_file(std::string(IPDMETA_SOURCE_DIR) + "/configs/exemplar_default.cfg");
  CHECK(from_file == ExemplarConfig::defaults());
}

TEST_CASE("config serialization round-trips") {
  auto cfg = ExemplarConfig::defaults();
  cfg.seed = 42;
  cfg.noise_sd = 4.25;
  cfg.trial_sizes = {300, 500, 700, 500, 1200};
  std::istringstream in(cfg.to_key_value());
  CHECK(ExemplarConfig::from_stream(in) == cfg);
}

TEST_CASE("config validation") {
  auto cfg = ExemplarConfig::defaults();
  SUBCASE("trial sizes must stay in range") {
    cfg.trial_sizes = {100, 500, 600, 700, 1300};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }
  SUBCASE("trial sizes must sum to 3200") {
    cfg.trial_sizes = {300, 400, 500, 600, 1500};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }
  SUBCASE("cell probabilities must sum to one") {
    cfg.p00 = 0.3;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }
  SUBCASE("positive implied correlation is rejected") {
    cfg.p00 = cfg.p11 = 0.3275;
    cfg.p01 = cfg.p10 = 0.1725;
    CHECK(cfg.implied_correlation() > 0.0);
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }
  SUBCASE("defaults imply exactly -0.31") {
    CHECK(ExemplarConfig::defaults().implied_correlation() ==
          doctest::Approx(-0.31).epsilon(1e-12));
  }
}

TEST_CASE("generated exemplar matches its configuration") {
  GenerationStats stats;
  const auto ds = generate_exemplar(ExemplarConfig::defaults(), &stats);
  CHECK(ds.n_rows() == 3200);
  CHECK(ds.n_trials() == 5);
  const auto sizes = ExemplarConfig::defaults().trial_sizes;
  for (std::size_t t = 0; t < 5; ++t) {
    CHECK(ds.trial_rows(t).size() == static_cast<std::size_t>(sizes[t]));
    // 1:1 allocation
    std::size_t treated = 0;
    for (std::size_t i : ds.trial_rows(t)) treated += ds.records()[i].treatment;
    CHECK(treated == ds.trial_rows(t).size() / 2);
  }
  for (const auto& r : ds.records()) {
    CHECK(r.outcome >= 0.0);
    CHECK(r.outcome <= 50.0);
  }
  CHECK(stats.outcomes == 3200);

  const auto s = summarize(ds);
  CHECK(s.pooled_correlation[0][1] > -0.36);
  CHECK(s.pooled_correlation[0][1] < -0.26);
}

TEST_CASE("generation is deterministic in the seed") {
  const auto cfg = ExemplarConfig::defaults();
  std::ostringstream a, b;
  write_csv(generate_exemplar(cfg), a);
  write_csv(generate_exemplar(cfg), b);
  CHECK(a.str() == b.str());

  auto other = cfg;
  other.seed = 20151;
  std::ostringstream c;
  write_csv(generate_exemplar(other), c);
  CHECK(a.str() != c.str());
}

TEST_CASE("independent cell probabilities give near-zero correlation") {
  auto cfg = ExemplarConfig::defaults();
  cfg.p00 = cfg.p01 = cfg.p10 = cfg.p11 = 0.25;
  CHECK(cfg.implied_correlation() == doctest::Approx(0.0));
  const auto ds = generate_exemplar(cfg);
  const auto s = summarize(ds);
  CHECK(std::fabs(s.pooled_correlation[0][1]) < 0.04);
}

TEST_CASE("infeasible outcome bounds are a config error") {
  auto cfg = ExemplarConfig::defaults();
  cfg.noise_sd = 40.0;  // most draws leave [0, 50]
  CHECK_THROWS_WITH_AS(generate_exemplar(cfg), doctest::Contains("reject"), ValidationError);
}

TEST_CASE("approach comparison reproduces the confounded-interaction pattern") {
  const auto ds = generate_exemplar(ExemplarConfig::defaults());
  const auto cmp = compare_approaches(ds, "cov1", "cov2");
  REQUIRE(cmp.rows.size() == 7);

  // fixed row order: cov1 A1-A3, cov2 A1-A3, three-way
  CHECK(cmp.rows[0].covariate == "cov1");
  CHECK(cmp.rows[0].approach == 1);
  CHECK(cmp.rows[3].covariate == "cov2");
  CHECK(cmp.rows[6].approach == 4);

  // cov1 is a genuine modifier under every approach
  for (int i = 0; i < 3; ++i) CHECK(cmp.rows[i].p_value < 0.05);

  // cov2's apparent effect attenuates as cov1 is adjusted for and
  // disappears once the treatment-by-cov1 interaction is included
  CHECK(cmp.rows[3].p_value < cmp.rows[4].p_value);
  CHECK(cmp.rows[4].p_value < cmp.rows[5].p_value);
  CHECK(cmp.rows[5].p_value > 0.05);

  // no three-way interaction
  CHECK(cmp.rows[6].p_value > 0.05);
}

TEST_CASE("comparison CSV round-trips numerically") {
  const auto ds = generate_exemplar(ExemplarConfig::defaults());
  const auto cmp = compare_approaches(ds, "cov1", "cov2");
  std::ostringstream out;
  write_comparison_csv(cmp, out);
  std::istringstream in(out.str());
  const auto back = read_comparison_csv(in);
  REQUIRE(back.rows.size() == cmp.rows.size());
  for (std::size_t i = 0; i < cmp.rows.size(); ++i) {
    CHECK(back.rows[i].covariate == cmp.rows[i].covariate);
    CHECK(back.rows[i].approach == cmp.rows[i].approach);
    CHECK(back.rows[i].estimate == cmp.rows[i].estimate);
    CHECK(back.rows[i].se == cmp.rows[i].se);
    CHECK(back.rows[i].p_value == cmp.rows[i].p_value);
  }
}

TEST_CASE("aggregation bias demo") {
  SUBCASE("planted gradient: deft stays null, conflated turns significant") {
    const auto report = aggregation_bias_demo(7);
    CHECK(report.within_ci_covers_zero);
    CHECK(report.conflated_significant);
    CHECK(report.conflated.wald.p_value < 0.05);
    // The construction-time oracle recovers the planted slope.
    CHECK(std::fabs(report.across_trial_slope - report.planted_slope) < 4.0);
  }
  SUBCASE("no gradient: deft and conflated agree") {
    const auto report = aggregation_bias_demo(7, 0.0);
    CHECK(std::fabs(report.within.gamma - report.conflated.gamma) <=
          2.0 * std::max(report.within.se, report.conflated.se));
  }
  SUBCASE("same seed, same report") {
    const auto a = aggregation_bias_demo(7);
    const auto b = aggregation_bias_demo(7);
    CHECK(a.within.gamma == b.within.gamma);
    CHECK(a.conflated.gamma == b.conflated.gamma);
    CHECK(a.across_trial_slope == b.across_trial_slope);
  }
}
