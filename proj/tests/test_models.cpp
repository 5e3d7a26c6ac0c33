#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ipdmeta/exemplar.hpp"
#include "ipdmeta/models.hpp"
#include "ipdmeta/rng.hpp"
#include "balanced_sim.hpp"

using namespace ipdmeta;

namespace {

ModelSpec spec_of(Approach a, Stage s, std::string z, std::vector<std::string> w = {},
                  InfoHandling h = InfoHandling::within) {
  ModelSpec m;
  m.approach = a;
  m.stage = s;
  m.effect_modifier = std::move(z);
  m.additional = std::move(w);
  m.handling = h;
  return m;
}

IpdDataset exemplar(std::uint64_t seed = 20150) {
  auto config = ExemplarConfig::defaults();
  config.seed = seed;
  return generate_exemplar(config);
}

// Copy of a dataset with per-trial constants added to one covariate.
IpdDataset shift_covariate(const IpdDataset& ds, const std::string& name,
                           const std::vector<double>& shifts) {
  const std::size_t c = ds.covariate_index(name);
  std::vector<ParticipantRecord> recs = ds.records();
  std::vector<CovariateDecl> schema = ds.schema();
  schema[c].kind = CovariateKind::continuous;  // shifted values leave {0,1}
  for (std::size_t t = 0; t < ds.n_trials(); ++t) {
    for (std::size_t i : ds.trial_rows(t)) recs[i].covariates[c] += shifts[t];
  }
  return IpdDataset(std::move(recs), std::move(schema));
}

}  // namespace

TEST_CASE("model spec validation") {
  CHECK_THROWS_AS(spec_of(Approach::single_unadjusted, Stage::one, "z", {"w"}).validate(),
                  ValidationError);
  CHECK_THROWS_AS(spec_of(Approach::single_adjusted, Stage::one, "z").validate(),
                  ValidationError);
  CHECK_THROWS_AS(spec_of(Approach::multiple, Stage::two, "z").validate(), ValidationError);
  CHECK_THROWS_AS(spec_of(Approach::threeway, Stage::two, "z", {"w", "v"}).validate(),
                  ValidationError);
  CHECK_THROWS_AS(spec_of(Approach::single_adjusted, Stage::one, "z", {"z"}).validate(),
                  ValidationError);
  CHECK_THROWS_AS(
      spec_of(Approach::single_unadjusted, Stage::two, "z", {}, InfoHandling::conflated)
          .validate(),
      ValidationError);
  CHECK_NOTHROW(spec_of(Approach::threeway, Stage::one, "z", {"w"}).validate());
}

TEST_CASE("one-stage design has the documented column structure") {
  const auto ds = exemplar();
  SUBCASE("approach 1: 5 intercepts + 5 mains + treat + interaction = 12") {
    const auto built =
        build_one_stage_design(ds, spec_of(Approach::single_unadjusted, Stage::one, "cov1"));
    CHECK(built.design.n_cols() == 12);
    CHECK(built.design.labels().front() == "intercept@T1");
    CHECK(built.design.labels().back() == "treat:cov1");
  }
  SUBCASE("approach 4: 5 + 5 + 5 + 1 + 3 = 19") {
    const auto built =
        build_one_stage_design(ds, spec_of(Approach::threeway, Stage::one, "cov1", {"cov2"}));
    CHECK(built.design.n_cols() == 19);
    CHECK(built.design.labels().back() == "treat:cov1:cov2");
  }
  SUBCASE("approach 2 without an additional covariate is rejected") {
    CHECK_THROWS_AS(
        build_one_stage_design(ds, spec_of(Approach::single_adjusted, Stage::one, "cov1")),
        ValidationError);
  }
  SUBCASE("interaction columns are centered within trials") {
    const auto built =
        build_one_stage_design(ds, spec_of(Approach::single_unadjusted, Stage::one, "cov1"));
    // The interaction column sums to ~0 within each trial's treated arm
    // only when centered; at minimum it must have mean ~0 overall.
    const std::size_t col = built.design.n_cols() - 1;
    double sum = 0.0;
    for (std::size_t r = 0; r < built.design.n_rows(); ++r) sum += built.design.at(r, col);
    CHECK(std::fabs(sum / static_cast<double>(built.design.n_rows())) < 0.05);
  }
}

TEST_CASE("covariate constant in every trial cannot be an effect modifier") {
  std::vector<ParticipantRecord> recs;
  Rng rng(5);
  for (const char* trial : {"A", "B"}) {
    for (int i = 0; i < 20; ++i) {
      recs.push_back({trial, i % 2, rng.next_gaussian(), {1.0, rng.next_unit()}});
    }
  }
  const IpdDataset ds(std::move(recs),
                      {{"flat", CovariateKind::binary}, {"w", CovariateKind::continuous}});
  CHECK_THROWS_WITH_AS(
      fit_one_stage(ds, spec_of(Approach::single_unadjusted, Stage::one, "flat")),
      doctest::Contains("identically zero"), ValidationError);
}

TEST_CASE("exemplar one-stage fits reproduce the planted structure") {
  const auto ds = exemplar();
  SUBCASE("approach 1 on the true modifier is significant") {
    const auto fit = fit_one_stage(ds, spec_of(Approach::single_unadjusted, Stage::one, "cov1"));
    CHECK(fit.primary.label == "treat:cov1");
    CHECK(fit.primary.wald.p_value < 0.05);
    CHECK(fit.primary.gamma < 0.0);  // greater benefit with the covariate
  }
  SUBCASE("three-way interaction is null") {
    const auto fit = fit_one_stage(ds, spec_of(Approach::threeway, Stage::one, "cov2", {"cov1"}));
    CHECK(fit.primary.label == "treat:cov2:cov1");
    CHECK(fit.primary.wald.p_value > 0.05);
    CHECK(fit.secondary.size() == 2);
  }
}

TEST_CASE("within handling is invariant to per-trial covariate shifts") {
  const auto ds = exemplar(641);
  const std::vector<double> shifts{0.0, 5.0, -3.0, 11.0, 100.0};
  const auto shifted = shift_covariate(ds, "cov1", shifts);

  SUBCASE("one-stage") {
    const auto spec = spec_of(Approach::single_unadjusted, Stage::one, "cov1");
    const auto a = fit_one_stage(ds, spec).primary;
    const auto b = fit_one_stage(shifted, spec).primary;
    CHECK(std::fabs(a.gamma - b.gamma) < 1e-8);
    CHECK(std::fabs(a.se - b.se) < 1e-8);
  }
  SUBCASE("two-stage") {
    const auto spec = spec_of(Approach::single_unadjusted, Stage::two, "cov1");
    const auto a = fit_two_stage(ds, spec).primary;
    const auto b = fit_two_stage(shifted, spec).primary;
    CHECK(std::fabs(a.gamma - b.gamma) < 1e-8);
    CHECK(std::fabs(a.se - b.se) < 1e-8);
  }
}

TEST_CASE("conflated handling is not shift-invariant (aggregation-bias witness)") {
  // Trials with very different treatment effects and (initially) identical
  // covariate distributions. Once one pair of trials has its covariate
  // shifted, the raw x*z column soaks up the across-trial effect gradient.
  std::vector<ParticipantRecord> recs;
  Rng rng(33);
  for (int t = 0; t < 4; ++t) {
    const double theta = t < 2 ? 0.0 : 10.0;
    for (int i = 0; i < 200; ++i) {
      const int x = i % 2;
      const double z = static_cast<double>(rng.next_bernoulli(0.5));
      const double y = 10.0 + 0.5 * z + theta * x + 0.25 * rng.next_gaussian();
      recs.push_back({"T" + std::to_string(t + 1), x, y, {z}});
    }
  }
  const IpdDataset ds(std::move(recs), {{"z", CovariateKind::binary}});
  const auto shifted = shift_covariate(ds, "z", {0.0, 0.0, 1.0, 1.0});

  const auto conflated =
      spec_of(Approach::single_unadjusted, Stage::one, "z", {}, InfoHandling::conflated);
  const auto a = fit_one_stage(ds, conflated).primary;
  const auto b = fit_one_stage(shifted, conflated).primary;
  CHECK(std::fabs(a.gamma - b.gamma) > 10.0 * a.se);

  // The within-handled estimate does not move.
  const auto within = spec_of(Approach::single_unadjusted, Stage::one, "z");
  const auto wa = fit_one_stage(ds, within).primary;
  const auto wb = fit_one_stage(shifted, within).primary;
  CHECK(std::fabs(wa.gamma - wb.gamma) < 1e-8);
}

TEST_CASE("approach 2 collapses to approach 1 when w is a trial-level covariate") {
  // w constant within each trial: its main effect is absorbed by the
  // intercepts and must be dropped, not turned into a rank error.
  auto base = exemplar(77);
  std::vector<ParticipantRecord> recs = base.records();
  std::vector<double> w_by_trial{0.0, 1.0, 0.0, 1.0, 1.0};
  for (std::size_t t = 0; t < base.n_trials(); ++t) {
    for (std::size_t i : base.trial_rows(t)) recs[i].covariates.push_back(w_by_trial[t]);
  }
  auto schema = base.schema();
  schema.push_back({"site", CovariateKind::binary});
  const IpdDataset ds(std::move(recs), std::move(schema));

  const auto a1 = fit_one_stage(ds, spec_of(Approach::single_unadjusted, Stage::one, "cov1"));
  const auto a2 =
      fit_one_stage(ds, spec_of(Approach::single_adjusted, Stage::one, "cov1", {"site"}));
  CHECK(std::fabs(a1.primary.gamma - a2.primary.gamma) < 1e-8);
  REQUIRE(a2.warnings.size() == 1);
  CHECK(a2.warnings[0].code == "COLUMN_DROPPED");
}

TEST_CASE("approaches 2 and 3 extend to several additional covariates") {
  // Three covariates: modifier plus two adjustments.
  std::vector<ParticipantRecord> recs;
  Rng rng(271);
  for (const char* trial : {"A", "B", "C"}) {
    for (int i = 0; i < 120; ++i) {
      const int x = i % 2;
      const double z = static_cast<double>(rng.next_bernoulli(0.5));
      const double w1 = rng.next_gaussian();
      const double w2 = rng.next_gaussian();
      const double y = 5.0 + z + 0.5 * w1 - 0.25 * w2 - x + 0.8 * x * z + rng.next_gaussian();
      recs.push_back({trial, x, y, {z, w1, w2}});
    }
  }
  const IpdDataset ds(std::move(recs), {{"z", CovariateKind::binary},
                                        {"w1", CovariateKind::continuous},
                                        {"w2", CovariateKind::continuous}});

  const auto built =
      build_one_stage_design(ds, spec_of(Approach::multiple, Stage::one, "z", {"w1", "w2"}));
  // 3 intercepts + 3x3 main blocks + treat + 3 interactions
  CHECK(built.design.n_cols() == 3 + 9 + 1 + 3);

  const auto one = fit_one_stage(ds, spec_of(Approach::multiple, Stage::one, "z", {"w1", "w2"}));
  CHECK(one.primary.label == "treat:z");
  REQUIRE(one.secondary.size() == 2);
  CHECK(one.secondary[0].label == "treat:w1");
  CHECK(one.secondary[1].label == "treat:w2");

  const auto two = fit_two_stage(ds, spec_of(Approach::multiple, Stage::two, "z", {"w1", "w2"}));
  CHECK(two.pooled_secondary.size() == 2);
  CHECK(std::fabs(two.primary.gamma - one.primary.gamma) < 0.5);  // same estimand
}

TEST_CASE("two-stage fitting") {
  const auto ds = exemplar();
  SUBCASE("pools per-trial interactions with a full-rank stage 1 everywhere") {
    const auto fit = fit_two_stage(ds, spec_of(Approach::single_unadjusted, Stage::two, "cov1"));
    CHECK(fit.trials.size() == 5);
    CHECK(fit.warnings.empty());
    CHECK(fit.pooled_primary.contributions.size() == 5);
    CHECK(fit.primary.label == "treat:cov1");
    CHECK(fit.primary.wald.p_value < 0.05);
  }
  SUBCASE("single-trial dataset cannot be pooled") {
    std::vector<ParticipantRecord> recs;
    Rng rng(9);
    for (int i = 0; i < 30; ++i) {
      recs.push_back({"only", i % 2, rng.next_gaussian(), {rng.next_unit()}});
    }
    const IpdDataset one(std::move(recs), {{"z", CovariateKind::continuous}});
    CHECK_THROWS_WITH_AS(
        fit_two_stage(one, spec_of(Approach::single_unadjusted, Stage::two, "z")),
        doctest::Contains("at least 2 trials"), ValidationError);
  }
  SUBCASE("a trial with a constant modifier is excluded with a warning") {
    std::vector<ParticipantRecord> recs = ds.records();
    const std::size_t z = ds.covariate_index("cov1");
    for (std::size_t i : ds.trial_rows(2)) recs[i].covariates[z] = 1.0;
    const IpdDataset damaged(std::move(recs), ds.schema());
    const auto fit =
        fit_two_stage(damaged, spec_of(Approach::single_unadjusted, Stage::two, "cov1"));
    CHECK(fit.trials.size() == 4);
    REQUIRE(fit.warnings.size() == 1);
    CHECK(fit.warnings[0].code == "TRIAL_EXCLUDED");
    CHECK(fit.warnings[0].message.find("T3") != std::string::npos);
  }
  SUBCASE("two identical trials pool to the common estimate with se/sqrt(2)") {
    std::vector<ParticipantRecord> recs;
    Rng rng(123);
    std::vector<ParticipantRecord> trial;
    for (int i = 0; i < 60; ++i) {
      const double z = rng.next_unit();
      const int x = i % 2;
      trial.push_back({"X", x, 1.0 + z + 0.5 * x + 0.3 * x * z + rng.next_gaussian(), {z}});
    }
    for (const auto& r : trial) recs.push_back(r);
    for (auto r : trial) {
      r.trial_id = "Y";
      recs.push_back(r);
    }
    const IpdDataset twins(std::move(recs), {{"z", CovariateKind::continuous}});
    const auto fit = fit_two_stage(twins, spec_of(Approach::single_unadjusted, Stage::two, "z"));
    REQUIRE(fit.trials.size() == 2);
    const double gamma = fit.trials[0].interactions[0].estimate;
    const double se = fit.trials[0].interactions[0].se;
    CHECK(fit.pooled_primary.estimate == doctest::Approx(gamma).epsilon(1e-10));
    CHECK(fit.pooled_primary.se == doctest::Approx(se / std::sqrt(2.0)).epsilon(1e-10));
  }
  SUBCASE("approach 4 pools the three-way coefficient as primary") {
    const auto fit = fit_two_stage(ds, spec_of(Approach::threeway, Stage::two, "cov2", {"cov1"}));
    CHECK(fit.primary_label == "treat:cov2:cov1");
    CHECK(fit.pooled_secondary.size() == 2);
    CHECK(fit.primary.wald.p_value > 0.05);
  }
}

TEST_CASE("one- and two-stage estimates agree on balanced equal-variance data") {
  std::size_t agree = 0;
  const std::size_t reps = 25;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto ds = balanced_trials(derive_seed(909, r), 5, 4000, -2.0);
    const auto one = fit_one_stage(ds, spec_of(Approach::single_unadjusted, Stage::one, "z"));
    const auto two = fit_two_stage(ds, spec_of(Approach::single_unadjusted, Stage::two, "z"));
    if (std::fabs(one.primary.gamma - two.primary.gamma) <= 0.05 * two.primary.se) ++agree;
  }
  CHECK(agree >= 23);  // the acceptance suite runs the full 100
}

TEST_CASE("with no three-way effect, approach 4 reproduces approach 3") {
  auto config = ExemplarConfig::defaults();
  std::size_t close = 0;
  const std::size_t reps = 100;
  for (std::size_t r = 0; r < reps; ++r) {
    config.seed = derive_seed(777, r);
    const auto ds = generate_exemplar(config);
    const auto a3 = fit_two_stage(ds, spec_of(Approach::multiple, Stage::two, "cov1", {"cov2"}));
    const auto a4 = fit_two_stage(ds, spec_of(Approach::threeway, Stage::two, "cov1", {"cov2"}));
    const auto& a4_g1 = a4.pooled_secondary[0];  // treat:cov1
    REQUIRE(a4_g1.first == "treat:cov1");
    if (std::fabs(a4_g1.second.estimate - a3.pooled_primary.estimate) <=
        2.0 * a3.pooled_primary.se) {
      ++close;
    }
  }
  CHECK(close >= 95);
}

TEST_CASE("subgroup pooling and the chi-square test of interaction") {
  SUBCASE("hand-built dataset with exact subgroup effects 2 and 4") {
    // Each (trial, subgroup, arm) cell holds two outcomes c +/- 1, so the
    // per-trial mean differences are exact and every se is sqrt(2).
    std::vector<ParticipantRecord> recs;
    const auto cell = [&](const char* trial, double z, int x, double c) {
      recs.push_back({trial, x, c - 1.0, {z}});
      recs.push_back({trial, x, c + 1.0, {z}});
    };
    for (const char* trial : {"A", "B"}) {
      cell(trial, 0.0, 0, 10.0);
      cell(trial, 0.0, 1, 12.0);  // subgroup 0: difference 2
      cell(trial, 1.0, 0, 10.0);
      cell(trial, 1.0, 1, 14.0);  // subgroup 1: difference 4
    }
    const IpdDataset ds(std::move(recs), {{"z", CovariateKind::binary}});
    const auto res = subgroup_pooled_effects(ds, "z");
    REQUIRE(res.levels.size() == 2);
    CHECK(res.levels[0].pooled.estimate == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(res.levels[0].pooled.se == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.levels[1].pooled.estimate == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(res.levels[1].pooled.se == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.q_interaction == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(res.df == 1);
    CHECK(std::fabs(res.p_value - 0.157299) < 1e-5);
  }
  SUBCASE("identical subgroup effects give Q = 0, p = 1") {
    std::vector<ParticipantRecord> recs;
    const auto cell = [&](const char* trial, double z, int x, double c) {
      recs.push_back({trial, x, c - 1.0, {z}});
      recs.push_back({trial, x, c + 1.0, {z}});
    };
    for (const char* trial : {"A", "B"}) {
      for (double z : {0.0, 1.0}) {
        cell(trial, z, 0, 10.0);
        cell(trial, z, 1, 13.0);
      }
    }
    const IpdDataset ds(std::move(recs), {{"z", CovariateKind::binary}});
    const auto res = subgroup_pooled_effects(ds, "z");
    CHECK(res.q_interaction == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(res.p_value == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("exemplar subgroup test agrees in direction with one-stage approach 1") {
    const auto ds = exemplar();
    const auto sub = subgroup_pooled_effects(ds, "cov1");
    const auto one = fit_one_stage(ds, spec_of(Approach::single_unadjusted, Stage::one, "cov1"));
    CHECK(sub.p_value < 0.05);
    const double diff = sub.levels[1].pooled.estimate - sub.levels[0].pooled.estimate;
    CHECK(diff * one.primary.gamma > 0.0);  // same sign
  }
  SUBCASE("non-binary covariate is rejected") {
    const auto ds = exemplar();
    std::vector<ParticipantRecord> recs = ds.records();
    recs[0].covariates[0] = 0.5;
    auto schema = ds.schema();
    schema[0].kind = CovariateKind::continuous;
    const IpdDataset bad(std::move(recs), std::move(schema));
    CHECK_THROWS_AS(subgroup_pooled_effects(bad, "cov1"), ValidationError);
  }
}
