#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ipdmeta/dataset.hpp"
#include "ipdmeta/exemplar.hpp"
#include "ipdmeta/forest_render.hpp"
#include "ipdmeta/mc.hpp"
#include "ipdmeta/models.hpp"
#include "ipdmeta/report.hpp"
#include "ipdmeta/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

// IPDMETA_VERBOSE=1 echoes warnings and progress to stderr. Output files
// are unaffected, so determinism guarantees still hold.
bool verbose() {
  const char* v = std::getenv("IPDMETA_VERBOSE");
  return v != nullptr && v[0] != '\0' && v[0] != '0';
}

void narrate(const std::string& line) {
  if (verbose()) std::cerr << "ipdmeta: " << line << '\n';
}

void narrate_warnings(const std::vector<ipdmeta::Warning>& warnings) {
  if (!verbose()) return;
  for (const auto& w : warnings) std::cerr << "ipdmeta: [" << w.code << "] " << w.message << '\n';
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ipdmeta::ValidationError("cannot open input file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ipdmeta::ValidationError("cannot write output file '" + path.string() + "'");
  out << bytes;
  if (!out) throw ipdmeta::ValidationError("failed writing '" + path.string() + "'");
}

struct AnalyzeOptions {
  std::string input;
  std::string modifier;
  std::vector<std::string> adjust;
  int approach = 1;
  std::string stage = "two";
  std::string handling = "within";
  std::string pooling = "fixed";
  std::string out = "report.json";
};

int cmd_analyze(const AnalyzeOptions& opt) {
  ipdmeta::ModelSpec spec;
  spec.approach = static_cast<ipdmeta::Approach>(opt.approach);
  spec.stage = opt.stage == "one" ? ipdmeta::Stage::one : ipdmeta::Stage::two;
  spec.effect_modifier = opt.modifier;
  spec.additional = opt.adjust;
  spec.handling = opt.handling == "conflated" ? ipdmeta::InfoHandling::conflated
                                              : ipdmeta::InfoHandling::within;
  spec.validate();
  const auto pooling =
      opt.pooling == "dl" ? ipdmeta::PoolMethod::random_dl : ipdmeta::PoolMethod::fixed;

  const std::string bytes = read_file(opt.input);
  std::istringstream in(bytes);
  const auto ingest = ipdmeta::ingest_csv(in);

  ipdmeta::InputInfo info;
  info.path = opt.input;
  info.digest = ipdmeta::digest_hex(bytes);
  info.rows_used = ingest.dataset.n_rows();
  info.rows_dropped = ingest.rows_dropped;
  info.n_trials = ingest.dataset.n_trials();

  narrate("analyzing " + opt.input + " (" + std::to_string(info.rows_used) + " rows, " +
          std::to_string(info.n_trials) + " trials)");
  narrate_warnings(ingest.warnings);
  json report;
  if (spec.stage == ipdmeta::Stage::one) {
    const auto fit = ipdmeta::fit_one_stage(ingest.dataset, spec);
    narrate_warnings(fit.warnings);
    report = ipdmeta::analysis_report(info, spec, pooling, &fit, nullptr, ingest.warnings);
  } else {
    const auto fit = ipdmeta::fit_two_stage(ingest.dataset, spec, pooling);
    narrate_warnings(fit.warnings);
    report = ipdmeta::analysis_report(info, spec, pooling, nullptr, &fit, ingest.warnings);
  }
  write_file(opt.out, report.dump(2) + "\n");
  narrate("wrote " + opt.out);
  return kExitOk;
}

struct SimulateOptions {
  std::string scenario = "exemplar";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t reps = 0;
  std::string out_dir;
};

int cmd_simulate(const SimulateOptions& opt) {
  std::error_code ec;
  fs::create_directories(opt.out_dir, ec);
  if (!fs::is_directory(opt.out_dir)) {
    throw ipdmeta::ValidationError("cannot create output directory '" + opt.out_dir + "'");
  }

  std::vector<std::pair<std::string, std::string>> artifacts;  // name -> bytes
  json manifest;
  manifest["schema_version"] = 1;
  manifest["tool"] = {{"name", "ipdmeta"}, {"version", IPDMETA_VERSION}};
  manifest["scenario"] = opt.scenario;

  if (opt.scenario == "bias-demo") {
    const std::uint64_t seed = opt.seed_set ? opt.seed : 7;
    const auto report = ipdmeta::aggregation_bias_demo(seed);
    manifest["seed"] = seed;
    artifacts.emplace_back("bias_demo.json", ipdmeta::bias_demo_json(report).dump(2) + "\n");
  } else {
    ipdmeta::ExemplarConfig config = opt.scenario == "exemplar"
                                         ? ipdmeta::ExemplarConfig::defaults()
                                         : ipdmeta::ExemplarConfig::from_file(opt.scenario);
    if (opt.seed_set) config.seed = opt.seed;
    manifest["seed"] = config.seed;
    manifest["config"] = config.to_key_value();

    ipdmeta::GenerationStats stats;
    const auto dataset = ipdmeta::generate_exemplar(config, &stats);
    std::ostringstream csv;
    ipdmeta::write_csv(dataset, csv);
    artifacts.emplace_back("exemplar.csv", csv.str());

    auto summary = ipdmeta::summary_json(ipdmeta::summarize(dataset));
    summary["seed"] = config.seed;
    summary["rejected_draws"] = stats.rejected_draws;
    artifacts.emplace_back("summary.json", summary.dump(2) + "\n");

    if (opt.reps > 0) {
      const auto estimators = ipdmeta::default_estimators(config);
      const auto table = ipdmeta::replicate(config, opt.reps, estimators);
      std::ostringstream oc;
      ipdmeta::write_opchar_csv(table, oc);
      artifacts.emplace_back("opchar.csv", oc.str());
    }
  }

  json listed = json::array();
  for (const auto& [name, bytes] : artifacts) {
    write_file(fs::path(opt.out_dir) / name, bytes);
    narrate("wrote " + (fs::path(opt.out_dir) / name).string());
    listed.push_back({{"file", name}, {"digest", ipdmeta::digest_hex(bytes)}});
  }
  manifest["artifacts"] = std::move(listed);
  write_file(fs::path(opt.out_dir) / "manifest.json", manifest.dump(2) + "\n");
  return kExitOk;
}

struct ForestOptions {
  std::string report;
  std::string format = "text";
  std::string out;
};

int cmd_forest(const ForestOptions& opt) {
  const std::string bytes = read_file(opt.report);
  json report;
  try {
    report = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ipdmeta::ValidationError("report is not valid JSON: " + std::string(e.what()));
  }
  if (!report.contains("pooled")) {
    throw ipdmeta::ValidationError(
        "report has no pooled section (forest plots need a two-stage analysis)");
  }
  const auto pooled = ipdmeta::pooled_from_json(report["pooled"]);
  const auto forest = ipdmeta::forest_data(pooled);
  const std::string rendered = opt.format == "svg" ? ipdmeta::render_forest_svg(forest)
                                                   : ipdmeta::render_forest_text(forest);
  if (opt.out.empty()) {
    std::cout << rendered;
  } else {
    write_file(opt.out, rendered);
  }
  return kExitOk;
}

struct CompareOptions {
  std::string input;
  std::vector<std::string> modifiers;
  std::string out = "table.csv";
};

int cmd_compare(const CompareOptions& opt) {
  const std::string bytes = read_file(opt.input);
  std::istringstream in(bytes);
  const auto ingest = ipdmeta::ingest_csv(in);
  const auto comparison =
      ipdmeta::compare_approaches(ingest.dataset, opt.modifiers[0], opt.modifiers[1]);
  std::ostringstream csv;
  ipdmeta::write_comparison_csv(comparison, csv);
  write_file(opt.out, csv.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Treatment-covariate interaction estimation for IPD meta-analysis"};
  app.set_version_flag("--version", IPDMETA_VERSION);
  app.require_subcommand(1);

  AnalyzeOptions an;
  auto* analyze = app.add_subcommand(
      "analyze", "Fit an interaction model to a participant-level CSV");
  analyze->add_option("--input", an.input, "participant CSV")->required();
  analyze->add_option("--modifier", an.modifier, "effect modifier covariate")->required();
  analyze->add_option("--adjust", an.adjust, "additional covariate(s)");
  analyze->add_option("--approach", an.approach, "approach 1-4")
      ->check(CLI::Range(1, 4))
      ->default_val(1);
  analyze->add_option("--stage", an.stage, "one|two")
      ->check(CLI::IsMember({"one", "two"}))
      ->default_val("two");
  analyze->add_option("--handling", an.handling, "within|conflated")
      ->check(CLI::IsMember({"within", "conflated"}))
      ->default_val("within");
  analyze->add_option("--pooling", an.pooling, "fixed|dl")
      ->check(CLI::IsMember({"fixed", "dl"}))
      ->default_val("fixed");
  analyze->add_option("--out", an.out, "report path")->default_val("report.json");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand(
      "simulate", "Generate the exemplar, the bias demo, or a scenario file");
  simulate->add_option("--scenario", sim.scenario, "exemplar|bias-demo|<config file>")
      ->default_val("exemplar");
  auto* seed_opt = simulate->add_option("--seed", sim.seed, "RNG seed");
  simulate->add_option("--reps", sim.reps,
                       "also run this many replications and write opchar.csv");
  simulate->add_option("--out", sim.out_dir, "output directory")->required();

  ForestOptions fo;
  auto* forest = app.add_subcommand("forest", "Render a forest plot from a report");
  forest->add_option("--report", fo.report, "report.json from analyze")->required();
  forest->add_option("--format", fo.format, "text|svg")
      ->check(CLI::IsMember({"text", "svg"}))
      ->default_val("text");
  forest->add_option("--out", fo.out, "output path (stdout when omitted)");

  CompareOptions co;
  auto* compare = app.add_subcommand(
      "compare", "Approach-comparison table for two covariates");
  compare->add_option("--input", co.input, "participant CSV")->required();
  compare->add_option("--modifiers", co.modifiers, "the two covariates")
      ->expected(2)
      ->required();
  compare->add_option("--out", co.out, "output CSV")->default_val("table.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }
  sim.seed_set = seed_opt->count() > 0;

  try {
    if (analyze->parsed()) return cmd_analyze(an);
    if (simulate->parsed()) return cmd_simulate(sim);
    if (forest->parsed()) return cmd_forest(fo);
    if (compare->parsed()) return cmd_compare(co);
  } catch (const ipdmeta::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ipdmeta::NumericError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitOk;
}
