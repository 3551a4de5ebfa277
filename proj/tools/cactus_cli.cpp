// cactus: command line front end.
//
//   cactus run       --input data.csv --target y [--stratify sex=female] ...
//   cactus heatmap   --model abstraction_model.json --report report.json --out heatmap.csv
//   cactus compare   --report a.json --report b.json ... --levels 0.1,0.2,0.3 --out dir
//   cactus report import <path> [--model NAME] [--tag TAG] [--out file.json|file.csv]
//   cactus baseline fit --input data.csv --target y --trees 100 --depth 8 --seed 1 --out rf.json
//   cactus synth     --kind benchmark|cohort --seed 1 --out data.csv
//
// Exit codes: 0 ok, 2 configuration, 3 I/O, 4 data, 5 internal.

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cactus/cactus.hpp"

namespace {

constexpr const char* kOutDirEnv = "CACTUS_OUT_DIR";

int exit_code(cactus::ErrorClass c) { return static_cast<int>(c); }

void write_report(const cactus::ImportanceReport& r, const std::string& out) {
  if (out.empty()) {
    std::cout << cactus::to_json(r).dump(2) << '\n';
    return;
  }
  const std::filesystem::path path(out);
  cactus::write_file(path, path.extension() == ".csv" ? cactus::to_csv(r) : cactus::to_json(r).dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Up/Down abstraction classifier and missing-data stability harness"};
  app.set_version_flag("--version", std::string(cactus::kVersion));
  app.require_subcommand(1);

  // run ----------------------------------------------------------------------
  auto* run = app.add_subcommand("run", "Run the full missingness experiment and write all artifacts");
  std::string run_config_file;
  run->add_option("--config", run_config_file, "Flat key = value config file; flags override it");
  const std::vector<std::pair<std::string, std::string>> run_keys{
      {"input", "Input CSV"},
      {"target", "Binary (0/1) target column"},
      {"stratify", "Restrict to one stratum, column=level"},
      {"levels", "Comma-separated missingness levels in [0,1) (complete data is always included)"},
      {"repeats", "Repeats per level"},
      {"seed", "Master seed"},
      {"alpha", "Laplace smoothing constant"},
      {"top-k", "Number of top features for stability and overlap"},
      {"test-fraction", "Held-out fraction per repeat"},
      {"forest", "Also run the random forest baseline (true/false)"},
      {"trees", "Forest size"},
      {"depth", "Maximum tree depth"},
      {"min-leaf", "Minimum rows per leaf"},
      {"mtry", "Features tried per split (0 = sqrt)"},
      {"out", "Output directory (default: $CACTUS_OUT_DIR)"},
      {"threads", "Worker threads (0 = all cores); results do not depend on it"},
  };
  std::map<std::string, std::string> run_values;
  std::map<std::string, CLI::Option*> run_opts;
  for (const auto& [key, help] : run_keys) run_opts[key] = run->add_option("--" + key, run_values[key], help);

  // heatmap ------------------------------------------------------------------
  auto* heatmap = app.add_subcommand("heatmap", "Join abstraction thresholds with a significance ranking");
  std::string hm_model, hm_report, hm_out = "heatmap.csv";
  std::size_t hm_k = 0;
  heatmap->add_option("--model", hm_model, "abstraction_model.json")->required();
  heatmap->add_option("--report", hm_report, "Importance report (JSON or CSV)")->required();
  heatmap->add_option("--out", hm_out, "Output CSV");
  auto* hm_k_opt = heatmap->add_option("--top-k", hm_k, "Keep only the top k features");

  // compare ------------------------------------------------------------------
  auto* compare = app.add_subcommand("compare", "Stability and overlap for several models' importance reports");
  std::vector<std::string> cmp_reports;
  std::string cmp_levels = "0.1,0.2,0.3";
  std::size_t cmp_k = 10;
  std::string cmp_out;
  compare->add_option("--report,reports", cmp_reports, "Report files, one per model and level")->required();
  compare->add_option("--levels", cmp_levels, "Comma-separated levels each model must cover");
  compare->add_option("--top-k", cmp_k, "Top-k size");
  compare->add_option("--out", cmp_out, "Output directory")->envname(kOutDirEnv)->required();

  // report import ------------------------------------------------------------
  auto* report = app.add_subcommand("report", "Importance report utilities");
  report->require_subcommand(1);
  auto* import = report->add_subcommand("import", "Validate and canonicalize an external importance report");
  std::string imp_path, imp_model, imp_tag, imp_out;
  import->add_option("path", imp_path, "Report file (JSON or rank,feature,importance CSV)")->required();
  auto* imp_model_opt = import->add_option("--model", imp_model, "Override the model name");
  auto* imp_tag_opt = import->add_option("--tag", imp_tag, "Override the dataset tag");
  import->add_option("--out", imp_out, "Write the canonical report here (.json or .csv); stdout if omitted");

  // baseline fit -------------------------------------------------------------
  auto* baseline = app.add_subcommand("baseline", "In-repo comparison model");
  baseline->require_subcommand(1);
  auto* fit = baseline->add_subcommand("fit", "Fit the random forest and emit its Gini importance report");
  std::string bl_input, bl_target, bl_tag, bl_out;
  cactus::ForestParams bl_params;
  fit->add_option("--input", bl_input, "Input CSV")->required();
  fit->add_option("--target", bl_target, "Target column")->required();
  fit->add_option("--trees", bl_params.n_trees, "Forest size");
  fit->add_option("--depth", bl_params.max_depth, "Maximum depth");
  fit->add_option("--min-leaf", bl_params.min_leaf, "Minimum rows per leaf");
  fit->add_option("--mtry", bl_params.features_per_split, "Features tried per split (0 = sqrt)");
  fit->add_option("--seed", bl_params.seed, "Seed");
  fit->add_option("--threads", bl_params.threads, "Worker threads");
  fit->add_option("--tag", bl_tag, "Dataset tag for the report (default: input file stem)");
  fit->add_option("--out", bl_out, "Output report (.json or .csv); stdout if omitted");

  // synth --------------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic cohort as CSV");
  std::string syn_kind = "benchmark", syn_out;
  std::uint64_t syn_seed = 0;
  synth->add_option("--kind", syn_kind, "benchmark (600x30) or cohort (568x89 with a sex column)")
      ->check(CLI::IsMember({"benchmark", "cohort"}));
  synth->add_option("--seed", syn_seed, "Seed");
  synth->add_option("--out", syn_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(cactus::ErrorClass::Config);
  }

  try {
    if (*run) {
      cactus::RunConfig cfg;
      if (const char* env = std::getenv(kOutDirEnv); env && *env) cfg.out = env;
      if (!run_config_file.empty()) cactus::apply_config_text(cfg, cactus::read_file(run_config_file));
      for (const auto& [key, help] : run_keys)
        if (run_opts[key]->count() > 0) cactus::apply_setting(cfg, key, run_values[key]);
      const auto outcome = cactus::cmd_run(cfg);
      for (const auto& m : outcome.experiment.models)
        std::cout << m.model << ": stability mean " << m.stability.aggregate_mean << " (sd "
                  << m.stability.aggregate_std << ")\n";
      std::cout << "artifacts written to " << cfg.out.string() << '\n';
    } else if (*heatmap) {
      std::optional<std::size_t> k;
      if (hm_k_opt->count() > 0) k = hm_k;
      const auto table = cactus::cmd_heatmap(hm_model, hm_report, hm_out, k);
      std::cout << table.size() << " rows written to " << hm_out << '\n';
    } else if (*compare) {
      std::vector<std::filesystem::path> files(cmp_reports.begin(), cmp_reports.end());
      const auto result = cactus::cmd_compare(files, cactus::parse_levels(cmp_levels), cmp_k, cmp_out);
      std::cout << cactus::ranking_csv(result);
    } else if (*import) {
      std::optional<std::string> model, tag;
      if (imp_model_opt->count() > 0) model = imp_model;
      if (imp_tag_opt->count() > 0) tag = imp_tag;
      write_report(cactus::import_external_report(imp_path, model, tag), imp_out);
    } else if (*fit) {
      const auto data = cactus::load_csv(bl_input, bl_target);
      const auto forest = cactus::fit_forest(data, bl_params);
      write_report(cactus::forest_importance(forest, bl_tag.empty() ? data.name() : bl_tag), bl_out);
    } else if (*synth) {
      const auto cohort = syn_kind == "cohort" ? cactus::make_cohort_shaped(syn_seed)
                                               : cactus::make_benchmark_cohort(syn_seed);
      cactus::write_csv(cohort.data, syn_out);
      std::cout << "informative features:";
      for (const auto& f : cohort.informative) std::cout << ' ' << f;
      std::cout << '\n';
    }
  } catch (const cactus::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.error_class());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return exit_code(cactus::ErrorClass::Internal);
  }
  return 0;
}
