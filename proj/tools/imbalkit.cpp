#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "imbalkit/error.hpp"
#include "imbalkit/log.hpp"
#include "imbalkit/report.hpp"

namespace fs = std::filesystem;
using namespace imbalkit;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

nlohmann::ordered_json starter_config() {
  return {{"dataset", "synthetic.csv"},
          {"schema", "synthetic.schema.json"},
          {"target", "abused"},
          {"seed", 42},
          {"test_fraction", 0.2},
          {"smote", {{"enabled", true}, {"k_neighbors", 5}}},
          {"models", "core"},
          {"cv_folds", 10},
          {"explain", {{"instances", "0..2"}, {"global_rows", 50}, {"permutations", 16}, {"background", 20}}},
          {"psychometrics",
           {{"scales",
             {{"verbal", {"verbal_1", "verbal_2", "verbal_3"}},
              {"control", {"control_1", "control_2", "control_3"}},
              {"physical", {"physical_1", "physical_2", "physical_3"}}}},
            {"efa",
             {{"columns",
               {"verbal_1", "verbal_2", "verbal_3", "control_1", "control_2", "control_3", "physical_1", "physical_2",
                "physical_3"}},
              {"factors", 3}}}}},
          {"out", "out"}};
}

int synth(const fs::path& dir, const SyntheticOptions& options) {
  Dataset data = generate_synthetic(options);
  write_file_atomic(dir / "synthetic.csv", dataset_to_csv(data));
  write_file_atomic(dir / "synthetic.schema.json", schema_to_json(data.schema).dump(2) + "\n");
  if (!fs::exists(dir / "config.json")) write_file_atomic(dir / "config.json", starter_config().dump(2) + "\n");
  std::cout << "wrote " << (dir / "synthetic.csv").string() << " (" << data.rows.size() << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Imbalanced tabular classification toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool resample_test = false;
  std::optional<std::string> out_dir;
  std::optional<std::string> model;
  std::optional<std::string> instances;
  bool quiet = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the configured seed");
    sub->add_flag("--resample-test", resample_test, "Oversample before the train/test split");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_flag("-q,--quiet", quiet, "Do not echo warnings");
  };
  CLI::App* eda = app.add_subcommand("eda", "Frequencies, chi-square associations, Cramer's V, psychometrics");
  CLI::App* benchmark = app.add_subcommand("benchmark", "Train and evaluate every roster model on the test split");
  CLI::App* compare = app.add_subcommand("compare", "Cross-validated paired t-tests against the reference model");
  CLI::App* explain = app.add_subcommand("explain", "Shapley, LIME and native importances for one model");
  for (CLI::App* sub : {eda, benchmark, compare, explain}) add_common(sub);
  explain->add_option("--model", model, "Roster model to explain");
  explain->add_option("--instances", instances, "Test-row selector, e.g. 0..2 or 1,5,9");

  CLI::App* synth_cmd = app.add_subcommand("synth", "Write the bundled synthetic dataset, schema and a starter config");
  std::string synth_dir = "data";
  SyntheticOptions synth_options;
  synth_cmd->add_option("--out", synth_dir, "Output directory");
  synth_cmd->add_option("--seed", synth_options.seed, "Generator seed");
  synth_cmd->add_option("--rows", synth_options.rows, "Row count");
  synth_cmd->add_option("--positives", synth_options.positives, "Positive-class count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (synth_cmd->parsed()) return synth(synth_dir, synth_options);

    set_warning_echo(!quiet);
    ConfigOverrides overrides;
    overrides.seed = seed;
    overrides.resample_test = resample_test;
    if (out_dir) overrides.out_dir = fs::path(*out_dir);
    overrides.model = model;
    overrides.instances = instances;
    RunConfig config = load_run_config(config_path, overrides);

    ReportBundle bundle;
    if (eda->parsed()) bundle = cmd_eda(config);
    else if (benchmark->parsed()) bundle = cmd_benchmark(config);
    else if (compare->parsed()) bundle = cmd_compare(config);
    else bundle = cmd_explain(config);

    for (const auto& [name, status] : bundle.model_status)
      if (status != "ok") std::cerr << "model " << name << ": " << status << "\n";
    std::cout << "wrote " << bundle.files.size() << " files under " << bundle.out_dir.string() << "\n";
    return bundle.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
