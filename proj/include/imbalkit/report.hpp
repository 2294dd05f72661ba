#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "imbalkit/metrics.hpp"
#include "imbalkit/stats.hpp"
#include "imbalkit/tabular.hpp"

namespace imbalkit {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Run configuration

struct ModelEntry {
  std::string name;
  AnySpec spec;
};

struct TuningConfig {
  SearchSpace space;
  int n_iter = 10;
  int folds = 10;
};

struct ExplainConfig {
  std::string model;
  std::string instances = "0..2";
  int global_rows = 50;
  int permutations = 16;
  int background = 20;
  int lime_samples = 1000;
  double lime_sigma = 0.0;
  int permutation_repeats = 5;
};

struct PsychometricsConfig {
  std::map<std::string, std::vector<std::string>> scales;  // scale -> item columns
  std::vector<std::string> efa_columns;
  int efa_factors = 3;
};

struct RunConfig {
  std::filesystem::path dataset;
  std::filesystem::path schema;
  std::string target;
  std::uint64_t seed = 42;
  double test_fraction = 0.2;
  std::optional<SmoteOptions> smote = SmoteOptions{};
  // Oversample before the split so the test set also holds synthetic rows.
  bool resample_test = false;
  bool strict_categories = true;
  std::vector<ModelEntry> models;
  std::map<std::string, TuningConfig> tuning;
  int cv_folds = 10;
  std::string reference;
  double compare_alpha = 0.05;
  std::string compare_metric = "accuracy";
  double eda_alpha = 0.10;
  ExplainConfig explain;
  PsychometricsConfig psychometrics;
  std::filesystem::path out_dir = "out";
  std::string config_sha256;  // of the config document bytes
};

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  bool resample_test = false;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::string> model;      // explain
  std::optional<std::string> instances;  // explain
};

/// Relative paths resolve against `base_dir`. Throws ConfigError.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                           const ConfigOverrides& overrides = {});
RunConfig load_run_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

/// Model roster presets: "core" (the eight tuned algorithms plus an mlp+gbt
/// stack) and "paper" (all tuned presets plus the ann+catboost+rf and
/// ann+catboost stacks).
std::vector<ModelEntry> roster_preset(const std::string& name, std::uint64_t seed);

/// "0..2" -> {0, 1, 2}; "1,4,7" -> {1, 4, 7}.
std::vector<std::size_t> parse_instance_selector(const std::string& text);

// ---------------------------------------------------------------------------
// Commands

struct ReportBundle {
  std::filesystem::path out_dir;
  std::vector<std::string> files;  // relative to out_dir
  std::map<std::string, std::string> model_status;
  int exit_code = 0;
};

ReportBundle cmd_eda(const RunConfig& config);
ReportBundle cmd_benchmark(const RunConfig& config);
ReportBundle cmd_compare(const RunConfig& config);
ReportBundle cmd_explain(const RunConfig& config);

// ---------------------------------------------------------------------------
// Artifacts

/// Writes via a temporary sibling file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Merges the command entry into out_dir/run-manifest.json and relists every
/// file under out_dir with its hash.
void update_manifest(const std::filesystem::path& out_dir, const std::string& command, const RunConfig& config,
                     const nlohmann::ordered_json& entry);

// ---------------------------------------------------------------------------
// SVG

struct RocSeries {
  std::string name;
  RocCurve curve;
  double auc = 0.0;
};

std::string roc_svg(const std::vector<RocSeries>& series, const std::string& title);
std::string heatmap_svg(const std::vector<std::string>& names, const Eigen::MatrixXd& values, const std::string& title);
std::string bar_svg(const std::vector<std::string>& labels, const std::vector<double>& values, const std::string& title);

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticOptions {
  std::size_t rows = 2000;
  std::size_t positives = 308;
  std::uint64_t seed = 2024;
};

/// Survey-like data: 22 mixed-kind features plus a binary target with an
/// exact positive count and a nonlinear signal.
Dataset generate_synthetic(const SyntheticOptions& options);
std::string dataset_to_csv(const Dataset& dataset);

}  // namespace imbalkit
