#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "imbalkit/model_spec.hpp"
#include "imbalkit/tabular.hpp"

namespace imbalkit {

// ---------------------------------------------------------------------------
// Primitives

double sigmoid(double z);

/// 1 / (1 + exp(-(intercept + weights . x))).
struct LinearParams;
double logistic_response(const LinearParams& params, std::span<const double> x);

/// Shannon entropy in bits of a two-class count vector; 0 log 0 = 0.
double entropy_impurity(std::array<double, 2> class_counts);
double gini_impurity(std::array<double, 2> class_counts);

/// Running target statistic over a permutation: the row at position t gets
/// (sum of earlier same-category targets + a * prior) / (earlier count + a).
/// Category keys are codes rounded to the nearest integer.
std::vector<double> ordered_target_statistics(std::span<const double> codes,
                                              std::span<const int> target,
                                              std::span<const std::size_t> permutation,
                                              double prior, double smoothing);

// ---------------------------------------------------------------------------
// Fitted parameters

enum class Penalty { l2, l1, none };

struct LinearParams {
  double intercept = 0.0;
  Vector weights;
  Penalty penalty = Penalty::l2;
  double C = 1.0;
  int iterations = 0;
};

struct LogisticModel {
  LinearParams params;
};

enum class Criterion { entropy, gini };

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double impurity = 0.0;
  double value = 0.0;   // class-1 fraction of the node sample
  double weight = 0.0;  // node sample weight (bootstrap multiplicities count)
  // Split nodes only.
  double information_gain = 0.0;
  // (w * I - wL * IL - wR * IR) / w_root
  double weighted_impurity_decrease = 0.0;
  // Accepted because a two-level lookahead gains although the split alone
  // does not (parity patterns such as XOR).
  bool lookahead = false;

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  Criterion criterion = Criterion::entropy;
  std::size_t n_features = 0;

  double predict(std::span<const double> x) const;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
};

struct DecisionTreeModel {
  DecisionTree tree;
};

struct RegressionNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf score -G/(H + lambda)
  double gradient_sum = 0.0;
  double hessian_sum = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<RegressionNode> nodes;
  double predict(std::span<const double> x) const;
};

struct GbtSplitRecord {
  std::size_t tree = 0;
  int feature = 0;
  double gain = 0.0;            // second-order split gain G_s
  double loss_reduction = 0.0;  // exact training log-loss decrease of the split
};

enum class CategoricalHandling { plain_codes, ordered_target_stats };

/// Category -> encoded value learned on the full training set.
struct TargetStatTable {
  std::map<long long, double> encoding;
  double prior = 0.5;
  double encode(double code) const;
};

struct GbtModel {
  std::vector<RegressionTree> trees;
  double learning_rate = 0.1;
  double base_log_odds = 0.0;
  double l2_leaf_reg = 1.0;
  int max_bins = 0;
  CategoricalHandling categorical = CategoricalHandling::plain_codes;
  std::vector<GbtSplitRecord> splits;
  // One entry per feature; present only for encoded categorical columns.
  std::vector<std::optional<TargetStatTable>> target_stats;

  /// base_log_odds + learning_rate * sum_k f_k(x) over the first `n_trees`.
  double raw_score(std::span<const double> x, std::size_t n_trees) const;
  double raw_score(std::span<const double> x) const { return raw_score(x, trees.size()); }
};

/// Per-column centering and scaling (population sd, 0 treated as 1).
/// Default-constructed means identity.
struct Standardizer {
  Vector mean;
  Vector scale;

  bool active() const { return mean.size() > 0; }
  static Standardizer fit(const Matrix& X);
  Matrix apply(const Matrix& X) const;
  void apply(std::span<const double> x, std::vector<double>& out) const;
};

enum class Kernel { rbf, linear };

struct SvmModel {
  Kernel kernel = Kernel::rbf;
  double gamma = 1.0;
  double C = 1.0;
  Matrix support_vectors;
  Vector dual_coef;  // alpha_i * y_i
  double bias = 0.0;
  // Platt scaling: P(y=1|f) = 1 / (1 + exp(platt_a * f + platt_b)).
  double platt_a = -1.0;
  double platt_b = 0.0;
  // Diagnostics.
  std::vector<double> dual_objective;  // after each optimizer epoch
  Vector slacks;                       // hinge slack per training row
  double primal_objective = 0.0;
  std::size_t iterations = 0;
  Standardizer input;

  double decision(std::span<const double> x) const;
};

struct NaiveBayesModel {
  std::array<double, 2> log_prior{};
  Matrix means;      // 2 x d
  Matrix variances;  // 2 x d, smoothing included
};

struct KnnModel {
  Matrix points;
  std::vector<int> labels;
  int k = 5;
  bool distance_weighted = false;
  Standardizer input;
};

enum class Activation { tanh, relu };

/// Dense layers; weights[l] is fan_in x fan_out, the last layer has one
/// sigmoid unit.
struct MlpNetwork {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Activation activation = Activation::tanh;

  std::size_t parameter_count() const;
  Vector flatten() const;
  void unflatten(const Vector& flat);
};

struct MlpModel {
  MlpNetwork network;
  Vector input_mean;
  Vector input_scale;
  std::vector<double> loss_curve;
  int epochs = 0;
};

/// Mean log-loss plus alpha / (2 n) * sum of squared weights on already
/// standardized inputs. When `gradient` is given it receives dLoss/dparams
/// with the network's shapes.
double mlp_loss(const MlpNetwork& network, const Matrix& X, std::span<const int> y, double alpha,
                MlpNetwork* gradient = nullptr);

using ModelParams = std::variant<LogisticModel, DecisionTreeModel, ForestModel, GbtModel,
                                 SvmModel, NaiveBayesModel, KnnModel, MlpModel>;

struct TrainedModel {
  ModelSpec spec;
  ModelParams params;
  std::vector<std::string> feature_names;

  Algorithm algorithm() const { return spec.algorithm; }
};

// ---------------------------------------------------------------------------
// Training and inference

/// Trains the classifier named by spec.algorithm. Requires both classes and
/// finite features. Deterministic for a given (spec, data).
TrainedModel fit_model(const ModelSpec& spec, const EncodedMatrix& train);

/// Class-1 probabilities, one per row.
std::vector<double> predict_proba(const TrainedModel& model, const Matrix& X);
/// As above, also checking column names against training.
std::vector<double> predict_proba(const TrainedModel& model, const EncodedMatrix& X);

std::vector<int> predict_class(std::span<const double> probabilities, double threshold = 0.5);

// Algorithm-specific trainers (used by fit_model; exposed for tests).
LogisticModel fit_logistic(const ModelSpec& spec, const EncodedMatrix& train);
DecisionTree fit_tree(const ModelSpec& spec, const EncodedMatrix& train,
                      std::span<const double> sample_weight, std::uint64_t feature_seed);
ForestModel fit_forest(const ModelSpec& spec, const EncodedMatrix& train, std::size_t threads = 0);
GbtModel fit_gbt(const ModelSpec& spec, const EncodedMatrix& train);
SvmModel fit_svm(const ModelSpec& spec, const EncodedMatrix& train);
NaiveBayesModel fit_naive_bayes(const ModelSpec& spec, const EncodedMatrix& train);
KnnModel fit_knn(const ModelSpec& spec, const EncodedMatrix& train);
MlpModel fit_mlp(const ModelSpec& spec, const EncodedMatrix& train);

double predict_one(const LogisticModel& m, std::span<const double> x);
double predict_one(const DecisionTreeModel& m, std::span<const double> x);
double predict_one(const ForestModel& m, std::span<const double> x);
double predict_one(const GbtModel& m, std::span<const double> x);
double predict_one(const SvmModel& m, std::span<const double> x);
double predict_one(const NaiveBayesModel& m, std::span<const double> x);
double predict_one(const KnnModel& m, std::span<const double> x);
std::vector<double> predict_batch(const MlpModel& m, const Matrix& X);

// ---------------------------------------------------------------------------
// Randomized hyperparameter search

struct ParamDistribution {
  enum class Type { choices, int_uniform, real_uniform, log_uniform };
  Type type = Type::choices;
  std::vector<ParamValue> values;  // choices
  double low = 0.0;                // inclusive bounds for the numeric types
  double high = 0.0;

  static ParamDistribution choice(std::vector<ParamValue> values);
  static ParamDistribution int_uniform(std::int64_t low, std::int64_t high);
  static ParamDistribution real_uniform(double low, double high);
  static ParamDistribution log_uniform(double low, double high);
};

using SearchSpace = std::map<std::string, ParamDistribution>;

SearchSpace search_space_from_json(const nlohmann::json& doc);

struct SearchOptions {
  int n_iter = 10;
  int folds = 10;
  std::optional<SmoteOptions> resampler;
  std::uint64_t seed = 0;
};

struct SearchCandidate {
  ModelSpec spec;
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
};

struct SearchResult {
  ModelSpec best;
  std::vector<SearchCandidate> candidates;  // in sampling order
};

/// Samples n_iter specs (without replacement when every key is a finite
/// choice list), scores each by mean stratified k-fold accuracy with the
/// resampler applied to training folds only, and returns the first best.
SearchResult tune_random_search(const ModelSpec& base, const SearchSpace& space,
                                const EncodedMatrix& train, const SearchOptions& options);

// ---------------------------------------------------------------------------
// Serialization

inline constexpr int kModelFormatVersion = 1;

nlohmann::ordered_json model_to_json(const TrainedModel& model);
/// Throws ConfigError for unknown format versions or malformed documents.
TrainedModel model_from_json(const nlohmann::json& doc);

}  // namespace imbalkit
