#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "imbalkit/learners.hpp"
#include "imbalkit/stacking.hpp"

namespace imbalkit {

/// Black-box class-1 probabilities for a batch of rows. Must be reentrant.
using BatchPredict = std::function<std::vector<double>(const Matrix&)>;

/// The model must outlive the returned function.
BatchPredict predictor(const TrainedModel& model);
BatchPredict predictor(const StackedModel& model);

struct Attribution {
  std::vector<std::string> feature_names;
  std::vector<double> values;  // phi per feature
  double base_value = 0.0;
  double prediction = 0.0;
  std::string method;  // shapley-exact, shapley-sampled, lime, ...
};

inline constexpr int kExactShapleyMaxFeatures = 15;

/// Interventional Shapley values by enumeration of all 2^d coalitions.
/// std::invalid_argument when d exceeds max_features.
Attribution shapley_exact(const BatchPredict& predict, std::span<const double> x, const Matrix& background,
                          int max_features = kExactShapleyMaxFeatures);

/// Permutation-sampling estimate. When n_permutations is a multiple of d!
/// every ordering is visited equally often; otherwise orderings are drawn in
/// antithetic (reversed) pairs.
Attribution shapley_sampled(const BatchPredict& predict, std::span<const double> x, const Matrix& background,
                            int n_permutations, std::uint64_t seed);

struct LimeConfig {
  double sigma = 0.0;  // <= 0 selects 0.75 * sqrt(d)
  int n_samples = 5000;
  double ridge = 1e-3;
  // Per feature: perturbation scale for continuous columns and categorical
  // marginals; see lime_config_from.
  std::vector<ColumnKind> kinds;
  std::vector<double> scale;
  std::vector<std::vector<double>> category_values;
  std::vector<std::vector<double>> category_weights;
};

/// Column kinds, standard deviations and category frequencies of `train`.
LimeConfig lime_config_from(const EncodedMatrix& train);

struct SurrogateFit {
  std::vector<double> coefficients;  // on raw feature scale
  double intercept = 0.0;            // g(z) = intercept + coefficients . z
  double local_prediction = 0.0;     // g(x)
  double r2 = 0.0;                   // kernel-weighted
  std::vector<double> kernel_weights;
  double ridge_used = 0.0;
};

/// exp(-d^2 / sigma^2) for a standardized distance d.
double lime_kernel(double distance, double sigma);

SurrogateFit lime_explain(const BatchPredict& predict, std::span<const double> x, const LimeConfig& config,
                          std::uint64_t seed);

struct ImportanceReport {
  std::vector<std::string> feature_names;
  std::vector<double> scores;  // >= 0
  std::vector<double> raw;     // before clamping
  std::string method;
  bool normalized = false;
};

ImportanceReport normalized(ImportanceReport report);

/// Sum over trees and split nodes of the weighted impurity decrease.
ImportanceReport impurity_importance(const TrainedModel& model);

struct GbtImportances {
  ImportanceReport split_count;
  ImportanceReport gain;
  ImportanceReport loss_reduction;  // per-iteration average
};

GbtImportances gbt_importances(const GbtModel& model, const std::vector<std::string>& feature_names);
GbtImportances gbt_importances(const TrainedModel& model);

/// Baseline metric minus the mean metric after shuffling each column.
ImportanceReport permutation_importance(const BatchPredict& predict, const EncodedMatrix& data,
                                        const std::string& metric, int n_repeats, std::uint64_t seed);
ImportanceReport permutation_importance(const TrainedModel& model, const EncodedMatrix& data,
                                        const std::string& metric, int n_repeats, std::uint64_t seed);

nlohmann::ordered_json attribution_to_json(const Attribution& a);
nlohmann::ordered_json importance_to_json(const ImportanceReport& r);

}  // namespace imbalkit
