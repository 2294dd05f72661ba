#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace imbalkit {

struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const int> labels, std::span<const int> predictions);

/// How macro F1 is formed from per-class precision and recall.
enum class MacroF1 {
  harmonic_of_macros,  // 2 maP maR / (maP + maR)
  mean_of_class_f1,
};

struct EvaluationReport {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double auc = 0.0;
  double recall = 0.0;  // positive class
  double specificity = 0.0;
  double g_mean = 0.0;
  double iba = 0.0;
  ConfusionMatrix confusion;
  double threshold = 0.5;
};

struct ThresholdMetrics {
  double accuracy, macro_precision, macro_recall, macro_f1, recall, specificity, g_mean, iba;
};

/// Threshold metrics from counts alone. A class with no predicted rows has
/// precision 0.
ThresholdMetrics metrics_from_confusion(const ConfusionMatrix& cm, double iba_alpha = 0.1,
                                        MacroF1 f1 = MacroF1::harmonic_of_macros);

/// Throws DataError when `labels` holds a single class.
EvaluationReport evaluate(std::span<const double> probabilities, std::span<const int> labels,
                          double threshold = 0.5, double iba_alpha = 0.1,
                          MacroF1 f1 = MacroF1::harmonic_of_macros);

/// Mann-Whitney AUC with midranks for ties.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct RocCurve {
  std::vector<double> fpr;
  std::vector<double> tpr;
  std::vector<double> thresholds;  // thresholds[0] is +inf
};

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels);

/// (1 + alpha (recall - specificity)) * recall * specificity
double iba(double recall, double specificity, double alpha = 0.1);

nlohmann::ordered_json report_to_json(const EvaluationReport& report);

}  // namespace imbalkit
