#include "imbalkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "imbalkit/error.hpp"

namespace imbalkit {

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

void require_both_classes(std::span<const int> labels) {
  bool pos = false, neg = false;
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0 or 1");
    (y == 1 ? pos : neg) = true;
  }
  if (!pos || !neg) throw DataError("labels contain a single class; AUC is undefined");
}

}  // namespace

ConfusionMatrix confusion(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size()) {
    throw std::invalid_argument("confusion: " + std::to_string(labels.size()) + " labels vs " +
                                std::to_string(predictions.size()) + " predictions");
  }
  if (labels.empty()) throw std::invalid_argument("confusion: empty input");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool y = labels[i] == 1;
    const bool p = predictions[i] == 1;
    if (y && p) ++cm.tp;
    else if (y) ++cm.fn;
    else if (p) ++cm.fp;
    else ++cm.tn;
  }
  return cm;
}

double iba(double recall, double specificity, double alpha) {
  return (1.0 + alpha * (recall - specificity)) * recall * specificity;
}

ThresholdMetrics metrics_from_confusion(const ConfusionMatrix& cm, double iba_alpha, MacroF1 f1) {
  const auto tp = static_cast<double>(cm.tp);
  const auto fp = static_cast<double>(cm.fp);
  const auto tn = static_cast<double>(cm.tn);
  const auto fn = static_cast<double>(cm.fn);
  ThresholdMetrics m{};
  m.accuracy = ratio(tp + tn, tp + tn + fp + fn);
  // Class 0 treats negatives as its positives.
  const double p1 = ratio(tp, tp + fp), p0 = ratio(tn, tn + fn);
  const double r1 = ratio(tp, tp + fn), r0 = ratio(tn, tn + fp);
  m.macro_precision = (p1 + p0) / 2.0;
  m.macro_recall = (r1 + r0) / 2.0;
  if (f1 == MacroF1::harmonic_of_macros) {
    m.macro_f1 = ratio(2.0 * m.macro_precision * m.macro_recall, m.macro_precision + m.macro_recall);
  } else {
    m.macro_f1 = (ratio(2.0 * p1 * r1, p1 + r1) + ratio(2.0 * p0 * r0, p0 + r0)) / 2.0;
  }
  m.recall = r1;
  m.specificity = r0;
  m.g_mean = std::sqrt(r1 * r0);
  m.iba = iba(r1, r0, iba_alpha);
  return m;
}

EvaluationReport evaluate(std::span<const double> probabilities, std::span<const int> labels, double threshold,
                          double iba_alpha, MacroF1 f1) {
  if (probabilities.size() != labels.size()) {
    throw std::invalid_argument("evaluate: " + std::to_string(probabilities.size()) + " probabilities vs " +
                                std::to_string(labels.size()) + " labels");
  }
  require_both_classes(labels);
  std::vector<int> predicted(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = probabilities[i];
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("evaluate: probability outside [0, 1]");
    predicted[i] = p >= threshold ? 1 : 0;
  }
  EvaluationReport r;
  r.threshold = threshold;
  r.confusion = confusion(labels, predicted);
  const auto m = metrics_from_confusion(r.confusion, iba_alpha, f1);
  r.accuracy = m.accuracy;
  r.macro_precision = m.macro_precision;
  r.macro_recall = m.macro_recall;
  r.macro_f1 = m.macro_f1;
  r.recall = m.recall;
  r.specificity = m.specificity;
  r.g_mean = m.g_mean;
  r.iba = m.iba;
  r.auc = roc_auc(probabilities, labels);
  return r;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("roc_auc: length mismatch");
  require_both_classes(labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  double n_pos = 0.0;
  for (std::size_t start = 0; start < n;) {
    std::size_t stop = start;
    while (stop < n && scores[order[stop]] == scores[order[start]]) ++stop;
    // Ranks start..stop-1 (1-based: start+1..stop) share their mean.
    const double midrank = 0.5 * static_cast<double>(start + 1 + stop);
    for (std::size_t t = start; t < stop; ++t) {
      if (labels[order[t]] == 1) {
        rank_sum += midrank;
        n_pos += 1.0;
      }
    }
    start = stop;
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("roc_curve: length mismatch");
  require_both_classes(labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double pos = 0.0, neg = 0.0;
  for (int y : labels) (y == 1 ? pos : neg) += 1.0;

  RocCurve curve;
  curve.fpr.push_back(0.0);
  curve.tpr.push_back(0.0);
  curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  double tp = 0.0, fp = 0.0;
  for (std::size_t start = 0; start < n;) {
    std::size_t stop = start;
    while (stop < n && scores[order[stop]] == scores[order[start]]) {
      (labels[order[stop]] == 1 ? tp : fp) += 1.0;
      ++stop;
    }
    curve.fpr.push_back(fp / neg);
    curve.tpr.push_back(tp / pos);
    curve.thresholds.push_back(scores[order[start]]);
    start = stop;
  }
  return curve;
}

nlohmann::ordered_json report_to_json(const EvaluationReport& r) {
  return {{"accuracy", r.accuracy},
          {"macro_precision", r.macro_precision},
          {"macro_recall", r.macro_recall},
          {"macro_f1", r.macro_f1},
          {"auc", r.auc},
          {"specificity", r.specificity},
          {"g_mean", r.g_mean},
          {"iba", r.iba},
          {"recall", r.recall},
          {"threshold", r.threshold},
          {"confusion", {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn}, {"fn", r.confusion.fn}}}};
}

}  // namespace imbalkit
