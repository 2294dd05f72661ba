#include <gtest/gtest.h>

#include <random>

#include "imbalkit/error.hpp"
#include "imbalkit/metrics.hpp"
#include "oracles.hpp"

using namespace imbalkit;

TEST(Metrics, MatchBruteForceOnRandomConfusions) {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> cell(0, 60);
  for (int trial = 0; trial < 300; ++trial) {
    ConfusionMatrix cm{cell(gen), cell(gen), cell(gen), cell(gen)};
    if (cm.total() == 0) continue;
    auto m = metrics_from_confusion(cm);
    auto o = oracle::brute_force_metrics(cm);
    EXPECT_NEAR(m.accuracy, o.accuracy, 1e-12);
    EXPECT_NEAR(m.macro_precision, o.macro_precision, 1e-12);
    EXPECT_NEAR(m.macro_recall, o.macro_recall, 1e-12);
    EXPECT_NEAR(m.macro_f1, o.macro_f1, 1e-12);
    EXPECT_NEAR(m.specificity, o.specificity, 1e-12);
    EXPECT_NEAR(m.g_mean, o.g_mean, 1e-12);
    EXPECT_NEAR(m.iba, o.iba, 1e-12);
  }
}

TEST(Metrics, NoPredictedPositivesGivesZeroPrecision) {
  auto m = metrics_from_confusion({0, 0, 90, 10});
  EXPECT_DOUBLE_EQ(m.macro_precision, 0.45);
  EXPECT_DOUBLE_EQ(m.macro_recall, 0.5);
  EXPECT_DOUBLE_EQ(m.g_mean, 0.0);
}

TEST(Metrics, MeanOfClassF1Alternative) {
  ConfusionMatrix cm{40, 10, 45, 5};
  auto m = metrics_from_confusion(cm, 0.1, MacroF1::mean_of_class_f1);
  double f1_pos = 2.0 * 40 / (2.0 * 40 + 10 + 5), f1_neg = 2.0 * 45 / (2.0 * 45 + 5 + 10);
  EXPECT_NEAR(m.macro_f1, 0.5 * (f1_pos + f1_neg), 1e-12);
}

TEST(Metrics, IbaDefinition) {
  EXPECT_DOUBLE_EQ(iba(0.8, 0.6), (1.0 + 0.1 * 0.2) * 0.48);
  EXPECT_DOUBLE_EQ(iba(0.5, 0.5, 0.3), 0.25);
}

TEST(Metrics, EvaluateUsesThreshold) {
  std::vector<double> p = {0.1, 0.4, 0.6, 0.9};
  std::vector<int> y = {0, 1, 0, 1};
  auto r = evaluate(p, y, 0.5);
  EXPECT_EQ(r.confusion, (ConfusionMatrix{1, 1, 1, 1}));
  auto r2 = evaluate(p, y, 0.35);
  EXPECT_EQ(r2.confusion.tp, 2);
  EXPECT_DOUBLE_EQ(r.auc, 0.75);
}

TEST(Metrics, SingleClassLabelsRejected) {
  std::vector<double> p = {0.1, 0.2};
  std::vector<int> y = {1, 1};
  EXPECT_THROW(evaluate(p, y), DataError);
}

TEST(Auc, MatchesPairCountingWithTies) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 2 + gen() % 150;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(gen() % 12) / 11.0;
      y[i] = static_cast<int>(gen() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    EXPECT_NEAR(roc_auc(s, y), oracle::pairwise_auc(s, y), 1e-12);
  }
}

TEST(Roc, CurveEndpointsAndTrapezoidArea) {
  std::vector<double> s = {0.9, 0.8, 0.8, 0.3, 0.2, 0.1};
  std::vector<int> y = {1, 0, 1, 1, 0, 0};
  RocCurve c = roc_curve(s, y);
  EXPECT_EQ(c.fpr.front(), 0.0);
  EXPECT_EQ(c.tpr.front(), 0.0);
  EXPECT_TRUE(std::isinf(c.thresholds.front()));
  EXPECT_EQ(c.fpr.back(), 1.0);
  EXPECT_EQ(c.tpr.back(), 1.0);
  double area = 0.0;
  for (std::size_t i = 1; i < c.fpr.size(); ++i) area += (c.fpr[i] - c.fpr[i - 1]) * (c.tpr[i] + c.tpr[i - 1]) / 2;
  EXPECT_NEAR(area, roc_auc(s, y), 1e-12);
}

TEST(Report, JsonCarriesEveryMetric) {
  std::vector<double> p = {0.2, 0.7, 0.4, 0.9};
  std::vector<int> y = {0, 1, 1, 0};
  auto j = report_to_json(evaluate(p, y));
  for (const char* key : {"accuracy", "macro_precision", "macro_recall", "macro_f1", "auc", "specificity", "g_mean", "iba"})
    EXPECT_TRUE(j.contains(key)) << key;
}
