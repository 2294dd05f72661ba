#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "imbalkit/explain.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace imbalkit;
using testing_support::linear_problem;

namespace {

BatchPredict from_scalar(std::function<double(const std::vector<double>&)> f) {
  return [f](const Matrix& X) {
    std::vector<double> out(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) out[static_cast<std::size_t>(i)] = f({X.row(i).begin(), X.row(i).end()});
    return out;
  };
}

double nonlinear(const std::vector<double>& z) {
  return std::tanh(z[0] * z[1]) + 0.3 * z[2] * z[2] - 0.5 * z[3] + (z.size() > 4 ? z[4] * z[0] : 0.0);
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(gen);
  return m;
}

}  // namespace

TEST(Shapley, ExactMatchesSubsetFormula) {
  Matrix bg = random_matrix(7, 5, 1);
  std::vector<double> x = {0.4, -1.2, 0.9, 2.0, -0.3};
  Attribution a = shapley_exact(from_scalar(nonlinear), x, bg);
  auto phi = oracle::shapley_by_subsets(nonlinear, x, bg);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(a.values[j], phi[j], 1e-12);
  double sum = std::accumulate(a.values.begin(), a.values.end(), 0.0);
  EXPECT_NEAR(a.base_value + sum, a.prediction, 1e-12);
  EXPECT_NEAR(a.prediction, nonlinear(x), 1e-12);
}

TEST(Shapley, ProductGameSplitsEvenly) {
  Matrix bg = Matrix::Zero(1, 2);
  std::vector<double> x = {1.0, 1.0};
  auto f = from_scalar([](const std::vector<double>& z) { return z[0] * z[1]; });
  Attribution a = shapley_exact(f, x, bg);
  EXPECT_NEAR(a.values[0], 0.5, 1e-15);
  EXPECT_NEAR(a.values[1], 0.5, 1e-15);
  Attribution s = shapley_sampled(f, x, bg, 2, 7);
  EXPECT_NEAR(s.values[0], 0.5, 1e-15);
}

TEST(Shapley, LinearModelGivesWeightTimesDeviation) {
  Matrix bg = random_matrix(10, 3, 2);
  std::vector<double> w = {1.5, -2.0, 0.25}, x = {0.3, 0.1, -4.0};
  auto f = from_scalar([&](const std::vector<double>& z) { return w[0] * z[0] + w[1] * z[1] + w[2] * z[2] + 1.0; });
  Attribution a = shapley_exact(f, x, bg);
  for (Eigen::Index j = 0; j < 3; ++j)
    EXPECT_NEAR(a.values[static_cast<std::size_t>(j)], w[static_cast<std::size_t>(j)] * (x[static_cast<std::size_t>(j)] - bg.col(j).mean()), 1e-12);
}

TEST(Shapley, ExactRefusesTooManyFeatures) {
  Matrix bg = Matrix::Zero(1, 4);
  std::vector<double> x(4, 1.0);
  EXPECT_THROW(shapley_exact(from_scalar(nonlinear), x, bg, 3), std::invalid_argument);
}

TEST(Shapley, SampledIsEfficientAndConverges) {
  Matrix bg = random_matrix(5, 5, 3);
  std::vector<double> x = {1.0, -0.5, 0.2, 0.7, -1.1};
  auto f = from_scalar(nonlinear);
  Attribution exact = shapley_exact(f, x, bg);
  Attribution s = shapley_sampled(f, x, bg, 1000, 11);
  double sum = std::accumulate(s.values.begin(), s.values.end(), 0.0);
  EXPECT_NEAR(s.base_value + sum, s.prediction, 1e-10);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(s.values[j], exact.values[j], 0.02);
  // 120 = 5!, so every ordering is visited once and the estimate is exact.
  Attribution full = shapley_sampled(f, x, bg, 120, 11);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(full.values[j], exact.values[j], 1e-12);
}

TEST(Lime, RecoversALinearFunction) {
  EncodedMatrix train = linear_problem(300, 4, 41);
  std::vector<double> w = {0.8, -0.3, 0.0, 1.2};
  auto f = from_scalar([&](const std::vector<double>& z) { return 0.1 + w[0] * z[0] + w[1] * z[1] + w[2] * z[2] + w[3] * z[3]; });
  LimeConfig cfg = lime_config_from(train);
  cfg.n_samples = 2000;
  std::vector<double> x = {0.2, -0.4, 1.0, 0.5};
  SurrogateFit fit = lime_explain(f, x, cfg, 5);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(fit.coefficients[j], w[j], 1e-3);
  EXPECT_GT(fit.r2, 0.999);
  EXPECT_NEAR(fit.local_prediction, f(Matrix::Map(x.data(), 1, 4))[0], 1e-3);
}

TEST(Lime, KernelShape) {
  EXPECT_DOUBLE_EQ(lime_kernel(0.0, 1.0), 1.0);
  EXPECT_NEAR(lime_kernel(2.0, 2.0), std::exp(-1.0), 1e-15);
}

TEST(Importance, PermutationIgnoresUnusedFeature) {
  EncodedMatrix data = linear_problem(200, 3, 42);
  auto f = from_scalar([](const std::vector<double>& z) { return 1.0 / (1.0 + std::exp(-(3 * z[0] + 1.5 * z[1]))); });
  ImportanceReport r = permutation_importance(f, data, "auc", 3, 1);
  EXPECT_EQ(r.raw[2], 0.0);
  EXPECT_GT(r.scores[0], r.scores[1]);
  EXPECT_GT(r.scores[1], 0.0);
}

TEST(Importance, ImpurityOfAStumpIsAllOnTheSplitFeature) {
  EncodedMatrix data = linear_problem(200, 3, 43);
  TrainedModel m = fit_model(make_spec(Algorithm::decision_tree, {{"max_depth", std::int64_t{1}}}), data);
  ImportanceReport r = normalized(impurity_importance(m));
  int split = std::get<DecisionTreeModel>(m.params).tree.nodes[0].feature;
  EXPECT_NEAR(r.scores[static_cast<std::size_t>(split)], 1.0, 1e-12);
  EXPECT_NEAR(std::accumulate(r.scores.begin(), r.scores.end(), 0.0), 1.0, 1e-12);
}

TEST(Importance, GbtSplitCountsMatchRecords) {
  EncodedMatrix data = linear_problem(200, 3, 44);
  TrainedModel m = fit_model(make_spec(Algorithm::gbt, {{"n_estimators", std::int64_t{20}}}), data);
  GbtImportances g = gbt_importances(m);
  const auto& model = std::get<GbtModel>(m.params);
  std::vector<double> counts(3, 0.0);
  for (const auto& s : model.splits) counts[static_cast<std::size_t>(s.feature)] += 1;
  EXPECT_EQ(g.split_count.raw, counts);
  for (double v : g.gain.scores) EXPECT_GE(v, 0.0);
}
