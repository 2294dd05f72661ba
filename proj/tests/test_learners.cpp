#include <gtest/gtest.h>

#include <set>

#include "imbalkit/error.hpp"
#include "imbalkit/learners.hpp"
#include "imbalkit/parallel.hpp"
#include "support.hpp"

using namespace imbalkit;
using testing_support::accuracy;
using testing_support::linear_problem;

namespace {

std::vector<double> row(const Matrix& X, Eigen::Index i) { return {X.row(i).begin(), X.row(i).end()}; }

}  // namespace

TEST(Spec, DefaultsAndValidation) {
  ModelSpec s = make_spec(Algorithm::random_forest);
  EXPECT_EQ(s.get_string("max_features"), "sqrt");
  EXPECT_THROW(make_spec(Algorithm::logistic, {{"bogus", 1.0}}), ConfigError);
  EXPECT_THROW(make_spec(Algorithm::logistic, {{"C", -1.0}}), ConfigError);
  EXPECT_THROW(make_spec(Algorithm::svm, {{"kernel", std::string("poly")}}), ConfigError);
  EXPECT_EQ(make_spec(Algorithm::svm, {{"C", std::int64_t{10}}}).get_double("C"), 10.0);
  EXPECT_EQ(spec_from_json(spec_to_json(s)), s);
}

TEST(Spec, PresetsCarryTunedValues) {
  auto p = paper_presets(1);
  EXPECT_EQ(p.at("rf").get_int("n_estimators"), 500);
  EXPECT_EQ(p.at("rf").get_int("max_depth"), 20);
  EXPECT_EQ(p.at("gbm").get_double("learning_rate"), 0.01);
  EXPECT_EQ(p.at("gbm").get_int("n_estimators"), 200);
  EXPECT_EQ(p.at("ann").get_int_list("hidden_layer_sizes"), (std::vector<std::int64_t>{512, 256, 128}));
}

TEST(Learners, EveryAlgorithmLearnsALinearConcept) {
  EncodedMatrix train = linear_problem(400, 4, 1), test = linear_problem(300, 4, 2);
  for (Algorithm a : all_algorithms()) {
    Hyperparameters hp;
    if (a == Algorithm::mlp) hp = {{"hidden_layer_sizes", std::vector<std::int64_t>{16}}, {"max_iter", std::int64_t{200}}};
    if (a == Algorithm::random_forest) hp = {{"n_estimators", std::int64_t{30}}};
    TrainedModel m = fit_model(make_spec(a, hp, 7), train);
    auto p = predict_proba(m, test);
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_GT(accuracy(p, test.target), a == Algorithm::decision_tree ? 0.75 : 0.85) << to_string(a);
  }
}

TEST(Learners, RefittingIsDeterministic) {
  EncodedMatrix train = linear_problem(200, 3, 4);
  for (Algorithm a : all_algorithms()) {
    Hyperparameters hp;
    if (a == Algorithm::mlp) hp = {{"hidden_layer_sizes", std::vector<std::int64_t>{8}}, {"max_iter", std::int64_t{30}}};
    if (a == Algorithm::random_forest) hp = {{"n_estimators", std::int64_t{10}}};
    if (a == Algorithm::gbt) hp = {{"subsample", 0.7}, {"colsample_bytree", 0.7}};
    ModelSpec s = make_spec(a, hp, 99);
    EXPECT_EQ(predict_proba(fit_model(s, train), train.values), predict_proba(fit_model(s, train), train.values))
        << to_string(a);
  }
}

TEST(Learners, SingleClassTrainingIsDataError) {
  EncodedMatrix train = linear_problem(50, 2, 4);
  std::fill(train.target.begin(), train.target.end(), 1);
  EXPECT_THROW(fit_model(make_spec(Algorithm::logistic), train), DataError);
}

TEST(Logistic, GradientVanishesAtOptimum) {
  EncodedMatrix train = linear_problem(300, 3, 8, 1.0);
  for (const char* penalty : {"l2", "none"}) {
    ModelSpec s = make_spec(Algorithm::logistic, {{"penalty", std::string(penalty)}, {"C", 0.5}});
    LogisticModel m = std::get<LogisticModel>(fit_model(s, train).params);
    // The ridge acts on standardized coefficients: C * sum (p - y) x + w * sd^2.
    Vector g = Vector::Zero(3);
    double g0 = 0.0;
    for (Eigen::Index i = 0; i < 300; ++i) {
      double r = logistic_response(m.params, row(train.values, i)) - train.target[static_cast<std::size_t>(i)];
      g += r * train.values.row(i).transpose();
      g0 += r;
    }
    if (std::string(penalty) == "l2") {
      Vector sd2 = (train.values.rowwise() - train.values.colwise().mean()).array().square().colwise().mean().transpose();
      g = 0.5 * g + m.params.weights.cwiseProduct(sd2);
    }
    EXPECT_LT(g.cwiseAbs().maxCoeff(), 1e-5) << penalty;
    EXPECT_LT(std::abs(g0), 1e-5) << penalty;
  }
}

TEST(Logistic, L1ProducesExactZeros) {
  EncodedMatrix train = linear_problem(300, 6, 3, 0.5);
  for (Eigen::Index i = 0; i < train.values.rows(); ++i) train.values(i, 5) = 0.01 * static_cast<double>(i % 7);
  ModelSpec s = make_spec(Algorithm::logistic, {{"penalty", std::string("l1")}, {"C", 0.05}});
  LogisticModel m = std::get<LogisticModel>(fit_model(s, train).params);
  EXPECT_EQ(m.params.weights[5], 0.0);
}

TEST(Tree, DepthOneStumpMatchesBruteForceGain) {
  EncodedMatrix train = linear_problem(120, 3, 12, 0.8);
  ModelSpec s = make_spec(Algorithm::decision_tree, {{"max_depth", std::int64_t{1}}});
  DecisionTree t = std::get<DecisionTreeModel>(fit_model(s, train).params).tree;
  ASSERT_FALSE(t.nodes[0].is_leaf());

  auto entropy = [](double a, double b) {
    double n = a + b, h = 0.0;
    for (double c : {a, b})
      if (c > 0) h -= c / n * std::log2(c / n);
    return h;
  };
  double pos = 0;
  for (int y : train.target) pos += y;
  const double parent = entropy(pos, 120 - pos);
  double best = -1.0;
  for (int j = 0; j < 3; ++j) {
    for (Eigen::Index c = 0; c < 120; ++c) {
      double thr = train.values(c, j), lp = 0, ln = 0;
      for (Eigen::Index i = 0; i < 120; ++i)
        if (train.values(i, j) <= thr) (train.target[static_cast<std::size_t>(i)] ? lp : ln) += 1;
      double nl = lp + ln, nr = 120 - nl;
      if (nl == 0 || nr == 0) continue;
      double gain = parent - nl / 120 * entropy(lp, ln) - nr / 120 * entropy(pos - lp, 120 - pos - ln);
      best = std::max(best, gain);
    }
  }
  EXPECT_NEAR(t.nodes[0].information_gain, best, 1e-12);
}

TEST(Tree, ImpurityFunctions) {
  EXPECT_DOUBLE_EQ(entropy_impurity({5, 5}), 1.0);
  EXPECT_DOUBLE_EQ(entropy_impurity({0, 7}), 0.0);
  EXPECT_DOUBLE_EQ(gini_impurity({5, 5}), 0.5);
}

TEST(Tree, UnboundedDepthFitsDistinctPoints) {
  EncodedMatrix m = linear_problem(400, 2, 6);
  for (Eigen::Index i = 0; i < 400; ++i)
    m.target[static_cast<std::size_t>(i)] = (m.values(i, 0) > 0) != (m.values(i, 1) > 0);
  TrainedModel t = fit_model(make_spec(Algorithm::decision_tree), m);
  EXPECT_EQ(accuracy(predict_proba(t, m), m.target), 1.0);
}

TEST(Forest, ThreadCountDoesNotChangeTheModel) {
  EncodedMatrix train = linear_problem(200, 4, 3);
  ModelSpec s = make_spec(Algorithm::random_forest, {{"n_estimators", std::int64_t{12}}}, 5);
  ForestModel a = fit_forest(s, train, 1), b = fit_forest(s, train, 3);
  ASSERT_EQ(a.trees.size(), b.trees.size());
  for (Eigen::Index i = 0; i < 20; ++i) EXPECT_EQ(predict_one(a, row(train.values, i)), predict_one(b, row(train.values, i)));
}

TEST(Gbt, NoTreesPredictsPrevalence) {
  EncodedMatrix train = linear_problem(200, 2, 3, 0.3, 0.8);
  double prevalence = 0;
  for (int y : train.target) prevalence += y;
  prevalence /= 200;
  TrainedModel m = fit_model(make_spec(Algorithm::gbt, {{"n_estimators", std::int64_t{0}}}), train);
  EXPECT_NEAR(predict_proba(m, train.values)[0], prevalence, 1e-12);
}

TEST(Gbt, SingleStumpLeavesFollowNewtonStep) {
  EncodedMatrix train = linear_problem(150, 2, 9);
  ModelSpec s = make_spec(Algorithm::gbt, {{"n_estimators", std::int64_t{1}}, {"max_depth", std::int64_t{1}},
                                           {"learning_rate", 0.3}, {"l2_leaf_reg", 2.0}});
  GbtModel g = fit_gbt(s, train);
  const RegressionTree& t = g.trees.at(0);
  ASSERT_FALSE(t.nodes[0].is_leaf());
  const double p0 = 1.0 / (1.0 + std::exp(-g.base_log_odds));
  double G[2] = {0, 0}, H[2] = {0, 0};
  for (Eigen::Index i = 0; i < 150; ++i) {
    int side = train.values(i, t.nodes[0].feature) <= t.nodes[0].threshold ? 0 : 1;
    G[side] += p0 - train.target[static_cast<std::size_t>(i)];
    H[side] += p0 * (1 - p0);
  }
  EXPECT_NEAR(t.nodes[static_cast<std::size_t>(t.nodes[0].left)].value, -G[0] / (H[0] + 2.0), 1e-12);
  EXPECT_NEAR(t.nodes[static_cast<std::size_t>(t.nodes[0].right)].value, -G[1] / (H[1] + 2.0), 1e-12);
  auto x = row(train.values, 0);
  double leaf = x[static_cast<std::size_t>(t.nodes[0].feature)] <= t.nodes[0].threshold
                    ? -G[0] / (H[0] + 2.0)
                    : -G[1] / (H[1] + 2.0);
  EXPECT_NEAR(g.raw_score(x), g.base_log_odds + 0.3 * leaf, 1e-12);
}

TEST(Gbt, OrderedTargetStatisticsUseOnlyEarlierRows) {
  std::vector<double> codes = {0, 0, 1, 0};
  std::vector<int> y = {1, 0, 1, 1};
  std::vector<std::size_t> perm = {0, 1, 2, 3};
  auto ts = ordered_target_statistics(codes, y, perm, 0.5, 1.0);
  EXPECT_DOUBLE_EQ(ts[0], 0.5);
  EXPECT_DOUBLE_EQ(ts[1], 0.75);
  EXPECT_DOUBLE_EQ(ts[2], 0.5);
  EXPECT_DOUBLE_EQ(ts[3], 0.5);
}

TEST(Svm, DualObjectiveNeverIncreases) {
  EncodedMatrix train = linear_problem(300, 3, 21, 3.0);
  SvmModel m = fit_svm(make_spec(Algorithm::svm, {{"C", 2.0}}), train);
  ASSERT_GE(m.dual_objective.size(), 2u);
  for (std::size_t i = 1; i < m.dual_objective.size(); ++i)
    EXPECT_LE(m.dual_objective[i], m.dual_objective[i - 1] + 1e-9);
  for (Eigen::Index i = 0; i < m.dual_coef.size(); ++i) EXPECT_LE(std::abs(m.dual_coef[i]), 2.0 + 1e-12);
  for (Eigen::Index i = 0; i < m.slacks.size(); ++i) EXPECT_GE(m.slacks[i], 0.0);
}

TEST(Svm, LinearKernelSeparatesSeparableData) {
  EncodedMatrix train = linear_problem(100, 2, 2, 0.0);
  SvmModel m = fit_svm(make_spec(Algorithm::svm, {{"kernel", std::string("linear")}, {"C", 100.0}}), train);
  for (Eigen::Index i = 0; i < 100; ++i)
    EXPECT_EQ(m.decision(row(train.values, i)) > 0, train.target[static_cast<std::size_t>(i)] == 1);
}

TEST(NaiveBayes, PosteriorMatchesHandComputation) {
  EncodedMatrix train = linear_problem(60, 2, 5);
  NaiveBayesModel m = fit_naive_bayes(make_spec(Algorithm::naive_bayes, {{"var_smoothing", 0.0}}), train);
  double lj[2];
  std::vector<double> x = {0.3, -0.2};
  for (int c = 0; c < 2; ++c) {
    double n = 0;
    Eigen::Vector2d mean = Eigen::Vector2d::Zero(), var = Eigen::Vector2d::Zero();
    for (Eigen::Index i = 0; i < 60; ++i)
      if (train.target[static_cast<std::size_t>(i)] == c) {
        mean += train.values.row(i).transpose();
        ++n;
      }
    mean /= n;
    for (Eigen::Index i = 0; i < 60; ++i)
      if (train.target[static_cast<std::size_t>(i)] == c) var += (train.values.row(i).transpose() - mean).array().square().matrix();
    var /= n;
    lj[c] = std::log(n / 60);
    for (int j = 0; j < 2; ++j) lj[c] += -0.5 * std::log(2 * M_PI * var[j]) - (x[static_cast<std::size_t>(j)] - mean[j]) * (x[static_cast<std::size_t>(j)] - mean[j]) / (2 * var[j]);
  }
  EXPECT_NEAR(predict_one(m, x), 1.0 / (1.0 + std::exp(lj[0] - lj[1])), 1e-12);
}

TEST(Knn, OneNeighborMemorizesDistinctPoints) {
  EncodedMatrix train = linear_problem(150, 3, 7, 2.0);
  TrainedModel m = fit_model(make_spec(Algorithm::knn, {{"n_neighbors", std::int64_t{1}}}), train);
  EXPECT_EQ(accuracy(predict_proba(m, train), train.target), 1.0);
}

TEST(Knn, UniformVoteMatchesBruteForce) {
  EncodedMatrix train = linear_problem(80, 2, 8, 1.0), probe = linear_problem(20, 2, 9);
  KnnModel m = fit_knn(make_spec(Algorithm::knn, {{"n_neighbors", std::int64_t{5}}, {"standardize", std::string("no")}}), train);
  for (Eigen::Index q = 0; q < 20; ++q) {
    std::vector<std::pair<double, int>> d;
    for (Eigen::Index i = 0; i < 80; ++i)
      d.push_back({(train.values.row(i) - probe.values.row(q)).norm(), train.target[static_cast<std::size_t>(i)]});
    std::sort(d.begin(), d.end());
    double votes = 0;
    for (int k = 0; k < 5; ++k) votes += d[static_cast<std::size_t>(k)].second;
    EXPECT_DOUBLE_EQ(predict_one(m, row(probe.values, q)), votes / 5);
  }
}

TEST(Mlp, BackpropMatchesFiniteDifferences) {
  EncodedMatrix train = linear_problem(30, 3, 10);
  MlpModel m = fit_mlp(make_spec(Algorithm::mlp, {{"hidden_layer_sizes", std::vector<std::int64_t>{4, 3}},
                                                  {"max_iter", std::int64_t{2}}}),
                       train);
  MlpNetwork grad;
  const double alpha = 0.01;
  mlp_loss(m.network, train.values, train.target, alpha, &grad);
  Vector flat = m.network.flatten(), g = grad.flatten();
  for (Eigen::Index k = 0; k < flat.size(); k += 3) {
    MlpNetwork plus = m.network, minus = m.network;
    Vector fp = flat, fm = flat;
    fp[k] += 1e-6;
    fm[k] -= 1e-6;
    plus.unflatten(fp);
    minus.unflatten(fm);
    double numeric = (mlp_loss(plus, train.values, train.target, alpha) - mlp_loss(minus, train.values, train.target, alpha)) / 2e-6;
    EXPECT_NEAR(g[k], numeric, 1e-6);
  }
}

TEST(Serialization, RoundTripPreservesPredictions) {
  EncodedMatrix train = linear_problem(120, 3, 14);
  for (Algorithm a : all_algorithms()) {
    Hyperparameters hp;
    if (a == Algorithm::mlp) hp = {{"hidden_layer_sizes", std::vector<std::int64_t>{6}}, {"max_iter", std::int64_t{20}}};
    if (a == Algorithm::random_forest) hp = {{"n_estimators", std::int64_t{5}}};
    if (a == Algorithm::gbt) hp = {{"categorical", std::string("ordered-target-stats")}};
    TrainedModel m = fit_model(make_spec(a, hp, 3), train);
    TrainedModel back = model_from_json(nlohmann::json::parse(model_to_json(m).dump()));
    EXPECT_EQ(predict_proba(m, train.values), predict_proba(back, train.values)) << to_string(a);
    EXPECT_EQ(back.spec, m.spec);
  }
}

TEST(Serialization, UnknownVersionRejected) {
  TrainedModel m = fit_model(make_spec(Algorithm::naive_bayes), linear_problem(40, 2, 1));
  auto doc = model_to_json(m);
  doc["format_version"] = 99;
  EXPECT_THROW(model_from_json(nlohmann::json::parse(doc.dump())), ConfigError);
}

TEST(Search, GridSamplesAreDistinctAndBestIsFirstMaximum) {
  EncodedMatrix train = linear_problem(200, 3, 15);
  SearchSpace space = {{"max_depth", ParamDistribution::choice({std::int64_t{1}, std::int64_t{2}, std::int64_t{4}})},
                       {"criterion", ParamDistribution::choice({std::string("entropy"), std::string("gini")})}};
  SearchOptions o;
  o.n_iter = 6;
  o.folds = 3;
  o.seed = 4;
  SearchResult r = tune_random_search(make_spec(Algorithm::decision_tree), space, train, o);
  ASSERT_EQ(r.candidates.size(), 6u);
  std::set<std::string> seen;
  double best = -1;
  ModelSpec first_best;
  for (const auto& c : r.candidates) {
    EXPECT_TRUE(seen.insert(spec_to_json(c.spec).dump()).second);
    if (c.mean_accuracy > best) {
      best = c.mean_accuracy;
      first_best = c.spec;
    }
  }
  EXPECT_EQ(r.best, first_best);
}

TEST(Search, SpaceFromJson) {
  auto space = search_space_from_json(nlohmann::json::parse(
      R"({"C": {"type": "log_uniform", "low": 0.01, "high": 10}, "penalty": ["l1", "l2"]})"));
  EXPECT_EQ(space.at("C").type, ParamDistribution::Type::log_uniform);
  EXPECT_EQ(space.at("penalty").values.size(), 2u);
}
