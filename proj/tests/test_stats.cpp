#include <gtest/gtest.h>

#include <random>
#include <set>

#include "imbalkit/distributions.hpp"
#include "imbalkit/error.hpp"
#include "imbalkit/stats.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace imbalkit;

TEST(Distributions, ChiSquareTailMatchesHighPrecision) {
  for (int df = 1; df <= 30; ++df)
    for (double x : {0.01, 0.5, 1.0, 3.84, 7.5, 15.0, 42.21, 80.0})
      EXPECT_NEAR(chi2_sf(x, df), oracle::chi2_sf(x, df), 1e-12) << "df=" << df << " x=" << x;
}

TEST(Distributions, StudentTailMatchesHighPrecision) {
  for (int df = 1; df <= 30; ++df)
    for (double t : {0.0, 0.3, 1.0, 2.262, 4.2, 10.0, 121.1})
      EXPECT_NEAR(t_two_tailed_p(t, df), oracle::t_two_tailed(t, df), 1e-12) << "df=" << df << " t=" << t;
}

TEST(Distributions, PublishedSmallestEffectRow) {
  // t = 4.208968922 on 9 degrees of freedom is reported with p = 0.002276276.
  EXPECT_NEAR(t_two_tailed_p(4.208968922, 9), 0.002276276, 5e-9);
}

TEST(ChiSquare, TwoByTwoByHand) {
  ContingencyTable t;
  t.counts.resize(2, 2);
  t.counts << 10, 20, 30, 40;
  // n (ad - bc)^2 / (row and column totals)
  EXPECT_NEAR(chi_square(t).chi2, 100.0 * 200.0 * 200.0 / (30.0 * 70.0 * 40.0 * 60.0), 1e-12);
  EXPECT_NEAR(chi_square(t, true).chi2, 100.0 * 150.0 * 150.0 / (30.0 * 70.0 * 40.0 * 60.0), 1e-12);
  EXPECT_EQ(chi_square(t).df, 1);
}

TEST(ChiSquare, AssociationDecisionAtAlpha) {
  std::vector<double> f;
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    f.push_back(i % 3);
    y.push_back(i % 3 == 0 ? (i % 2) : (i % 7 == 0));
  }
  AssociationResult r = chi_square_association(f, y, 0.10);
  EXPECT_EQ(r.df, 2);
  EXPECT_EQ(r.significant, r.p_value < 0.10);
  ASSERT_TRUE(r.cramers_v.has_value());
  EXPECT_NEAR(*r.cramers_v, std::sqrt(r.chi2 / 200.0), 1e-12);
}

TEST(CramersV, PerfectAndIndependent) {
  std::vector<double> a = {0, 0, 1, 1, 2, 2}, b = {5, 5, 7, 7, 9, 9}, c = {0, 1, 0, 1, 0, 1};
  EXPECT_NEAR(cramers_v(a, b), 1.0, 1e-12);
  EXPECT_NEAR(cramers_v(a, c), 0.0, 1e-12);
}

TEST(CramersV, MatrixIsSymmetricWithUnitDiagonal) {
  EncodedMatrix m = testing_support::synthetic_matrix();
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < m.cols(); ++j)
    if (m.kinds[j] != ColumnKind::continuous) cols.push_back(j);
  Eigen::MatrixXd V = cramers_v_matrix(take_columns(m, cols).values);
  EXPECT_LT((V - V.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  for (Eigen::Index i = 0; i < V.rows(); ++i) EXPECT_EQ(V(i, i), 1.0);
  EXPECT_GE(V.minCoeff(), 0.0);
  EXPECT_LE(V.maxCoeff(), 1.0);
}

TEST(Cronbach, DuplicatedItemsGiveOne) {
  Matrix items(6, 3);
  for (int i = 0; i < 6; ++i) items.row(i).setConstant((i * 7) % 5);
  EXPECT_NEAR(cronbach_alpha(items).alpha, 1.0, 1e-12);
}

TEST(Cronbach, UncorrelatedEqualVarianceItemsGiveZero) {
  Matrix items(4, 3);
  items << 1, 1, 1, 1, -1, -1, -1, 1, -1, -1, -1, 1;
  EXPECT_NEAR(cronbach_alpha(items).alpha, 0.0, 1e-12);
}

TEST(Kmo, TwoVariablesGiveHalf) {
  Eigen::MatrixXd R(2, 2);
  R << 1, 0.37, 0.37, 1;
  EXPECT_NEAR(kmo(R), 0.5, 1e-12);
}

TEST(Bartlett, IdentityHasZeroStatistic) {
  BartlettResult b = bartlett_sphericity(Eigen::MatrixXd::Identity(5, 5), 100);
  EXPECT_NEAR(b.chi2, 0.0, 1e-12);
  EXPECT_EQ(b.df, 10);
  EXPECT_NEAR(b.p_value, 1.0, 1e-12);
}

TEST(Efa, RecoversThreeFactorStructure) {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(9, 3);
  for (int i = 0; i < 9; ++i) L(i, i / 3) = 0.6 + 0.1 * (i % 3);
  Matrix X(1000, 9);
  for (int r = 0; r < 1000; ++r) {
    Eigen::Vector3d f(normal(gen), normal(gen), normal(gen));
    for (int i = 0; i < 9; ++i) X(r, i) = L.row(i).dot(f) + std::sqrt(1.0 - L.row(i).squaredNorm()) * normal(gen);
  }
  FactorModel fm = efa_varimax(X, 3);
  for (double c : oracle::factor_congruences(L, fm.loadings)) EXPECT_GE(c, 0.95);
  EXPECT_LT((fm.unrotated_loadings * fm.rotation - fm.loadings).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((fm.rotation.transpose() * fm.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-10);
  for (std::size_t s = 1; s < fm.criterion_history.size(); ++s)
    EXPECT_GE(fm.criterion_history[s], fm.criterion_history[s - 1] - 1e-12);
  EXPECT_TRUE(kmo_adequate(fm.kmo));
}

TEST(PairedT, CohensDIsTOverRootN) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.7, 0.95);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(10), b(10);
    for (int i = 0; i < 10; ++i) {
      a[i] = u(gen);
      b[i] = u(gen);
    }
    PairedTestResult r = paired_t_test(a, b);
    EXPECT_NEAR(r.cohens_d, r.t / std::sqrt(10.0), 1e-12);
    EXPECT_EQ(r.df, 9);
    EXPECT_NEAR(r.p_value, oracle::t_two_tailed(r.t, 9), 1e-12);
  }
}

TEST(PairedT, ConstantDifferencesAreDegenerate) {
  std::vector<double> a = {0.9, 0.8, 0.85}, b = {0.8, 0.7, 0.75};
  EXPECT_THROW(paired_t_test(a, a), NumericError);
  EXPECT_THROW(paired_t_test(a, b), NumericError);
}

TEST(Bonferroni, FourteenComparisons) {
  EXPECT_NEAR(bonferroni_adjust(0.05, 14), 0.0035714285714285713, 1e-18);
  EXPECT_THROW(bonferroni_adjust(0.05, 0), std::invalid_argument);
  EXPECT_THROW(bonferroni_adjust(1.5, 3), std::invalid_argument);
}

TEST(CrossValidate, SmoteNeverReachesValidationFolds) {
  EncodedMatrix m = testing_support::synthetic_matrix();
  CvRun run = cross_validate(make_spec(Algorithm::naive_bayes), m, 10, SmoteOptions{}, 3);
  ASSERT_EQ(run.validation_row_ids.size(), 10u);
  std::set<std::int64_t> seen;
  for (std::size_t f = 0; f < 10; ++f) {
    std::set<std::int64_t> val(run.validation_row_ids[f].begin(), run.validation_row_ids[f].end());
    bool synthetic_in_train = false;
    for (auto id : run.validation_row_ids[f]) {
      EXPECT_GE(id, 0);
      EXPECT_TRUE(seen.insert(id).second);
    }
    for (auto id : run.training_row_ids[f]) {
      synthetic_in_train |= id < 0;
      EXPECT_FALSE(val.count(id));
    }
    EXPECT_TRUE(synthetic_in_train);
  }
  EXPECT_EQ(seen.size(), m.rows());
  EXPECT_EQ(run.metric("naive-bayes", "accuracy").size(), 10u);
}

TEST(CrossValidate, SharedFoldsAcrossModels) {
  EncodedMatrix m = testing_support::linear_problem(300, 3, 2);
  std::vector<NamedSpec> specs = {{"a", make_spec(Algorithm::logistic)}, {"b", make_spec(Algorithm::naive_bayes)}};
  CvRun both = cross_validate(specs, m, 5, std::nullopt, 9);
  CvRun one = cross_validate(std::vector<NamedSpec>{specs[1]}, m, 5, std::nullopt, 9);
  EXPECT_EQ(both.metric("b", "auc"), one.metric("b", "auc"));
}
