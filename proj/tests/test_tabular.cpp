#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "imbalkit/csv.hpp"
#include "imbalkit/error.hpp"
#include "imbalkit/tabular.hpp"
#include "support.hpp"

using namespace imbalkit;

namespace {

Schema small_schema() {
  return {{"color", ColumnKind::categorical, {}, std::nullopt},
          {"size", ColumnKind::continuous, {}, std::nullopt},
          {"flag", ColumnKind::binary, {"n", "y"}, std::nullopt},
          {"label", ColumnKind::binary, {"neg", "pos"}, std::string("pos")}};
}

}  // namespace

TEST(Csv, QuotedFieldsRoundTrip) {
  std::ostringstream out;
  csv::write_row(out, {"a,b", "say \"hi\"", "plain", "line\nbreak"});
  std::istringstream in(out.str());
  auto rows = csv::read(in);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0], (csv::Row{"a,b", "say \"hi\"", "plain", "line\nbreak"}));
  EXPECT_TRUE(out.str().ends_with("\r\n"));
}

TEST(Csv, ShortestDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5}) EXPECT_EQ(std::stod(csv::format_double(v)), v);
}

TEST(Schema, RejectsBinaryWithThreeCategories) {
  Schema s = small_schema();
  s[2].categories = {"a", "b", "c"};
  EXPECT_THROW(validate_schema(s), ConfigError);
}

TEST(Schema, JsonRoundTrip) {
  Schema s = small_schema();
  Schema back = schema_from_json(schema_to_json(s));
  ASSERT_EQ(back.size(), s.size());
  EXPECT_EQ(back[3].positive, std::optional<std::string>("pos"));
  EXPECT_EQ(back[1].kind, ColumnKind::continuous);
}

TEST(Dataset, LabelEncodingIsLexicographic) {
  std::istringstream in("color,size,flag,label\nred,1.5,y,pos\nblue,2,n,neg\ngreen,3,y,neg\n");
  Dataset d = parse_dataset(in, small_schema(), "label");
  Encoded e = label_encode(d);
  ASSERT_EQ(e.matrix.cols(), 3u);
  EXPECT_EQ(e.matrix.values(0, 0), 2.0);  // blue < green < red
  EXPECT_EQ(e.matrix.values(1, 0), 0.0);
  EXPECT_EQ(e.matrix.values(0, 1), 1.5);
  EXPECT_EQ(e.matrix.target, (std::vector<int>{1, 0, 0}));
  EXPECT_EQ(e.encoder.decode("color", 1), "green");
}

TEST(Dataset, UnparsableNumberIsDataError) {
  std::istringstream in("color,size,flag,label\nred,abc,y,pos\n");
  EXPECT_THROW(parse_dataset(in, small_schema(), "label"), DataError);
}

TEST(Dataset, UnknownBinaryValueIsDataError) {
  std::istringstream in("color,size,flag,label\nred,1,maybe,pos\n");
  EXPECT_THROW(parse_dataset(in, small_schema(), "label"), DataError);
}

TEST(Split, PerClassCountsFollowRounding) {
  EncodedMatrix m = testing_support::synthetic_matrix();
  TrainTestSplit s = stratified_split(m, 0.2, 7);
  EXPECT_EQ(class_distribution(s.test), (ClassBalance{338, 62}));
  EXPECT_EQ(class_distribution(s.train), (ClassBalance{1354, 246}));
  std::set<std::int64_t> ids(s.train.row_ids.begin(), s.train.row_ids.end());
  for (auto id : s.test.row_ids) EXPECT_FALSE(ids.count(id));
}

TEST(Split, SameSeedSameSplit) {
  EncodedMatrix m = testing_support::synthetic_matrix();
  EXPECT_EQ(stratified_split(m, 0.2, 3).test.row_ids, stratified_split(m, 0.2, 3).test.row_ids);
  EXPECT_NE(stratified_split(m, 0.2, 3).test.row_ids, stratified_split(m, 0.2, 4).test.row_ids);
}

TEST(Folds, ClassCountsDifferByAtMostOne) {
  EncodedMatrix m = testing_support::synthetic_matrix();
  auto folds = stratified_fold_assignment(m.target, 10, 11);
  std::vector<std::array<int, 2>> counts(10, {0, 0});
  for (std::size_t i = 0; i < folds.size(); ++i) ++counts[static_cast<std::size_t>(folds[i])][static_cast<std::size_t>(m.target[i])];
  for (int c = 0; c < 2; ++c) {
    int lo = 1 << 30, hi = 0;
    for (const auto& f : counts) {
      lo = std::min(lo, f[static_cast<std::size_t>(c)]);
      hi = std::max(hi, f[static_cast<std::size_t>(c)]);
    }
    EXPECT_LE(hi - lo, 1);
  }
}

TEST(Smote, BalancesToMajorityCount) {
  EncodedMatrix m = testing_support::synthetic_matrix();
  ASSERT_EQ(class_distribution(m), (ClassBalance{1692, 308}));
  EncodedMatrix out = smote(m, {}, 1);
  EXPECT_EQ(class_distribution(out), (ClassBalance{1692, 1692}));
  EXPECT_EQ(out.rows(), 3384u);
  EXPECT_EQ(out.values.topRows(2000), m.values);
}

TEST(Smote, SyntheticRowsLieBetweenBaseAndANearNeighbor) {
  EncodedMatrix m = testing_support::linear_problem(300, 4, 5, 0.3, 1.0);
  SmoteOptions o;
  o.k_neighbors = 3;
  SmoteResult r = smote_with_origins(m, o, 9);
  std::vector<std::size_t> minority;
  for (std::size_t i = 0; i < m.rows(); ++i)
    if (m.target[i] == 1) minority.push_back(i);
  for (std::size_t s = 0; s < r.origins.size(); ++s) {
    const auto& org = r.origins[s];
    auto a = m.values.row(static_cast<Eigen::Index>(org.base_row));
    auto b = m.values.row(static_cast<Eigen::Index>(org.neighbor_row));
    auto x = r.matrix.values.row(static_cast<Eigen::Index>(m.rows() + s));
    EXPECT_LT((x - (a + org.gap * (b - a))).norm(), 1e-12);
    EXPECT_GE(org.gap, 0.0);
    EXPECT_LT(org.gap, 1.0);
    // Brute force: fewer than k minority rows are strictly closer than the neighbour.
    double nd = (b - a).squaredNorm();
    int closer = 0;
    for (std::size_t j : minority)
      if (j != org.base_row && (m.values.row(static_cast<Eigen::Index>(j)) - a).squaredNorm() < nd) ++closer;
    EXPECT_LT(closer, 3);
    EXPECT_LT(r.matrix.row_ids[m.rows() + s], 0);
  }
}

TEST(Smote, NearestCodeKeepsValidCodes) {
  EncodedMatrix m = testing_support::synthetic_matrix();
  SmoteOptions o;
  o.rounding = SmoteRounding::nearest_code;
  EncodedMatrix out = smote(m, o, 2);
  for (std::size_t j = 0; j < out.cols(); ++j) {
    if (out.kinds[j] == ColumnKind::continuous) continue;
    for (std::size_t i = m.rows(); i < out.rows(); ++i) {
      double v = out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      EXPECT_EQ(v, std::round(v));
      EXPECT_LT(v, static_cast<double>(out.cardinality[j]));
    }
  }
}

TEST(Smote, SingleClassIsDataError) {
  EncodedMatrix m = testing_support::linear_problem(20, 2, 1);
  std::fill(m.target.begin(), m.target.end(), 0);
  EXPECT_THROW(smote(m, {}, 1), DataError);
}

TEST(Synthetic, ExactPositiveCountAndDeterminism) {
  SyntheticOptions o;
  Dataset a = generate_synthetic(o), b = generate_synthetic(o);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(a.schema.size(), 23u);
  EncodedMatrix m = label_encode(a).matrix;
  EXPECT_EQ(m.cols(), 22u);
  EXPECT_EQ(class_distribution(m), (ClassBalance{1692, 308}));
}
