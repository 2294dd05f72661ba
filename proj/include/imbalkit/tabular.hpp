#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace imbalkit {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class ColumnKind { categorical, binary, continuous };

std::string to_string(ColumnKind kind);
ColumnKind parse_column_kind(const std::string& text);

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::categorical;
  // Declared category strings. An empty list on a categorical column means
  // "infer from the data".
  std::vector<std::string> categories;
  // Target columns only: the category encoded as class 1. Defaults to the
  // lexicographically larger category.
  std::optional<std::string> positive;
};

using Schema = std::vector<ColumnSchema>;

/// Throws ConfigError on duplicate names, binary columns without exactly two
/// categories, or continuous columns with categories.
void validate_schema(const Schema& schema);

/// Accepts either a JSON array of column objects or {"columns": [...]}.
Schema schema_from_json(const nlohmann::json& doc);
nlohmann::json schema_to_json(const Schema& schema);
Schema load_schema(const std::filesystem::path& path);

struct Dataset {
  Schema schema;
  // Cells in schema column order.
  std::vector<std::vector<std::string>> rows;
  std::string target;

  std::size_t column_index(const std::string& name) const;
  std::size_t target_index() const { return column_index(target); }
};

struct LoadOptions {
  // When false, unseen categories are appended to categorical columns
  // instead of rejected. Binary columns stay strict.
  bool strict = true;
};

Dataset load_dataset(const std::filesystem::path& path, const Schema& schema,
                     const std::string& target, const LoadOptions& options = {});
Dataset parse_dataset(std::istream& in, const Schema& schema, const std::string& target,
                      const LoadOptions& options = {});

/// Integer-coded feature matrix plus binary target.
struct EncodedMatrix {
  Matrix values;
  std::vector<int> target;
  std::vector<std::string> column_names;
  std::vector<ColumnKind> kinds;
  // Number of valid codes per column (0 for continuous columns).
  std::vector<std::size_t> cardinality;
  // Original row index; rows created by oversampling carry negative ids.
  std::vector<std::int64_t> row_ids;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
};

/// Per column, the category list in code order (code = position).
class EncoderMap {
 public:
  void add(const std::string& column, std::vector<std::string> categories_in_code_order);
  bool contains(const std::string& column) const { return codes_.count(column) > 0; }
  int encode(const std::string& column, const std::string& value) const;
  const std::string& decode(const std::string& column, int code) const;
  const std::vector<std::string>& categories(const std::string& column) const;
  const std::map<std::string, std::vector<std::string>>& columns() const { return codes_; }

 private:
  std::map<std::string, std::vector<std::string>> codes_;
};

struct Encoded {
  EncodedMatrix matrix;
  EncoderMap encoder;
};

/// Categorical and binary cells become lexicographic codes, continuous cells
/// are parsed as doubles, and the target becomes {0,1} with the positive
/// category as 1. The target is not a feature column.
Encoded label_encode(const Dataset& dataset);

struct ClassBalance {
  std::size_t count_class0 = 0;
  std::size_t count_class1 = 0;
  bool operator==(const ClassBalance&) const = default;
};

ClassBalance class_distribution(const EncodedMatrix& matrix);
ClassBalance class_distribution(std::span<const int> target);

EncodedMatrix take_rows(const EncodedMatrix& matrix, std::span<const std::size_t> rows);
EncodedMatrix take_columns(const EncodedMatrix& matrix, std::span<const std::size_t> cols);

struct TrainTestSplit {
  EncodedMatrix train;
  EncodedMatrix test;
};

/// Per class, round(count * test_fraction) rows (kept within [1, count-1])
/// go to the test side. Both halves keep the original row order.
TrainTestSplit stratified_split(const EncodedMatrix& matrix, double test_fraction,
                                std::uint64_t seed);

/// Fold index in [0, folds) for every row. Each class is shuffled and dealt
/// round-robin, so per-fold class counts differ by at most one.
std::vector<int> stratified_fold_assignment(std::span<const int> target, int folds,
                                            std::uint64_t seed);

enum class SmoteRounding { continuous, nearest_code };

std::string to_string(SmoteRounding rounding);
SmoteRounding parse_smote_rounding(const std::string& text);

struct SmoteOptions {
  int k_neighbors = 5;
  SmoteRounding rounding = SmoteRounding::continuous;
};

struct SyntheticOrigin {
  std::size_t base_row;      // index into the input matrix
  std::size_t neighbor_row;  // index into the input matrix
  double gap;                // interpolation weight in [0, 1)
};

struct SmoteResult {
  EncodedMatrix matrix;
  std::vector<SyntheticOrigin> origins;  // one per synthetic row, in output order
  int k_used = 0;
};

/// Oversamples the minority class up to the majority count. Input rows are
/// copied unchanged; synthetic rows follow them.
SmoteResult smote_with_origins(const EncodedMatrix& train, const SmoteOptions& options,
                               std::uint64_t seed);
EncodedMatrix smote(const EncodedMatrix& train, const SmoteOptions& options, std::uint64_t seed);

}  // namespace imbalkit
