#include "imbalkit/tabular.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "imbalkit/csv.hpp"
#include "imbalkit/error.hpp"
#include "imbalkit/log.hpp"
#include "imbalkit/random.hpp"

namespace imbalkit {

std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::binary: return "binary";
    case ColumnKind::continuous: return "continuous";
  }
  return "categorical";
}

ColumnKind parse_column_kind(const std::string& text) {
  if (text == "categorical") return ColumnKind::categorical;
  if (text == "binary") return ColumnKind::binary;
  if (text == "continuous") return ColumnKind::continuous;
  throw ConfigError("unknown column kind '" + text + "'");
}

std::string to_string(SmoteRounding rounding) {
  return rounding == SmoteRounding::continuous ? "continuous" : "nearest-code";
}

SmoteRounding parse_smote_rounding(const std::string& text) {
  if (text == "continuous") return SmoteRounding::continuous;
  if (text == "nearest-code") return SmoteRounding::nearest_code;
  throw ConfigError("unknown SMOTE rounding '" + text + "'");
}

void validate_schema(const Schema& schema) {
  std::unordered_set<std::string> names;
  for (const auto& column : schema) {
    if (column.name.empty()) throw ConfigError("schema column with empty name");
    if (!names.insert(column.name).second) {
      throw ConfigError("duplicate schema column '" + column.name + "'");
    }
    std::set<std::string> unique(column.categories.begin(), column.categories.end());
    if (unique.size() != column.categories.size()) {
      throw ConfigError("column '" + column.name + "' declares duplicate categories");
    }
    switch (column.kind) {
      case ColumnKind::binary:
        if (column.categories.size() != 2) {
          throw ConfigError("binary column '" + column.name + "' must declare exactly 2 categories");
        }
        break;
      case ColumnKind::continuous:
        if (!column.categories.empty()) {
          throw ConfigError("continuous column '" + column.name + "' must not declare categories");
        }
        break;
      case ColumnKind::categorical:
        break;
    }
    if (column.positive && std::find(column.categories.begin(), column.categories.end(),
                                     *column.positive) == column.categories.end()) {
      throw ConfigError("positive label '" + *column.positive + "' is not a category of '" +
                        column.name + "'");
    }
  }
}

Schema schema_from_json(const nlohmann::json& doc) {
  const nlohmann::json* columns = &doc;
  if (doc.is_object()) {
    if (!doc.contains("columns")) throw ConfigError("schema object lacks 'columns'");
    columns = &doc.at("columns");
  }
  if (!columns->is_array()) throw ConfigError("schema must be an array of columns");
  Schema schema;
  try {
    for (const auto& entry : *columns) {
      ColumnSchema column;
      column.name = entry.at("name").get<std::string>();
      column.kind = parse_column_kind(entry.value("kind", std::string("categorical")));
      if (entry.contains("categories")) {
        column.categories = entry.at("categories").get<std::vector<std::string>>();
      }
      if (entry.contains("positive")) column.positive = entry.at("positive").get<std::string>();
      schema.push_back(std::move(column));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed schema: ") + e.what());
  }
  validate_schema(schema);
  return schema;
}

nlohmann::json schema_to_json(const Schema& schema) {
  nlohmann::ordered_json columns = nlohmann::ordered_json::array();
  for (const auto& column : schema) {
    nlohmann::ordered_json entry;
    entry["name"] = column.name;
    entry["kind"] = to_string(column.kind);
    entry["categories"] = column.categories;
    if (column.positive) entry["positive"] = *column.positive;
    columns.push_back(std::move(entry));
  }
  return nlohmann::json::parse(nlohmann::ordered_json{{"columns", columns}}.dump());
}

Schema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema file " + path.string());
  try {
    return schema_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("schema " + path.string() + " is not valid JSON: " + e.what());
  }
}

std::size_t Dataset::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema[i].name == name) return i;
  }
  throw DataError("unknown column '" + name + "'");
}

namespace {

std::optional<double> parse_number(const std::string& text) {
  std::size_t begin = text.find_first_not_of(" \t");
  std::size_t end = text.find_last_not_of(" \t");
  if (begin == std::string::npos) return std::nullopt;
  const char* first = text.data() + begin;
  const char* last = text.data() + end + 1;
  if (*first == '+') ++first;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

Dataset parse_dataset(std::istream& in, const Schema& input_schema, const std::string& target,
                      const LoadOptions& options) {
  validate_schema(input_schema);
  Dataset dataset;
  dataset.schema = input_schema;
  dataset.target = target;

  const auto table = csv::read(in);
  if (table.empty()) throw DataError("empty dataset");
  const auto& header = table.front();

  std::unordered_map<std::string, std::size_t> header_pos;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!header_pos.emplace(header[i], i).second) {
      throw DataError("duplicate header column '" + header[i] + "'");
    }
  }
  std::vector<std::size_t> source(dataset.schema.size());
  for (std::size_t c = 0; c < dataset.schema.size(); ++c) {
    auto it = header_pos.find(dataset.schema[c].name);
    if (it == header_pos.end()) throw DataError("missing column '" + dataset.schema[c].name + "'");
    source[c] = it->second;
  }
  if (header.size() != dataset.schema.size()) {
    for (const auto& name : header) {
      if (std::none_of(dataset.schema.begin(), dataset.schema.end(),
                       [&](const ColumnSchema& s) { return s.name == name; })) {
        throw DataError("column '" + name + "' is not declared in the schema");
      }
    }
  }
  const std::size_t target_col = dataset.column_index(target);
  if (dataset.schema[target_col].kind != ColumnKind::binary) {
    throw ConfigError("target column '" + target + "' must be declared binary");
  }
  if (table.size() == 1) throw DataError("empty dataset");

  std::vector<std::unordered_set<std::string>> allowed(dataset.schema.size());
  for (std::size_t c = 0; c < dataset.schema.size(); ++c) {
    allowed[c].insert(dataset.schema[c].categories.begin(), dataset.schema[c].categories.end());
  }

  dataset.rows.reserve(table.size() - 1);
  for (std::size_t r = 1; r < table.size(); ++r) {
    const auto& raw = table[r];
    const std::size_t data_row = r - 1;
    if (raw.size() != header.size()) {
      throw DataError("row " + std::to_string(data_row) + ": expected " +
                      std::to_string(header.size()) + " cells, found " +
                      std::to_string(raw.size()));
    }
    std::vector<std::string> cells(dataset.schema.size());
    for (std::size_t c = 0; c < dataset.schema.size(); ++c) {
      auto& column = dataset.schema[c];
      std::string value = raw[source[c]];
      if (value.empty()) {
        throw DataError("row " + std::to_string(data_row) + ", column '" + column.name +
                        "': missing value");
      }
      if (column.kind == ColumnKind::continuous) {
        if (!parse_number(value)) {
          throw DataError("row " + std::to_string(data_row) + ", column '" + column.name +
                          "': non-numeric value '" + value + "'");
        }
      } else if (!allowed[c].count(value)) {
        if (column.kind == ColumnKind::categorical && (!options.strict || input_schema[c].categories.empty())) {
          column.categories.push_back(value);
          allowed[c].insert(value);
        } else {
          throw DataError("row " + std::to_string(data_row) + ", column '" + column.name +
                          "': unknown category '" + value + "'");
        }
      }
      cells[c] = std::move(value);
    }
    dataset.rows.push_back(std::move(cells));
  }
  return dataset;
}

Dataset load_dataset(const std::filesystem::path& path, const Schema& schema,
                     const std::string& target, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset " + path.string());
  return parse_dataset(in, schema, target, options);
}

void EncoderMap::add(const std::string& column, std::vector<std::string> categories) {
  codes_[column] = std::move(categories);
}

int EncoderMap::encode(const std::string& column, const std::string& value) const {
  const auto& cats = categories(column);
  auto it = std::find(cats.begin(), cats.end(), value);
  if (it == cats.end()) {
    throw DataError("column '" + column + "': unknown category '" + value + "'");
  }
  return static_cast<int>(it - cats.begin());
}

const std::string& EncoderMap::decode(const std::string& column, int code) const {
  const auto& cats = categories(column);
  if (code < 0 || static_cast<std::size_t>(code) >= cats.size()) {
    throw DataError("column '" + column + "': code " + std::to_string(code) + " out of range");
  }
  return cats[static_cast<std::size_t>(code)];
}

const std::vector<std::string>& EncoderMap::categories(const std::string& column) const {
  auto it = codes_.find(column);
  if (it == codes_.end()) throw DataError("encoder has no column '" + column + "'");
  return it->second;
}

Encoded label_encode(const Dataset& dataset) {
  const std::size_t target_col = dataset.target_index();
  const std::size_t n = dataset.rows.size();
  const std::size_t d = dataset.schema.size() - 1;

  Encoded out;
  auto& m = out.matrix;
  m.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  m.target.resize(n);
  m.row_ids.resize(n);
  std::iota(m.row_ids.begin(), m.row_ids.end(), std::int64_t{0});

  std::vector<std::unordered_map<std::string, int>> lookup(dataset.schema.size());
  for (std::size_t c = 0; c < dataset.schema.size(); ++c) {
    const auto& column = dataset.schema[c];
    if (column.kind == ColumnKind::continuous) continue;
    std::vector<std::string> sorted = column.categories;
    std::sort(sorted.begin(), sorted.end());
    if (c == target_col && column.positive && *column.positive == sorted.front()) {
      std::swap(sorted[0], sorted[1]);
    }
    for (std::size_t k = 0; k < sorted.size(); ++k) lookup[c][sorted[k]] = static_cast<int>(k);
    out.encoder.add(column.name, std::move(sorted));
  }

  for (std::size_t c = 0, j = 0; c < dataset.schema.size(); ++c) {
    if (c == target_col) continue;
    const auto& column = dataset.schema[c];
    m.column_names.push_back(column.name);
    m.kinds.push_back(column.kind);
    m.cardinality.push_back(column.kind == ColumnKind::continuous ? 0 : column.categories.size());
    for (std::size_t r = 0; r < n; ++r) {
      const auto& cell = dataset.rows[r][c];
      double value;
      if (column.kind == ColumnKind::continuous) {
        value = *parse_number(cell);
      } else {
        value = lookup[c].at(cell);
      }
      m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = value;
    }
    ++j;
  }
  for (std::size_t r = 0; r < n; ++r) m.target[r] = lookup[target_col].at(dataset.rows[r][target_col]);
  return out;
}

ClassBalance class_distribution(std::span<const int> target) {
  ClassBalance balance;
  for (int y : target) (y == 1 ? balance.count_class1 : balance.count_class0)++;
  return balance;
}

ClassBalance class_distribution(const EncodedMatrix& matrix) {
  return class_distribution(std::span<const int>(matrix.target));
}

EncodedMatrix take_rows(const EncodedMatrix& matrix, std::span<const std::size_t> rows) {
  EncodedMatrix out;
  out.column_names = matrix.column_names;
  out.kinds = matrix.kinds;
  out.cardinality = matrix.cardinality;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), matrix.values.cols());
  out.target.resize(rows.size());
  out.row_ids.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.values.row(static_cast<Eigen::Index>(i)) = matrix.values.row(static_cast<Eigen::Index>(rows[i]));
    out.target[i] = matrix.target[rows[i]];
    out.row_ids[i] = matrix.row_ids[rows[i]];
  }
  return out;
}

EncodedMatrix take_columns(const EncodedMatrix& matrix, std::span<const std::size_t> cols) {
  EncodedMatrix out;
  out.target = matrix.target;
  out.row_ids = matrix.row_ids;
  out.values.resize(matrix.values.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.values.col(static_cast<Eigen::Index>(j)) = matrix.values.col(static_cast<Eigen::Index>(cols[j]));
    out.column_names.push_back(matrix.column_names[cols[j]]);
    out.kinds.push_back(matrix.kinds[cols[j]]);
    out.cardinality.push_back(matrix.cardinality[cols[j]]);
  }
  return out;
}

TrainTestSplit stratified_split(const EncodedMatrix& matrix, double test_fraction,
                                std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("test fraction must lie strictly between 0 and 1");
  }
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < matrix.rows(); ++i) by_class[matrix.target[i] == 1].push_back(i);
  std::vector<char> is_test(matrix.rows(), 0);
  for (int cls = 0; cls < 2; ++cls) {
    auto& members = by_class[cls];
    if (members.size() < 2) {
      throw DataError("class " + std::to_string(cls) + " has fewer than 2 rows; cannot split");
    }
    Rng rng(seed, Stream::split, static_cast<std::uint64_t>(cls));
    rng.shuffle(members);
    auto count = static_cast<std::size_t>(std::llround(static_cast<double>(members.size()) * test_fraction));
    count = std::clamp<std::size_t>(count, 1, members.size() - 1);
    for (std::size_t k = 0; k < count; ++k) is_test[members[k]] = 1;
  }
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t i = 0; i < matrix.rows(); ++i) (is_test[i] ? test_rows : train_rows).push_back(i);
  return {take_rows(matrix, train_rows), take_rows(matrix, test_rows)};
}

std::vector<int> stratified_fold_assignment(std::span<const int> target, int folds,
                                            std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("fold count must be at least 2");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < target.size(); ++i) by_class[target[i] == 1].push_back(i);
  for (int cls = 0; cls < 2; ++cls) {
    if (by_class[cls].size() < static_cast<std::size_t>(folds)) {
      throw DataError("fold count " + std::to_string(folds) + " exceeds the " +
                      std::to_string(by_class[cls].size()) + " rows of class " +
                      std::to_string(cls));
    }
  }
  std::vector<int> fold(target.size(), -1);
  std::size_t dealt = 0;
  for (int cls = 0; cls < 2; ++cls) {
    Rng rng(seed, Stream::folds, static_cast<std::uint64_t>(cls));
    rng.shuffle(by_class[cls]);
    // Continue dealing where the previous class stopped so fold sizes stay balanced.
    for (std::size_t k = 0; k < by_class[cls].size(); ++k, ++dealt) {
      fold[by_class[cls][k]] = static_cast<int>(dealt % static_cast<std::size_t>(folds));
    }
  }
  return fold;
}

SmoteResult smote_with_origins(const EncodedMatrix& train, const SmoteOptions& options,
                               std::uint64_t seed) {
  if (options.k_neighbors < 1) throw std::invalid_argument("k_neighbors must be at least 1");
  const auto balance = class_distribution(train);
  if (balance.count_class1 == 0 || balance.count_class0 == 0) {
    throw DataError("SMOTE needs both classes; one class is empty");
  }
  SmoteResult result;
  result.matrix = train;
  if (balance.count_class0 == balance.count_class1) return result;

  const int minority_label = balance.count_class1 < balance.count_class0 ? 1 : 0;
  std::vector<std::size_t> minority;
  for (std::size_t i = 0; i < train.rows(); ++i) {
    if (train.target[i] == minority_label) minority.push_back(i);
  }
  const std::size_t m = minority.size();
  if (m < 2) throw DataError("SMOTE needs at least 2 minority rows, found " + std::to_string(m));

  int k = options.k_neighbors;
  if (static_cast<std::size_t>(k) > m - 1) {
    log_warning("SMOTE k_neighbors clamped from " + std::to_string(k) + " to " +
                std::to_string(m - 1) + " (minority size " + std::to_string(m) + ")");
    k = static_cast<int>(m - 1);
  }
  result.k_used = k;

  // k nearest minority neighbours of every minority row; ties by lower index.
  const auto& X = train.values;
  std::vector<std::vector<std::size_t>> neighbors(m);
  std::vector<std::pair<double, std::size_t>> dist(m);
  for (std::size_t a = 0; a < m; ++a) {
    const auto xa = X.row(static_cast<Eigen::Index>(minority[a]));
    for (std::size_t b = 0; b < m; ++b) {
      dist[b] = {b == a ? std::numeric_limits<double>::infinity()
                        : (X.row(static_cast<Eigen::Index>(minority[b])) - xa).squaredNorm(),
                 b};
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    neighbors[a].reserve(static_cast<std::size_t>(k));
    for (int t = 0; t < k; ++t) neighbors[a].push_back(dist[static_cast<std::size_t>(t)].second);
  }

  const std::size_t majority_count = std::max(balance.count_class0, balance.count_class1);
  const std::size_t n_synth = majority_count - m;
  const std::size_t n0 = train.rows();
  auto& out = result.matrix;
  out.values.conservativeResize(static_cast<Eigen::Index>(n0 + n_synth), X.cols());
  out.target.resize(n0 + n_synth, minority_label);
  out.row_ids.resize(n0 + n_synth);
  result.origins.reserve(n_synth);

  Rng rng(seed, Stream::smote);
  for (std::size_t s = 0; s < n_synth; ++s) {
    const std::size_t a = rng.below(m);
    const std::size_t b = neighbors[a][rng.below(static_cast<std::size_t>(k))];
    const double gap = rng.uniform();
    const auto row = static_cast<Eigen::Index>(n0 + s);
    const auto xa = X.row(static_cast<Eigen::Index>(minority[a]));
    const auto xb = X.row(static_cast<Eigen::Index>(minority[b]));
    out.values.row(row) = xa + gap * (xb - xa);
    if (options.rounding == SmoteRounding::nearest_code) {
      for (Eigen::Index j = 0; j < X.cols(); ++j) {
        if (train.kinds[static_cast<std::size_t>(j)] == ColumnKind::continuous) continue;
        const double hi = static_cast<double>(std::max<std::size_t>(train.cardinality[static_cast<std::size_t>(j)], 1) - 1);
        out.values(row, j) = std::clamp(std::round(out.values(row, j)), 0.0, hi);
      }
    }
    out.row_ids[n0 + s] = -1 - static_cast<std::int64_t>(s);
    result.origins.push_back({minority[a], minority[b], gap});
  }
  return result;
}

EncodedMatrix smote(const EncodedMatrix& train, const SmoteOptions& options, std::uint64_t seed) {
  return smote_with_origins(train, options, seed).matrix;
}

}  // namespace imbalkit
