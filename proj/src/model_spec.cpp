#include "imbalkit/model_spec.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>

#include "imbalkit/error.hpp"

namespace imbalkit {

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::logistic: return "logistic";
    case Algorithm::decision_tree: return "decision-tree";
    case Algorithm::random_forest: return "random-forest";
    case Algorithm::gbt: return "gbt";
    case Algorithm::svm: return "svm";
    case Algorithm::naive_bayes: return "naive-bayes";
    case Algorithm::knn: return "knn";
    case Algorithm::mlp: return "mlp";
  }
  return "logistic";
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> all = {
      Algorithm::logistic, Algorithm::decision_tree, Algorithm::random_forest, Algorithm::gbt,
      Algorithm::svm,      Algorithm::naive_bayes,   Algorithm::knn,           Algorithm::mlp};
  return all;
}

Algorithm parse_algorithm(const std::string& text) {
  for (Algorithm a : all_algorithms()) {
    if (to_string(a) == text) return a;
  }
  throw ConfigError("unknown algorithm '" + text + "'");
}

std::string to_string(const ParamValue& value) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else if constexpr (std::is_same_v<T, std::vector<std::int64_t>>) {
          std::string out = "(";
          for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
          return out + ")";
        } else if constexpr (std::is_same_v<T, double>) {
          std::ostringstream os;
          os << v;
          return os.str();
        } else {
          return std::to_string(v);
        }
      },
      value);
}

nlohmann::ordered_json to_json(const ParamValue& value) {
  return std::visit([](const auto& v) { return nlohmann::ordered_json(v); }, value);
}

ParamValue param_from_json(const nlohmann::json& value) {
  if (value.is_number_integer()) return value.get<std::int64_t>();
  if (value.is_number_float()) return value.get<double>();
  if (value.is_string()) return value.get<std::string>();
  if (value.is_array()) return value.get<std::vector<std::int64_t>>();
  throw ConfigError("unsupported hyperparameter value " + value.dump());
}

namespace {

enum class Kind { integer, real, choice, int_list };

struct ParamRule {
  Kind kind;
  ParamValue fallback;
  std::vector<std::string> choices;  // Kind::choice only
  std::function<bool(const ParamValue&)> valid;
  const char* constraint;
};

bool positive_int(const ParamValue& v) { return std::get<std::int64_t>(v) >= 1; }
bool positive_real(const ParamValue& v) { return std::get<double>(v) > 0.0; }
bool nonneg_real(const ParamValue& v) { return std::get<double>(v) >= 0.0; }
bool nonneg_int(const ParamValue& v) { return std::get<std::int64_t>(v) >= 0; }
bool unit_fraction(const ParamValue& v) {
  const double x = std::get<double>(v);
  return x > 0.0 && x <= 1.0;
}
bool any_value(const ParamValue&) { return true; }

ParamRule integer(std::int64_t fallback, bool (*valid)(const ParamValue&) = positive_int,
                  const char* constraint = ">= 1") {
  return {Kind::integer, fallback, {}, valid, constraint};
}
ParamRule real(double fallback, bool (*valid)(const ParamValue&) = positive_real,
               const char* constraint = "> 0") {
  return {Kind::real, fallback, {}, valid, constraint};
}
ParamRule choice(std::string fallback, std::vector<std::string> choices) {
  return {Kind::choice, std::move(fallback), std::move(choices), any_value, "one of the listed values"};
}

using RuleTable = std::map<std::string, ParamRule>;

const RuleTable& rules_for(Algorithm algorithm) {
  static const std::map<Algorithm, RuleTable> tables = [] {
    std::map<Algorithm, RuleTable> t;
    t[Algorithm::logistic] = {
        {"penalty", choice("l2", {"l2", "l1", "none"})},
        {"C", real(1.0)},
        {"max_iter", integer(1000)},
        {"tol", real(1e-10)},
    };
    const RuleTable tree = {
        {"criterion", choice("entropy", {"entropy", "gini"})},
        {"max_depth", integer(64)},
        {"min_samples_split", integer(2, [](const ParamValue& v) { return std::get<std::int64_t>(v) >= 2; }, ">= 2")},
        {"min_samples_leaf", integer(1)},
        {"max_features", choice("all", {"all", "sqrt", "log2"})},
    };
    t[Algorithm::decision_tree] = tree;
    RuleTable forest = tree;
    forest["max_features"] = choice("sqrt", {"all", "sqrt", "log2"});
    forest["n_estimators"] = integer(100);
    forest["bootstrap"] = integer(1, nonneg_int, ">= 0");
    t[Algorithm::random_forest] = forest;
    t[Algorithm::gbt] = {
        {"n_estimators", integer(100, nonneg_int, ">= 0")},
        {"learning_rate", real(0.1)},
        {"max_depth", integer(3)},
        {"l2_leaf_reg", real(1.0, nonneg_real, ">= 0")},
        {"min_child_weight", real(1e-3, nonneg_real, ">= 0")},
        {"min_split_gain", real(0.0, nonneg_real, ">= 0")},
        {"subsample", real(1.0, unit_fraction, "in (0, 1]")},
        {"colsample_bytree", real(1.0, unit_fraction, "in (0, 1]")},
        {"max_bins", integer(0, nonneg_int, ">= 0 (0 = exact)")},
        {"categorical", choice("plain-codes", {"plain-codes", "ordered-target-stats"})},
        {"ts_smoothing", real(1.0)},
    };
    t[Algorithm::svm] = {
        {"kernel", choice("rbf", {"rbf", "linear"})},
        {"C", real(1.0)},
        {"gamma", real(0.0, nonneg_real, ">= 0 (0 = 1/(d*var(X)))")},
        {"tol", real(1e-3)},
        {"max_iter", integer(0, nonneg_int, ">= 0 (0 = automatic)")},
        {"standardize", choice("yes", {"yes", "no"})},
    };
    t[Algorithm::naive_bayes] = {
        {"var_smoothing", real(1e-9, nonneg_real, ">= 0")},
    };
    t[Algorithm::knn] = {
        {"n_neighbors", integer(5)},
        {"weights", choice("uniform", {"uniform", "distance"})},
        {"standardize", choice("yes", {"yes", "no"})},
    };
    t[Algorithm::mlp] = {
        {"hidden_layer_sizes",
         {Kind::int_list, std::vector<std::int64_t>{512, 256, 128}, {},
          [](const ParamValue& v) {
            const auto& sizes = std::get<std::vector<std::int64_t>>(v);
            return !sizes.empty() && std::all_of(sizes.begin(), sizes.end(), [](auto s) { return s >= 1; });
          },
          "nonempty list of positive sizes"}},
        {"activation", choice("tanh", {"tanh", "relu"})},
        {"learning_rate", real(1e-3)},
        {"batch_size", integer(32)},
        {"max_iter", integer(500)},
        {"alpha", real(1e-4, nonneg_real, ">= 0")},
        {"tol", real(1e-4, nonneg_real, ">= 0")},
        {"n_iter_no_change", integer(10)},
    };
    return t;
  }();
  return tables.at(algorithm);
}

std::optional<ParamValue> coerce(const ParamRule& rule, const ParamValue& value) {
  switch (rule.kind) {
    case Kind::integer:
      if (auto* i = std::get_if<std::int64_t>(&value)) return *i;
      if (auto* d = std::get_if<double>(&value); d && std::floor(*d) == *d) {
        return static_cast<std::int64_t>(*d);
      }
      return std::nullopt;
    case Kind::real:
      if (auto* d = std::get_if<double>(&value)) return *d;
      if (auto* i = std::get_if<std::int64_t>(&value)) return static_cast<double>(*i);
      return std::nullopt;
    case Kind::choice:
      if (auto* s = std::get_if<std::string>(&value)) {
        if (std::find(rule.choices.begin(), rule.choices.end(), *s) != rule.choices.end()) return *s;
      }
      return std::nullopt;
    case Kind::int_list:
      if (auto* l = std::get_if<std::vector<std::int64_t>>(&value)) return *l;
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

ModelSpec make_spec(Algorithm algorithm, const Hyperparameters& overrides, std::uint64_t seed) {
  const auto& rules = rules_for(algorithm);
  ModelSpec spec;
  spec.algorithm = algorithm;
  spec.seed = seed;
  for (const auto& [key, value] : overrides) {
    auto rule = rules.find(key);
    if (rule == rules.end()) {
      throw ConfigError("unknown hyperparameter '" + key + "' for " + to_string(algorithm));
    }
    auto converted = coerce(rule->second, value);
    if (!converted || !rule->second.valid(*converted)) {
      throw ConfigError("hyperparameter '" + key + "' = " + to_string(value) + " for " +
                        to_string(algorithm) + " must be " + rule->second.constraint);
    }
    spec.hyperparameters[key] = std::move(*converted);
  }
  for (const auto& [key, rule] : rules) spec.hyperparameters.try_emplace(key, rule.fallback);
  return spec;
}

ModelSpec validated(const ModelSpec& spec) {
  return make_spec(spec.algorithm, spec.hyperparameters, spec.seed);
}

namespace {

const ParamValue& lookup(const ModelSpec& spec, const std::string& key) {
  auto it = spec.hyperparameters.find(key);
  if (it == spec.hyperparameters.end()) {
    throw ConfigError("hyperparameter '" + key + "' missing from " + to_string(spec.algorithm) + " spec");
  }
  return it->second;
}

template <class T>
const T& typed(const ModelSpec& spec, const std::string& key) {
  const auto& value = lookup(spec, key);
  if (auto* v = std::get_if<T>(&value)) return *v;
  throw ConfigError("hyperparameter '" + key + "' has the wrong type");
}

}  // namespace

std::int64_t ModelSpec::get_int(const std::string& key) const { return typed<std::int64_t>(*this, key); }
double ModelSpec::get_double(const std::string& key) const { return typed<double>(*this, key); }
const std::string& ModelSpec::get_string(const std::string& key) const {
  return typed<std::string>(*this, key);
}
const std::vector<std::int64_t>& ModelSpec::get_int_list(const std::string& key) const {
  return typed<std::vector<std::int64_t>>(*this, key);
}

nlohmann::ordered_json spec_to_json(const ModelSpec& spec) {
  nlohmann::ordered_json doc;
  doc["algorithm"] = to_string(spec.algorithm);
  nlohmann::ordered_json hp = nlohmann::ordered_json::object();
  for (const auto& [key, value] : spec.hyperparameters) hp[key] = to_json(value);
  doc["hyperparameters"] = std::move(hp);
  doc["seed"] = spec.seed;
  return doc;
}

ModelSpec spec_from_json(const nlohmann::json& doc, std::uint64_t default_seed) {
  if (!doc.is_object() || !doc.contains("algorithm")) {
    throw ConfigError("model spec must be an object with an 'algorithm' field");
  }
  Hyperparameters hp;
  if (doc.contains("hyperparameters")) {
    for (const auto& [key, value] : doc.at("hyperparameters").items()) hp[key] = param_from_json(value);
  }
  const std::uint64_t seed = doc.contains("seed") ? doc.at("seed").get<std::uint64_t>() : default_seed;
  return make_spec(parse_algorithm(doc.at("algorithm").get<std::string>()), hp, seed);
}

std::map<std::string, ModelSpec> paper_presets(std::uint64_t seed) {
  using V = std::vector<std::int64_t>;
  std::map<std::string, ModelSpec> presets;
  presets["lr"] = make_spec(Algorithm::logistic, {{"penalty", std::string("l1")}, {"C", 0.1}}, seed);
  presets["dt"] = make_spec(Algorithm::decision_tree,
                            {{"min_samples_split", std::int64_t{10}}, {"max_depth", std::int64_t{10}}}, seed);
  presets["rf"] = make_spec(Algorithm::random_forest,
                            {{"n_estimators", std::int64_t{500}}, {"max_depth", std::int64_t{20}}}, seed);
  presets["gbm"] = make_spec(Algorithm::gbt, {{"n_estimators", std::int64_t{200}}, {"learning_rate", 0.01}}, seed);
  presets["svm"] = make_spec(Algorithm::svm, {{"kernel", std::string("rbf")}, {"C", 10.0}}, seed);
  presets["nb"] = make_spec(Algorithm::naive_bayes, {{"var_smoothing", 1e-9}}, seed);
  presets["knn"] = make_spec(Algorithm::knn,
                             {{"weights", std::string("distance")}, {"n_neighbors", std::int64_t{3}}}, seed);
  presets["ann"] = make_spec(Algorithm::mlp,
                             {{"hidden_layer_sizes", V{512, 256, 128}}, {"activation", std::string("tanh")}}, seed);
  presets["ann-2layer"] = make_spec(Algorithm::mlp,
                                    {{"hidden_layer_sizes", V{512, 256}}, {"activation", std::string("tanh")}}, seed);
  presets["xgboost"] = make_spec(Algorithm::gbt,
                                 {{"subsample", 0.8},
                                  {"n_estimators", std::int64_t{200}},
                                  {"max_depth", std::int64_t{10}},
                                  {"learning_rate", 0.1},
                                  {"colsample_bytree", 0.8}},
                                 seed);
  presets["lightgbm"] = make_spec(Algorithm::gbt,
                                  {{"subsample", 0.8},
                                   {"n_estimators", std::int64_t{500}},
                                   {"max_depth", std::int64_t{10}},
                                   {"learning_rate", 0.01},
                                   {"colsample_bytree", 0.8},
                                   {"max_bins", std::int64_t{255}}},
                                  seed);
  presets["catboost"] = make_spec(Algorithm::gbt,
                                  {{"learning_rate", 0.1},
                                   {"l2_leaf_reg", 1.0},
                                   {"n_estimators", std::int64_t{500}},
                                   {"max_depth", std::int64_t{10}},
                                   {"categorical", std::string("ordered-target-stats")}},
                                  seed);
  return presets;
}

}  // namespace imbalkit
