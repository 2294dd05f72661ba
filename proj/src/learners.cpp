#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "imbalkit/error.hpp"
#include "imbalkit/learners.hpp"
#include "imbalkit/parallel.hpp"
#include "imbalkit/random.hpp"

namespace imbalkit {

Standardizer Standardizer::fit(const Matrix& X) {
  Standardizer s;
  s.mean = X.colwise().mean().transpose();
  s.scale.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double sd = X.rows() ? std::sqrt((X.col(j).array() - s.mean[j]).square().mean()) : 0.0;
    s.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& X) const {
  if (X.cols() != mean.size()) throw std::invalid_argument("standardizer: feature count mismatch");
  return (X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

void Standardizer::apply(std::span<const double> x, std::vector<double>& out) const {
  if (x.size() != static_cast<std::size_t>(mean.size())) throw std::invalid_argument("standardizer: feature count mismatch");
  out.resize(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[static_cast<Eigen::Index>(j)]) / scale[static_cast<Eigen::Index>(j)];
}

TrainedModel fit_model(const ModelSpec& spec, const EncodedMatrix& train) {
  const ModelSpec checked = validated(spec);
  if (train.rows() == 0) throw DataError("cannot train on an empty matrix");
  if (!train.values.allFinite()) throw DataError(to_string(spec.algorithm) + ": non-finite feature values");
  const auto balance = class_distribution(train);
  if (balance.count_class0 == 0 || balance.count_class1 == 0) {
    throw DataError(to_string(spec.algorithm) + ": training data must contain both classes");
  }

  TrainedModel model{checked, LogisticModel{}, train.column_names};
  switch (checked.algorithm) {
    case Algorithm::logistic: model.params = fit_logistic(checked, train); break;
    case Algorithm::decision_tree:
      model.params = DecisionTreeModel{fit_tree(checked, train, {}, derive_seed(checked.seed, Stream::tree_features))};
      break;
    case Algorithm::random_forest: model.params = fit_forest(checked, train); break;
    case Algorithm::gbt: model.params = fit_gbt(checked, train); break;
    case Algorithm::svm: model.params = fit_svm(checked, train); break;
    case Algorithm::naive_bayes: model.params = fit_naive_bayes(checked, train); break;
    case Algorithm::knn: model.params = fit_knn(checked, train); break;
    case Algorithm::mlp: model.params = fit_mlp(checked, train); break;
  }
  return model;
}

namespace {

std::size_t model_feature_count(const TrainedModel& model) { return model.feature_names.size(); }

}  // namespace

std::vector<double> predict_proba(const TrainedModel& model, const Matrix& X) {
  if (static_cast<std::size_t>(X.cols()) != model_feature_count(model)) {
    throw std::invalid_argument("predict_proba: model expects " + std::to_string(model_feature_count(model)) +
                                " features, got " + std::to_string(X.cols()));
  }
  std::vector<double> out(static_cast<std::size_t>(X.rows()));
  if (const auto* mlp = std::get_if<MlpModel>(&model.params)) {
    out = predict_batch(*mlp, X);
  } else {
    constexpr std::size_t chunk = 64;
    const std::size_t n = out.size();
    parallel_for((n + chunk - 1) / chunk, [&](std::size_t c) {
      for (std::size_t i = c * chunk; i < std::min(n, (c + 1) * chunk); ++i) {
        const std::span<const double> row(X.data() + static_cast<Eigen::Index>(i) * X.cols(),
                                          static_cast<std::size_t>(X.cols()));
        out[i] = std::visit(
            [&](const auto& m) -> double {
              if constexpr (std::is_same_v<std::decay_t<decltype(m)>, MlpModel>) return 0.0;
              else return predict_one(m, row);
            },
            model.params);
      }
    });
  }
  for (double& p : out) p = std::clamp(p, 0.0, 1.0);
  return out;
}

std::vector<double> predict_proba(const TrainedModel& model, const EncodedMatrix& X) {
  if (X.column_names != model.feature_names) {
    throw std::invalid_argument("predict_proba: feature names differ from the training columns");
  }
  return predict_proba(model, X.values);
}

std::vector<int> predict_class(std::span<const double> probabilities, double threshold) {
  std::vector<int> out(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) out[i] = probabilities[i] >= threshold ? 1 : 0;
  return out;
}

ParamDistribution ParamDistribution::choice(std::vector<ParamValue> values) {
  if (values.empty()) throw ConfigError("search space: empty choice list");
  ParamDistribution d;
  d.type = Type::choices;
  d.values = std::move(values);
  return d;
}

ParamDistribution ParamDistribution::int_uniform(std::int64_t low, std::int64_t high) {
  if (low > high) throw ConfigError("search space: int_uniform low exceeds high");
  ParamDistribution d;
  d.type = Type::int_uniform;
  d.low = static_cast<double>(low);
  d.high = static_cast<double>(high);
  return d;
}

ParamDistribution ParamDistribution::real_uniform(double low, double high) {
  if (!(low <= high)) throw ConfigError("search space: real_uniform low exceeds high");
  ParamDistribution d;
  d.type = Type::real_uniform;
  d.low = low;
  d.high = high;
  return d;
}

ParamDistribution ParamDistribution::log_uniform(double low, double high) {
  if (!(low > 0.0 && low <= high)) throw ConfigError("search space: log_uniform needs 0 < low <= high");
  ParamDistribution d;
  d.type = Type::log_uniform;
  d.low = low;
  d.high = high;
  return d;
}

SearchSpace search_space_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("search space must be an object");
  SearchSpace space;
  for (const auto& [key, value] : doc.items()) {
    if (value.is_array()) {
      std::vector<ParamValue> values;
      for (const auto& v : value) values.push_back(param_from_json(v));
      space[key] = ParamDistribution::choice(std::move(values));
      continue;
    }
    if (!value.is_object() || !value.contains("type")) {
      throw ConfigError("search space entry '" + key + "' must be a list or {type, low, high}");
    }
    const auto type = value.at("type").get<std::string>();
    try {
      if (type == "int_uniform") {
        space[key] = ParamDistribution::int_uniform(value.at("low").get<std::int64_t>(), value.at("high").get<std::int64_t>());
      } else if (type == "real_uniform") {
        space[key] = ParamDistribution::real_uniform(value.at("low").get<double>(), value.at("high").get<double>());
      } else if (type == "log_uniform") {
        space[key] = ParamDistribution::log_uniform(value.at("low").get<double>(), value.at("high").get<double>());
      } else {
        throw ConfigError("search space entry '" + key + "': unknown type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("search space entry '" + key + "': " + e.what());
    }
  }
  return space;
}

namespace {

ParamValue draw(const ParamDistribution& d, Rng& rng) {
  switch (d.type) {
    case ParamDistribution::Type::choices: return d.values[rng.below(d.values.size())];
    case ParamDistribution::Type::int_uniform: {
      const auto low = static_cast<std::int64_t>(d.low);
      const auto span = static_cast<std::uint64_t>(static_cast<std::int64_t>(d.high) - low) + 1;
      return low + static_cast<std::int64_t>(rng.below(span));
    }
    case ParamDistribution::Type::real_uniform: return rng.uniform(d.low, d.high);
    case ParamDistribution::Type::log_uniform: return std::exp(rng.uniform(std::log(d.low), std::log(d.high)));
  }
  return ParamValue{};
}

std::vector<Hyperparameters> sample_candidates(const SearchSpace& space, int n_iter, std::uint64_t seed) {
  Rng rng(seed, Stream::search);
  const bool finite = std::all_of(space.begin(), space.end(), [](const auto& kv) {
    return kv.second.type == ParamDistribution::Type::choices;
  });
  std::vector<Hyperparameters> out;
  if (finite) {
    std::size_t grid = 1;
    for (const auto& [key, d] : space) grid *= d.values.size();
    auto order = random_permutation(grid, rng);
    order.resize(std::min(grid, static_cast<std::size_t>(n_iter)));
    for (std::size_t index : order) {
      Hyperparameters h;
      // Last key varies fastest.
      for (auto it = space.rbegin(); it != space.rend(); ++it) {
        const auto& values = it->second.values;
        h[it->first] = values[index % values.size()];
        index /= values.size();
      }
      out.push_back(std::move(h));
    }
    return out;
  }
  for (int i = 0; i < n_iter; ++i) {
    Hyperparameters h;
    for (const auto& [key, d] : space) h[key] = draw(d, rng);
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace

SearchResult tune_random_search(const ModelSpec& base, const SearchSpace& space,
                                const EncodedMatrix& train, const SearchOptions& options) {
  if (space.empty()) throw ConfigError("search space is empty");
  if (options.n_iter < 1) throw ConfigError("n_iter must be at least 1");
  if (options.folds < 2) throw ConfigError("folds must be at least 2");

  SearchResult result;
  for (auto& h : sample_candidates(space, options.n_iter, options.seed)) {
    Hyperparameters merged = base.hyperparameters;
    for (auto& [key, value] : h) merged[key] = std::move(value);
    result.candidates.push_back({make_spec(base.algorithm, merged, base.seed), {}, 0.0});
  }

  const auto fold = stratified_fold_assignment(train.target, options.folds, options.seed);
  const auto k = static_cast<std::size_t>(options.folds);
  std::vector<EncodedMatrix> fold_train(k), fold_valid(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> tr, va;
    for (std::size_t i = 0; i < fold.size(); ++i) (static_cast<std::size_t>(fold[i]) == f ? va : tr).push_back(i);
    fold_train[f] = take_rows(train, tr);
    fold_valid[f] = take_rows(train, va);
    if (options.resampler) fold_train[f] = smote(fold_train[f], *options.resampler, derive_seed(options.seed, Stream::smote, f));
  }

  const std::size_t m = result.candidates.size();
  std::vector<double> accuracy(m * k);
  parallel_for(m * k, [&](std::size_t job) {
    const std::size_t c = job / k;
    const std::size_t f = job % k;
    const auto model = fit_model(result.candidates[c].spec, fold_train[f]);
    const auto predicted = predict_class(predict_proba(model, fold_valid[f]));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == fold_valid[f].target[i];
    accuracy[job] = static_cast<double>(hits) / static_cast<double>(predicted.size());
  });

  std::size_t best = 0;
  for (std::size_t c = 0; c < m; ++c) {
    auto& candidate = result.candidates[c];
    candidate.fold_accuracy.assign(accuracy.begin() + static_cast<std::ptrdiff_t>(c * k),
                                   accuracy.begin() + static_cast<std::ptrdiff_t>((c + 1) * k));
    candidate.mean_accuracy = std::accumulate(candidate.fold_accuracy.begin(), candidate.fold_accuracy.end(), 0.0) /
                              static_cast<double>(k);
    if (candidate.mean_accuracy > result.candidates[best].mean_accuracy) best = c;
  }
  result.best = result.candidates[best].spec;
  return result;
}

}  // namespace imbalkit
