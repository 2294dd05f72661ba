#include "imbalkit/stacking.hpp"

#include <exception>

#include "imbalkit/error.hpp"
#include "imbalkit/parallel.hpp"
#include "imbalkit/random.hpp"

namespace imbalkit {

namespace {

[[noreturn]] void rethrow_for_base(std::size_t b, const ModelSpec& spec, std::exception_ptr error) {
  const std::string prefix = "base model " + std::to_string(b) + " (" + to_string(spec.algorithm) + "): ";
  try {
    std::rethrow_exception(error);
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(prefix + e.what());
  }
}

EncodedMatrix meta_matrix(const Matrix& probabilities, std::span<const int> target, std::size_t n_bases) {
  EncodedMatrix m;
  m.values = probabilities;
  m.target.assign(target.begin(), target.end());
  for (std::size_t b = 0; b < n_bases; ++b) {
    m.column_names.push_back("base" + std::to_string(b));
    m.kinds.push_back(ColumnKind::continuous);
    m.cardinality.push_back(0);
  }
  m.row_ids.resize(static_cast<std::size_t>(probabilities.rows()));
  for (std::size_t i = 0; i < m.row_ids.size(); ++i) m.row_ids[i] = static_cast<std::int64_t>(i);
  return m;
}

std::vector<std::int64_t> original_ids(const EncodedMatrix& m) {
  std::vector<std::int64_t> ids;
  for (auto id : m.row_ids) {
    if (id >= 0) ids.push_back(id);
  }
  return ids;
}

}  // namespace

StackedModel stack_fit(const StackingSpec& spec, const EncodedMatrix& train) {
  if (spec.base_specs.empty()) throw ConfigError("stacking needs at least one base model");
  if (spec.meta_spec.algorithm != Algorithm::logistic) throw ConfigError("stacking meta model must be logistic");
  if (spec.oof_folds < 2) throw ConfigError("oof_folds must be at least 2");
  const auto balance = class_distribution(train);
  if (balance.count_class0 == 0 || balance.count_class1 == 0) {
    throw DataError("stacking: training data must contain both classes");
  }

  StackedModel model;
  model.spec = spec;
  model.feature_names = train.column_names;
  model.row_ids = train.row_ids;
  const std::size_t n = train.rows();
  const std::size_t B = spec.base_specs.size();
  const auto k = static_cast<std::size_t>(spec.oof_folds);

  model.oof_fold = stratified_fold_assignment(train.target, spec.oof_folds, spec.seed);
  std::vector<std::vector<std::size_t>> held_out(k);
  std::vector<EncodedMatrix> fold_train(k);
  model.fold_train_row_ids.resize(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i) (static_cast<std::size_t>(model.oof_fold[i]) == f ? held_out[f] : rows).push_back(i);
    fold_train[f] = take_rows(train, rows);
    if (spec.resampler) fold_train[f] = smote(fold_train[f], *spec.resampler, derive_seed(spec.seed, Stream::smote, f));
    model.fold_train_row_ids[f] = original_ids(fold_train[f]);
  }

  // Jobs 0..B*k-1 fill the OOF matrix; the last B refit each base on all rows.
  EncodedMatrix full = spec.resampler ? smote(train, *spec.resampler, derive_seed(spec.seed, Stream::smote, k)) : train;
  model.oof_matrix = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(B));
  model.bases.resize(B);
  std::vector<std::exception_ptr> errors(B * k + B);
  parallel_for(B * k + B, [&](std::size_t job) {
    try {
      if (job < B * k) {
        const std::size_t b = job / k;
        const std::size_t f = job % k;
        const auto fold_model = fit_model(spec.base_specs[b], fold_train[f]);
        const EncodedMatrix valid = take_rows(train, held_out[f]);
        const auto p = predict_proba(fold_model, valid);
        for (std::size_t r = 0; r < held_out[f].size(); ++r) {
          model.oof_matrix(static_cast<Eigen::Index>(held_out[f][r]), static_cast<Eigen::Index>(b)) = p[r];
        }
      } else {
        const std::size_t b = job - B * k;
        model.bases[b] = fit_model(spec.base_specs[b], full);
      }
    } catch (...) {
      errors[job] = std::current_exception();
    }
  });
  for (std::size_t job = 0; job < errors.size(); ++job) {
    if (!errors[job]) continue;
    const std::size_t b = job < B * k ? job / k : job - B * k;
    rethrow_for_base(b, spec.base_specs[b], errors[job]);
  }

  model.meta = fit_model(spec.meta_spec, meta_matrix(model.oof_matrix, train.target, B));
  return model;
}

Matrix base_probabilities(const StackedModel& model, const Matrix& X) {
  if (static_cast<std::size_t>(X.cols()) != model.feature_names.size()) {
    throw std::invalid_argument("stacked model expects " + std::to_string(model.feature_names.size()) +
                                " features, got " + std::to_string(X.cols()));
  }
  Matrix P(X.rows(), static_cast<Eigen::Index>(model.bases.size()));
  for (std::size_t b = 0; b < model.bases.size(); ++b) {
    const auto p = predict_proba(model.bases[b], X);
    for (Eigen::Index i = 0; i < X.rows(); ++i) P(i, static_cast<Eigen::Index>(b)) = p[static_cast<std::size_t>(i)];
  }
  return P;
}

std::vector<double> stack_predict_proba(const StackedModel& model, const Matrix& X) {
  return predict_proba(model.meta, base_probabilities(model, X));
}

std::vector<double> stack_predict_proba(const StackedModel& model, const EncodedMatrix& X) {
  if (X.column_names != model.feature_names) {
    throw std::invalid_argument("stack_predict_proba: feature names differ from the training columns");
  }
  return stack_predict_proba(model, X.values);
}

nlohmann::ordered_json stacked_to_json(const StackedModel& model) {
  nlohmann::ordered_json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["kind"] = "stacked";
  doc["oof_folds"] = model.spec.oof_folds;
  doc["seed"] = model.spec.seed;
  if (model.spec.resampler) {
    doc["resampler"] = {{"k_neighbors", model.spec.resampler->k_neighbors},
                        {"rounding", to_string(model.spec.resampler->rounding)}};
  } else {
    doc["resampler"] = nullptr;
  }
  doc["feature_names"] = model.feature_names;
  auto& bases = doc["bases"] = nlohmann::ordered_json::array();
  for (const auto& b : model.bases) bases.push_back(model_to_json(b));
  doc["meta"] = model_to_json(model.meta);
  doc["oof_matrix"] = {{"rows", model.oof_matrix.rows()}, {"cols", model.oof_matrix.cols()},
                       {"data", std::vector<double>(model.oof_matrix.data(), model.oof_matrix.data() + model.oof_matrix.size())}};
  doc["row_ids"] = model.row_ids;
  doc["oof_fold"] = model.oof_fold;
  return doc;
}

StackedModel stacked_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("format_version") || !doc["format_version"].is_number_integer() ||
      doc["format_version"].get<int>() != kModelFormatVersion) {
    throw ConfigError("stacked model document: unsupported or missing format_version");
  }
  try {
    if (doc.at("kind").get<std::string>() != "stacked") throw ConfigError("not a stacked model document");
    StackedModel model;
    model.spec.oof_folds = doc.at("oof_folds").get<int>();
    model.spec.seed = doc.at("seed").get<std::uint64_t>();
    if (!doc.at("resampler").is_null()) {
      SmoteOptions options;
      options.k_neighbors = doc["resampler"].at("k_neighbors").get<int>();
      options.rounding = parse_smote_rounding(doc["resampler"].at("rounding").get<std::string>());
      model.spec.resampler = options;
    }
    model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    for (const auto& b : doc.at("bases")) {
      model.bases.push_back(model_from_json(b));
      model.spec.base_specs.push_back(model.bases.back().spec);
    }
    model.meta = model_from_json(doc.at("meta"));
    model.spec.meta_spec = model.meta.spec;
    const auto& oof = doc.at("oof_matrix");
    const auto data = oof.at("data").get<std::vector<double>>();
    model.oof_matrix.resize(oof.at("rows").get<Eigen::Index>(), oof.at("cols").get<Eigen::Index>());
    if (static_cast<std::size_t>(model.oof_matrix.size()) != data.size()) {
      throw ConfigError("stacked model document: oof_matrix shape mismatch");
    }
    std::copy(data.begin(), data.end(), model.oof_matrix.data());
    model.row_ids = doc.at("row_ids").get<std::vector<std::int64_t>>();
    model.oof_fold = doc.at("oof_fold").get<std::vector<int>>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("stacked model document: ") + e.what());
  }
}

}  // namespace imbalkit
