#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "imbalkit/learners.hpp"

namespace imbalkit {

struct StackingSpec {
  std::vector<ModelSpec> base_specs;
  ModelSpec meta_spec = make_spec(Algorithm::logistic);
  int oof_folds = 5;
  std::uint64_t seed = 0;
  // Applied to each out-of-fold training partition and to the refit set.
  std::optional<SmoteOptions> resampler;
};

struct StackedModel {
  StackingSpec spec;
  std::vector<TrainedModel> bases;  // refit on the full training set
  TrainedModel meta;
  Matrix oof_matrix;                // n x bases, held-out base probabilities
  std::vector<std::int64_t> row_ids;  // row id of each oof_matrix row
  std::vector<int> oof_fold;        // fold that held out each row
  // Row ids each fold model was trained on (synthetic rows excluded).
  std::vector<std::vector<std::int64_t>> fold_train_row_ids;
  std::vector<std::string> feature_names;
};

/// Out-of-fold stacking: each row's meta-feature comes from a fold model that
/// never saw it; the meta model is fitted on those features and the bases are
/// then refit on all rows.
StackedModel stack_fit(const StackingSpec& spec, const EncodedMatrix& train);

std::vector<double> stack_predict_proba(const StackedModel& model, const Matrix& X);
std::vector<double> stack_predict_proba(const StackedModel& model, const EncodedMatrix& X);

/// Base probabilities, one column per base.
Matrix base_probabilities(const StackedModel& model, const Matrix& X);

nlohmann::ordered_json stacked_to_json(const StackedModel& model);
StackedModel stacked_from_json(const nlohmann::json& doc);

}  // namespace imbalkit
