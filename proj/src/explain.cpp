#include "imbalkit/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include "imbalkit/error.hpp"
#include "imbalkit/log.hpp"
#include "imbalkit/metrics.hpp"
#include "imbalkit/parallel.hpp"
#include "imbalkit/random.hpp"
#include "imbalkit/stats.hpp"

namespace imbalkit {

BatchPredict predictor(const TrainedModel& model) {
  return [&model](const Matrix& X) { return predict_proba(model, X); };
}

BatchPredict predictor(const StackedModel& model) {
  return [&model](const Matrix& X) { return stack_predict_proba(model, X); };
}

namespace {

std::vector<std::string> default_names(std::size_t d) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < d; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

void check_instance(std::span<const double> x, const Matrix& background) {
  if (background.rows() == 0) throw std::invalid_argument("Shapley: background set is empty");
  if (static_cast<std::size_t>(background.cols()) != x.size()) {
    throw std::invalid_argument("Shapley: background has " + std::to_string(background.cols()) +
                                " columns, instance has " + std::to_string(x.size()));
  }
}

// Coalition values v(S): mean prediction with features in S taken from x and
// the rest from each background row. Masks are evaluated in batches.
std::vector<double> coalition_values(const BatchPredict& predict, std::span<const double> x, const Matrix& background,
                                     const std::vector<std::uint64_t>& masks) {
  const Eigen::Index m = background.rows();
  const Eigen::Index d = background.cols();
  const std::size_t per_batch = std::max<std::size_t>(1, static_cast<std::size_t>(4096 / m));
  const std::size_t batches = (masks.size() + per_batch - 1) / per_batch;
  std::vector<double> values(masks.size());
  parallel_for(batches, [&](std::size_t b) {
    const std::size_t start = b * per_batch;
    const std::size_t stop = std::min(masks.size(), start + per_batch);
    Matrix Z(static_cast<Eigen::Index>(stop - start) * m, d);
    for (std::size_t s = start; s < stop; ++s) {
      const auto offset = static_cast<Eigen::Index>(s - start) * m;
      Z.middleRows(offset, m) = background;
      for (Eigen::Index j = 0; j < d; ++j) {
        if (masks[s] >> j & 1U) Z.col(j).segment(offset, m).setConstant(x[static_cast<std::size_t>(j)]);
      }
    }
    const auto p = predict(Z);
    for (std::size_t s = start; s < stop; ++s) {
      const auto offset = static_cast<std::size_t>(s - start) * static_cast<std::size_t>(m);
      double sum = 0.0;
      for (Eigen::Index r = 0; r < m; ++r) sum += p[offset + static_cast<std::size_t>(r)];
      values[s] = sum / static_cast<double>(m);
    }
  });
  return values;
}

}  // namespace

Attribution shapley_exact(const BatchPredict& predict, std::span<const double> x, const Matrix& background,
                          int max_features) {
  check_instance(x, background);
  const auto d = static_cast<int>(x.size());
  if (d > max_features) {
    throw std::invalid_argument("exact Shapley supports at most " + std::to_string(max_features) + " features (got " +
                                std::to_string(d) + "); use shapley_sampled");
  }
  const std::uint64_t full = (std::uint64_t{1} << d);
  std::vector<std::uint64_t> masks(full);
  std::iota(masks.begin(), masks.end(), std::uint64_t{0});
  const auto v = coalition_values(predict, x, background, masks);

  // weight(s) = s! (d - s - 1)! / d! = 1 / (d * C(d - 1, s))
  std::vector<double> weight(static_cast<std::size_t>(d));
  for (int s = 0; s < d; ++s) {
    double binom = 1.0;
    for (int i = 1; i <= s; ++i) binom = binom * (d - 1 - s + i) / i;
    weight[static_cast<std::size_t>(s)] = 1.0 / (d * binom);
  }
  Attribution a;
  a.method = "shapley-exact";
  a.feature_names = default_names(x.size());
  a.values.assign(x.size(), 0.0);
  for (int j = 0; j < d; ++j) {
    const std::uint64_t bit = std::uint64_t{1} << j;
    double phi = 0.0;
    for (std::uint64_t S = 0; S < full; ++S) {
      if (S & bit) continue;
      phi += weight[static_cast<std::size_t>(std::popcount(S))] * (v[S | bit] - v[S]);
    }
    a.values[static_cast<std::size_t>(j)] = phi;
  }
  a.base_value = v[0];
  a.prediction = v[full - 1];
  return a;
}

Attribution shapley_sampled(const BatchPredict& predict, std::span<const double> x, const Matrix& background,
                            int n_permutations, std::uint64_t seed) {
  check_instance(x, background);
  if (n_permutations < 1) throw std::invalid_argument("n_permutations must be at least 1");
  const std::size_t d = x.size();
  if (d > 63) throw std::invalid_argument("Shapley sampling supports at most 63 features");

  std::vector<std::vector<std::size_t>> orderings;
  std::size_t factorial = 1;
  for (std::size_t i = 2; i <= d && factorial <= 40320; ++i) factorial *= i;
  const bool exhaustive = factorial <= 40320 && static_cast<std::size_t>(n_permutations) % factorial == 0;
  if (exhaustive) {
    std::vector<std::size_t> perm(d);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    do orderings.push_back(perm);
    while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    Rng rng(seed, Stream::shapley);
    std::vector<std::size_t> perm(d);
    for (int p = 0; p < n_permutations; ++p) {
      if (p % 2 == 0) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        rng.shuffle(perm);
      } else {
        std::reverse(perm.begin(), perm.end());
      }
      orderings.push_back(perm);
    }
  }

  std::vector<std::uint64_t> masks;
  std::unordered_map<std::uint64_t, std::size_t> index;
  auto need = [&](std::uint64_t mask) {
    if (index.emplace(mask, masks.size()).second) masks.push_back(mask);
  };
  for (const auto& perm : orderings) {
    std::uint64_t mask = 0;
    need(mask);
    for (auto j : perm) {
      mask |= std::uint64_t{1} << j;
      need(mask);
    }
  }
  const auto v = coalition_values(predict, x, background, masks);

  Attribution a;
  a.method = "shapley-sampled";
  a.feature_names = default_names(d);
  a.values.assign(d, 0.0);
  for (const auto& perm : orderings) {
    std::uint64_t mask = 0;
    for (auto j : perm) {
      const std::uint64_t next = mask | (std::uint64_t{1} << j);
      a.values[j] += v[index.at(next)] - v[index.at(mask)];
      mask = next;
    }
  }
  for (double& phi : a.values) phi /= static_cast<double>(orderings.size());
  a.base_value = v[index.at(0)];
  a.prediction = v[index.at((std::uint64_t{1} << d) - 1)];
  return a;
}

LimeConfig lime_config_from(const EncodedMatrix& train) {
  LimeConfig config;
  const Matrix& X = train.values;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const auto kind = train.kinds.empty() ? ColumnKind::continuous : train.kinds[static_cast<std::size_t>(j)];
    config.kinds.push_back(kind);
    const double mean = X.col(j).mean();
    const double sd = X.rows() > 1 ? std::sqrt((X.col(j).array() - mean).square().sum() / static_cast<double>(X.rows() - 1)) : 0.0;
    config.scale.push_back(sd);
    std::map<double, double> counts;
    if (kind != ColumnKind::continuous) {
      for (Eigen::Index i = 0; i < X.rows(); ++i) counts[X(i, j)] += 1.0;
    }
    std::vector<double> values, weights;
    for (const auto& [value, count] : counts) {
      values.push_back(value);
      weights.push_back(count / static_cast<double>(X.rows()));
    }
    config.category_values.push_back(std::move(values));
    config.category_weights.push_back(std::move(weights));
  }
  return config;
}

double lime_kernel(double distance, double sigma) { return std::exp(-(distance * distance) / (sigma * sigma)); }

SurrogateFit lime_explain(const BatchPredict& predict, std::span<const double> x, const LimeConfig& config,
                          std::uint64_t seed) {
  const std::size_t d = x.size();
  if (config.kinds.size() != d || config.scale.size() != d) {
    throw std::invalid_argument("LIME config describes " + std::to_string(config.kinds.size()) + " features, instance has " +
                                std::to_string(d));
  }
  if (config.n_samples < static_cast<int>(d) + 1) throw std::invalid_argument("LIME n_samples must be at least d + 1");
  if (!(config.ridge >= 0.0)) throw std::invalid_argument("LIME ridge must be nonnegative");
  const double sigma = config.sigma > 0.0 ? config.sigma : 0.75 * std::sqrt(static_cast<double>(d));

  const auto n = static_cast<Eigen::Index>(config.n_samples);
  const auto dd = static_cast<Eigen::Index>(d);
  Matrix Z(n, dd);
  Rng rng(seed, Stream::lime);
  for (Eigen::Index j = 0; j < dd; ++j) Z(0, j) = x[static_cast<std::size_t>(j)];
  for (Eigen::Index i = 1; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const auto& values = config.category_values[j];
      if (config.kinds[j] != ColumnKind::continuous && !values.empty()) {
        const auto& w = config.category_weights[j];
        double u = rng.uniform();
        std::size_t c = 0;
        while (c + 1 < values.size() && u >= w[c]) u -= w[c++];
        Z(i, static_cast<Eigen::Index>(j)) = values[c];
      } else {
        Z(i, static_cast<Eigen::Index>(j)) = x[j] + rng.normal() * config.scale[j];
      }
    }
  }
  const auto y = predict(Z);

  SurrogateFit fit;
  fit.kernel_weights.resize(static_cast<std::size_t>(n));
  Matrix A(n, dd + 1);
  Vector w(n), target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double dist2 = 0.0;
    A(i, 0) = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = Z(i, static_cast<Eigen::Index>(j)) - x[j];
      A(i, static_cast<Eigen::Index>(j) + 1) = diff;
      const double s = config.scale[j] > 0.0 ? config.scale[j] : 1.0;
      dist2 += (diff / s) * (diff / s);
    }
    w[i] = lime_kernel(std::sqrt(dist2), sigma);
    fit.kernel_weights[static_cast<std::size_t>(i)] = w[i];
    target[i] = y[static_cast<std::size_t>(i)];
  }

  const Eigen::MatrixXd AtWA = A.transpose() * w.asDiagonal() * A;
  const Vector AtWy = A.transpose() * (w.array() * target.array()).matrix();
  double lambda = config.ridge;
  Vector theta;
  for (int attempt = 0;; ++attempt) {
    Eigen::MatrixXd M = AtWA;
    for (Eigen::Index j = 1; j < M.rows(); ++j) M(j, j) += lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    const double rcond = ldlt.info() == Eigen::Success ? ldlt.rcond() : 0.0;
    if (ldlt.info() == Eigen::Success && rcond > 1e-13) {
      theta = ldlt.solve(AtWy);
      if (theta.allFinite()) break;
    }
    if (attempt >= 12) throw NumericError("LIME: weighted design is singular");
    lambda = lambda > 0.0 ? lambda * 10.0 : 1e-6;
    log_warning("LIME: singular weighted design; ridge raised to " + std::to_string(lambda));
  }
  fit.ridge_used = lambda;
  fit.local_prediction = theta[0];
  fit.coefficients.resize(d);
  fit.intercept = theta[0];
  for (std::size_t j = 0; j < d; ++j) {
    fit.coefficients[j] = theta[static_cast<Eigen::Index>(j) + 1];
    fit.intercept -= fit.coefficients[j] * x[j];
  }

  const double wsum = w.sum();
  const double ybar = (w.array() * target.array()).sum() / wsum;
  const Vector fitted = A * theta;
  const double ss_res = (w.array() * (target - fitted).array().square()).sum();
  const double ss_tot = (w.array() * (target.array() - ybar).square()).sum();
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

ImportanceReport normalized(ImportanceReport report) {
  const double total = std::accumulate(report.scores.begin(), report.scores.end(), 0.0);
  if (total > 0.0) {
    for (double& s : report.scores) s /= total;
  }
  report.normalized = true;
  return report;
}

namespace {

ImportanceReport empty_report(const std::vector<std::string>& names, const std::string& method) {
  ImportanceReport r;
  r.feature_names = names;
  r.scores.assign(names.size(), 0.0);
  r.raw.assign(names.size(), 0.0);
  r.method = method;
  return r;
}

void add_tree(const DecisionTree& tree, ImportanceReport& r) {
  for (const auto& node : tree.nodes) {
    if (node.is_leaf()) continue;
    r.raw.at(static_cast<std::size_t>(node.feature)) += node.weighted_impurity_decrease;
  }
}

void clamp_scores(ImportanceReport& r) {
  for (std::size_t j = 0; j < r.raw.size(); ++j) r.scores[j] = std::max(0.0, r.raw[j]);
}

}  // namespace

ImportanceReport impurity_importance(const TrainedModel& model) {
  auto r = empty_report(model.feature_names, "impurity");
  if (const auto* forest = std::get_if<ForestModel>(&model.params)) {
    for (const auto& tree : forest->trees) add_tree(tree, r);
  } else if (const auto* dt = std::get_if<DecisionTreeModel>(&model.params)) {
    add_tree(dt->tree, r);
  } else {
    throw std::invalid_argument("impurity importance needs a tree model, got " + to_string(model.algorithm()));
  }
  clamp_scores(r);
  return r;
}

GbtImportances gbt_importances(const GbtModel& model, const std::vector<std::string>& feature_names) {
  GbtImportances out{empty_report(feature_names, "split-count"), empty_report(feature_names, "gain"),
                     empty_report(feature_names, "loss-reduction")};
  for (const auto& s : model.splits) {
    const auto j = static_cast<std::size_t>(s.feature);
    out.split_count.raw.at(j) += 1.0;
    out.gain.raw.at(j) += s.gain;
    out.loss_reduction.raw.at(j) += s.loss_reduction;
  }
  if (!model.trees.empty()) {
    for (double& v : out.loss_reduction.raw) v /= static_cast<double>(model.trees.size());
  }
  clamp_scores(out.split_count);
  clamp_scores(out.gain);
  clamp_scores(out.loss_reduction);
  return out;
}

GbtImportances gbt_importances(const TrainedModel& model) {
  const auto* gbt = std::get_if<GbtModel>(&model.params);
  if (!gbt) throw std::invalid_argument("GBT importances need a gbt model, got " + to_string(model.algorithm()));
  return gbt_importances(*gbt, model.feature_names);
}

ImportanceReport permutation_importance(const BatchPredict& predict, const EncodedMatrix& data,
                                        const std::string& metric, int n_repeats, std::uint64_t seed) {
  if (n_repeats < 1) throw std::invalid_argument("n_repeats must be at least 1");
  const auto score = [&](const Matrix& X) { return report_metric(evaluate(predict(X), data.target), metric); };
  const double baseline = score(data.values);
  const std::size_t d = data.cols();
  auto r = empty_report(data.column_names.empty() ? default_names(d) : data.column_names, "permutation");
  std::vector<double> drops(d * static_cast<std::size_t>(n_repeats));
  parallel_for(drops.size(), [&](std::size_t job) {
    const std::size_t j = job / static_cast<std::size_t>(n_repeats);
    Rng rng(seed, Stream::permutation, job);
    const auto order = random_permutation(data.rows(), rng);
    Matrix X = data.values;
    for (std::size_t i = 0; i < order.size(); ++i) {
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          data.values(static_cast<Eigen::Index>(order[i]), static_cast<Eigen::Index>(j));
    }
    drops[job] = baseline - score(X);
  });
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    for (int k = 0; k < n_repeats; ++k) sum += drops[j * static_cast<std::size_t>(n_repeats) + static_cast<std::size_t>(k)];
    r.raw[j] = sum / n_repeats;
  }
  clamp_scores(r);
  return r;
}

ImportanceReport permutation_importance(const TrainedModel& model, const EncodedMatrix& data,
                                        const std::string& metric, int n_repeats, std::uint64_t seed) {
  return permutation_importance(predictor(model), data, metric, n_repeats, seed);
}

nlohmann::ordered_json attribution_to_json(const Attribution& a) {
  nlohmann::ordered_json values = nlohmann::ordered_json::object();
  for (std::size_t j = 0; j < a.values.size(); ++j) values[a.feature_names.at(j)] = a.values[j];
  return {{"method", a.method}, {"base_value", a.base_value}, {"prediction", a.prediction}, {"values", values}};
}

nlohmann::ordered_json importance_to_json(const ImportanceReport& r) {
  nlohmann::ordered_json scores = nlohmann::ordered_json::object();
  nlohmann::ordered_json raw = nlohmann::ordered_json::object();
  for (std::size_t j = 0; j < r.scores.size(); ++j) {
    scores[r.feature_names.at(j)] = r.scores[j];
    raw[r.feature_names.at(j)] = r.raw[j];
  }
  return {{"method", r.method}, {"normalized", r.normalized}, {"scores", scores}, {"raw", raw}};
}

}  // namespace imbalkit
