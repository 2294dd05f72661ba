#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "imbalkit/error.hpp"
#include "imbalkit/learners.hpp"

namespace imbalkit {

NaiveBayesModel fit_naive_bayes(const ModelSpec& spec, const EncodedMatrix& train) {
  const Matrix& X = train.values;
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (!X.allFinite()) throw DataError("naive-bayes: non-finite feature values");

  std::array<std::vector<Eigen::Index>, 2> members;
  for (Eigen::Index i = 0; i < n; ++i) members[static_cast<std::size_t>(train.target[static_cast<std::size_t>(i)])].push_back(i);
  if (members[0].empty() || members[1].empty()) {
    throw DataError("naive-bayes: training data must contain both classes");
  }

  double max_var = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    max_var = std::max(max_var, (X.col(j).array() - X.col(j).mean()).square().mean());
  }
  double epsilon = spec.get_double("var_smoothing") * max_var;
  if (!(epsilon > 0.0)) epsilon = std::max(spec.get_double("var_smoothing"), 1e-300);

  NaiveBayesModel model;
  model.means.resize(2, d);
  model.variances.resize(2, d);
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& rows = members[c];
    const double count = static_cast<double>(rows.size());
    model.log_prior[c] = std::log(count / static_cast<double>(n));
    for (Eigen::Index j = 0; j < d; ++j) {
      double mean = 0.0;
      for (auto i : rows) mean += X(i, j);
      mean /= count;
      double var = 0.0;
      for (auto i : rows) var += (X(i, j) - mean) * (X(i, j) - mean);
      model.means(static_cast<Eigen::Index>(c), j) = mean;
      model.variances(static_cast<Eigen::Index>(c), j) = var / count + epsilon;
    }
  }
  return model;
}

double predict_one(const NaiveBayesModel& m, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(m.means.cols())) {
    throw std::invalid_argument("naive-bayes: feature count mismatch");
  }
  std::array<double, 2> joint{};
  for (Eigen::Index c = 0; c < 2; ++c) {
    double ll = m.log_prior[static_cast<std::size_t>(c)];
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double var = m.variances(c, static_cast<Eigen::Index>(j));
      const double diff = x[j] - m.means(c, static_cast<Eigen::Index>(j));
      ll -= 0.5 * (std::log(2.0 * std::numbers::pi * var) + diff * diff / var);
    }
    joint[static_cast<std::size_t>(c)] = ll;
  }
  return sigmoid(joint[1] - joint[0]);
}

KnnModel fit_knn(const ModelSpec& spec, const EncodedMatrix& train) {
  if (!train.values.allFinite()) throw DataError("knn: non-finite feature values");
  if (train.rows() == 0) throw DataError("knn: empty training set");
  KnnModel model;
  if (spec.get_string("standardize") == "yes") model.input = Standardizer::fit(train.values);
  model.points = model.input.active() ? model.input.apply(train.values) : train.values;
  model.labels = train.target;
  model.k = static_cast<int>(spec.get_int("n_neighbors"));
  model.distance_weighted = spec.get_string("weights") == "distance";
  return model;
}

double predict_one(const KnnModel& m, std::span<const double> x) {
  const Eigen::Index n = m.points.rows();
  const auto d = static_cast<std::size_t>(m.points.cols());
  if (x.size() != d) throw std::invalid_argument("knn: feature count mismatch");
  std::vector<double> scaled;
  if (m.input.active()) {
    m.input.apply(x, scaled);
    x = scaled;
  }
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double* row = m.points.data() + i * m.points.cols();
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += (row[j] - x[j]) * (row[j] - x[j]);
    dist[static_cast<std::size_t>(i)] = std::sqrt(s);
  }
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(m.k), dist.size());
  std::vector<std::size_t> order(dist.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1), order.end(),
                   [&](std::size_t a, std::size_t b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); });
  const double kth = dist[order[k - 1]];

  // Points strictly inside the k-th distance take one slot each; the tie
  // group at the k-th distance shares the remaining slots equally.
  std::vector<std::size_t> inner, ties;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] < kth) inner.push_back(i);
    else if (dist[i] == kth) ties.push_back(i);
  }
  const double tie_share = static_cast<double>(k - inner.size()) / static_cast<double>(ties.size());

  if (m.distance_weighted) {
    // Exact matches dominate.
    if (std::find(dist.begin(), dist.end(), 0.0) != dist.end()) {
      double sum = 0.0, count = 0.0;
      for (std::size_t i = 0; i < dist.size(); ++i) {
        if (dist[i] == 0.0) {
          const double w = (kth == 0.0) ? tie_share : 1.0;
          sum += w * m.labels[i];
          count += w;
        }
      }
      return sum / count;
    }
    double num = 0.0, den = 0.0;
    for (auto i : inner) {
      num += m.labels[i] / dist[i];
      den += 1.0 / dist[i];
    }
    for (auto i : ties) {
      num += tie_share * m.labels[i] / dist[i];
      den += tie_share / dist[i];
    }
    return num / den;
  }
  double votes = 0.0;
  for (auto i : inner) votes += m.labels[i];
  for (auto i : ties) votes += tie_share * m.labels[i];
  return votes / static_cast<double>(k);
}

}  // namespace imbalkit
