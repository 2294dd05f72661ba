#include <algorithm>
#include <cmath>
#include <numeric>

#include "binning.hpp"
#include "imbalkit/error.hpp"
#include "imbalkit/learners.hpp"
#include "imbalkit/random.hpp"

namespace imbalkit {

std::vector<double> ordered_target_statistics(std::span<const double> codes,
                                              std::span<const int> target,
                                              std::span<const std::size_t> permutation,
                                              double prior, double smoothing) {
  if (codes.size() != target.size() || permutation.size() != codes.size()) {
    throw std::invalid_argument("ordered_target_statistics: length mismatch");
  }
  if (!(smoothing > 0.0)) throw std::invalid_argument("ordered_target_statistics: smoothing must be > 0");
  std::vector<char> seen(codes.size(), 0);
  for (auto r : permutation) {
    if (r >= codes.size() || seen[r]) {
      throw std::invalid_argument("ordered_target_statistics: permutation is not a bijection");
    }
    seen[r] = 1;
  }
  std::map<long long, std::pair<double, double>> history;  // category -> (sum y, count)
  std::vector<double> encoded(codes.size());
  for (auto r : permutation) {
    auto& [sum, count] = history[std::llround(codes[r])];
    encoded[r] = (sum + smoothing * prior) / (count + smoothing);
    sum += target[r];
    count += 1.0;
  }
  return encoded;
}

double TargetStatTable::encode(double code) const {
  auto it = encoding.find(std::llround(code));
  return it == encoding.end() ? prior : it->second;
}

double RegressionTree::predict(std::span<const double> x) const {
  int node = 0;
  while (!nodes[static_cast<std::size_t>(node)].is_leaf()) {
    const auto& n = nodes[static_cast<std::size_t>(node)];
    node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(node)].value;
}

namespace {

std::vector<double> transformed(const GbtModel& m, std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t j = 0; j < m.target_stats.size() && j < out.size(); ++j) {
    if (m.target_stats[j]) out[j] = m.target_stats[j]->encode(out[j]);
  }
  return out;
}

double log_loss(int y, double raw) {
  // softplus(raw) - y * raw
  return std::max(raw, 0.0) + std::log1p(std::exp(-std::abs(raw))) - y * raw;
}

struct BinSums {
  std::uint32_t bin;
  double g;
  double h;
};

struct GbtSettings {
  int max_depth;
  double lambda;
  double min_child_weight;
  double min_split_gain;
  double learning_rate;
};

class RegressionTreeBuilder {
 public:
  RegressionTreeBuilder(const std::vector<detail::BinnedFeature>& bins, std::span<const double> grad,
                        std::span<const double> hess, std::span<const int> y,
                        std::span<const double> raw, const GbtSettings& settings,
                        std::vector<std::size_t> features, std::size_t tree_index,
                        std::vector<GbtSplitRecord>& records)
      : bins_(bins), grad_(grad), hess_(hess), y_(y), raw_(raw), settings_(settings),
        features_(std::move(features)), tree_index_(tree_index), records_(records) {
    scratch_g_.resize(bins_.size());
    scratch_h_.resize(bins_.size());
    scratch_seen_.resize(bins_.size());
    for (std::size_t f = 0; f < bins_.size(); ++f) {
      scratch_g_[f].assign(bins_[f].n_bins(), 0.0);
      scratch_h_[f].assign(bins_[f].n_bins(), 0.0);
      scratch_seen_[f].assign(bins_[f].n_bins(), 0);
    }
  }

  RegressionTree build(const std::vector<std::uint32_t>& rows) {
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  double leaf_value(double g, double h) const { return -g / (h + settings_.lambda); }
  double score(double g, double h) const { return g * g / (h + settings_.lambda); }

  // Per-bin gradient sums accumulated in row order; the sort path and the
  // histogram path produce bit-identical sums.
  void bin_sums(const std::vector<std::uint32_t>& rows, std::size_t f, std::vector<BinSums>& out) {
    out.clear();
    const auto& codes = bins_[f].codes;
    const std::size_t nb = bins_[f].n_bins();
    if (rows.size() * 4 < nb) {
      std::vector<std::uint32_t> order(rows);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::uint32_t a, std::uint32_t b) { return codes[a] < codes[b]; });
      for (auto i : order) {
        if (out.empty() || out.back().bin != codes[i]) out.push_back({codes[i], 0.0, 0.0});
        out.back().g += grad_[i];
        out.back().h += hess_[i];
      }
      return;
    }
    auto& g = scratch_g_[f];
    auto& h = scratch_h_[f];
    auto& seen = scratch_seen_[f];
    for (auto i : rows) {
      g[codes[i]] += grad_[i];
      h[codes[i]] += hess_[i];
      seen[codes[i]] = 1;
    }
    for (std::size_t b = 0; b < nb; ++b) {
      if (!seen[b]) continue;
      out.push_back({static_cast<std::uint32_t>(b), g[b], h[b]});
      g[b] = 0.0;
      h[b] = 0.0;
      seen[b] = 0;
    }
  }

  int grow(const std::vector<std::uint32_t>& rows, int depth) {
    double G = 0.0, H = 0.0;
    for (auto i : rows) {
      G += grad_[i];
      H += hess_[i];
    }
    const int index = static_cast<int>(tree_.nodes.size());
    RegressionNode node;
    node.gradient_sum = G;
    node.hessian_sum = H;
    node.value = leaf_value(G, H);
    tree_.nodes.push_back(node);
    if (depth >= settings_.max_depth || rows.size() < 2) return index;

    const double parent_score = score(G, H);
    int best_feature = -1;
    std::uint32_t best_bin = 0;
    double best_gain = 0.0, best_gl = 0.0, best_hl = 0.0;
    std::vector<BinSums> sums;
    for (std::size_t f : features_) {
      bin_sums(rows, f, sums);
      double gl = 0.0, hl = 0.0;
      for (std::size_t k = 0; k + 1 < sums.size(); ++k) {
        gl += sums[k].g;
        hl += sums[k].h;
        const double gr = G - gl;
        const double hr = H - hl;
        if (hl < settings_.min_child_weight || hr < settings_.min_child_weight) continue;
        const double gain = 0.5 * (score(gl, hl) + score(gr, hr) - parent_score);
        if (gain - settings_.min_split_gain <= 0.0) continue;
        if (best_feature < 0 || gain > best_gain) {
          best_feature = static_cast<int>(f);
          best_bin = sums[k].bin;
          best_gain = gain;
          best_gl = gl;
          best_hl = hl;
        }
      }
    }
    if (best_feature < 0) return index;

    std::vector<std::uint32_t> left, right;
    const auto& codes = bins_[static_cast<std::size_t>(best_feature)].codes;
    for (auto i : rows) (codes[i] <= best_bin ? left : right).push_back(i);

    const double lr = settings_.learning_rate;
    const double w_parent = node.value;
    const double w_left = leaf_value(best_gl, best_hl);
    const double w_right = leaf_value(G - best_gl, H - best_hl);
    double reduction = 0.0;
    for (auto i : left) reduction += log_loss(y_[i], raw_[i] + lr * w_parent) - log_loss(y_[i], raw_[i] + lr * w_left);
    for (auto i : right) reduction += log_loss(y_[i], raw_[i] + lr * w_parent) - log_loss(y_[i], raw_[i] + lr * w_right);
    records_.push_back({tree_index_, best_feature, best_gain, reduction});

    {
      auto& n = tree_.nodes[static_cast<std::size_t>(index)];
      n.feature = best_feature;
      n.threshold = bins_[static_cast<std::size_t>(best_feature)].thresholds[best_bin];
    }
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    tree_.nodes[static_cast<std::size_t>(index)].left = l;
    tree_.nodes[static_cast<std::size_t>(index)].right = r;
    return index;
  }

  const std::vector<detail::BinnedFeature>& bins_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  std::span<const int> y_;
  std::span<const double> raw_;
  GbtSettings settings_;
  std::vector<std::size_t> features_;
  std::size_t tree_index_;
  std::vector<GbtSplitRecord>& records_;
  std::vector<std::vector<double>> scratch_g_, scratch_h_;
  std::vector<std::vector<char>> scratch_seen_;
  RegressionTree tree_;
};

}  // namespace

double GbtModel::raw_score(std::span<const double> x, std::size_t n_trees) const {
  const auto z = transformed(*this, x);
  double sum = 0.0;
  for (std::size_t k = 0; k < n_trees && k < trees.size(); ++k) sum += trees[k].predict(z);
  return base_log_odds + learning_rate * sum;
}

double predict_one(const GbtModel& m, std::span<const double> x) { return sigmoid(m.raw_score(x)); }

GbtModel fit_gbt(const ModelSpec& spec, const EncodedMatrix& train) {
  if (!train.values.allFinite()) throw DataError("gbt: non-finite feature values");
  const std::size_t n = train.rows();
  const std::size_t d = train.cols();
  const auto balance = class_distribution(train);
  if (balance.count_class0 == 0 || balance.count_class1 == 0) {
    throw DataError("gbt: training data must contain both classes");
  }

  GbtModel model;
  model.learning_rate = spec.get_double("learning_rate");
  model.l2_leaf_reg = spec.get_double("l2_leaf_reg");
  model.max_bins = static_cast<int>(spec.get_int("max_bins"));
  model.categorical = spec.get_string("categorical") == "ordered-target-stats"
                          ? CategoricalHandling::ordered_target_stats
                          : CategoricalHandling::plain_codes;
  const double prevalence = static_cast<double>(balance.count_class1) / static_cast<double>(n);
  model.base_log_odds = std::log(prevalence / (1.0 - prevalence));
  model.target_stats.resize(d);

  Matrix X = train.values;
  if (model.categorical == CategoricalHandling::ordered_target_stats) {
    const double a = spec.get_double("ts_smoothing");
    Rng rng(spec.seed, Stream::target_stats);
    const auto permutation = random_permutation(n, rng);
    for (std::size_t j = 0; j < d; ++j) {
      if (train.kinds[j] != ColumnKind::categorical) continue;
      std::vector<double> codes(n);
      for (std::size_t i = 0; i < n; ++i) codes[i] = X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const auto encoded = ordered_target_statistics(codes, train.target, permutation, prevalence, a);
      TargetStatTable table;
      table.prior = prevalence;
      std::map<long long, std::pair<double, double>> totals;
      for (std::size_t i = 0; i < n; ++i) {
        auto& [sum, count] = totals[std::llround(codes[i])];
        sum += train.target[i];
        count += 1.0;
        X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = encoded[i];
      }
      for (const auto& [key, stats] : totals) {
        table.encoding[key] = (stats.first + a * prevalence) / (stats.second + a);
      }
      model.target_stats[j] = std::move(table);
    }
  }

  const auto bins = detail::bin_all(X, model.max_bins);
  const GbtSettings settings{static_cast<int>(spec.get_int("max_depth")), model.l2_leaf_reg,
                             spec.get_double("min_child_weight"), spec.get_double("min_split_gain"),
                             model.learning_rate};
  const double subsample = spec.get_double("subsample");
  const double colsample = spec.get_double("colsample_bytree");
  const auto n_trees = static_cast<std::size_t>(spec.get_int("n_estimators"));

  std::vector<double> raw(n, model.base_log_odds), grad(n), hess(n);
  model.trees.reserve(n_trees);
  for (std::size_t k = 0; k < n_trees; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(raw[i]);
      grad[i] = p - train.target[i];
      hess[i] = p * (1.0 - p);
    }
    std::vector<std::uint32_t> rows;
    if (subsample < 1.0) {
      Rng rng(spec.seed, Stream::gbt_rows, k);
      auto order = random_permutation(n, rng);
      const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(subsample * static_cast<double>(n))));
      order.resize(keep);
      std::sort(order.begin(), order.end());
      rows.assign(order.begin(), order.end());
    } else {
      rows.resize(n);
      std::iota(rows.begin(), rows.end(), std::uint32_t{0});
    }
    std::vector<std::size_t> features;
    if (colsample < 1.0) {
      Rng rng(spec.seed, Stream::gbt_columns, k);
      features = random_permutation(d, rng);
      features.resize(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(colsample * static_cast<double>(d)))));
      std::sort(features.begin(), features.end());
    } else {
      features.resize(d);
      std::iota(features.begin(), features.end(), std::size_t{0});
    }

    RegressionTreeBuilder builder(bins, grad, hess, train.target, raw, settings, std::move(features), k,
                                  model.splits);
    model.trees.push_back(builder.build(rows));
    const auto& tree = model.trees.back();
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = X.row(static_cast<Eigen::Index>(i));
      raw[i] += model.learning_rate * tree.predict(std::span<const double>(row.data(), d));
    }
  }
  return model;
}

}  // namespace imbalkit
