#include <algorithm>
#include <cmath>
#include <numeric>

#include "binning.hpp"
#include "imbalkit/error.hpp"
#include "imbalkit/learners.hpp"
#include "imbalkit/parallel.hpp"
#include "imbalkit/random.hpp"

namespace imbalkit {

double entropy_impurity(std::array<double, 2> counts) {
  const double total = counts[0] + counts[1];
  if (!(total > 0.0)) throw std::invalid_argument("entropy of an empty node is undefined");
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) {
      const double p = c / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

double gini_impurity(std::array<double, 2> counts) {
  const double total = counts[0] + counts[1];
  if (!(total > 0.0)) throw std::invalid_argument("gini of an empty node is undefined");
  const double p = counts[1] / total;
  return 2.0 * p * (1.0 - p);
}

double DecisionTree::predict(std::span<const double> x) const {
  int node = 0;
  while (!nodes[static_cast<std::size_t>(node)].is_leaf()) {
    const auto& n = nodes[static_cast<std::size_t>(node)];
    node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(node)].value;
}

double predict_one(const DecisionTreeModel& m, std::span<const double> x) { return m.tree.predict(x); }

double predict_one(const ForestModel& m, std::span<const double> x) {
  double sum = 0.0;
  for (const auto& tree : m.trees) sum += tree.predict(x);
  return sum / static_cast<double>(m.trees.size());
}

namespace {

constexpr double kMinGain = 1e-12;

struct TreeSettings {
  Criterion criterion = Criterion::entropy;
  int max_depth = 64;
  double min_samples_split = 2;
  double min_samples_leaf = 1;
  std::size_t features_per_node = 0;
};

TreeSettings settings_from(const ModelSpec& spec, std::size_t n_features) {
  TreeSettings s;
  s.criterion = spec.get_string("criterion") == "gini" ? Criterion::gini : Criterion::entropy;
  s.max_depth = static_cast<int>(spec.get_int("max_depth"));
  s.min_samples_split = static_cast<double>(spec.get_int("min_samples_split"));
  s.min_samples_leaf = static_cast<double>(spec.get_int("min_samples_leaf"));
  const auto& mf = spec.get_string("max_features");
  const double d = static_cast<double>(n_features);
  if (mf == "sqrt") {
    s.features_per_node = static_cast<std::size_t>(std::max(1.0, std::floor(std::sqrt(d))));
  } else if (mf == "log2") {
    s.features_per_node = static_cast<std::size_t>(std::max(1.0, std::floor(std::log2(d))));
  } else {
    s.features_per_node = n_features;
  }
  return s;
}

struct BinCounts {
  std::uint32_t bin;
  double w0;
  double w1;
};

struct SplitChoice {
  int feature = -1;
  std::uint32_t bin = 0;
  double gain = 0.0;
  double score = 0.0;
  std::array<double, 2> left{};
  std::array<double, 2> right{};
  bool lookahead = false;
};

class ClassificationTreeBuilder {
 public:
  ClassificationTreeBuilder(const std::vector<detail::BinnedFeature>& bins, std::span<const int> y,
                            std::span<const double> weight, const TreeSettings& settings,
                            std::uint64_t feature_seed)
      : bins_(bins), y_(y), weight_(weight), settings_(settings), rng_(feature_seed) {}

  DecisionTree build() {
    tree_.criterion = settings_.criterion;
    tree_.n_features = bins_.size();
    std::vector<std::uint32_t> root;
    for (std::size_t i = 0; i < y_.size(); ++i) {
      if (weight_[i] > 0.0) root.push_back(static_cast<std::uint32_t>(i));
    }
    if (root.empty()) throw DataError("decision tree: no training rows with positive weight");
    root_weight_ = totals(root)[0] + totals(root)[1];
    grow(root, 0);
    return std::move(tree_);
  }

 private:
  double impurity(const std::array<double, 2>& counts) const {
    return settings_.criterion == Criterion::entropy ? entropy_impurity(counts) : gini_impurity(counts);
  }

  std::array<double, 2> totals(const std::vector<std::uint32_t>& samples) const {
    std::array<double, 2> t{};
    for (auto i : samples) t[y_[i] == 1] += weight_[i];
    return t;
  }

  std::vector<BinCounts> histogram(const std::vector<std::uint32_t>& samples, std::size_t feature) const {
    const auto& codes = bins_[feature].codes;
    const std::size_t nb = bins_[feature].n_bins();
    std::vector<BinCounts> out;
    if (samples.size() * 4 < nb) {
      std::vector<std::pair<std::uint32_t, std::uint32_t>> keyed;
      keyed.reserve(samples.size());
      for (auto i : samples) keyed.emplace_back(codes[i], i);
      std::sort(keyed.begin(), keyed.end());
      for (const auto& [bin, i] : keyed) {
        if (out.empty() || out.back().bin != bin) out.push_back({bin, 0.0, 0.0});
        (y_[i] == 1 ? out.back().w1 : out.back().w0) += weight_[i];
      }
    } else {
      std::vector<double> w0(nb, 0.0), w1(nb, 0.0);
      std::vector<char> seen(nb, 0);
      for (auto i : samples) {
        (y_[i] == 1 ? w1 : w0)[codes[i]] += weight_[i];
        seen[codes[i]] = 1;
      }
      for (std::size_t b = 0; b < nb; ++b) {
        if (seen[b]) out.push_back({static_cast<std::uint32_t>(b), w0[b], w1[b]});
      }
    }
    return out;
  }

  // Best single split by immediate information gain over `features`; also
  // reports every admissible candidate when `candidates` is given.
  SplitChoice best_split(const std::vector<std::uint32_t>& samples,
                         const std::vector<std::size_t>& features, const std::array<double, 2>& total,
                         std::vector<SplitChoice>* candidates = nullptr) const {
    SplitChoice best;
    const double w = total[0] + total[1];
    const double parent = impurity(total);
    for (std::size_t f : features) {
      const auto hist = histogram(samples, f);
      std::array<double, 2> left{};
      for (std::size_t k = 0; k + 1 < hist.size(); ++k) {
        left[0] += hist[k].w0;
        left[1] += hist[k].w1;
        const std::array<double, 2> right{total[0] - left[0], total[1] - left[1]};
        const double wl = left[0] + left[1];
        const double wr = right[0] + right[1];
        if (wl < settings_.min_samples_leaf || wr < settings_.min_samples_leaf) continue;
        if (wl <= 0.0 || wr <= 0.0) continue;
        const double gain = parent - (wl / w) * impurity(left) - (wr / w) * impurity(right);
        SplitChoice c{static_cast<int>(f), hist[k].bin, gain, gain, left, right, false};
        if (candidates) candidates->push_back(c);
        if (best.feature < 0 || gain > best.gain) best = c;
      }
    }
    return best;
  }

  std::vector<std::size_t> node_features() {
    const std::size_t d = bins_.size();
    std::vector<std::size_t> features(d);
    std::iota(features.begin(), features.end(), std::size_t{0});
    if (settings_.features_per_node < d) {
      // Partial Fisher-Yates draw, then ascending order for deterministic ties.
      for (std::size_t i = 0; i < settings_.features_per_node; ++i) {
        std::swap(features[i], features[i + rng_.below(d - i)]);
      }
      features.resize(settings_.features_per_node);
      std::sort(features.begin(), features.end());
    }
    return features;
  }

  std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> partition(
      const std::vector<std::uint32_t>& samples, int feature, std::uint32_t bin) const {
    std::vector<std::uint32_t> left, right;
    const auto& codes = bins_[static_cast<std::size_t>(feature)].codes;
    for (auto i : samples) (codes[i] <= bin ? left : right).push_back(i);
    return {std::move(left), std::move(right)};
  }

  // Zero-gain splits are kept only when a second level of splits underneath
  // yields a positive total gain.
  SplitChoice lookahead_split(const std::vector<std::uint32_t>& samples,
                              const std::vector<std::size_t>& features,
                              const std::array<double, 2>& total,
                              const std::vector<SplitChoice>& candidates) const {
    SplitChoice best;
    const double w = total[0] + total[1];
    for (const auto& c : candidates) {
      if (c.gain < -kMinGain) continue;
      auto [left, right] = partition(samples, c.feature, c.bin);
      const double wl = c.left[0] + c.left[1];
      const double wr = c.right[0] + c.right[1];
      double score = c.gain;
      for (auto* side : {&left, &right}) {
        const auto counts = side == &left ? c.left : c.right;
        if (counts[0] == 0.0 || counts[1] == 0.0) continue;
        if (counts[0] + counts[1] < settings_.min_samples_split) continue;
        const auto child = best_split(*side, features, counts);
        if (child.feature >= 0 && child.gain > kMinGain) {
          score += ((side == &left ? wl : wr) / w) * child.gain;
        }
      }
      if (score > kMinGain && (best.feature < 0 || score > best.score)) {
        best = c;
        best.score = score;
        best.lookahead = true;
      }
    }
    return best;
  }

  int grow(const std::vector<std::uint32_t>& samples, int depth) {
    const auto total = totals(samples);
    const double w = total[0] + total[1];
    const int index = static_cast<int>(tree_.nodes.size());
    TreeNode node;
    node.weight = w;
    node.value = total[1] / w;
    node.impurity = impurity(total);
    tree_.nodes.push_back(node);

    if (depth >= settings_.max_depth || w < settings_.min_samples_split || node.impurity <= 0.0) {
      return index;
    }
    const auto features = node_features();
    std::vector<SplitChoice> candidates;
    const bool can_look_ahead = depth + 2 <= settings_.max_depth;
    SplitChoice split = best_split(samples, features, total, can_look_ahead ? &candidates : nullptr);
    if (split.feature < 0) return index;
    if (split.gain <= kMinGain) {
      if (!can_look_ahead) return index;
      split = lookahead_split(samples, features, total, candidates);
      if (split.feature < 0) return index;
    }

    auto [left, right] = partition(samples, split.feature, split.bin);
    const double wl = split.left[0] + split.left[1];
    const double wr = split.right[0] + split.right[1];
    {
      auto& n = tree_.nodes[static_cast<std::size_t>(index)];
      n.feature = split.feature;
      n.threshold = bins_[static_cast<std::size_t>(split.feature)].thresholds[split.bin];
      n.information_gain = split.gain;
      n.lookahead = split.lookahead;
      n.weighted_impurity_decrease =
          (w * n.impurity - wl * impurity(split.left) - wr * impurity(split.right)) / root_weight_;
    }
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    tree_.nodes[static_cast<std::size_t>(index)].left = l;
    tree_.nodes[static_cast<std::size_t>(index)].right = r;
    return index;
  }

  const std::vector<detail::BinnedFeature>& bins_;
  std::span<const int> y_;
  std::span<const double> weight_;
  TreeSettings settings_;
  Rng rng_;
  DecisionTree tree_;
  double root_weight_ = 1.0;
};

void check_finite(const EncodedMatrix& train, const char* who) {
  if (!train.values.allFinite()) throw DataError(std::string(who) + ": non-finite feature values");
}

}  // namespace

DecisionTree fit_tree(const ModelSpec& spec, const EncodedMatrix& train,
                      std::span<const double> sample_weight, std::uint64_t feature_seed) {
  check_finite(train, "decision tree");
  const auto settings = settings_from(spec, train.cols());
  const auto bins = detail::bin_all(train.values, 0);
  std::vector<double> unit;
  if (sample_weight.empty()) {
    unit.assign(train.rows(), 1.0);
    sample_weight = unit;
  }
  ClassificationTreeBuilder builder(bins, train.target, sample_weight, settings, feature_seed);
  return builder.build();
}

ForestModel fit_forest(const ModelSpec& spec, const EncodedMatrix& train, std::size_t threads) {
  check_finite(train, "random forest");
  const auto settings = settings_from(spec, train.cols());
  const auto bins = detail::bin_all(train.values, 0);
  const auto n_trees = static_cast<std::size_t>(spec.get_int("n_estimators"));
  const bool bootstrap = spec.get_int("bootstrap") != 0;
  const std::size_t n = train.rows();

  ForestModel forest;
  forest.trees.resize(n_trees);
  parallel_for(
      n_trees,
      [&](std::size_t t) {
        std::vector<double> weight(n, bootstrap ? 0.0 : 1.0);
        if (bootstrap) {
          Rng rng(spec.seed, Stream::bootstrap, t);
          for (std::size_t k = 0; k < n; ++k) weight[rng.below(n)] += 1.0;
        }
        ClassificationTreeBuilder builder(bins, train.target, weight, settings,
                                          derive_seed(spec.seed, Stream::tree_features, t));
        forest.trees[t] = builder.build();
      },
      threads);
  return forest;
}

}  // namespace imbalkit
