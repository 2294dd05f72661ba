#include "imbalkit/error.hpp"
#include "imbalkit/learners.hpp"

namespace imbalkit {

namespace {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

ojson vector_json(const Vector& v) { return ojson(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

ojson matrix_json(const Matrix& m) {
  return ojson{{"rows", m.rows()}, {"cols", m.cols()},
               {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
    throw ConfigError("model document: matrix shape does not match its data");
  }
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

ojson tree_json(const DecisionTree& tree) {
  ojson nodes = ojson::array();
  for (const auto& n : tree.nodes) {
    nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right},
                     {"impurity", n.impurity}, {"value", n.value}, {"weight", n.weight},
                     {"information_gain", n.information_gain},
                     {"weighted_impurity_decrease", n.weighted_impurity_decrease}, {"lookahead", n.lookahead}});
  }
  return ojson{{"criterion", tree.criterion == Criterion::gini ? "gini" : "entropy"},
               {"n_features", tree.n_features}, {"nodes", std::move(nodes)}};
}

DecisionTree tree_from(const json& j) {
  DecisionTree tree;
  tree.criterion = j.at("criterion").get<std::string>() == "gini" ? Criterion::gini : Criterion::entropy;
  tree.n_features = j.at("n_features").get<std::size_t>();
  for (const auto& n : j.at("nodes")) {
    TreeNode node;
    node.feature = n.at("feature").get<int>();
    node.threshold = n.at("threshold").get<double>();
    node.left = n.at("left").get<int>();
    node.right = n.at("right").get<int>();
    node.impurity = n.at("impurity").get<double>();
    node.value = n.at("value").get<double>();
    node.weight = n.at("weight").get<double>();
    node.information_gain = n.at("information_gain").get<double>();
    node.weighted_impurity_decrease = n.at("weighted_impurity_decrease").get<double>();
    node.lookahead = n.at("lookahead").get<bool>();
    tree.nodes.push_back(node);
  }
  return tree;
}

ojson regression_tree_json(const RegressionTree& tree) {
  ojson nodes = ojson::array();
  for (const auto& n : tree.nodes) {
    nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right},
                     {"value", n.value}, {"gradient_sum", n.gradient_sum}, {"hessian_sum", n.hessian_sum}});
  }
  return nodes;
}

RegressionTree regression_tree_from(const json& j) {
  RegressionTree tree;
  for (const auto& n : j) {
    RegressionNode node;
    node.feature = n.at("feature").get<int>();
    node.threshold = n.at("threshold").get<double>();
    node.left = n.at("left").get<int>();
    node.right = n.at("right").get<int>();
    node.value = n.at("value").get<double>();
    node.gradient_sum = n.at("gradient_sum").get<double>();
    node.hessian_sum = n.at("hessian_sum").get<double>();
    tree.nodes.push_back(node);
  }
  return tree;
}

ojson params_json(const LogisticModel& m) {
  const char* penalty = m.params.penalty == Penalty::l1 ? "l1" : m.params.penalty == Penalty::none ? "none" : "l2";
  return {{"intercept", m.params.intercept}, {"weights", vector_json(m.params.weights)},
          {"penalty", penalty}, {"C", m.params.C}, {"iterations", m.params.iterations}};
}

ojson params_json(const DecisionTreeModel& m) { return {{"tree", tree_json(m.tree)}}; }

ojson params_json(const ForestModel& m) {
  ojson trees = ojson::array();
  for (const auto& t : m.trees) trees.push_back(tree_json(t));
  return {{"trees", std::move(trees)}};
}

ojson params_json(const GbtModel& m) {
  ojson trees = ojson::array();
  for (const auto& t : m.trees) trees.push_back(regression_tree_json(t));
  ojson splits = ojson::array();
  for (const auto& s : m.splits) {
    splits.push_back({{"tree", s.tree}, {"feature", s.feature}, {"gain", s.gain}, {"loss_reduction", s.loss_reduction}});
  }
  ojson stats = ojson::array();
  for (const auto& table : m.target_stats) {
    if (!table) {
      stats.push_back(nullptr);
      continue;
    }
    ojson entries = ojson::array();
    for (const auto& [key, value] : table->encoding) entries.push_back(ojson::array({key, value}));
    stats.push_back({{"prior", table->prior}, {"encoding", std::move(entries)}});
  }
  return {{"learning_rate", m.learning_rate}, {"base_log_odds", m.base_log_odds}, {"l2_leaf_reg", m.l2_leaf_reg},
          {"max_bins", m.max_bins},
          {"categorical", m.categorical == CategoricalHandling::ordered_target_stats ? "ordered-target-stats" : "plain-codes"},
          {"trees", std::move(trees)}, {"splits", std::move(splits)}, {"target_stats", std::move(stats)}};
}

ojson params_json(const SvmModel& m) {
  return {{"kernel", m.kernel == Kernel::linear ? "linear" : "rbf"}, {"gamma", m.gamma}, {"C", m.C},
          {"support_vectors", matrix_json(m.support_vectors)}, {"dual_coef", vector_json(m.dual_coef)},
          {"bias", m.bias}, {"platt_a", m.platt_a}, {"platt_b", m.platt_b},
          {"dual_objective", m.dual_objective}, {"slacks", vector_json(m.slacks)},
          {"primal_objective", m.primal_objective}, {"iterations", m.iterations},
          {"input_mean", vector_json(m.input.mean)}, {"input_scale", vector_json(m.input.scale)}};
}

ojson params_json(const NaiveBayesModel& m) {
  return {{"log_prior", m.log_prior}, {"means", matrix_json(m.means)}, {"variances", matrix_json(m.variances)}};
}

ojson params_json(const KnnModel& m) {
  return {{"k", m.k},
          {"distance_weighted", m.distance_weighted},
          {"points", matrix_json(m.points)},
          {"labels", m.labels},
          {"input_mean", vector_json(m.input.mean)},
          {"input_scale", vector_json(m.input.scale)}};
}

ojson params_json(const MlpModel& m) {
  ojson layers = ojson::array();
  for (std::size_t l = 0; l < m.network.weights.size(); ++l) {
    layers.push_back({{"weights", matrix_json(m.network.weights[l])}, {"biases", vector_json(m.network.biases[l])}});
  }
  return {{"activation", m.network.activation == Activation::relu ? "relu" : "tanh"}, {"layers", std::move(layers)},
          {"input_mean", vector_json(m.input_mean)}, {"input_scale", vector_json(m.input_scale)},
          {"loss_curve", m.loss_curve}, {"epochs", m.epochs}};
}

ModelParams params_from(Algorithm algorithm, const json& p) {
  switch (algorithm) {
    case Algorithm::logistic: {
      LogisticModel m;
      m.params.intercept = p.at("intercept").get<double>();
      m.params.weights = vector_from(p.at("weights"));
      const auto penalty = p.at("penalty").get<std::string>();
      m.params.penalty = penalty == "l1" ? Penalty::l1 : penalty == "none" ? Penalty::none : Penalty::l2;
      m.params.C = p.at("C").get<double>();
      m.params.iterations = p.at("iterations").get<int>();
      return m;
    }
    case Algorithm::decision_tree: return DecisionTreeModel{tree_from(p.at("tree"))};
    case Algorithm::random_forest: {
      ForestModel m;
      for (const auto& t : p.at("trees")) m.trees.push_back(tree_from(t));
      return m;
    }
    case Algorithm::gbt: {
      GbtModel m;
      m.learning_rate = p.at("learning_rate").get<double>();
      m.base_log_odds = p.at("base_log_odds").get<double>();
      m.l2_leaf_reg = p.at("l2_leaf_reg").get<double>();
      m.max_bins = p.at("max_bins").get<int>();
      m.categorical = p.at("categorical").get<std::string>() == "ordered-target-stats"
                          ? CategoricalHandling::ordered_target_stats
                          : CategoricalHandling::plain_codes;
      for (const auto& t : p.at("trees")) m.trees.push_back(regression_tree_from(t));
      for (const auto& s : p.at("splits")) {
        m.splits.push_back({s.at("tree").get<std::size_t>(), s.at("feature").get<int>(), s.at("gain").get<double>(),
                            s.at("loss_reduction").get<double>()});
      }
      for (const auto& t : p.at("target_stats")) {
        if (t.is_null()) {
          m.target_stats.emplace_back();
          continue;
        }
        TargetStatTable table;
        table.prior = t.at("prior").get<double>();
        for (const auto& e : t.at("encoding")) table.encoding[e.at(0).get<long long>()] = e.at(1).get<double>();
        m.target_stats.emplace_back(std::move(table));
      }
      return m;
    }
    case Algorithm::svm: {
      SvmModel m;
      m.kernel = p.at("kernel").get<std::string>() == "linear" ? Kernel::linear : Kernel::rbf;
      m.gamma = p.at("gamma").get<double>();
      m.C = p.at("C").get<double>();
      m.support_vectors = matrix_from(p.at("support_vectors"));
      m.dual_coef = vector_from(p.at("dual_coef"));
      m.bias = p.at("bias").get<double>();
      m.platt_a = p.at("platt_a").get<double>();
      m.platt_b = p.at("platt_b").get<double>();
      m.dual_objective = p.at("dual_objective").get<std::vector<double>>();
      m.slacks = vector_from(p.at("slacks"));
      m.primal_objective = p.at("primal_objective").get<double>();
      m.iterations = p.at("iterations").get<std::size_t>();
      m.input.mean = vector_from(p.at("input_mean"));
      m.input.scale = vector_from(p.at("input_scale"));
      return m;
    }
    case Algorithm::naive_bayes: {
      NaiveBayesModel m;
      m.log_prior = p.at("log_prior").get<std::array<double, 2>>();
      m.means = matrix_from(p.at("means"));
      m.variances = matrix_from(p.at("variances"));
      return m;
    }
    case Algorithm::knn: {
      KnnModel m;
      m.k = p.at("k").get<int>();
      m.distance_weighted = p.at("distance_weighted").get<bool>();
      m.points = matrix_from(p.at("points"));
      m.labels = p.at("labels").get<std::vector<int>>();
      m.input.mean = vector_from(p.at("input_mean"));
      m.input.scale = vector_from(p.at("input_scale"));
      return m;
    }
    case Algorithm::mlp: {
      MlpModel m;
      m.network.activation = p.at("activation").get<std::string>() == "relu" ? Activation::relu : Activation::tanh;
      for (const auto& layer : p.at("layers")) {
        m.network.weights.push_back(matrix_from(layer.at("weights")));
        m.network.biases.push_back(vector_from(layer.at("biases")));
      }
      m.input_mean = vector_from(p.at("input_mean"));
      m.input_scale = vector_from(p.at("input_scale"));
      m.loss_curve = p.at("loss_curve").get<std::vector<double>>();
      m.epochs = p.at("epochs").get<int>();
      return m;
    }
  }
  throw ConfigError("model document: unsupported algorithm");
}

}  // namespace

nlohmann::ordered_json model_to_json(const TrainedModel& model) {
  ojson doc;
  doc["format_version"] = kModelFormatVersion;
  doc["spec"] = spec_to_json(model.spec);
  doc["feature_names"] = model.feature_names;
  doc["params"] = std::visit([](const auto& m) { return params_json(m); }, model.params);
  return doc;
}

TrainedModel model_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("format_version")) {
    throw ConfigError("model document: missing format_version");
  }
  const auto version = doc.at("format_version");
  if (!version.is_number_integer() || version.get<int>() != kModelFormatVersion) {
    throw ConfigError("model document: unsupported format_version " + version.dump());
  }
  try {
    TrainedModel model;
    model.spec = spec_from_json(doc.at("spec"));
    model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    model.params = params_from(model.spec.algorithm, doc.at("params"));
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model document: ") + e.what());
  }
}

}  // namespace imbalkit
