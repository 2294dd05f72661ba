#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "imbalkit/csv.hpp"
#include "imbalkit/error.hpp"
#include "imbalkit/explain.hpp"
#include "imbalkit/log.hpp"
#include "imbalkit/random.hpp"
#include "imbalkit/report.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace imbalkit {
namespace {

std::string num(double v) { return csv::format_double(v); }

std::string file_stem(const std::string& name) {
  std::string out;
  for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return out.empty() ? std::string("_") : out;
}

class Table {
 public:
  explicit Table(csv::Row header) { csv::write_row(out_, header); }
  void add(const csv::Row& row) { csv::write_row(out_, row); }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

class Emitter {
 public:
  Emitter(const RunConfig& config, std::string command) : config_(config), command_(std::move(command)) {
    bundle_.out_dir = config.out_dir;
    drain_warnings();
  }

  void put(const std::string& rel, const std::string& content) {
    write_file_atomic(config_.out_dir / command_ / rel, content);
    bundle_.files.push_back(command_ + "/" + rel);
  }

  void put_json(const std::string& rel, const ordered_json& doc) { put(rel, doc.dump(2) + "\n"); }

  void status(const std::string& model, const std::string& value) {
    bundle_.model_status[model] = value;
    if (value != "ok") bundle_.exit_code = 4;
  }

  ReportBundle finish(ordered_json options = ordered_json::object()) {
    auto warnings = drain_warnings();
    std::sort(warnings.begin(), warnings.end());
    warnings.erase(std::unique(warnings.begin(), warnings.end()), warnings.end());
    ordered_json entry;
    entry["status"] = bundle_.exit_code == 0 ? "ok" : "partial";
    entry["options"] = std::move(options);
    ordered_json models = ordered_json::object();
    for (const auto& [name, s] : bundle_.model_status) models[name] = s;
    entry["models"] = models;
    entry["warnings"] = warnings;
    std::vector<std::string> files = bundle_.files;
    std::sort(files.begin(), files.end());
    entry["files"] = files;
    update_manifest(config_.out_dir, command_, config_, entry);
    return bundle_;
  }

 private:
  const RunConfig& config_;
  std::string command_;
  ReportBundle bundle_;
};

struct Prepared {
  Dataset dataset;
  Encoded encoded;
  EncodedMatrix train;      // before oversampling
  EncodedMatrix test;
  EncodedMatrix fit_train;  // oversampled when SMOTE is on
  // Resampler for resampling-aware procedures run on `train`.
  std::optional<SmoteOptions> inner_resampler;
};

Dataset load(const RunConfig& c) {
  Schema schema = load_schema(c.schema);
  return load_dataset(c.dataset, schema, c.target, LoadOptions{c.strict_categories});
}

Prepared prepare(const RunConfig& c) {
  Prepared p;
  p.dataset = load(c);
  p.encoded = label_encode(p.dataset);
  const EncodedMatrix& all = p.encoded.matrix;
  if (c.resample_test) {
    log_warning("resample_test: oversampling precedes the split, so test metrics include synthetic rows");
    TrainTestSplit split = stratified_split(smote(all, *c.smote, derive_seed(c.seed, Stream::smote, 0)), c.test_fraction, c.seed);
    p.train = std::move(split.train);
    p.test = std::move(split.test);
    p.fit_train = p.train;
  } else {
    TrainTestSplit split = stratified_split(all, c.test_fraction, c.seed);
    p.train = std::move(split.train);
    p.test = std::move(split.test);
    p.fit_train = c.smote ? smote(p.train, *c.smote, derive_seed(c.seed, Stream::smote, 0)) : p.train;
    p.inner_resampler = c.smote;
  }
  return p;
}

struct Fitted {
  std::optional<TrainedModel> plain;
  std::optional<StackedModel> stacked;
  std::optional<SearchResult> search;

  std::vector<double> predict(const EncodedMatrix& X) const {
    return plain ? predict_proba(*plain, X) : stack_predict_proba(*stacked, X);
  }
  BatchPredict batch() const { return plain ? predictor(*plain) : predictor(*stacked); }
};

Fitted fit_entry(const ModelEntry& m, const Prepared& p, const RunConfig& c) {
  Fitted f;
  if (const auto* spec = std::get_if<ModelSpec>(&m.spec)) {
    ModelSpec chosen = *spec;
    if (auto it = c.tuning.find(m.name); it != c.tuning.end()) {
      SearchOptions options;
      options.n_iter = it->second.n_iter;
      options.folds = it->second.folds;
      options.resampler = p.inner_resampler;
      options.seed = c.seed;
      f.search = tune_random_search(*spec, it->second.space, p.train, options);
      chosen = f.search->best;
    }
    f.plain = fit_model(chosen, p.fit_train);
  } else {
    StackingSpec stacking = std::get<StackingSpec>(m.spec);
    stacking.resampler = p.inner_resampler;
    f.stacked = stack_fit(stacking, p.train);
  }
  return f;
}

const ModelEntry& find_model(const RunConfig& c, const std::string& name) {
  for (const auto& m : c.models)
    if (m.name == name) return m;
  throw ConfigError("unknown model '" + name + "'");
}

std::string failure(const std::exception& e) { return std::string("failed: ") + e.what(); }

// Numeric cell values when every cell parses, otherwise label codes.
Matrix numeric_columns(const Prepared& p, const std::vector<std::string>& columns) {
  Matrix out(static_cast<Eigen::Index>(p.dataset.rows.size()), static_cast<Eigen::Index>(columns.size()));
  const auto& names = p.encoded.matrix.column_names;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    std::size_t src = p.dataset.column_index(columns[j]);
    if (columns[j] == p.dataset.target) throw ConfigError("psychometrics: '" + columns[j] + "' is the target");
    bool parsed = true;
    for (std::size_t i = 0; i < p.dataset.rows.size() && parsed; ++i) {
      const std::string& cell = p.dataset.rows[i][src];
      double v = 0.0;
      auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      parsed = ec == std::errc() && end == cell.data() + cell.size();
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
    if (!parsed) {
      auto col = static_cast<Eigen::Index>(std::find(names.begin(), names.end(), columns[j]) - names.begin());
      out.col(static_cast<Eigen::Index>(j)) = p.encoded.matrix.values.col(col);
    }
  }
  return out;
}

csv::Row metric_row(const std::string& name, const EvaluationReport& r) {
  return {name,          num(r.accuracy), num(r.macro_precision), num(r.macro_recall), num(r.macro_f1),
          num(r.auc),    num(r.specificity), num(r.g_mean),        num(r.iba)};
}

void put_importance(Emitter& out, const std::string& stem, const ImportanceReport& report, const std::string& title) {
  std::vector<std::size_t> order(report.scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return report.scores[a] > report.scores[b]; });
  Table t({"feature", "value", "method"});
  std::vector<std::string> labels;
  std::vector<double> values;
  for (std::size_t i : order) {
    t.add({report.feature_names[i], num(report.scores[i]), report.method});
    labels.push_back(report.feature_names[i]);
    values.push_back(report.scores[i]);
  }
  out.put("importances/" + stem + ".csv", t.str());
  out.put("importances/" + stem + ".svg", bar_svg(labels, values, title));
}

void native_importances(Emitter& out, const std::string& stem, const TrainedModel& model) {
  switch (model.algorithm()) {
    case Algorithm::decision_tree:
    case Algorithm::random_forest:
      put_importance(out, stem + "-impurity", normalized(impurity_importance(model)), stem + ": impurity importance");
      break;
    case Algorithm::gbt: {
      GbtImportances g = gbt_importances(model);
      put_importance(out, stem + "-split-count", g.split_count, stem + ": split count");
      put_importance(out, stem + "-gain", g.gain, stem + ": gain");
      put_importance(out, stem + "-loss-reduction", g.loss_reduction, stem + ": loss reduction");
      break;
    }
    default:
      break;
  }
}

}  // namespace

// ---------------------------------------------------------------------------

ReportBundle cmd_eda(const RunConfig& config) {
  Emitter out(config, "eda");
  Prepared p = prepare(config);
  const EncodedMatrix& all = p.encoded.matrix;
  const auto& target_labels = p.encoded.encoder.categories(config.target);

  // Class balance before and after oversampling.
  Table balance({"partition", target_labels[0], target_labels[1]});
  auto add_balance = [&](const std::string& name, const EncodedMatrix& m) {
    ClassBalance b = class_distribution(m);
    balance.add({name, std::to_string(b.count_class0), std::to_string(b.count_class1)});
  };
  add_balance("all", all);
  add_balance("train", p.train);
  add_balance("train_resampled", p.fit_train);
  add_balance("test", p.test);
  out.put("class_balance.csv", balance.str());

  std::vector<std::size_t> categorical;
  Table descriptives({"feature", "n", "mean", "sd", "min", "median", "max"});
  for (std::size_t j = 0; j < all.cols(); ++j) {
    const std::string& name = all.column_names[j];
    auto col = all.values.col(static_cast<Eigen::Index>(j));
    if (all.kinds[j] == ColumnKind::continuous) {
      std::vector<double> v(col.begin(), col.end());
      std::sort(v.begin(), v.end());
      double mean = col.mean();
      double sd = v.size() > 1 ? std::sqrt((col.array() - mean).square().sum() / static_cast<double>(v.size() - 1)) : 0.0;
      double median = v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
      descriptives.add({name, std::to_string(v.size()), num(mean), num(sd), num(v.front()), num(median), num(v.back())});
      continue;
    }
    categorical.push_back(j);
    const auto& labels = p.encoded.encoder.categories(name);
    std::vector<std::array<std::int64_t, 2>> counts(labels.size(), {0, 0});
    for (std::size_t i = 0; i < all.rows(); ++i)
      ++counts[static_cast<std::size_t>(col(static_cast<Eigen::Index>(i)))][static_cast<std::size_t>(all.target[i])];
    Table t({"category", "count", "percent", target_labels[0], target_labels[1]});
    for (std::size_t k = 0; k < labels.size(); ++k) {
      std::int64_t total = counts[k][0] + counts[k][1];
      t.add({labels[k], std::to_string(total), num(100.0 * static_cast<double>(total) / static_cast<double>(all.rows())),
             std::to_string(counts[k][0]), std::to_string(counts[k][1])});
    }
    out.put("frequencies/" + file_stem(name) + ".csv", t.str());
  }
  out.put("descriptives.csv", descriptives.str());

  // Chi-square association of each categorical feature with the target.
  Table assoc({"feature", "chi2", "df", "p_value", "significant", "cramers_v"});
  for (std::size_t j : categorical) {
    auto col = all.values.col(static_cast<Eigen::Index>(j));
    std::vector<double> v(col.begin(), col.end());
    AssociationResult r = chi_square_association(v, all.target, config.eda_alpha);
    assoc.add({all.column_names[j], num(r.chi2), std::to_string(r.df), num(r.p_value), r.significant ? "yes" : "no",
               r.cramers_v ? num(*r.cramers_v) : ""});
  }
  out.put("associations.csv", assoc.str());

  // Cramer's V over categorical features plus the target.
  Matrix cat(static_cast<Eigen::Index>(all.rows()), static_cast<Eigen::Index>(categorical.size() + 1));
  std::vector<std::string> names;
  for (std::size_t k = 0; k < categorical.size(); ++k) {
    cat.col(static_cast<Eigen::Index>(k)) = all.values.col(static_cast<Eigen::Index>(categorical[k]));
    names.push_back(all.column_names[categorical[k]]);
  }
  for (std::size_t i = 0; i < all.rows(); ++i)
    cat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(categorical.size())) = all.target[i];
  names.push_back(config.target);
  Eigen::MatrixXd V = cramers_v_matrix(cat);
  csv::Row header{""};
  header.insert(header.end(), names.begin(), names.end());
  Table vt(header);
  for (std::size_t r = 0; r < names.size(); ++r) {
    csv::Row row{names[r]};
    for (std::size_t c = 0; c < names.size(); ++c) row.push_back(num(V(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))));
    vt.add(row);
  }
  out.put("cramers_v.csv", vt.str());
  out.put("cramers_v.svg", heatmap_svg(names, V, "Cramer's V"));

  const auto& psy = config.psychometrics;
  if (!psy.scales.empty()) {
    Table rel({"scale", "items", "k", "alpha"});
    for (const auto& [scale, items] : psy.scales) {
      ReliabilityResult r = cronbach_alpha(numeric_columns(p, items));
      std::string joined;
      for (const auto& it : items) joined += (joined.empty() ? "" : ";") + it;
      rel.add({scale, joined, std::to_string(r.k), num(r.alpha)});
    }
    out.put("reliability.csv", rel.str());
  }
  if (!psy.efa_columns.empty()) {
    FactorModel fm = efa_varimax(numeric_columns(p, psy.efa_columns), psy.efa_factors);
    csv::Row lh{"item"};
    for (int k = 0; k < psy.efa_factors; ++k) lh.push_back("F" + std::to_string(k + 1));
    lh.push_back("communality");
    Table lt(lh);
    for (std::size_t i = 0; i < psy.efa_columns.size(); ++i) {
      csv::Row row{psy.efa_columns[i]};
      for (int k = 0; k < psy.efa_factors; ++k) row.push_back(num(fm.loadings(static_cast<Eigen::Index>(i), k)));
      row.push_back(num(fm.communalities[i]));
      lt.add(row);
    }
    out.put("efa_loadings.csv", lt.str());
    ordered_json summary;
    summary["factors"] = psy.efa_factors;
    summary["kmo"] = std::isfinite(fm.kmo) ? ordered_json(fm.kmo) : ordered_json(nullptr);
    summary["kmo_adequate"] = std::isfinite(fm.kmo) && kmo_adequate(fm.kmo);
    summary["bartlett"] = {{"chi2", std::isfinite(fm.bartlett.chi2) ? ordered_json(fm.bartlett.chi2) : ordered_json(nullptr)},
                           {"df", fm.bartlett.df},
                           {"p_value", std::isfinite(fm.bartlett.p_value) ? ordered_json(fm.bartlett.p_value) : ordered_json(nullptr)}};
    summary["eigenvalues"] = fm.eigenvalues;
    out.put_json("efa_summary.json", summary);
  }

  return out.finish({{"alpha", config.eda_alpha}});
}

ReportBundle cmd_benchmark(const RunConfig& config) {
  Emitter out(config, "benchmark");
  Prepared p = prepare(config);

  ordered_json metrics;
  ClassBalance tr = class_distribution(p.fit_train), te = class_distribution(p.test);
  metrics["split"] = {{"train_rows", p.train.rows()},
                      {"train_rows_resampled", p.fit_train.rows()},
                      {"train_class_counts", {tr.count_class0, tr.count_class1}},
                      {"test_rows", p.test.rows()},
                      {"test_class_counts", {te.count_class0, te.count_class1}}};
  metrics["models"] = ordered_json::object();

  Table mt({"model", "accuracy", "macro_precision", "macro_recall", "macro_f1", "auc", "specificity", "g_mean", "iba"});
  Table rt({"model", "fpr", "tpr", "threshold"});
  std::vector<RocSeries> curves;

  for (const auto& m : config.models) {
    try {
      Fitted f = fit_entry(m, p, config);
      std::vector<double> prob = f.predict(p.test);
      EvaluationReport r = evaluate(prob, p.test.target);
      metrics["models"][m.name] = report_to_json(r);
      mt.add(metric_row(m.name, r));
      RocCurve c = roc_curve(prob, p.test.target);
      for (std::size_t i = 0; i < c.fpr.size(); ++i) rt.add({m.name, num(c.fpr[i]), num(c.tpr[i]), num(c.thresholds[i])});
      curves.push_back({m.name, std::move(c), r.auc});
      if (f.search) {
        Table tt({"candidate", "hyperparameters", "mean_accuracy", "fold_accuracy"});
        for (std::size_t k = 0; k < f.search->candidates.size(); ++k) {
          const auto& cand = f.search->candidates[k];
          std::string folds;
          for (double a : cand.fold_accuracy) folds += (folds.empty() ? "" : ";") + num(a);
          tt.add({std::to_string(k), spec_to_json(cand.spec)["hyperparameters"].dump(), num(cand.mean_accuracy), folds});
        }
        out.put("tuning/" + file_stem(m.name) + ".csv", tt.str());
        out.put_json("tuning/" + file_stem(m.name) + "-best.json", spec_to_json(f.search->best));
      }
      out.status(m.name, "ok");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      out.status(m.name, failure(e));
    }
  }

  out.put_json("metrics.json", metrics);
  out.put("metrics.csv", mt.str());
  out.put("roc.csv", rt.str());
  out.put("roc.svg", roc_svg(curves, "ROC curves"));
  return out.finish({{"test_fraction", config.test_fraction}, {"smote", config.smote.has_value()}});
}

ReportBundle cmd_compare(const RunConfig& config) {
  Emitter out(config, "compare");
  Dataset dataset = load(config);
  EncodedMatrix data = label_encode(dataset).matrix;
  std::optional<SmoteOptions> resampler = config.smote;
  if (config.resample_test) {
    log_warning("resample_test: oversampling precedes cross-validation, so validation folds include synthetic rows");
    data = smote(data, *config.smote, derive_seed(config.seed, Stream::smote, 0));
    resampler.reset();
  }

  std::map<std::string, std::vector<double>> scores;
  Table cv([&] {
    csv::Row h{"model"};
    for (int k = 0; k < config.cv_folds; ++k) h.push_back("fold_" + std::to_string(k + 1));
    return h;
  }());
  for (const auto& m : config.models) {
    try {
      CvRun run = cross_validate(std::vector<NamedSpec>{{m.name, m.spec}}, data, config.cv_folds, resampler, config.seed);
      scores[m.name] = run.metric(m.name, config.compare_metric);
      csv::Row row{m.name};
      for (double s : scores[m.name]) row.push_back(num(s));
      cv.add(row);
      out.status(m.name, "ok");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      out.status(m.name, failure(e));
    }
  }
  out.put("cv_scores.csv", cv.str());

  const int comparisons = static_cast<int>(config.models.size()) - 1;
  const double adjusted = comparisons >= 1 ? bonferroni_adjust(config.compare_alpha, comparisons) : config.compare_alpha;
  const auto ref = scores.find(config.reference);

  Table ct({"model", "mean_" + config.compare_metric, "t", "p", "cohens_d", "significant", "status"});
  ordered_json rows = ordered_json::array();
  for (const auto& m : config.models) {
    ordered_json row;
    row["model"] = m.name;
    auto it = scores.find(m.name);
    std::string status;
    std::optional<PairedTestResult> test;
    double mean = std::numeric_limits<double>::quiet_NaN();
    if (it == scores.end()) {
      status = "failed";
    } else {
      mean = std::accumulate(it->second.begin(), it->second.end(), 0.0) / static_cast<double>(it->second.size());
      if (ref == scores.end()) {
        status = "reference failed";
      } else {
        try {
          test = paired_t_test(ref->second, it->second);
          status = "ok";
        } catch (const NumericError&) {
          status = "degenerate";
        }
      }
    }
    bool significant = test && test->p_value < adjusted;
    ct.add({m.name, std::isfinite(mean) ? num(mean) : "", test ? num(test->t) : "", test ? num(test->p_value) : "",
            test ? num(test->cohens_d) : "", test ? (significant ? "yes" : "no") : "", status});
    row["mean"] = std::isfinite(mean) ? ordered_json(mean) : ordered_json(nullptr);
    row["t"] = test ? ordered_json(test->t) : ordered_json(nullptr);
    row["p"] = test ? ordered_json(test->p_value) : ordered_json(nullptr);
    row["cohens_d"] = test ? ordered_json(test->cohens_d) : ordered_json(nullptr);
    row["significant"] = significant;
    row["status"] = status;
    rows.push_back(row);
  }
  out.put("comparison.csv", ct.str());
  ordered_json summary;
  summary["metric"] = config.compare_metric;
  summary["folds"] = config.cv_folds;
  summary["reference"] = config.reference;
  summary["alpha"] = config.compare_alpha;
  summary["comparisons"] = comparisons;
  summary["adjusted_alpha"] = adjusted;
  summary["rows"] = rows;
  out.put_json("comparison.json", summary);
  return out.finish({{"folds", config.cv_folds}, {"reference", config.reference}, {"metric", config.compare_metric}});
}

ReportBundle cmd_explain(const RunConfig& config) {
  Emitter out(config, "explain");
  const ModelEntry& entry = find_model(config, config.explain.model);
  const std::vector<std::size_t> instances = parse_instance_selector(config.explain.instances);
  Prepared p = prepare(config);
  for (std::size_t i : instances)
    if (i >= p.test.rows())
      throw ConfigError("instance index " + std::to_string(i) + " out of range (test set has " +
                        std::to_string(p.test.rows()) + " rows)");

  Fitted f = fit_entry(entry, p, config);
  out.status(entry.name, "ok");
  const BatchPredict batch = f.batch();
  const std::string stem = file_stem(entry.name);
  const auto& names = p.test.column_names;
  const std::size_t d = names.size();

  // Background rows drawn from the original training rows.
  Rng rng(config.seed, Stream::shapley, 0);
  std::vector<std::size_t> pick = random_permutation(p.train.rows(), rng);
  pick.resize(std::min<std::size_t>(pick.size(), static_cast<std::size_t>(config.explain.background)));
  std::sort(pick.begin(), pick.end());
  const Matrix background = take_rows(p.train, pick).values;

  auto row_of = [&](std::size_t i) {
    return std::span<const double>(p.test.values.data() + static_cast<std::ptrdiff_t>(i * d), d);
  };
  auto attribution = [&](std::size_t i) {
    Attribution a = shapley_sampled(batch, row_of(i), background, config.explain.permutations,
                                    derive_seed(config.seed, Stream::shapley, i + 1));
    a.feature_names = names;
    return a;
  };

  // Global: mean |phi| over the leading test rows.
  const std::size_t n_global = std::min<std::size_t>(p.test.rows(), static_cast<std::size_t>(config.explain.global_rows));
  ImportanceReport global;
  global.feature_names = names;
  global.scores.assign(d, 0.0);
  global.method = "mean-abs-shapley";
  csv::Row vh{"test_row"};
  vh.insert(vh.end(), names.begin(), names.end());
  Table values(vh);
  for (std::size_t i = 0; i < n_global; ++i) {
    Attribution a = attribution(i);
    csv::Row row{std::to_string(i)};
    for (std::size_t j = 0; j < d; ++j) {
      global.scores[j] += std::abs(a.values[j]) / static_cast<double>(n_global);
      row.push_back(num(a.values[j]));
    }
    values.add(row);
  }
  global.raw = global.scores;
  put_importance(out, stem + "-shapley", global, entry.name + ": mean |Shapley value|");
  out.put("importances/" + stem + "-shapley-values.csv", values.str());

  if (f.plain) {
    native_importances(out, stem, *f.plain);
  } else {
    for (std::size_t b = 0; b < f.stacked->bases.size(); ++b)
      native_importances(out, stem + "-base" + std::to_string(b) + "-" + to_string(f.stacked->bases[b].algorithm()),
                         f.stacked->bases[b]);
  }
  put_importance(out, stem + "-permutation",
                 permutation_importance(batch, p.test, "auc", config.explain.permutation_repeats,
                                        derive_seed(config.seed, Stream::permutation)),
                 entry.name + ": permutation importance (AUC)");

  // Local reports.
  LimeConfig lime = lime_config_from(p.train);
  lime.n_samples = config.explain.lime_samples;
  lime.sigma = config.explain.lime_sigma;
  for (std::size_t i : instances) {
    Attribution a = attribution(i);
    SurrogateFit s = lime_explain(batch, row_of(i), lime, derive_seed(config.seed, Stream::lime, i));
    Table t({"feature", "value", "method"});
    for (std::size_t j = 0; j < d; ++j) t.add({names[j], num(a.values[j]), a.method});
    for (std::size_t j = 0; j < d; ++j) t.add({names[j], num(s.coefficients[j]), "lime"});
    const std::string base = "attributions/instance-" + std::to_string(i);
    out.put(base + ".csv", t.str());

    ordered_json doc;
    doc["instance"] = i;
    doc["row_id"] = p.test.row_ids[i];
    doc["label"] = p.test.target[i];
    doc["feature_values"] = std::vector<double>(row_of(i).begin(), row_of(i).end());
    doc["shapley"] = attribution_to_json(a);
    doc["lime"] = {{"intercept", s.intercept},
                   {"local_prediction", s.local_prediction},
                   {"r2", s.r2},
                   {"ridge", s.ridge_used},
                   {"coefficients", s.coefficients}};
    out.put_json(base + ".json", doc);
    out.put(base + ".svg", bar_svg(names, a.values, entry.name + ": Shapley values, test row " + std::to_string(i)));
  }

  return out.finish({{"model", entry.name},
                     {"instances", config.explain.instances},
                     {"global_rows", n_global},
                     {"permutations", config.explain.permutations},
                     {"background", pick.size()}});
}

}  // namespace imbalkit
