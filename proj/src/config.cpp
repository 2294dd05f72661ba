#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "imbalkit/error.hpp"
#include "imbalkit/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace imbalkit {
namespace {

const std::set<std::string> kTopLevelKeys = {
    "dataset", "schema",  "target",  "seed",          "test_fraction", "smote",   "resample_test", "strict_categories",
    "models",  "tuning",  "cv_folds", "reference",    "compare",       "eda",     "explain",       "psychometrics",
    "out"};

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
T get_or(const json& obj, const std::string& key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

int positive_int(const json& obj, const std::string& key, int fallback, const std::string& where, int minimum = 1) {
  int v = get_or<int>(obj, key, fallback, where);
  if (v < minimum) throw ConfigError(where + "." + key + " must be >= " + std::to_string(minimum));
  return v;
}

std::vector<std::string> string_list(const json& value, const std::string& where) {
  if (!value.is_array()) throw ConfigError(where + " must be an array of column names");
  std::vector<std::string> out;
  for (const auto& v : value) {
    if (!v.is_string()) throw ConfigError(where + " must be an array of column names");
    out.push_back(v.get<std::string>());
  }
  return out;
}

Hyperparameters hyperparameters_from(const json& obj, const std::string& where) {
  Hyperparameters hp;
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) hp[key] = param_from_json(value);
  return hp;
}

ModelSpec preset_spec(const std::string& preset, std::uint64_t seed) {
  auto presets = paper_presets(seed);
  auto it = presets.find(preset);
  if (it == presets.end()) throw ConfigError("unknown model preset '" + preset + "'");
  return it->second;
}

ModelSpec plain_spec(const json& entry, std::uint64_t seed, const std::string& where) {
  if (entry.is_string()) return preset_spec(entry.get<std::string>(), seed);
  if (!entry.is_object()) throw ConfigError(where + " must be a preset name or an object");
  std::uint64_t s = get_or<std::uint64_t>(entry, "seed", seed, where);
  if (entry.contains("preset")) {
    ModelSpec base = preset_spec(get_or<std::string>(entry, "preset", "", where), s);
    if (entry.contains("hyperparameters")) {
      for (auto& [key, value] : hyperparameters_from(entry["hyperparameters"], where + ".hyperparameters"))
        base.hyperparameters[key] = value;
    }
    return validated(base);
  }
  if (!entry.contains("algorithm")) throw ConfigError(where + " needs 'preset', 'algorithm' or 'stacking'");
  Hyperparameters hp;
  if (entry.contains("hyperparameters")) hp = hyperparameters_from(entry["hyperparameters"], where + ".hyperparameters");
  return make_spec(parse_algorithm(get_or<std::string>(entry, "algorithm", "", where)), hp, s);
}

ModelEntry model_entry(const json& entry, std::uint64_t seed, std::size_t index) {
  const std::string where = "models[" + std::to_string(index) + "]";
  if (entry.is_string()) return {entry.get<std::string>(), preset_spec(entry.get<std::string>(), seed)};
  if (!entry.is_object()) throw ConfigError(where + " must be a preset name or an object");
  check_keys(entry, {"name", "preset", "algorithm", "hyperparameters", "seed", "stacking"}, where);
  std::string name = get_or<std::string>(entry, "name", "", where);
  if (name.empty()) name = get_or<std::string>(entry, "preset", "", where);
  if (name.empty()) throw ConfigError(where + " needs a name");

  if (!entry.contains("stacking")) return {name, plain_spec(entry, seed, where)};

  const json& st = entry["stacking"];
  check_keys(st, {"bases", "meta", "oof_folds"}, where + ".stacking");
  StackingSpec spec;
  spec.seed = get_or<std::uint64_t>(entry, "seed", seed, where);
  if (!st.contains("bases") || !st["bases"].is_array() || st["bases"].empty())
    throw ConfigError(where + ".stacking.bases must be a nonempty array");
  for (std::size_t b = 0; b < st["bases"].size(); ++b)
    spec.base_specs.push_back(plain_spec(st["bases"][b], spec.seed, where + ".stacking.bases[" + std::to_string(b) + "]"));
  if (st.contains("meta")) spec.meta_spec = plain_spec(st["meta"], spec.seed, where + ".stacking.meta");
  else spec.meta_spec = make_spec(Algorithm::logistic, {}, spec.seed);
  if (spec.meta_spec.algorithm != Algorithm::logistic) throw ConfigError(where + ": the meta model must be logistic");
  spec.oof_folds = positive_int(st, "oof_folds", 5, where + ".stacking", 2);
  return {name, spec};
}

}  // namespace

std::vector<ModelEntry> roster_preset(const std::string& name, std::uint64_t seed) {
  auto presets = paper_presets(seed);
  std::vector<ModelEntry> roster;
  auto stack = [&](std::vector<std::string> bases) {
    StackingSpec spec;
    spec.seed = seed;
    for (const auto& b : bases) spec.base_specs.push_back(presets.at(b));
    spec.meta_spec = make_spec(Algorithm::logistic, {}, seed);
    return spec;
  };
  if (name == "core") {
    for (const char* key : {"lr", "dt", "rf", "gbm", "svm", "nb", "knn", "ann"}) roster.push_back({key, presets.at(key)});
    roster.push_back({"ann-gbm-stack", stack({"ann", "gbm"})});
  } else if (name == "paper") {
    for (const char* key : {"lr", "dt", "rf", "gbm", "xgboost", "lightgbm", "catboost", "svm", "nb", "knn", "ann",
                            "ann-2layer"})
      roster.push_back({key, presets.at(key)});
    roster.push_back({"ann-catboost-rf-stack", stack({"ann", "catboost", "rf"})});
    roster.push_back({"ann-catboost-stack", stack({"ann", "catboost"})});
  } else {
    throw ConfigError("unknown roster '" + name + "' (expected core or paper)");
  }
  return roster;
}

std::vector<std::size_t> parse_instance_selector(const std::string& text) {
  auto number = [&](std::string_view s) {
    std::size_t v = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size() || s.empty())
      throw ConfigError("bad instance selector '" + text + "'");
    return v;
  };
  std::vector<std::size_t> out;
  std::string_view rest = text;
  while (!rest.empty()) {
    auto comma = rest.find(',');
    std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    auto dots = item.find("..");
    if (dots == std::string_view::npos) {
      out.push_back(number(item));
    } else {
      std::size_t lo = number(item.substr(0, dots)), hi = number(item.substr(dots + 2));
      if (hi < lo) throw ConfigError("bad instance selector '" + text + "'");
      for (std::size_t i = lo; i <= hi; ++i) out.push_back(i);
    }
  }
  if (out.empty()) throw ConfigError("empty instance selector");
  return out;
}

RunConfig parse_run_config(const json& doc, const fs::path& base_dir, const ConfigOverrides& overrides) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  check_keys(doc, kTopLevelKeys, "config");
  RunConfig c;
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };

  std::string dataset = get_or<std::string>(doc, "dataset", "", "config");
  std::string schema = get_or<std::string>(doc, "schema", "", "config");
  if (dataset.empty()) throw ConfigError("config.dataset is required");
  if (schema.empty()) throw ConfigError("config.schema is required");
  c.dataset = resolve(dataset);
  c.schema = resolve(schema);
  c.target = get_or<std::string>(doc, "target", "", "config");
  if (c.target.empty()) throw ConfigError("config.target is required");
  c.seed = overrides.seed ? *overrides.seed : get_or<std::uint64_t>(doc, "seed", 42, "config");
  c.test_fraction = get_or<double>(doc, "test_fraction", 0.2, "config");
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) throw ConfigError("config.test_fraction must be in (0, 1)");
  c.resample_test = overrides.resample_test || get_or<bool>(doc, "resample_test", false, "config");
  c.strict_categories = get_or<bool>(doc, "strict_categories", true, "config");

  if (doc.contains("smote")) {
    const json& s = doc["smote"];
    if (s.is_boolean()) {
      c.smote = s.get<bool>() ? std::optional<SmoteOptions>(SmoteOptions{}) : std::nullopt;
    } else {
      check_keys(s, {"enabled", "k_neighbors", "rounding"}, "smote");
      if (get_or<bool>(s, "enabled", true, "smote")) {
        SmoteOptions o;
        o.k_neighbors = positive_int(s, "k_neighbors", 5, "smote");
        o.rounding = parse_smote_rounding(get_or<std::string>(s, "rounding", "continuous", "smote"));
        c.smote = o;
      } else {
        c.smote.reset();
      }
    }
  }
  if (c.resample_test && !c.smote) throw ConfigError("resample_test needs SMOTE enabled");

  const json models = doc.contains("models") ? doc["models"] : json("core");
  if (models.is_string()) {
    c.models = roster_preset(models.get<std::string>(), c.seed);
  } else if (models.is_array()) {
    for (std::size_t i = 0; i < models.size(); ++i) c.models.push_back(model_entry(models[i], c.seed, i));
  } else {
    throw ConfigError("config.models must be a roster name or an array");
  }
  if (c.models.empty()) throw ConfigError("config.models is empty");
  std::set<std::string> names;
  for (const auto& m : c.models)
    if (!names.insert(m.name).second) throw ConfigError("duplicate model name '" + m.name + "'");
  auto find = [&](const std::string& name) {
    for (const auto& m : c.models)
      if (m.name == name) return &m;
    return static_cast<const ModelEntry*>(nullptr);
  };

  if (doc.contains("tuning")) {
    if (!doc["tuning"].is_object()) throw ConfigError("config.tuning must be an object");
    for (const auto& [name, t] : doc["tuning"].items()) {
      const ModelEntry* m = find(name);
      if (!m) throw ConfigError("tuning refers to unknown model '" + name + "'");
      if (!std::holds_alternative<ModelSpec>(m->spec)) throw ConfigError("tuning is not supported for stacked model '" + name + "'");
      check_keys(t, {"space", "n_iter", "folds"}, "tuning." + name);
      TuningConfig tc;
      if (!t.contains("space")) throw ConfigError("tuning." + name + ".space is required");
      tc.space = search_space_from_json(t["space"]);
      tc.n_iter = positive_int(t, "n_iter", 10, "tuning." + name);
      tc.folds = positive_int(t, "folds", 10, "tuning." + name, 2);
      c.tuning[name] = std::move(tc);
    }
  }

  c.cv_folds = positive_int(doc, "cv_folds", 10, "config", 2);
  if (doc.contains("compare")) {
    const json& cmp = doc["compare"];
    check_keys(cmp, {"alpha", "metric"}, "compare");
    c.compare_alpha = get_or<double>(cmp, "alpha", 0.05, "compare");
    c.compare_metric = get_or<std::string>(cmp, "metric", "accuracy", "compare");
    if (!(c.compare_alpha > 0.0 && c.compare_alpha < 1.0)) throw ConfigError("compare.alpha must be in (0, 1)");
  }
  if (doc.contains("eda")) {
    check_keys(doc["eda"], {"alpha"}, "eda");
    c.eda_alpha = get_or<double>(doc["eda"], "alpha", 0.10, "eda");
    if (!(c.eda_alpha > 0.0 && c.eda_alpha < 1.0)) throw ConfigError("eda.alpha must be in (0, 1)");
  }

  c.reference = get_or<std::string>(doc, "reference", "", "config");
  if (c.reference.empty()) {
    c.reference = c.models.back().name;
    for (const auto& m : c.models)
      if (std::holds_alternative<StackingSpec>(m.spec)) c.reference = m.name;
  }
  if (!find(c.reference)) throw ConfigError("reference model '" + c.reference + "' is not in the roster");

  if (doc.contains("explain")) {
    const json& e = doc["explain"];
    check_keys(e,
               {"model", "instances", "global_rows", "permutations", "background", "lime_samples", "lime_sigma",
                "permutation_repeats"},
               "explain");
    c.explain.model = get_or<std::string>(e, "model", "", "explain");
    c.explain.instances = get_or<std::string>(e, "instances", c.explain.instances, "explain");
    c.explain.global_rows = positive_int(e, "global_rows", c.explain.global_rows, "explain");
    if (c.explain.global_rows > 200) throw ConfigError("explain.global_rows must be <= 200");
    c.explain.permutations = positive_int(e, "permutations", c.explain.permutations, "explain");
    c.explain.background = positive_int(e, "background", c.explain.background, "explain");
    c.explain.lime_samples = positive_int(e, "lime_samples", c.explain.lime_samples, "explain", 10);
    c.explain.lime_sigma = get_or<double>(e, "lime_sigma", 0.0, "explain");
    c.explain.permutation_repeats = positive_int(e, "permutation_repeats", c.explain.permutation_repeats, "explain");
  }
  if (overrides.model) c.explain.model = *overrides.model;
  if (overrides.instances) c.explain.instances = *overrides.instances;
  if (c.explain.model.empty()) c.explain.model = c.reference;
  if (!find(c.explain.model)) throw ConfigError("unknown model '" + c.explain.model + "'");
  parse_instance_selector(c.explain.instances);

  if (doc.contains("psychometrics")) {
    const json& p = doc["psychometrics"];
    check_keys(p, {"scales", "efa"}, "psychometrics");
    if (p.contains("scales")) {
      if (!p["scales"].is_object()) throw ConfigError("psychometrics.scales must be an object");
      for (const auto& [name, items] : p["scales"].items()) {
        c.psychometrics.scales[name] = string_list(items, "psychometrics.scales." + name);
        if (c.psychometrics.scales[name].size() < 2) throw ConfigError("scale '" + name + "' needs at least two items");
      }
    }
    if (p.contains("efa")) {
      const json& e = p["efa"];
      check_keys(e, {"columns", "factors"}, "psychometrics.efa");
      c.psychometrics.efa_columns = string_list(e.value("columns", json::array()), "psychometrics.efa.columns");
      c.psychometrics.efa_factors = positive_int(e, "factors", 3, "psychometrics.efa");
      if (static_cast<std::size_t>(c.psychometrics.efa_factors) > c.psychometrics.efa_columns.size())
        throw ConfigError("psychometrics.efa.factors exceeds the number of columns");
    }
  }

  c.out_dir = overrides.out_dir ? *overrides.out_dir : resolve(get_or<std::string>(doc, "out", "out", "config"));
  return c;
}

RunConfig load_run_config(const fs::path& path, const ConfigOverrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config " + path.string() + " is not valid JSON");
  RunConfig c = parse_run_config(doc, path.parent_path(), overrides);
  c.config_sha256 = sha256_hex(text);
  return c;
}

}  // namespace imbalkit
