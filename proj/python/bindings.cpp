#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "imbalkit/distributions.hpp"
#include "imbalkit/error.hpp"
#include "imbalkit/explain.hpp"
#include "imbalkit/metrics.hpp"
#include "imbalkit/report.hpp"
#include "imbalkit/stacking.hpp"
#include "imbalkit/stats.hpp"

namespace py = pybind11;
using namespace imbalkit;

namespace {

py::object to_python(const nlohmann::ordered_json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

nlohmann::json from_python(const py::object& obj) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

/// Numeric features as continuous columns x0..x{d-1}.
EncodedMatrix as_encoded(const Matrix& X, const std::vector<int>& y) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw std::invalid_argument("X and y differ in length");
  EncodedMatrix m;
  m.values = X;
  m.target = y;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    m.column_names.push_back("x" + std::to_string(j));
    m.kinds.push_back(ColumnKind::continuous);
    m.cardinality.push_back(0);
  }
  for (Eigen::Index i = 0; i < X.rows(); ++i) m.row_ids.push_back(i);
  return m;
}

ConfigOverrides overrides(std::optional<std::uint64_t> seed, bool resample_test, std::optional<std::string> out) {
  ConfigOverrides o;
  o.seed = seed;
  o.resample_test = resample_test;
  if (out) o.out_dir = *out;
  return o;
}

py::dict bundle_dict(const ReportBundle& b) {
  py::dict d;
  d["out_dir"] = b.out_dir.string();
  d["files"] = b.files;
  d["model_status"] = b.model_status;
  d["exit_code"] = b.exit_code;
  return d;
}

template <class Cmd>
auto command(Cmd cmd) {
  return [cmd](const std::string& config, std::optional<std::uint64_t> seed, bool resample_test,
               std::optional<std::string> out) {
    RunConfig c = load_run_config(config, overrides(seed, resample_test, out));
    ReportBundle b;
    {
      py::gil_scoped_release release;
      b = cmd(c);
    }
    return bundle_dict(b);
  };
}

}  // namespace

PYBIND11_MODULE(_imbalkit, m) {
  m.doc() = "Imbalanced tabular classification toolkit";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  const auto cmd_args = [] {
    return std::make_tuple(py::arg("config"), py::kw_only(), py::arg("seed") = py::none(),
                           py::arg("resample_test") = false, py::arg("out") = py::none());
  };
  std::apply([&](auto... a) { m.def("eda", command(cmd_eda), a...); }, cmd_args());
  std::apply([&](auto... a) { m.def("benchmark", command(cmd_benchmark), a...); }, cmd_args());
  std::apply([&](auto... a) { m.def("compare", command(cmd_compare), a...); }, cmd_args());
  std::apply([&](auto... a) { m.def("explain", command(cmd_explain), a...); }, cmd_args());

  m.def(
      "synthetic_csv",
      [](std::size_t rows, std::size_t positives, std::uint64_t seed) {
        SyntheticOptions o{rows, positives, seed};
        Dataset d = generate_synthetic(o);
        return py::make_tuple(dataset_to_csv(d), to_python(schema_to_json(d.schema)));
      },
      py::arg("rows") = 2000, py::arg("positives") = 308, py::arg("seed") = 2024,
      "CSV text and schema of the bundled synthetic dataset.");

  m.def(
      "smote",
      [](const Matrix& X, const std::vector<int>& y, int k_neighbors, std::uint64_t seed) {
        SmoteOptions o;
        o.k_neighbors = k_neighbors;
        EncodedMatrix out = smote(as_encoded(X, y), o, seed);
        return py::make_tuple(out.values, out.target);
      },
      py::arg("X"), py::arg("y"), py::arg("k_neighbors") = 5, py::arg("seed") = 0);

  m.def(
      "evaluate",
      [](const std::vector<double>& p, const std::vector<int>& y, double threshold) {
        return to_python(report_to_json(evaluate(p, y, threshold)));
      },
      py::arg("probabilities"), py::arg("labels"), py::arg("threshold") = 0.5);
  m.def("roc_auc", [](const std::vector<double>& s, const std::vector<int>& y) { return roc_auc(s, y); },
        py::arg("scores"), py::arg("labels"));

  m.def(
      "paired_t_test",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        PairedTestResult r = paired_t_test(a, b);
        py::dict d;
        d["t"] = r.t;
        d["df"] = r.df;
        d["p_value"] = r.p_value;
        d["cohens_d"] = r.cohens_d;
        return d;
      },
      py::arg("a"), py::arg("b"));
  m.def("bonferroni_adjust", &bonferroni_adjust, py::arg("alpha"), py::arg("comparisons"));
  m.def(
      "cronbach_alpha", [](const Matrix& items) { return cronbach_alpha(items).alpha; }, py::arg("items"));
  m.def("chi2_sf", &chi2_sf, py::arg("x"), py::arg("df"));
  m.def("t_two_tailed_p", &t_two_tailed_p, py::arg("t"), py::arg("df"));

  py::class_<TrainedModel>(m, "Model")
      .def_static(
          "fit",
          [](const std::string& algorithm, const Matrix& X, const std::vector<int>& y, const py::dict& hyperparameters,
             std::uint64_t seed) {
            nlohmann::json spec = {{"algorithm", algorithm}, {"hyperparameters", from_python(hyperparameters)}, {"seed", seed}};
            EncodedMatrix train = as_encoded(X, y);
            ModelSpec s = spec_from_json(spec);
            py::gil_scoped_release release;
            return fit_model(s, train);
          },
          py::arg("algorithm"), py::arg("X"), py::arg("y"), py::arg("hyperparameters") = py::dict(),
          py::arg("seed") = 0)
      .def_static(
          "from_json", [](const py::object& doc) { return model_from_json(from_python(doc)); }, py::arg("doc"))
      .def("predict_proba", [](const TrainedModel& model, const Matrix& X) { return predict_proba(model, X); },
           py::arg("X"))
      .def("to_json", [](const TrainedModel& model) { return to_python(model_to_json(model)); })
      .def(
          "shapley",
          [](const TrainedModel& model, const std::vector<double>& x, const Matrix& background) {
            Attribution a = shapley_exact(predictor(model), x, background);
            return py::make_tuple(a.values, a.base_value, a.prediction);
          },
          py::arg("x"), py::arg("background"), "Exact interventional Shapley values (d <= 15).")
      .def_property_readonly("algorithm", [](const TrainedModel& model) { return to_string(model.algorithm()); });
}
