#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "tsgc/common.hpp"
#include "tsgc/dataset.hpp"
#include "tsgc/gmm.hpp"
#include "tsgc/graph.hpp"
#include "tsgc/metrics.hpp"
#include "tsgc/model.hpp"
#include "tsgc/pipeline.hpp"
#include "tsgc/synthetic.hpp"
#include "tsgc/wdtw.hpp"

namespace py = pybind11;
using namespace tsgc;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

WdtwConfig wdtw_config(double gamma, std::size_t window, const std::string& weight_mode) {
  WdtwConfig cfg{gamma, window, parse_weight_mode(weight_mode)};
  cfg.validate();
  return cfg;
}

RowMatrix to_numpy(const DistanceMatrix& s) {
  RowMatrix m(s.n(), s.n());
  for (std::size_t i = 0; i < s.n(); ++i)
    for (std::size_t j = 0; j < s.n(); ++j) m(i, j) = s(i, j);
  return m;
}

DistanceMatrix from_numpy(const RowMatrix& m) {
  if (m.rows() != m.cols()) throw Error("distance matrix must be square");
  DistanceMatrix s(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) s(i, j) = m(i, j);
  return s;
}

AdjacencyView adjacency_from_numpy(const RowMatrix& a) {
  if (a.rows() != a.cols()) throw Error("adjacency must be square");
  AdjacencyView v;
  v.n = a.rows();
  v.a.resize(v.n * v.n);
  for (std::size_t i = 0; i < v.n; ++i)
    for (std::size_t j = 0; j < v.n; ++j) {
      const double x = a(i, j);
      if (x != 0.0 && x != 1.0) throw Error("adjacency entries must be 0 or 1");
      if (x != a(j, i)) throw Error("adjacency must be symmetric");
      v.a[i * v.n + j] = (i != j && x == 1.0) ? 1 : 0;
    }
  return v;
}

Dataset dataset_from_python(const std::vector<std::vector<double>>& series,
                            const std::optional<std::vector<int>>& labels) {
  Dataset ds;
  ds.name = "python";
  if (labels && labels->size() != series.size()) throw Error("labels and series differ in length");
  int k = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    TimeSeries ts{std::to_string(i), series[i], std::nullopt};
    if (labels) {
      ts.label = (*labels)[i];
      k = std::max(k, (*labels)[i] + 1);
    }
    ds.series.push_back(std::move(ts));
  }
  if (labels) ds.num_classes = k;
  return ds;
}

RunConfig run_config_from_dict(const py::dict& d) {
  RunConfig cfg;
  for (const auto& [key, value] : d) {
    std::string text;
    if (py::isinstance<py::bool_>(value)) text = value.cast<bool>() ? "true" : "false";
    else text = py::str(value).cast<std::string>();
    cfg.set(key.cast<std::string>(), text);
  }
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Time-series clustering with weighted DTW graphs and a mixture-prior graph autoencoder.";

  py::register_exception<Error>(m, "TsgcError", PyExc_ValueError);

  py::class_<TimeSeries>(m, "TimeSeries")
      .def_readonly("id", &TimeSeries::id)
      .def_readonly("values", &TimeSeries::values)
      .def_readonly("label", &TimeSeries::label)
      .def("__len__", &TimeSeries::length);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("name", &Dataset::name)
      .def_readonly("series", &Dataset::series)
      .def_readonly("num_classes", &Dataset::num_classes)
      .def("__len__", &Dataset::size)
      .def("labels", &Dataset::labels)
      .def("values", [](const Dataset& ds) {
        std::vector<std::vector<double>> out;
        for (const auto& s : ds.series) out.push_back(s.values);
        return out;
      });

  m.def(
      "load_ucr", [](const std::filesystem::path& path, const std::string& split) {
        return load_ucr(path, parse_split(split));
      },
      py::arg("path"), py::arg("split") = "train", "Read a UCR-format dataset (train, test or merged split).");
  m.def(
      "load_prices",
      [](const std::filesystem::path& path, const std::string& normalize) {
        return load_price_csv(path, parse_price_normalization(normalize));
      },
      py::arg("path"), py::arg("normalize") = "zscore", "Read a `date,ticker...` price CSV, one series per ticker.");
  m.def("gen_synthetic", &gen_synthetic, py::arg("n_per_class"), py::arg("length"), py::arg("seed"),
        py::arg("noise_sd") = 0.1, "Three-class sine / square / trend dataset.");
  m.def(
      "znormalize", [](const Dataset& ds) { return znormalize(ds); }, py::arg("dataset"));

  m.def(
      "wdtw_distance",
      [](const std::vector<double>& x, const std::vector<double>& y, double gamma, std::size_t window,
         const std::string& weight_mode) { return wdtw_distance(x, y, wdtw_config(gamma, window, weight_mode)); },
      py::arg("x"), py::arg("y"), py::arg("gamma") = 0.2, py::arg("window") = 10, py::arg("weight_mode") = "affine");
  m.def(
      "distance_matrix",
      [](const Dataset& ds, double gamma, std::size_t window, const std::string& weight_mode, std::size_t workers) {
        DistanceMatrix s;
        {
          py::gil_scoped_release release;
          s = distance_matrix(ds, wdtw_config(gamma, window, weight_mode), workers);
        }
        return to_numpy(s);
      },
      py::arg("dataset"), py::arg("gamma") = 0.2, py::arg("window") = 10, py::arg("weight_mode") = "affine",
      py::arg("workers") = 1, "All-pairs WDTW distances as an n x n array.");

  m.def(
      "threshold_from_density", [](const RowMatrix& s, double alpha) { return threshold_from_density(from_numpy(s), alpha); },
      py::arg("distances"), py::arg("alpha"));
  m.def(
      "adjacency_from_density",
      [](const RowMatrix& s, double alpha) {
        const auto a = adjacency_from_density(from_numpy(s), alpha);
        RowMatrix out(a.n, a.n);
        for (std::size_t i = 0; i < a.n; ++i)
          for (std::size_t j = 0; j < a.n; ++j) out(i, j) = a.edge(i, j) ? 1.0 : 0.0;
        return py::make_tuple(out, a.delta, a.alpha_achieved);
      },
      py::arg("distances"), py::arg("alpha"), "Returns (adjacency, delta, achieved density).");
  m.def(
      "normalize_adjacency", [](const RowMatrix& a) { return to_matrix(normalize_adjacency(adjacency_from_numpy(a))); },
      py::arg("adjacency"));

  m.def(
      "rand_index", [](const std::vector<int>& t, const std::vector<int>& p) { return rand_index(t, p); },
      py::arg("truth"), py::arg("pred"));
  m.def(
      "nmi", [](const std::vector<int>& t, const std::vector<int>& p) { return nmi(t, p); }, py::arg("truth"),
      py::arg("pred"));

  py::class_<GmmModel>(m, "GaussianMixture")
      .def_readonly("k", &GmmModel::k)
      .def_readonly("weights", &GmmModel::weights)
      .def_readonly("means", &GmmModel::means)
      .def_readonly("variances", &GmmModel::variances)
      .def_property_readonly("log_likelihood_trace",
                             [](const GmmModel& g) { return g.diagnostics.log_likelihood; })
      .def("predict", [](const GmmModel& g, const RowMatrix& z) { return predict(g, z); })
      .def("responsibilities", [](const GmmModel& g, const RowMatrix& z) { return responsibilities(g, z).r; })
      .def("log_likelihood", [](const GmmModel& g, const RowMatrix& z) { return g.log_likelihood(z); });
  m.def(
      "fit_gmm",
      [](const RowMatrix& z, int k, int restarts, int max_iters, double tol, std::uint64_t seed) {
        GmmConfig cfg;
        cfg.restarts = restarts;
        cfg.max_iters = max_iters;
        cfg.tol = tol;
        cfg.seed = seed;
        return fit_em(z, k, cfg);
      },
      py::arg("z"), py::arg("k"), py::arg("restarts") = 5, py::arg("max_iters") = 200, py::arg("tol") = 1e-6,
      py::arg("seed") = 0, "Diagonal-covariance Gaussian mixture fitted by EM.");
  m.def(
      "elbow_select_k",
      [](const RowMatrix& z, const std::vector<int>& ks, std::uint64_t seed) {
        GmmConfig cfg;
        cfg.seed = seed;
        const auto e = elbow_select_k(z, ks, cfg);
        return py::make_tuple(e.k, e.curve);
      },
      py::arg("z"), py::arg("k_range"), py::arg("seed") = 0, "Returns (k, [(k, negative log-likelihood), ...]).");

  m.def(
      "train_embeddings",
      [](const std::vector<std::vector<double>>& series, const RowMatrix& adjacency, int k, double lambda_,
         double lr, int epochs, int pretrain_epochs, int hidden, int latent, double dropout, std::uint64_t seed) {
        TrainConfig cfg;
        cfg.k = k;
        cfg.lambda = lambda_;
        cfg.lr = lr;
        cfg.epochs = epochs;
        cfg.pretrain_epochs = pretrain_epochs;
        cfg.hidden = hidden;
        cfg.latent = latent;
        cfg.dropout_p = dropout;
        cfg.seed = seed;
        const Dataset ds = dataset_from_python(series, std::nullopt);
        const AdjacencyView a = adjacency_from_numpy(adjacency);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(ds, a, cfg);
        }
        std::vector<std::tuple<double, double, double>> history;
        for (const auto& lb : r.history) history.emplace_back(lb.recon, lb.reg, lb.total);
        return py::make_tuple(r.embeddings, history);
      },
      py::arg("series"), py::arg("adjacency"), py::arg("k"), py::arg("lambda_") = 0.001, py::arg("lr") = 1e-4,
      py::arg("epochs") = 500, py::arg("pretrain_epochs") = 100, py::arg("hidden") = 32, py::arg("latent") = 16,
      py::arg("dropout") = 0.01, py::arg("seed") = 0,
      "Train the graph autoencoder; returns (embeddings, [(recon, reg, total), ...]).");

  m.def(
      "run_train",
      [](const py::dict& config) {
        const RunConfig cfg = run_config_from_dict(config);
        std::ostringstream log;
        ClusteringReport r;
        {
          py::gil_scoped_release release;
          r = cmd_train(cfg, log);
        }
        return r.to_json();
      },
      py::arg("config"), "Full pipeline from a dict of run settings; writes artifacts and returns the JSON report.");
  m.def(
      "run_stocks",
      [](const py::dict& config) {
        RunConfig cfg = run_config_from_dict(config);
        cfg.format = "prices";
        std::ostringstream log;
        StocksOutcome r;
        {
          py::gil_scoped_release release;
          r = cmd_stocks(cfg, log);
        }
        return py::make_tuple(r.report.to_json(), r.assignments, r.elbow_curve);
      },
      py::arg("config"), "Price-CSV workflow with elbow selection; returns (report, assignments, elbow curve).");
  m.def("config_keys", &RunConfig::keys);
}
