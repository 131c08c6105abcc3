#include "npsvc/dataset.hpp"
#include "npsvc/model_io.hpp"
#include "npsvc/protocol.hpp"
#include "npsvc/synthetic.hpp"
#include "npsvc/trace.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace npsvc;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Python callers pass samples as rows; the core stores them as columns.
Matrix columns(const Eigen::Ref<const RowMatrix>& X) { return X.transpose(); }

std::vector<double> original_labels(const ModelFile& m, const std::vector<int>& idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (int k : idx) out.push_back(m.labels[static_cast<std::size_t>(k)]);
  return out;
}

RunConfig make_config(const std::string& model, const std::string& kernel, py::kwargs kw) {
  RunConfig rc;
  rc.kind = model_kind_from_string(model);
  rc.kernel = kernel_kind_from_string(kernel);
  rc.standardize = rc.kind == ModelKind::dnpsvc;
  for (auto item : kw) {
    const std::string key = py::str(item.first);
    const py::handle v = item.second;
    if (key == "c") rc.hp.c = v.cast<double>();
    else if (key == "r1") rc.hp.r1 = v.cast<double>();
    else if (key == "r2") rc.hp.r2 = v.cast<double>();
    else if (key == "mu") rc.hp.mu = v.cast<double>();
    else if (key == "gamma") rc.hp.gamma = v.cast<double>();
    else if (key == "eta") rc.hp.eta = v.cast<double>();
    else if (key == "dim") rc.hp.dim = v.cast<Index>();
    else if (key == "max_outer") rc.hp.max_outer = v.cast<int>();
    else if (key == "bandwidth") rc.bandwidth = v.cast<double>();
    else if (key == "standardize") rc.standardize = v.cast<bool>();
    else if (key == "seed") rc.seed = v.cast<std::uint64_t>();
    else if (key == "epochs") rc.deep.epochs = v.cast<int>();
    else if (key == "batch") rc.deep.batch = v.cast<Index>();
    else if (key == "lr") rc.deep.lr = v.cast<double>();
    else if (key == "hidden") rc.deep.hidden = v.cast<Index>();
    else if (key == "latent") rc.deep.latent = v.cast<Index>();
    else throw py::type_error("unknown hyperparameter '" + key + "'");
  }
  return rc;
}

py::list trace_rows(const TrainResult& tr) {
  py::list rows;
  for (const TraceRow& r : tr.knpsvc_trace) {
    py::dict d;
    d["iter"] = r.iter;
    d["primal"] = r.primal;
    d["dual"] = r.dual;
    d["J"] = r.J;
    d["tau"] = r.tau;
    d["orth_residual"] = r.orth_residual;
    rows.append(d);
  }
  for (const DTraceRow& r : tr.dnpsvc_trace) {
    py::dict d;
    d["epoch"] = r.epoch;
    d["batch"] = r.batch;
    d["J"] = r.J;
    d["tau"] = r.tau;
    d["lr"] = r.lr;
    d["gamma"] = r.gamma;
    rows.append(d);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Nonparallel support vector classifiers";

  static PyObject* error = PyErr_NewException("npsvc._core.NpsvcError", PyExc_RuntimeError, nullptr);
  m.attr("NpsvcError") = py::handle(error);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  py::class_<ModelFile>(m, "Model")
      .def_property_readonly("kind", [](const ModelFile& mf) { return to_string(mf.kind); })
      .def_readonly("labels", &ModelFile::labels)
      .def_readonly("seed", &ModelFile::seed)
      .def_readonly("hyperparameters", &ModelFile::hyperparameters)
      .def_property_readonly("num_features", &ModelFile::num_features)
      .def(
          "predict",
          [](const ModelFile& mf, const Eigen::Ref<const RowMatrix>& X) {
            return original_labels(mf, mf.predict(columns(X)));
          },
          py::arg("X"), "Labels for the rows of X, in the training label space.")
      .def(
          "decision",
          [](const ModelFile& mf, const Eigen::Ref<const RowMatrix>& X) {
            return Matrix(mf.decision(columns(X)).transpose());
          },
          py::arg("X"), "n × K raw scores.")
      .def("to_json", [](const ModelFile& mf) { return save_model(mf); })
      .def_static("from_json", &load_model, py::arg("text"))
      .def("save", [](const ModelFile& mf, const std::string& path) { save_model_file(mf, path); })
      .def_static("load", &load_model_file, py::arg("path"));

  m.def(
      "fit",
      [](const Eigen::Ref<const RowMatrix>& X, const std::vector<double>& y,
         const std::string& model, const std::string& kernel, py::kwargs kw) {
        if (static_cast<Index>(y.size()) != X.rows())
          throw Error(ErrorKind::dimension_mismatch, "X and y disagree on the sample count");
        const RunConfig rc = make_config(model, kernel, kw);
        TrainResult tr;
        {
          py::gil_scoped_release release;
          tr = train_model(make_dataset(columns(X), y), rc);
        }
        return py::make_tuple(tr.model, trace_rows(tr));
      },
      py::arg("X"), py::arg("y"), py::arg("model") = "knpsvc", py::arg("kernel") = "gaussian",
      "Fit a model; returns (model, trace rows). Extra keywords set hyperparameters.");

  m.def(
      "load_dataset",
      [](const std::string& path) {
        const Dataset d = load_dataset(path);
        std::vector<double> y;
        y.reserve(d.y.size());
        for (int k : d.y) y.push_back(d.original_label(k));
        return py::make_tuple(Matrix(d.X.transpose()), y);
      },
      py::arg("path"), "Reads LIBSVM or CSV; returns (X with samples as rows, labels).");

  m.def(
      "make_blobs",
      [](Index n, int classes, Index dim, double radius, std::uint64_t seed) {
        const Dataset d = make_blobs(n, classes, dim, radius, seed);
        std::vector<double> y;
        for (int k : d.y) y.push_back(d.original_label(k));
        return py::make_tuple(Matrix(d.X.transpose()), y);
      },
      py::arg("n"), py::arg("classes") = 3, py::arg("dim") = 2, py::arg("radius") = 6.0,
      py::arg("seed") = 0);
}
