// Python bindings. Matrices follow the C++ convention: one signal, pixel or
// feature vector per column. Cubes are (rows, cols, bands) arrays.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hsic/baselines.hpp"
#include "hsic/clustering.hpp"
#include "hsic/config.hpp"
#include "hsic/data_io.hpp"
#include "hsic/dictionary.hpp"
#include "hsic/error.hpp"
#include "hsic/metrics.hpp"
#include "hsic/pipeline.hpp"
#include "hsic/pursuit.hpp"

namespace py = pybind11;
using namespace hsic;

namespace {

using Cube = py::array_t<double, py::array::c_style | py::array::forcecast>;

HsiCube to_cube(const Cube& a) {
  if (a.ndim() != 3) throw ParameterError("cube must be a (rows, cols, bands) array");
  const double* p = a.data();
  return HsiCube(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                 static_cast<int>(a.shape(2)), std::vector<double>(p, p + a.size()));
}

Cube from_cube(const HsiCube& cube) {
  Cube out({cube.rows(), cube.cols(), cube.bands()});
  std::copy(cube.data().begin(), cube.data().end(), out.mutable_data());
  return out;
}

py::array_t<int> to_array(const std::vector<int>& v) {
  return py::array_t<int>(static_cast<py::ssize_t>(v.size()), v.data());
}

PixelMatrix to_pixels(const Eigen::MatrixXd& x) {
  PixelMatrix p;
  p.values = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j) p.coords.push_back({0, static_cast<int>(j)});
  return p;
}

py::dict report_dict(const AmiReport& r) {
  py::dict d;
  d["ami"] = r.ami;
  d["mi"] = r.mi;
  d["entropy_g"] = r.entropy_truth;
  d["entropy_l"] = r.entropy_predicted;
  d["emi"] = r.emi;
  d["n"] = r.n;
  d["clusters_g"] = r.clusters_truth;
  d["clusters_l"] = r.clusters_predicted;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sparse-coding features and spectral clustering for hyperspectral pixels";

  auto base = py::register_exception<Error>(m, "HsicError", PyExc_RuntimeError);
  auto parameter = py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  auto data = py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  (void)parameter;
  (void)data;

  m.def(
      "omp",
      [](const Eigen::MatrixXd& atoms, const Eigen::VectorXd& x, int sparsity) {
        const SparseCode c = omp(Dictionary(atoms, false), x, sparsity);
        std::vector<int> idx;
        std::vector<double> val;
        for (const CodeEntry& e : c.entries) {
          idx.push_back(e.index);
          val.push_back(e.value);
        }
        return py::make_tuple(idx, val, c.residual_norm);
      },
      py::arg("atoms"), py::arg("x"), py::arg("sparsity"),
      "Greedy s-sparse code of x. Returns (indices in selection order, values, residual norm).");

  m.def(
      "encode",
      [](const Eigen::MatrixXd& atoms, const Eigen::MatrixXd& x, int sparsity) {
        py::gil_scoped_release release;
        return encode_all(Dictionary(atoms, false), x, sparsity).dense();
      },
      py::arg("atoms"), py::arg("x"), py::arg("sparsity"),
      "Dense k x n codes of every column of x.");

  m.def(
      "train",
      [](const Eigen::MatrixXd& x, int atoms, int sparsity, int iterations, std::uint64_t seed,
         int batch_size) {
        TrainConfig cfg;
        cfg.atoms = atoms > 0 ? atoms : suggest_atom_count(static_cast<int>(x.rows()));
        cfg.sparsity = sparsity;
        cfg.iterations = iterations;
        cfg.seed = seed;
        cfg.batch_size = batch_size;
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(to_pixels(x), cfg);
        }
        return py::make_tuple(r.state.dictionary.atoms(), r.trace);
      },
      py::arg("x"), py::arg("atoms") = 0, py::arg("sparsity") = 5,
      py::arg("iterations") = 5000, py::arg("seed") = 0, py::arg("batch_size") = 1,
      "Online dictionary learning. Returns (m x k atoms, per-iteration residual trace).");

  m.def(
      "pca",
      [](const Eigen::MatrixXd& x, int components) {
        const PcaModel model = pca_fit(x, components);
        py::dict d;
        d["mean"] = model.mean;
        d["components"] = model.components;
        d["variances"] = model.variances;
        d["scores"] = pca_transform(model, x);
        return d;
      },
      py::arg("x"), py::arg("components"));

  m.def(
      "nmf",
      [](const Eigen::MatrixXd& x, int components, int iterations, std::uint64_t seed) {
        const NmfModel model = nmf_fit(x, components, iterations, seed);
        return py::make_tuple(model.w, model.h, model.objective_trace);
      },
      py::arg("x"), py::arg("components"), py::arg("iterations") = 200, py::arg("seed") = 0,
      "Returns (W, H, objective trace).");

  m.def(
      "kmeans",
      [](const Eigen::MatrixXd& features, int clusters, std::uint64_t seed, int restarts,
         int max_iter) {
        return to_array(kmeans(features, clusters, seed, {max_iter, restarts}).partition.labels);
      },
      py::arg("features"), py::arg("clusters"), py::arg("seed") = 0, py::arg("restarts") = 1,
      py::arg("max_iter") = 300);

  m.def(
      "spectral_cluster",
      [](const Eigen::MatrixXd& features, int clusters, std::uint64_t seed, int k_nn) {
        SpectralOptions opts;
        opts.k_nn = k_nn;
        opts.eigen.seed = seed;
        Partition p;
        {
          py::gil_scoped_release release;
          p = spectral_cluster(features, clusters, seed, opts);
        }
        return to_array(p.labels);
      },
      py::arg("features"), py::arg("clusters"), py::arg("seed") = 0, py::arg("k_nn") = 10);

  m.def(
      "ami",
      [](const std::vector<int>& truth, const std::vector<int>& predicted) {
        return adjusted_mutual_information(truth, predicted);
      },
      py::arg("truth"), py::arg("predicted"));
  m.def(
      "ami_report",
      [](const std::vector<int>& truth, const std::vector<int>& predicted) {
        return report_dict(ami_report(truth, predicted));
      },
      py::arg("truth"), py::arg("predicted"));

  m.def(
      "load_cube",
      [](const std::filesystem::path& path) {
        return from_cube(load_cube(path, cube_format_from_path(path)));
      },
      py::arg("path"));
  m.def(
      "save_cube",
      [](const Cube& cube, const std::filesystem::path& path) {
        save_cube(to_cube(cube), path, cube_format_from_path(path));
      },
      py::arg("cube"), py::arg("path"));
  m.def(
      "load_labels",
      [](const std::filesystem::path& path) {
        const LabelMap gt = load_labels(path);
        py::array_t<int> out({gt.rows, gt.cols});
        std::copy(gt.labels.begin(), gt.labels.end(), out.mutable_data());
        return out;
      },
      py::arg("path"));
  m.def(
      "save_labels",
      [](const py::array_t<int, py::array::c_style | py::array::forcecast>& labels,
         const std::filesystem::path& path) {
        if (labels.ndim() != 2) throw ParameterError("labels must be a 2-D array");
        LabelMap gt{static_cast<int>(labels.shape(0)), static_cast<int>(labels.shape(1)),
                    std::vector<int>(labels.data(), labels.data() + labels.size())};
        save_labels(gt, path);
      },
      py::arg("labels"), py::arg("path"));
  m.def(
      "load_dictionary",
      [](const std::filesystem::path& path) {
        const DictionaryFile f = load_dictionary(path);
        return py::make_tuple(f.dictionary.atoms(), f.metadata);
      },
      py::arg("path"), "Returns (m x k atoms, metadata dict).");
  m.def(
      "save_dictionary",
      [](const Eigen::MatrixXd& atoms, const std::filesystem::path& path,
         const std::map<std::string, std::string>& metadata) {
        save_dictionary({Dictionary(atoms, false), std::nullopt, metadata}, path);
      },
      py::arg("atoms"), py::arg("path"), py::arg("metadata") = std::map<std::string, std::string>{});

  m.def(
      "run_train",
      [](const ConfigMap& config) {
        const TrainOutcome o = run_train(PipelineConfig::from_map(config));
        py::dict d;
        d["dictionary"] = o.dictionary_path;
        d["trace"] = o.trace_path;
        d["atoms"] = o.atoms;
        d["samples"] = o.samples;
        d["final_mean_residual"] = o.final_mean_residual;
        return d;
      },
      py::arg("config"), "Same keys as a config file; writes dictionary.sdict and trace.csv.");
  m.def(
      "run_cluster",
      [](const ConfigMap& config) {
        return run_cluster(PipelineConfig::from_map(config)).summary_json;
      },
      py::arg("config"), "Same keys as a config file; returns the summary JSON text.");
}
