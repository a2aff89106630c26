#include "ggmp/dataset.hpp"
#include "ggmp/ggmp.hpp"
#include "ggmp/metrics.hpp"
#include "ggmp/synthgen.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace ggmp;

namespace {

DistributionValuedDataset make_dataset(const std::vector<std::string>& ids,
                                       const Eigen::MatrixXd& x,
                                       const std::vector<Eigen::MatrixXd>& samples) {
  if (static_cast<std::size_t>(x.rows()) != ids.size() || samples.size() != ids.size())
    throw std::invalid_argument("ids, x rows, and sample blocks must have equal length");
  DistributionValuedDataset ds;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    InputPoint ip;
    ip.id = ids[i];
    ip.x = x.row(static_cast<Eigen::Index>(i)).transpose();
    ds.inputs.push_back(ip);
    SampleBlock b;
    b.input_id = ids[i];
    b.samples = samples[i];
    ds.sample_blocks[ids[i]] = std::move(b);
  }
  return ds;
}

GgmpConfig make_config(int k, const std::string& kernel, const std::string& weights,
                       int em_restarts, int gp_starts, std::uint64_t seed, int threads) {
  GgmpConfig cfg;
  cfg.k = k;
  cfg.kernel = kernel_family_from_string(kernel);
  cfg.weight_mode = weight_mode_from_string(weights);
  cfg.em.restarts = em_restarts;
  cfg.gp.starts = gp_starts;
  cfg.seed = seed;
  cfg.threads = threads;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_ggmp, m) {
  m.doc() = "multimodal distribution-valued regression with aligned Gaussian mixtures";

  py::class_<DistributionValuedDataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("ids"), py::arg("x"), py::arg("samples"))
      .def_property_readonly("n", &DistributionValuedDataset::size)
      .def_property_readonly("input_dim", &DistributionValuedDataset::input_dim)
      .def_property_readonly("output_dim", &DistributionValuedDataset::output_dim)
      .def("block", [](const DistributionValuedDataset& ds,
                       const std::string& id) { return ds.block(id).samples; });

  py::class_<PredictiveMixture>(m, "PredictiveMixture")
      .def_readonly("weights", &PredictiveMixture::weights)
      .def_readonly("means", &PredictiveMixture::means)
      .def_readonly("vars", &PredictiveMixture::vars)
      .def("log_density",
           [](const PredictiveMixture& mix, const Eigen::VectorXd& y) {
             return log_density(mix, y);
           },
           py::arg("y"))
      .def("sample",
           [](const PredictiveMixture& mix, Eigen::Index count, std::uint64_t seed) {
             return sample(mix, count, seed);
           },
           py::arg("count"), py::arg("seed") = 0);

  py::class_<GgmpModel>(m, "Model")
      .def_property_readonly("k", [](const GgmpModel& mo) { return mo.k; })
      .def_property_readonly("input_dim", [](const GgmpModel& mo) { return mo.d; })
      .def_property_readonly("output_dim", [](const GgmpModel& mo) { return mo.p; })
      .def_property_readonly("shared_weights",
                             [](const GgmpModel& mo) { return mo.shared_weights; })
      .def_property_readonly("train_objective",
                             [](const GgmpModel& mo) { return mo.train_objective; })
      .def("predict", &component_predictive, py::arg("x"))
      .def("log_density",
           [](const GgmpModel& mo, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
             return log_density(mo, x, y);
           },
           py::arg("x"), py::arg("y"))
      .def("sample",
           [](const GgmpModel& mo, const Eigen::VectorXd& x, Eigen::Index count,
              std::uint64_t seed) { return sample(mo, x, count, seed); },
           py::arg("x"), py::arg("count"), py::arg("seed") = 0)
      .def("save", &save_model, py::arg("path"));

  m.def("fit",
        [](const DistributionValuedDataset& ds, int k, const std::string& kernel,
           const std::string& weights, int em_restarts, int gp_starts, std::uint64_t seed,
           int threads) {
          return fit(ds, make_config(k, kernel, weights, em_restarts, gp_starts, seed,
                                     threads));
        },
        py::arg("dataset"), py::arg("k") = 3, py::arg("kernel") = "se",
        py::arg("weights") = "shared", py::arg("em_restarts") = 4, py::arg("gp_starts") = 5,
        py::arg("seed") = 0, py::arg("threads") = 0,
        py::call_guard<py::gil_scoped_release>());

  m.def("load", &load_model, py::arg("path"));
  m.def("load_samples_csv", &load_samples_csv, py::arg("path"));
  m.def("save_samples_csv", &save_samples_csv, py::arg("dataset"), py::arg("path"));
  m.def("split_train_test", &split_train_test, py::arg("dataset"),
        py::arg("test_fraction"), py::arg("seed") = 0);

  m.def("generate_benchmark",
        [](int n, int t, std::uint64_t seed, int grid_points) {
          SyntheticBenchmark bench = generate_benchmark(n, t, seed, grid_points);
          return bench.data;
        },
        py::arg("n") = 300, py::arg("t") = 2000, py::arg("seed") = 0,
        py::arg("grid_points") = 512);

  m.def("energy_distance",
        [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int slices,
           std::uint64_t seed) { return joint_divergences(a, b, slices, seed).energy; },
        py::arg("a"), py::arg("b"), py::arg("slices") = 64, py::arg("seed") = 0);
}
