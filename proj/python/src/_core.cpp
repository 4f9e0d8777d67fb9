#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <span>
#include <string>
#include <vector>

#include "gradsim/dataset.hpp"
#include "gradsim/errors.hpp"
#include "gradsim/gap.hpp"
#include "gradsim/io.hpp"
#include "gradsim/kernels.hpp"
#include "gradsim/network.hpp"
#include "gradsim/sensitivity.hpp"
#include "gradsim/train.hpp"

namespace py = pybind11;
using namespace gradsim;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::span<const double> as_span(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-d array");
  return {a.data(), static_cast<std::size_t>(a.shape(0))};
}

Array to_array(std::span<const double> v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Dataset make_dataset(const Array& inputs, const std::vector<int>& labels) {
  if (inputs.ndim() != 2) throw py::value_error("inputs must be a 2-d array");
  Dataset ds;
  ds.dim = static_cast<std::size_t>(inputs.shape(1));
  ds.inputs.assign(inputs.data(), inputs.data() + inputs.size());
  for (int y : labels) ds.labels.push_back(static_cast<std::int8_t>(y));
  ds.provenance = "python";
  ds.validate();
  return ds;
}

Array dataset_inputs(const Dataset& ds) {
  Array out({static_cast<py::ssize_t>(ds.size()), static_cast<py::ssize_t>(ds.dim)});
  std::copy(ds.inputs.begin(), ds.inputs.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gradient-space similarity for bias-free ReLU networks";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<NetworkConfig>(m, "NetworkConfig")
      .def(py::init([](std::size_t d, std::vector<std::size_t> hidden) {
             NetworkConfig c{d, std::move(hidden)};
             c.validate();
             return c;
           }),
           py::arg("input_dim"), py::arg("hidden_sizes"))
      .def_readonly("input_dim", &NetworkConfig::input_dim)
      .def_readonly("hidden_sizes", &NetworkConfig::hidden_sizes)
      .def_property_readonly("parameter_count", &NetworkConfig::parameter_count)
      .def_property_readonly("weight_layer_count", &NetworkConfig::weight_layer_count);

  py::class_<Parameters>(m, "Parameters")
      .def(py::init([](const NetworkConfig& c, const Array& flat) {
             const auto s = as_span(flat);
             return Parameters(c, std::vector<double>(s.begin(), s.end()));
           }),
           py::arg("config"), py::arg("flat"))
      .def_property_readonly("config", &Parameters::config)
      .def_property_readonly("flat", [](const Parameters& p) { return to_array(p.flat()); })
      .def_property_readonly("layer_offsets",
                             [](const Parameters& p) {
                               const auto o = p.layer_offsets();
                               return std::vector<std::size_t>(o.begin(), o.end());
                             })
      .def("__len__", &Parameters::size)
      .def("layer_of", &Parameters::layer_of);

  m.def("init_network", &init_network, py::arg("config"), py::arg("seed"), py::arg("scale") = 1.0);
  m.def("load_checkpoint", [](const std::string& path) { return load_checkpoint(path); });
  m.def("save_checkpoint", [](const std::string& path, const Parameters& p) { save_checkpoint(path, p); });
  m.def("output", [](const Parameters& p, const Array& x) { return forward(p, as_span(x)).output; });
  m.def("gradient", [](const Parameters& p, const Array& x) { return to_array(param_gradient(p, as_span(x))); });
  m.def("finite_diff_gradient", [](const Parameters& p, const Array& x, double h) {
    return to_array(finite_diff_gradient(p, as_span(x), h));
  }, py::arg("params"), py::arg("x"), py::arg("step") = 1e-5);
  m.def("activation_pattern", [](const Parameters& p, const Array& x) {
    const auto signs = activation_pattern(forward(p, as_span(x))).signs;
    return std::vector<int>(signs.begin(), signs.end());
  });
  m.def("layer_scalars", [](const Parameters& p, const Array& g) {
    return to_array(layer_scalars(p, as_span(g)));
  });
  m.def("sensitivity_matrix", [](const Parameters& p, const Array& x) {
    const auto s = SensitivityMatrix::from_pattern(p, activation_pattern(forward(p, as_span(x))));
    Array out({static_cast<py::ssize_t>(s.input_dim()), static_cast<py::ssize_t>(s.column_count())});
    const auto dense = s.dense();
    std::copy(dense.begin(), dense.end(), out.mutable_data());
    return out;
  }, "Dense d x |theta| matrix S(A) for the activation region of x");

  py::class_<Metric>(m, "Metric")
      .def_static("block_diagonal", &Metric::block_diagonal)
      .def_static("diagonal", &Metric::diagonal)
      .def_property_readonly("kind", [](const Metric& mt) { return std::string(to_string(mt.kind())); })
      .def("__len__", &Metric::size)
      .def("entry", &Metric::entry);
  m.def("metric_reduce", [](const Metric& mt, std::vector<std::size_t> keep) { return metric_reduce(mt, keep); });
  m.def("metric_mask", [](const Metric& mt, std::vector<IndexPair> pairs) { return metric_mask(mt, pairs); });

  m.def("kernel_output", &kernel_output);
  m.def("kernel_last_layer", [](const Array& hx, const Array& hy) {
    return kernel_last_layer(as_span(hx), as_span(hy));
  });
  m.def("kernel_metric", [](const Array& gx, const Array& gy, const Metric& mt) {
    return kernel_metric(as_span(gx), as_span(gy), mt);
  });
  m.def("kernel_normalized", [](const Array& gx, const Array& gy, const Metric& mt, double eps) {
    return kernel_normalized(as_span(gx), as_span(gy), mt, eps);
  }, py::arg("g_x"), py::arg("g_y"), py::arg("metric"), py::arg("eps") = kDefaultNormEps);
  m.def("metric_norm", [](const Array& g, const Metric& mt) { return metric_norm(as_span(g), mt); });

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("inputs"), py::arg("labels"))
      .def_property_readonly("inputs", &dataset_inputs)
      .def_property_readonly("labels",
                             [](const Dataset& ds) { return std::vector<int>(ds.labels.begin(), ds.labels.end()); })
      .def_readonly("dim", &Dataset::dim)
      .def_readonly("provenance", &Dataset::provenance)
      .def("__len__", &Dataset::size);
  m.def("synth_gaussians", &synth_gaussians, py::arg("dim"), py::arg("n_per_class"),
        py::arg("mean_shift") = 1.0, py::arg("seed") = 0);
  m.def("load_dataset", [](const std::string& path) { return load_dataset(path); });
  m.def("save_dataset", [](const std::string& path, const Dataset& ds) { save_dataset(path, ds); });

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("momentum", &TrainConfig::momentum)
      .def_readwrite("seed", &TrainConfig::seed);
  m.def("train", [](const Parameters& p, const Dataset& ds, const TrainConfig& cfg) {
    return train_sgd(p, ds, nullptr, cfg).first;
  });
  m.def("evaluate", &evaluate);

  py::class_<GapReport>(m, "GapReport")
      .def_readonly("mean_same", &GapReport::mean_same)
      .def_readonly("mean_diff", &GapReport::mean_diff)
      .def_readonly("gamma", &GapReport::gamma)
      .def_readonly("per_layer_gamma", &GapReport::per_layer_gamma);

  m.def("gap", [](const Parameters& p, const Dataset& ds, const std::string& kernel, bool normalized,
                  const Metric* metric) {
    const LabeledSet set(p, ds);
    std::unique_ptr<PairKernel> k;
    if (kernel == "output") {
      k = make_output_kernel(set, normalized);
    } else if (kernel == "last-layer") {
      k = make_last_layer_kernel(set, normalized);
    } else if (kernel == "metric") {
      if (metric == nullptr) throw UsageError("kernel 'metric' needs a metric");
      k = make_metric_kernel(set, *metric, normalized);
    } else {
      throw UsageError("unknown kernel '" + kernel + "'");
    }
    return gap_estimate(*k, set.labels());
  }, py::arg("params"), py::arg("data"), py::arg("kernel"), py::arg("normalized") = false,
     py::arg("metric") = nullptr);

  py::class_<PsiSummary>(m, "PsiSummary")
      .def("entry", &PsiSummary::entry)
      .def("gap", &PsiSummary::gap)
      .def("layer_sums", &PsiSummary::layer_sums)
      .def_property_readonly("weight_plus", &PsiSummary::weight_plus);
  m.def("psi_summary", [](const Parameters& p, const Dataset& ds, const Metric& mt, bool normalize) {
    return psi_accumulate(LabeledSet(p, ds), mt, normalize);
  }, py::arg("params"), py::arg("data"), py::arg("metric"), py::arg("normalize") = true);
  m.def("importance", [](const PsiSummary& s) { return to_array(importance(s).per_parameter()); });
  m.def("select_keep_set", [](const PsiSummary& s, double fraction, bool per_layer) {
    return select_keep_set(importance(s), fraction, per_layer);
  }, py::arg("summary"), py::arg("keep_fraction"), py::arg("per_layer") = true);
  m.def("select_negative_pairs", &select_negative_pairs);
}
