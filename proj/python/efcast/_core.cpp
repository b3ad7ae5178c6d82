#include "efcast/checkpoint.hpp"
#include "efcast/cli.hpp"
#include "efcast/error.hpp"
#include "efcast/forecaster.hpp"
#include "efcast/rollout.hpp"
#include "efcast/timeseries.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <iostream>
#include <memory>

namespace py = pybind11;
using namespace efcast;

namespace {

std::shared_ptr<Forecaster> make_model(const std::string& kind, std::size_t T, std::size_t L,
                                       std::size_t C, std::size_t period, bool per_channel,
                                       std::size_t kernel, std::size_t hidden, std::uint64_t seed) {
  ForecasterSpec spec;
  spec.kind = model_kind_from_string(kind);
  spec.input_length = T;
  spec.output_length = L;
  spec.channels = C;
  spec.period = period;
  spec.per_channel = per_channel;
  spec.kernel = kernel;
  spec.hidden = hidden;
  spec.seed = seed;
  return build(spec);
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Block-wise recursive forecasting core";

  py::register_exception<Error>(m, "EfcastError");

  m.def("window_count", &window_count, py::arg("n_steps"), py::arg("T"), py::arg("L"));
  m.def(
      "phase_of",
      [](std::size_t k, std::size_t T, std::size_t L) { return std::string(to_string(phase_of(k, T, L))); },
      py::arg("k"), py::arg("T"), py::arg("L"));

  py::class_<Forecaster, std::shared_ptr<Forecaster>>(m, "Forecaster")
      .def(py::init(&make_model), py::arg("kind"), py::arg("T"), py::arg("L"), py::arg("C") = 1,
           py::arg("period") = 1, py::arg("per_channel") = false, py::arg("kernel") = 25,
           py::arg("hidden") = 128, py::arg("seed") = 0)
      .def_property_readonly("kind",
                             [](const Forecaster& f) { return std::string(to_string(f.spec().kind)); })
      .def_property_readonly("T", [](const Forecaster& f) { return f.spec().input_length; })
      .def_property_readonly("L", [](const Forecaster& f) { return f.spec().output_length; })
      .def_property_readonly("C", [](const Forecaster& f) { return f.spec().channels; })
      .def_property_readonly("num_params", &Forecaster::num_params)
      .def("get_params", [](const Forecaster& f) { return f.get_params().values; })
      .def("set_params", [](Forecaster& f, const Vector& v) { f.set_params(v); })
      .def("predict", &Forecaster::predict, py::arg("x"))
      .def(
          "rollout",
          [](const Forecaster& f, const Matrix& x, std::size_t horizon) {
            return rollout(f, x, horizon).y_hat;
          },
          py::arg("x"), py::arg("H"));

  m.def(
      "load_checkpoint",
      [](const std::string& path) { return std::shared_ptr<Forecaster>(restore(load_checkpoint(path))); },
      py::arg("path"));

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "efcast");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        py::gil_scoped_release release;
        return run_cli(static_cast<int>(argv.size()), argv.data(), std::cout, std::cerr);
      },
      py::arg("args"));
}
