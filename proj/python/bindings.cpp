#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "excursion/baselines.hpp"
#include "excursion/error.hpp"
#include "excursion/harness.hpp"
#include "excursion/metrics.hpp"
#include "excursion/processes.hpp"

namespace py = pybind11;
using namespace excursion;

namespace {

PairedSample paired(std::vector<double> a, std::vector<double> b) { return {std::move(a), std::move(b)}; }

ExperimentSpec spec_from_string(const std::string& config) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(config);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  return experiment_from_json(j);
}

GaussianSecondOrder exp_design(std::vector<double> times, double target) {
  ForecastDesign d;
  d.forecast_offsets = std::move(times);
  d.target = target;
  return covariances_exp(d);
}

}  // namespace

PYBIND11_MODULE(excursion, m) {
  m.doc() = "Excursion-metric prediction of stationary, possibly heavy-tailed, time series";

  auto base = py::register_exception<Error>(m, "ExcursionError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  py::class_<MarginalModel>(m, "MarginalModel")
      .def_static("gaussian", &MarginalModel::gaussian, py::arg("mu"), py::arg("sigma"))
      .def_static("cauchy", &MarginalModel::cauchy, py::arg("mu"), py::arg("sigma"))
      .def_static("levy", &MarginalModel::levy, py::arg("c"))
      .def_static("alpha_stable_symmetric", &MarginalModel::alpha_stable_symmetric, py::arg("alpha"),
                  py::arg("sigma"))
      .def_static("student_t", &MarginalModel::student_t, py::arg("mu"), py::arg("sigma"), py::arg("nu"))
      .def_property_readonly("family", [](const MarginalModel& d) { return std::string(to_string(d.family())); })
      .def_property_readonly("params", &MarginalModel::params)
      .def("cdf", &MarginalModel::cdf)
      .def("pdf", &MarginalModel::pdf)
      .def("quantile", &MarginalModel::quantile)
      .def("__repr__", [](const MarginalModel& d) { return marginal_to_json(d).dump(); });

  m.def(
      "estimate", [](const std::string& family, std::vector<double> data) {
        return estimate(family_from_string(family), data);
      },
      py::arg("family"), py::arg("data"));

  m.def(
      "excursion_metric", [](std::vector<double> a, std::vector<double> b, const MarginalModel& weight) {
        return excursion_metric_empirical(paired(std::move(a), std::move(b)), weight);
      },
      py::arg("a"), py::arg("b"), py::arg("weight"));
  m.def(
      "gini", [](std::vector<double> a, std::vector<double> b) { return gini_empirical(paired(std::move(a), std::move(b))); },
      py::arg("a"), py::arg("b"));
  m.def("gaussian_gini", &gaussian_gini, py::arg("rho"));
  m.def(
      "wasserstein2_to_uniform", [](std::vector<double> y) { return wasserstein2_to_uniform(y); }, py::arg("y"),
      "Squared 2-Wasserstein distance of the sample to U(0, 1).");
  m.def(
      "wasserstein2", [](std::vector<double> a, std::vector<double> b) { return wasserstein2_samples(a, b); },
      py::arg("a"), py::arg("b"));

  m.def("default_kernel", &default_kernel, py::arg("alpha"));
  m.def(
      "kernel_norm", [](std::vector<double> k, double alpha) { return kernel_norm(k, alpha); }, py::arg("kernel"),
      py::arg("alpha"));
  m.def(
      "simulate_gauss", [](double t0, double step, std::size_t length, std::uint64_t seed) {
        RngStream rng(seed, 0);
        return simulate_gauss_exp_cov(t0, step, length, rng).values;
      },
      py::arg("t0"), py::arg("step"), py::arg("length"), py::arg("seed"));
  m.def(
      "simulate_stable_ma", [](double alpha, double t0, double step, std::size_t length, std::uint64_t seed) {
        RngStream rng(seed, 0);
        return simulate_stable_ma(ProcessSpec::stable_moving_average(alpha), t0, step, length, rng).values;
      },
      py::arg("alpha"), py::arg("t0"), py::arg("step"), py::arg("length"), py::arg("seed"));

  m.def(
      "exact_excursion_weights", [](std::vector<double> times, double target) {
        return exact_excursion_weights(exp_design(std::move(times), target));
      },
      py::arg("forecast_times"), py::arg("target"));
  m.def(
      "simple_kriging_weights", [](std::vector<double> times, double target) {
        return simple_kriging_weights(exp_design(std::move(times), target));
      },
      py::arg("forecast_times"), py::arg("target"));

  m.def(
      "fit", [](const std::string& config) {
        const auto fit = run_fit(spec_from_string(config));
        std::ostringstream out;
        write_fit_csv(out, fit);
        return out.str();
      },
      py::arg("config"), "Fit weights for a JSON experiment; returns the weights CSV.");
  m.def(
      "evaluate", [](const std::string& config, unsigned threads) {
        const auto spec = spec_from_string(config);
        const auto fit = run_fit(spec);
        std::ostringstream out;
        write_eval_csv(out, run_eval(spec, fit, threads));
        return out.str();
      },
      py::arg("config"), py::arg("threads") = 1, "Fit and evaluate; returns the evaluation CSV.");
}
