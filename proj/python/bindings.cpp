#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sipkit/harness.hpp"
#include "sipkit/kmt.hpp"
#include "sipkit/rates.hpp"
#include "sipkit/rosenthal.hpp"

namespace py = pybind11;
using namespace sipkit;

namespace {

py::dict run(const std::string& config_json, std::optional<std::uint64_t> seed, std::optional<int> workers,
             std::optional<std::string> out) {
    Json config;
    try {
        config = Json::parse(config_json);
    } catch (const Json::parse_error& e) {
        throw SpecError(std::string("config is not valid JSON: ") + e.what());
    }
    RunOptions options;
    options.seed = seed;
    options.workers = workers;
    options.write = out.has_value();
    if (out) options.out = *out;
    RunResult r;
    {
        py::gil_scoped_release release;
        r = run_experiment(config, options);
    }
    py::dict d;
    d["exit_code"] = r.exit_code;
    d["summary"] = r.summary.dump();
    d["failing_record"] = r.failing_record;
    d["artifacts"] = r.artifacts;
    d["error"] = r.error;
    return d;
}

py::dict certificate(double p, double gamma) {
    const auto c = feasibility(p, gamma);
    py::dict d;
    d["p"] = c.p;
    d["gamma"] = c.gamma;
    d["kappa"] = c.kappa;
    d["tau"] = c.tau;
    d["quadratic"] = c.quadratic;
    d["feasible"] = c.feasible;
    d["reason"] = c.reason;
    if (c.witness)
        d["witness"] = py::dict(py::arg("beta") = c.witness->beta, py::arg("r") = c.witness->r);
    else
        d["witness"] = py::none();
    return d;
}

}  // namespace

PYBIND11_MODULE(_sipkit, m) {
    m.doc() = "Coupling coefficients, Rosenthal checks and KMT diagnostics for stationary processes.";
    py::register_exception<SpecError>(m, "SpecError", PyExc_ValueError);

    m.def("kappa", &kappa, py::arg("p"));
    m.def("tau", &tau, py::arg("p"));
    m.def("feasibility_quadratic", &feasibility_quadratic, py::arg("p"), py::arg("gamma"));
    m.def("feasibility", &certificate, py::arg("p"), py::arg("gamma"));
    m.def("feasibility_grid_search", &feasibility_grid_search, py::arg("p"), py::arg("gamma"),
          py::arg("step") = 0.005);
    m.def(
        "linear_thresholds",
        [](double p, double beta) {
            const auto t = linear_thresholds(p, beta);
            py::dict d;
            d["blw"] = t.blw;
            d["blw_small_p"] = t.blw_small_p;
            d["blw_large_p"] = t.blw_large_p;
            d["new_threshold"] = t.new_threshold;
            d["new_below_blw"] = t.new_below_blw;
            return d;
        },
        py::arg("p"), py::arg("beta_mod"));
    m.def(
        "rosenthal_constants",
        [](double p, bool strict, std::optional<double> cp) {
            const auto c = rosenthal_constants(p, strict, cp);
            py::dict d;
            d["cp"] = c.cp;
            d["cp_prime"] = c.cp_prime;
            d["cp_second"] = c.cp_second;
            d["strict"] = c.strict;
            return d;
        },
        py::arg("p"), py::arg("strict") = false, py::arg("cp") = py::none());
    m.def(
        "kmt_schedule",
        [](double p, double beta, int k_max) {
            const auto s = make_schedule(p, beta, k_max);
            py::dict d;
            d["k0"] = s.k0;
            d["M"] = s.M;
            d["m"] = s.m;
            return d;
        },
        py::arg("p"), py::arg("beta"), py::arg("k_max"));
    m.def("format_double", &format_double, py::arg("x"));
    m.def(
        "config_hash", [](const std::string& config_json) { return config_hash(Json::parse(config_json)); },
        py::arg("config_json"));
    m.def("run_experiment", &run, py::arg("config_json"), py::arg("seed") = py::none(),
          py::arg("workers") = py::none(), py::arg("out") = py::none());
    m.attr("__version__") = "0.1.0";
}
