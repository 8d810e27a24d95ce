// Python bindings for the core operations: kernel evaluation, system
// simulation, imputation and predictor fitting.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ssid/armax.hpp"
#include "ssid/errors.hpp"
#include "ssid/experiment.hpp"
#include "ssid/identify.hpp"
#include "ssid/imputer.hpp"
#include "ssid/io.hpp"
#include "ssid/kernels.hpp"

namespace py = pybind11;
using namespace ssid;

namespace {

Enrichment make_enrichment(double phi, double varphi) { return Enrichment{phi, varphi}; }

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Kernel-based identification of linear systems with missing output samples";

    py::register_exception<IllConditionedError>(m, "IllConditionedError", PyExc_ArithmeticError);
    py::register_exception<OptimizationError>(m, "OptimizationError", PyExc_ArithmeticError);
    py::register_exception<GenerationError>(m, "GenerationError", PyExc_RuntimeError);
    py::register_exception<PredictorInstabilityError>(m, "PredictorInstabilityError",
                                                      PyExc_ArithmeticError);

    py::class_<Enrichment>(m, "Enrichment")
        .def(py::init(&make_enrichment), py::arg("phi") = 0.0, py::arg("varphi") = 0.0)
        .def_readwrite("phi", &Enrichment::phi)
        .def_readwrite("varphi", &Enrichment::varphi)
        .def("__repr__", [](const Enrichment& e) {
            return "Enrichment(phi=" + std::to_string(e.phi) +
                   ", varphi=" + std::to_string(e.varphi) + ")";
        });

    py::class_<KernelSpec>(m, "KernelSpec")
        .def(py::init([](int order_q, double beta, std::optional<Enrichment> enrichment,
                         int truncation_len) {
                 KernelSpec s;
                 s.order_q = order_q;
                 s.beta = beta;
                 s.enrichment = enrichment;
                 s.truncation_len = truncation_len;
                 return s;
             }),
             py::arg("order_q") = 2, py::arg("beta") = 1.0, py::arg("enrichment") = py::none(),
             py::arg("truncation_len") = 100)
        .def_readwrite("order_q", &KernelSpec::order_q)
        .def_readwrite("beta", &KernelSpec::beta)
        .def_readwrite("enrichment", &KernelSpec::enrichment)
        .def_readwrite("truncation_len", &KernelSpec::truncation_len)
        .def("validate", &KernelSpec::validate);

    py::class_<Hyperparameters>(m, "Hyperparameters")
        .def(py::init([](double beta, double lambda, std::optional<Enrichment> enrichment,
                         int order_q) {
                 Hyperparameters h;
                 h.beta = beta;
                 h.lambda = lambda;
                 h.enrichment = enrichment;
                 h.order_q = order_q;
                 return h;
             }),
             py::arg("beta") = 1.0, py::arg("lambda_") = 1.0, py::arg("enrichment") = py::none(),
             py::arg("order_q") = 2)
        .def_readwrite("beta", &Hyperparameters::beta)
        .def_readwrite("lambda_", &Hyperparameters::lambda)
        .def_readwrite("enrichment", &Hyperparameters::enrichment)
        .def_readwrite("order_q", &Hyperparameters::order_q);

    py::class_<SearchConfig>(m, "SearchConfig")
        .def(py::init<>())
        .def_readwrite("beta_min", &SearchConfig::beta_min)
        .def_readwrite("beta_max", &SearchConfig::beta_max)
        .def_readwrite("beta_grid", &SearchConfig::beta_grid)
        .def_readwrite("pole_grid", &SearchConfig::pole_grid)
        .def_readwrite("stability_margin", &SearchConfig::stability_margin)
        .def_readwrite("refine_budget", &SearchConfig::refine_budget)
        .def_readwrite("param_tol", &SearchConfig::param_tol)
        .def_readwrite("lambda_min", &SearchConfig::lambda_min)
        .def_readwrite("lambda_max", &SearchConfig::lambda_max);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init<>())
        .def_readwrite("times", &Dataset::times)
        .def_readwrite("inputs", &Dataset::inputs)
        .def_readwrite("outputs", &Dataset::outputs)
        .def_readwrite("missing", &Dataset::missing)
        .def_readwrite("imputed", &Dataset::imputed)
        .def_property_readonly("n", &Dataset::n)
        .def_property_readonly("num_inputs", &Dataset::num_inputs)
        .def("observed_times", &Dataset::observed_times)
        .def("missing_times", &Dataset::missing_times)
        .def("validate", &Dataset::validate);

    py::class_<GramMatrix>(m, "GramMatrix")
        .def_readonly("entries", &GramMatrix::entries)
        .def_readonly("times", &GramMatrix::times);

    py::class_<TimeEstimate>(m, "TimeEstimate")
        .def_readonly("time", &TimeEstimate::time)
        .def_readonly("value", &TimeEstimate::value)
        .def_readonly("variance", &TimeEstimate::variance)
        .def("__repr__", [](const TimeEstimate& e) {
            return "TimeEstimate(time=" + std::to_string(e.time) +
                   ", value=" + std::to_string(e.value) +
                   ", variance=" + std::to_string(e.variance) + ")";
        });

    py::class_<ImputationResult>(m, "ImputationResult")
        .def_readonly("coefficients", &ImputationResult::coefficients)
        .def_readonly("estimates", &ImputationResult::estimates)
        .def_readonly("fitted", &ImputationResult::fitted)
        .def_readonly("log_objective", &ImputationResult::log_objective)
        .def_readonly("condition_estimate", &ImputationResult::condition_estimate);

    py::class_<ArmaxModel>(m, "ArmaxModel")
        .def(py::init<>())
        .def_readwrite("a", &ArmaxModel::a)
        .def_readwrite("b", &ArmaxModel::b)
        .def_readwrite("c", &ArmaxModel::c)
        .def_readwrite("noise_std", &ArmaxModel::noise_std)
        .def_property_readonly("order", &ArmaxModel::order)
        .def_property_readonly("num_inputs", &ArmaxModel::num_inputs);

    py::class_<PredictorModel>(m, "PredictorModel")
        .def(py::init<>())
        .def_readwrite("g_inputs", &PredictorModel::g_inputs)
        .def_readwrite("g_output", &PredictorModel::g_output)
        .def_readwrite("hyperparameters", &PredictorModel::hyperparameters);

    // kernels
    m.def("spline_kernel_w", &spline_kernel_w, py::arg("s"), py::arg("t"), py::arg("q"));
    m.def("spline_kernel_quadrature", &spline_kernel_quadrature, py::arg("s"), py::arg("t"),
          py::arg("q"), py::arg("tol"));
    m.def("stable_spline_k", &stable_spline_k, py::arg("s"), py::arg("t"), py::arg("spec"));
    m.def("rbf_h_continuous", &rbf_h_continuous, py::arg("x"), py::arg("spec"));
    m.def("rbf_h_discrete", &rbf_h_discrete, py::arg("lag"), py::arg("spec"));
    m.def("enrichment_impulse", &enrichment_impulse, py::arg("phi"), py::arg("varphi"),
          py::arg("length"));
    m.def("enriched_kernel", &enriched_kernel, py::arg("s"), py::arg("t"), py::arg("spec"));
    m.def("enriched_rbf_h", &enriched_rbf_h, py::arg("lag"), py::arg("spec"));
    m.def(
        "gram_matrix_rbf",
        [](const std::vector<std::int64_t>& times, const KernelSpec& spec) {
            return gram_matrix_rbf(times, spec);
        },
        py::arg("times"), py::arg("spec"));
    m.def(
        "gram_matrix_rbf_continuous",
        [](const std::vector<double>& times, const KernelSpec& spec) {
            return gram_matrix_rbf_continuous(times, spec);
        },
        py::arg("times"), py::arg("spec"));
    m.def("truncated_kernel_gram", &truncated_kernel_gram, py::arg("spec"));

    // armax
    m.def("random_armax", &random_armax, py::arg("order"), py::arg("num_inputs"), py::arg("rho"),
          py::arg("ratio_range"), py::arg("seed"));
    m.def("add_resonance", &add_resonance, py::arg("model"), py::arg("b"), py::arg("a"));
    m.def("impulse_response", &impulse_response, py::arg("model"), py::arg("channel"),
          py::arg("length"));
    m.def("simulate", &simulate, py::arg("model"), py::arg("inputs"), py::arg("n"),
          py::arg("burn_in"), py::arg("seed"));
    m.def("mask_missing", &mask_missing, py::arg("data"), py::arg("prob"), py::arg("seed"));
    m.def("kstep_predict_true", &kstep_predict_true, py::arg("model"), py::arg("record"),
          py::arg("k"));
    m.def("kstep_predict_true_all", &kstep_predict_true_all, py::arg("model"), py::arg("record"),
          py::arg("k_max"));
    m.def("white_noise_inputs", &white_noise_inputs, py::arg("num_inputs"), py::arg("len"),
          py::arg("seed"));

    // imputer
    m.def(
        "output_kernel_matrix",
        [](const Dataset& data, const std::vector<std::int64_t>& obs,
           const std::vector<std::int64_t>& eval, const KernelSpec& spec) {
            return output_kernel_matrix(data, obs, eval, spec);
        },
        py::arg("data"), py::arg("obs_times"), py::arg("eval_times"), py::arg("spec"));
    m.def(
        "impute",
        [](const Dataset& data, const std::vector<std::int64_t>& targets,
           const Hyperparameters& hp, const KernelSpec& family) {
            return impute(data, targets, hp, family);
        },
        py::arg("data"), py::arg("targets"), py::arg("hp"), py::arg("family"));
    m.def("marginal_likelihood", &marginal_likelihood, py::arg("data"), py::arg("shape"),
          py::arg("family"));
    m.def("optimize_hyperparameters", &optimize_hyperparameters, py::arg("data"),
          py::arg("family"), py::arg("search"));
    m.def("stable_spline_imputation", &stable_spline_imputation, py::arg("data"),
          py::arg("family"), py::arg("search"));
    m.def("apply_imputation", &apply_imputation, py::arg("data"), py::arg("result"));
    m.def(
        "impute_continuous",
        [](const std::vector<double>& times, const std::vector<double>& outputs,
           const std::vector<double>& targets, const Hyperparameters& hp) {
            return impute_continuous(times, outputs, targets, hp);
        },
        py::arg("times"), py::arg("outputs"), py::arg("targets"), py::arg("hp"));

    // identify
    m.def("fit_predictor", &fit_predictor, py::arg("data"), py::arg("family"), py::arg("search"),
          py::arg("imputed_weight") = 1.0);
    m.def("fit_predictor_fixed", &fit_predictor_fixed, py::arg("data"), py::arg("family"),
          py::arg("hp"), py::arg("imputed_weight") = 1.0);
    m.def("kstep_predict", &kstep_predict, py::arg("model"), py::arg("record"), py::arg("k"));
    m.def("kstep_predict_all", &kstep_predict_all, py::arg("model"), py::arg("record"),
          py::arg("k_max"));
    m.def(
        "cod_miss",
        [](const std::vector<double>& truth, const std::vector<double>& est) {
            return cod_miss(truth, est);
        },
        py::arg("truth"), py::arg("estimates"));
    m.def(
        "cod_k",
        [](const std::vector<double>& truth, const std::vector<double>& pred) {
            return cod_k(truth, pred);
        },
        py::arg("test_truth"), py::arg("predictions"));

    // io
    m.def("read_dataset_csv", &read_dataset_csv, py::arg("path"));
    m.def(
        "write_dataset_csv",
        [](const Dataset& d, const std::string& path) { write_dataset_csv(d, path); },
        py::arg("data"), py::arg("path"));

    m.attr("__version__") = "0.1.0";
}
