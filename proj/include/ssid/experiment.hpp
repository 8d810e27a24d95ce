#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssid/armax.hpp"
#include "ssid/identify.hpp"
#include "ssid/imputer.hpp"
#include "ssid/kernels.hpp"

namespace ssid {

enum class ExperimentVariant { kWhite, kLowpass, kResonant };

std::string variant_name(ExperimentVariant v);
ExperimentVariant variant_from_name(const std::string& name);

KernelSpec default_imputer_kernel();     // q=2, enriched family, T_f = 100
KernelSpec default_predictor_kernel();   // same family for the predictor
SearchConfig default_experiment_search();  // reduced grid for the Monte Carlo driver
SearchConfig default_predictor_search();

/// Monte Carlo protocol: random stable ARMAX systems, white (or variant)
/// inputs, a training record with outputs discarded at random, imputation,
/// predictor fits on the completed and on the full record, and k-step
/// evaluation on a fresh test record.
struct ExperimentConfig {
    int runs = 30;
    int train_n = 300;
    int test_n = 1000;
    int num_inputs = 3;
    int order_min = 1;
    int order_max = 30;
    double pole_radius = 0.95;
    double missing_prob = 0.25;
    ExperimentVariant variant = ExperimentVariant::kWhite;
    int k_max = 20;
    std::uint64_t master_seed = 1;
    int burn_in = 500;
    int threads = 0;  // 0 = hardware concurrency

    // leading test samples used only to warm up the predictors' filters;
    // COD_k is evaluated on the test_n samples that follow, mirroring an
    // evaluation on the continuation of a running record
    int test_warmup = 200;

    // weight of imputed rows in the predictor regression: 1 keeps them at
    // full weight, negative selects 1/(1 + mean posterior variance) so the
    // unit-variance residual assumption stays honest on completed records
    double imputed_weight = -1.0;

    KernelSpec imputer_kernel = default_imputer_kernel();
    KernelSpec predictor_kernel = default_predictor_kernel();
    SearchConfig search = default_experiment_search();
    SearchConfig predictor_search = default_predictor_search();

    void validate() const;
};

struct RunReport {
    int run_index = 0;
    std::uint64_t seed = 0;
    int model_order = 0;
    bool failed = false;
    std::string error;
    double wall_seconds = 0.0;

    double cod_miss_ss = 0.0;
    double cod_miss_mean = 0.0;
    Hyperparameters imputer_hp;
    Hyperparameters predictor_hp_imputed;
    Hyperparameters predictor_hp_full;
    std::vector<double> cod_k_ss_imputed;  // index k-1
    std::vector<double> cod_k_ss_full;
    std::vector<double> cod_k_oracle;
};

struct ExperimentSummary {
    ExperimentConfig config;
    std::vector<RunReport> runs;
    int failures = 0;
};

/// splitmix64 of master ^ index; the per-run seed splitting rule.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index);

RunReport run_single(const ExperimentConfig& config, int run_index);

/// Dispatches runs to a worker pool (config.threads); reports are stored
/// in run-index order regardless of completion order.
ExperimentSummary run_experiment(const ExperimentConfig& config);

/// One row per (run, estimator); wall time varies between invocations.
void write_runs_csv(const ExperimentSummary& summary, const std::string& path);

/// Mean/median/quartiles per estimator and metric; byte-reproducible from
/// (config, master_seed).
void write_aggregate_csv(const ExperimentSummary& summary, const std::string& path);

} // namespace ssid
