// Command-line frontend: dataset simulation, imputation, predictor
// identification, Monte Carlo experiments and kernel tables.
//
// Exit codes: 0 success, 1 usage, 2 data/parse, 3 numerical failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssid/armax.hpp"
#include "ssid/errors.hpp"
#include "ssid/experiment.hpp"
#include "ssid/identify.hpp"
#include "ssid/imputer.hpp"
#include "ssid/io.hpp"
#include "ssid/kernels.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    std::string config_path;
    std::optional<int> threads;
    std::string out_dir = ".";
};

ssid::ExperimentConfig load_config(const GlobalOptions& global) {
    ssid::ExperimentConfig cfg;
    if (!global.config_path.empty()) cfg = ssid::read_experiment_config(global.config_path);
    if (global.seed) cfg.master_seed = *global.seed;
    if (global.threads) cfg.threads = *global.threads;
    return cfg;
}

std::string out_path(const GlobalOptions& global, const std::string& name) {
    fs::create_directories(global.out_dir);
    return (fs::path(global.out_dir) / name).string();
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::vector<double> parse_grid(const std::string& grid) {
    std::vector<double> values;
    std::stringstream ss(grid);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        values.push_back(std::stod(item));
    }
    return values;
}

int cmd_simulate(const GlobalOptions& global) {
    const auto cfg = load_config(global);
    cfg.validate();
    // same seed layout as run 0 of the experiment driver
    const std::uint64_t seed = ssid::mix_seed(cfg.master_seed, 0);

    std::mt19937_64 order_rng(ssid::mix_seed(seed, 0));
    const int order = std::uniform_int_distribution<int>(cfg.order_min, cfg.order_max)(order_rng);
    ssid::ArmaxModel model = ssid::random_armax(order, cfg.num_inputs, cfg.pole_radius, {1.0, 5.0},
                                                ssid::mix_seed(seed, 1));
    if (cfg.variant == ssid::ExperimentVariant::kResonant) {
        std::mt19937_64 rng(ssid::mix_seed(seed, 7));
        model = ssid::add_resonance(model, 0.999,
                                    std::uniform_real_distribution<double>(-1.0, 1.0)(rng));
    }
    auto make_inputs = [&](int len, std::uint64_t noise_seed) {
        Eigen::MatrixXd u = ssid::white_noise_inputs(cfg.num_inputs, len, noise_seed);
        if (cfg.variant == ssid::ExperimentVariant::kLowpass) {
            const auto [num, den] =
                ssid::random_lowpass_filter(cfg.pole_radius, ssid::mix_seed(seed, 8));
            u = ssid::apply_filter(num, den, u);
        }
        return u;
    };
    const ssid::Dataset train =
        ssid::simulate(model, make_inputs(cfg.burn_in + cfg.train_n, ssid::mix_seed(seed, 2)),
                       cfg.train_n, cfg.burn_in, ssid::mix_seed(seed, 3));
    const ssid::Dataset test =
        ssid::simulate(model, make_inputs(cfg.burn_in + cfg.test_n, ssid::mix_seed(seed, 4)),
                       cfg.test_n, cfg.burn_in, ssid::mix_seed(seed, 5));
    ssid::Dataset masked = ssid::mask_missing(train, cfg.missing_prob, ssid::mix_seed(seed, 6));
    for (int i = 0; i < masked.n(); ++i)
        if (masked.missing[i]) masked.outputs[i] = std::nan("");

    ssid::write_dataset_csv(masked, out_path(global, "train.csv"));
    ssid::write_dataset_csv(train, out_path(global, "train_truth.csv"));
    ssid::write_dataset_csv(test, out_path(global, "test.csv"));
    ssid::write_model_csv(model, out_path(global, "model.csv"));
    std::cout << "wrote train.csv (" << masked.n() << " rows, " << masked.missing_count()
              << " missing), test.csv (" << test.n() << " rows), model.csv (order " << order
              << ")\n";
    return 0;
}

int cmd_impute(const GlobalOptions& global, const std::string& train_path,
               const std::string& truth_path) {
    const auto cfg = load_config(global);
    const ssid::Dataset data = ssid::read_dataset_csv(train_path);
    if (data.observed_count() == 0) {
        std::cerr << "impute: no observed outputs in " << train_path << "\n";
        return kExitData;
    }
    const ssid::ImputationResult result =
        ssid::stable_spline_imputation(data, cfg.imputer_kernel, cfg.search);
    const ssid::Dataset completed = ssid::apply_imputation(data, result);

    std::vector<double> posterior_std(completed.n(), 0.0);
    std::size_t e = 0;
    for (int i = 0; i < completed.n(); ++i) {
        if (!completed.imputed.empty() && completed.imputed[i] && e < result.estimates.size()) {
            posterior_std[i] = std::sqrt(std::max(result.estimates[e].variance, 0.0));
            ++e;
        }
    }
    ssid::write_dataset_csv(completed, out_path(global, "completed.csv"), &posterior_std);
    std::ofstream report(out_path(global, "fit_report.json"));
    report << ssid::fit_report_json(result, data.observed_count(), data.missing_count());

    std::cout << "imputed " << result.estimates.size() << " samples; beta "
              << fmt(result.fitted.beta) << ", lambda " << fmt(result.fitted.lambda) << ", J "
              << fmt(result.log_objective) << "\n";

    if (!truth_path.empty()) {
        const ssid::Dataset truth = ssid::read_dataset_csv(truth_path);
        if (truth.n() != data.n()) {
            std::cerr << "impute: truth file row count disagrees with dataset\n";
            return kExitData;
        }
        std::vector<double> y_true, y_hat;
        for (int i = 0, k = 0; i < data.n(); ++i) {
            if (!data.missing[i]) continue;
            y_true.push_back(truth.outputs[i]);
            y_hat.push_back(result.estimates[k++].value);
        }
        if (!y_true.empty())
            std::cout << "cod_miss " << fmt(ssid::cod_miss(y_true, y_hat)) << "\n";
    }
    return 0;
}

int cmd_identify(const GlobalOptions& global, const std::string& train_path,
                 const std::string& test_path) {
    const auto cfg = load_config(global);
    const ssid::Dataset data = ssid::read_dataset_csv(train_path);
    const ssid::PredictorModel model =
        ssid::fit_predictor(data, cfg.predictor_kernel, cfg.predictor_search);
    ssid::write_predictor_csv(model, out_path(global, "predictor.csv"));
    std::cout << "fitted predictor: beta " << fmt(model.hyperparameters.beta) << ", lambda "
              << fmt(model.hyperparameters.lambda);
    if (model.hyperparameters.enrichment)
        std::cout << ", phi " << fmt(model.hyperparameters.enrichment->phi) << ", varphi "
                  << fmt(model.hyperparameters.enrichment->varphi);
    std::cout << "\n";

    if (!test_path.empty()) {
        const ssid::Dataset test = ssid::read_dataset_csv(test_path);
        const Eigen::MatrixXd pred = ssid::kstep_predict_all(model, test, cfg.k_max);
        std::ofstream out(out_path(global, "cod_k.csv"));
        out << "k,cod\n";
        const std::span<const double> truth(test.outputs.data(),
                                            static_cast<std::size_t>(test.outputs.size()));
        for (int k = 1; k <= cfg.k_max; ++k) {
            const Eigen::VectorXd row = pred.row(k - 1);
            const double cod =
                ssid::cod_k(truth, {row.data(), static_cast<std::size_t>(row.size())});
            out << k << "," << fmt(cod) << "\n";
            std::cout << "cod_" << k << " " << fmt(cod) << "\n";
        }
    }
    return 0;
}

int cmd_experiment(const GlobalOptions& global) {
    const auto cfg = load_config(global);
    cfg.validate();
    const ssid::ExperimentSummary summary = ssid::run_experiment(cfg);
    ssid::write_runs_csv(summary, out_path(global, "runs.csv"));
    ssid::write_aggregate_csv(summary, out_path(global, "aggregate.csv"));
    std::cout << "completed " << (summary.runs.size() - summary.failures) << "/"
              << summary.runs.size() << " runs; reports in " << global.out_dir << "\n";
    if (summary.failures * 5 > static_cast<int>(summary.runs.size())) {
        std::cerr << "experiment: more than 20% of runs failed\n";
        return kExitNumerical;
    }
    return 0;
}

int cmd_kernel(const GlobalOptions& global, const std::string& kind, double beta, int q,
               std::optional<double> phi, std::optional<double> varphi,
               const std::string& grid_text) {
    ssid::KernelSpec spec;
    spec.order_q = q;
    spec.beta = beta;
    if (phi || varphi) {
        if (kind != "rbf-dt") {
            std::cerr << "kernel: enrichment applies to rbf-dt only\n";
            return kExitUsage;
        }
        spec.enrichment = ssid::Enrichment{phi.value_or(0.0), varphi.value_or(0.0)};
    }
    const std::vector<double> grid = parse_grid(grid_text);

    std::ofstream out(out_path(global, "kernel.csv"));
    out << "argument,value\n";
    for (double x : grid) {
        double v = 0.0;
        if (kind == "ss") {
            v = ssid::stable_spline_k(x, x, spec);
        } else if (kind == "rbf-ct") {
            v = ssid::rbf_h_continuous(x, spec);
        } else if (kind == "rbf-dt") {
            v = ssid::enriched_rbf_h(static_cast<std::int64_t>(std::llround(x)), spec);
        } else {
            std::cerr << "kernel: unknown kind '" << kind << "' (ss, rbf-ct, rbf-dt)\n";
            return kExitUsage;
        }
        out << fmt(x) << "," << fmt(v) << "\n";
        std::cout << fmt(x) << "," << fmt(v) << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel-based identification of linear systems with missing output samples"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--seed", global.seed, "Master seed (overrides the config file)");
    app.add_option("--config", global.config_path, "Flat key/value configuration file");
    app.add_option("--threads", global.threads, "Worker threads for the experiment driver");
    app.add_option("--out-dir", global.out_dir, "Directory for generated files");

    auto* simulate = app.add_subcommand("simulate", "Generate a random system and its records");
    auto* impute = app.add_subcommand("impute", "Fill missing outputs in a dataset CSV");
    std::string train_path, truth_path, test_path;
    impute->add_option("train", train_path, "Dataset CSV with missing y fields")->required();
    impute->add_option("--truth", truth_path, "Complete CSV for scoring the reconstruction");
    auto* identify = app.add_subcommand("identify", "Fit the one-step predictor on a complete CSV");
    std::string id_train, id_test;
    identify->add_option("train", id_train, "Complete (or completed) dataset CSV")->required();
    identify->add_option("--test", id_test, "Held-out record for k-step scoring");
    auto* experiment = app.add_subcommand("experiment", "Run the Monte Carlo study");
    auto* kernel = app.add_subcommand("kernel", "Tabulate a kernel on a grid");
    std::string kind = "rbf-dt", grid_text;
    double beta = 1.0;
    int q = 2;
    std::optional<double> phi, varphi;
    kernel->add_option("kind", kind, "ss, rbf-ct or rbf-dt")->required();
    kernel->add_option("--beta", beta, "Decay rate");
    kernel->add_option("--q", q, "Kernel order (1 or 2)");
    kernel->add_option("--phi", phi, "Enrichment phi (rbf-dt)");
    kernel->add_option("--varphi", varphi, "Enrichment varphi (rbf-dt)");
    kernel->add_option("--grid", grid_text, "Comma-separated arguments");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(global);
        if (impute->parsed()) return cmd_impute(global, train_path, truth_path);
        if (identify->parsed()) return cmd_identify(global, id_train, id_test);
        if (experiment->parsed()) return cmd_experiment(global);
        if (kernel->parsed()) return cmd_kernel(global, kind, beta, q, phi, varphi, grid_text);
    } catch (const ssid::ParseError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitData;
    } catch (const ssid::IllConditionedError& ex) {
        std::cerr << "numerical error: " << ex.what() << " (condition "
                  << ex.condition_estimate << ")\n";
        return kExitNumerical;
    } catch (const ssid::OptimizationError& ex) {
        std::cerr << "numerical error: " << ex.what() << "\n";
        return kExitNumerical;
    } catch (const ssid::GenerationError& ex) {
        std::cerr << "numerical error: " << ex.what() << "\n";
        return kExitNumerical;
    } catch (const std::invalid_argument& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitData;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
