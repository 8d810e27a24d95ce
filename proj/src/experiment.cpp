#include "ssid/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

namespace ssid {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// fixed sub-stream labels for the per-run seeds
enum SeedStream : std::uint64_t {
    kOrderStream = 0,
    kModelStream,
    kTrainInputStream,
    kTrainNoiseStream,
    kTestInputStream,
    kTestNoiseStream,
    kMaskStream,
    kResonanceStream,
    kLowpassStream,
};

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string opt_field(double v) { return std::isfinite(v) ? fmt_double(v) : std::string(); }

double quantile(std::vector<double> v, double p) {
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

} // namespace

std::string variant_name(ExperimentVariant v) {
    switch (v) {
        case ExperimentVariant::kWhite: return "white";
        case ExperimentVariant::kLowpass: return "lowpass";
        case ExperimentVariant::kResonant: return "resonant";
    }
    return "white";
}

ExperimentVariant variant_from_name(const std::string& name) {
    if (name == "white") return ExperimentVariant::kWhite;
    if (name == "lowpass") return ExperimentVariant::kLowpass;
    if (name == "resonant") return ExperimentVariant::kResonant;
    throw std::invalid_argument("unknown experiment variant: " + name);
}

KernelSpec default_imputer_kernel() {
    KernelSpec k;
    k.order_q = 2;
    k.beta = 1.0;
    k.enrichment = Enrichment{0.0, 0.0};
    k.truncation_len = 100;
    return k;
}

KernelSpec default_predictor_kernel() { return default_imputer_kernel(); }

SearchConfig default_experiment_search() {
    SearchConfig s;
    s.beta_grid = 15;
    s.pole_grid = 5;
    s.refine_budget = 80;
    s.param_tol = 1e-3;
    return s;
}

SearchConfig default_predictor_search() {
    SearchConfig s;
    s.beta_grid = 7;
    s.pole_grid = 4;
    s.refine_budget = 60;
    s.param_tol = 1e-3;
    return s;
}

void ExperimentConfig::validate() const {
    if (runs < 1 || train_n < 2 || test_n < 1 || num_inputs < 0 || k_max < 1 || k_max > 20 ||
        burn_in < 0 || test_warmup < 0)
        throw std::invalid_argument("ExperimentConfig: counts out of range");
    if (order_min < 1 || order_max < order_min)
        throw std::invalid_argument("ExperimentConfig: invalid order range");
    if (!(missing_prob >= 0.0 && missing_prob < 1.0))
        throw std::invalid_argument("ExperimentConfig: missing_prob must lie in [0,1)");
    if (!(pole_radius > 0.0 && pole_radius < 1.0))
        throw std::invalid_argument("ExperimentConfig: pole_radius must lie in (0,1)");
    if (variant == ExperimentVariant::kResonant && pole_radius != 0.999)
        throw std::invalid_argument("ExperimentConfig: resonant variant requires pole_radius 0.999");
    imputer_kernel.validate();
    predictor_kernel.validate();
}

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master ^ index);
}

RunReport run_single(const ExperimentConfig& config, int run_index) {
    RunReport report;
    report.run_index = run_index;
    report.seed = mix_seed(config.master_seed, static_cast<std::uint64_t>(run_index));
    const auto t0 = std::chrono::steady_clock::now();

    try {
        const std::uint64_t seed = report.seed;
        std::mt19937_64 order_rng(mix_seed(seed, kOrderStream));
        const int order =
            std::uniform_int_distribution<int>(config.order_min, config.order_max)(order_rng);
        report.model_order = order;

        ArmaxModel model = random_armax(order, config.num_inputs, config.pole_radius, {1.0, 5.0},
                                        mix_seed(seed, kModelStream));
        if (config.variant == ExperimentVariant::kResonant) {
            std::mt19937_64 rng(mix_seed(seed, kResonanceStream));
            const double a = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
            model = add_resonance(model, 0.999, a);
        }

        auto make_inputs = [&](int len, std::uint64_t noise_seed) {
            Eigen::MatrixXd u = white_noise_inputs(config.num_inputs, len, noise_seed);
            if (config.variant == ExperimentVariant::kLowpass) {
                const auto [num, den] =
                    random_lowpass_filter(config.pole_radius, mix_seed(seed, kLowpassStream));
                u = apply_filter(num, den, u);
            }
            return u;
        };

        const Dataset train = simulate(model, make_inputs(config.burn_in + config.train_n,
                                                          mix_seed(seed, kTrainInputStream)),
                                       config.train_n, config.burn_in,
                                       mix_seed(seed, kTrainNoiseStream));
        const int test_len = config.test_warmup + config.test_n;
        const Dataset test = simulate(model, make_inputs(config.burn_in + test_len,
                                                         mix_seed(seed, kTestInputStream)),
                                      test_len, config.burn_in,
                                      mix_seed(seed, kTestNoiseStream));

        Dataset masked = mask_missing(train, config.missing_prob, mix_seed(seed, kMaskStream));
        const auto missing_idx = masked.missing_indices();
        std::vector<double> truth_missing;
        truth_missing.reserve(missing_idx.size());
        for (int i : missing_idx) {
            truth_missing.push_back(train.outputs[i]);
            masked.outputs[i] = kNaN;  // keep the estimator blind to the truth
        }

        const ImputationResult imp =
            stable_spline_imputation(masked, config.imputer_kernel, config.search);
        report.imputer_hp = imp.fitted;
        const Dataset completed = apply_imputation(masked, imp);

        if (!missing_idx.empty()) {
            std::vector<double> est;
            est.reserve(imp.estimates.size());
            for (const auto& e : imp.estimates) est.push_back(e.value);
            report.cod_miss_ss = cod_miss(truth_missing, est);

            double mean_obs = 0.0;
            int n_obs = 0;
            for (int i = 0; i < masked.n(); ++i) {
                if (!masked.missing[i]) {
                    mean_obs += masked.outputs[i];
                    ++n_obs;
                }
            }
            mean_obs /= std::max(n_obs, 1);
            const std::vector<double> mean_est(truth_missing.size(), mean_obs);
            report.cod_miss_mean = cod_miss(truth_missing, mean_est);
        } else {
            report.cod_miss_ss = kNaN;
            report.cod_miss_mean = kNaN;
        }

        double weight = config.imputed_weight;
        if (weight < 0.0) {
            double vbar = 0.0;
            for (const auto& e : imp.estimates) vbar += std::max(e.variance, 0.0);
            vbar /= std::max<std::size_t>(imp.estimates.size(), 1);
            weight = 1.0 / (1.0 + vbar);
        }
        const PredictorModel pm_imputed =
            fit_predictor(completed, config.predictor_kernel, config.predictor_search, weight);
        const PredictorModel pm_full =
            fit_predictor(train, config.predictor_kernel, config.predictor_search);
        report.predictor_hp_imputed = pm_imputed.hyperparameters;
        report.predictor_hp_full = pm_full.hyperparameters;

        const Eigen::MatrixXd pred_imputed = kstep_predict_all(pm_imputed, test, config.k_max);
        const Eigen::MatrixXd pred_full = kstep_predict_all(pm_full, test, config.k_max);
        const Eigen::MatrixXd pred_oracle = kstep_predict_true_all(model, test, config.k_max);

        const std::span<const double> truth(test.outputs.data() + config.test_warmup,
                                            static_cast<std::size_t>(config.test_n));
        auto cods = [&](const Eigen::MatrixXd& pred) {
            std::vector<double> out(config.k_max);
            for (int k = 1; k <= config.k_max; ++k) {
                const Eigen::VectorXd row = pred.row(k - 1);
                out[k - 1] = cod_k(truth, {row.data() + config.test_warmup,
                                           static_cast<std::size_t>(config.test_n)});
            }
            return out;
        };
        report.cod_k_ss_imputed = cods(pred_imputed);
        report.cod_k_ss_full = cods(pred_full);
        report.cod_k_oracle = cods(pred_oracle);
    } catch (const std::exception& ex) {
        report.failed = true;
        report.error = ex.what();
    }

    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentSummary summary;
    summary.config = config;
    summary.runs.resize(config.runs);

    int workers = config.threads > 0 ? config.threads
                                     : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, config.runs);

    std::atomic<int> next{0};
    auto worker = [&] {
        while (true) {
            const int idx = next.fetch_add(1);
            if (idx >= config.runs) break;
            summary.runs[idx] = run_single(config, idx);
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (const auto& r : summary.runs)
        if (r.failed) ++summary.failures;
    return summary;
}

namespace {

std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

void hp_fields(std::string& line, const Hyperparameters& hp, bool present) {
    if (!present) {
        line += ",,,,";
        return;
    }
    line += "," + fmt_double(hp.beta) + "," + fmt_double(hp.lambda);
    line += "," + (hp.enrichment ? fmt_double(hp.enrichment->phi) : std::string());
    line += "," + (hp.enrichment ? fmt_double(hp.enrichment->varphi) : std::string());
}

} // namespace

void write_runs_csv(const ExperimentSummary& summary, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_runs_csv: cannot open " + path);
    out << "run_index,seed,model_order,estimator,wall_seconds,cod_miss,cod_miss_mean_baseline,"
           "beta,lambda,phi,varphi,imp_beta,imp_lambda,imp_phi,imp_varphi,error";
    const int kmax = summary.config.k_max;
    for (int k = 1; k <= kmax; ++k) out << ",cod_k_" << k;
    out << "\n";

    for (const auto& r : summary.runs) {
        const std::string prefix = std::to_string(r.run_index) + "," + std::to_string(r.seed) +
                                   "," + std::to_string(r.model_order) + ",";
        if (r.failed) {
            std::string line = prefix + "error," + fmt_double(r.wall_seconds);
            for (int f = 0; f < 10; ++f) line += ",";  // metric and hyperparameter fields
            line += "," + sanitize(r.error);
            for (int k = 1; k <= kmax; ++k) line += ",";
            out << line << "\n";
            continue;
        }
        struct Row {
            const char* name;
            const std::vector<double>* cod;
            const Hyperparameters* hp;
            bool with_miss;
            const Hyperparameters* imp_hp;
        };
        const Row rows[] = {
            {"ss_imputation_ss", &r.cod_k_ss_imputed, &r.predictor_hp_imputed, true, &r.imputer_hp},
            {"ss_full", &r.cod_k_ss_full, &r.predictor_hp_full, false, nullptr},
            {"true_oracle", &r.cod_k_oracle, nullptr, false, nullptr},
        };
        for (const auto& row : rows) {
            std::string line = prefix + row.name + "," + fmt_double(r.wall_seconds);
            line += "," + (row.with_miss ? opt_field(r.cod_miss_ss) : std::string());
            line += "," + (row.with_miss ? opt_field(r.cod_miss_mean) : std::string());
            hp_fields(line, row.hp ? *row.hp : Hyperparameters{}, row.hp != nullptr);
            hp_fields(line, row.imp_hp ? *row.imp_hp : Hyperparameters{}, row.imp_hp != nullptr);
            line += ",";  // error column
            for (int k = 1; k <= kmax; ++k) line += "," + fmt_double((*row.cod)[k - 1]);
            out << line << "\n";
        }
    }
}

void write_aggregate_csv(const ExperimentSummary& summary, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_aggregate_csv: cannot open " + path);
    out << "estimator,metric,count,mean,median,q25,q75\n";

    auto emit = [&](const std::string& estimator, const std::string& metric,
                    const std::vector<double>& values) {
        std::vector<double> v;
        for (double x : values)
            if (std::isfinite(x)) v.push_back(x);
        out << estimator << "," << metric << "," << v.size();
        if (v.empty()) {
            out << ",,,,\n";
            return;
        }
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        out << "," << fmt_double(mean) << "," << fmt_double(quantile(v, 0.5)) << ","
            << fmt_double(quantile(v, 0.25)) << "," << fmt_double(quantile(v, 0.75)) << "\n";
    };

    auto collect = [&](auto&& getter) {
        std::vector<double> v;
        for (const auto& r : summary.runs)
            if (!r.failed) v.push_back(getter(r));
        return v;
    };

    emit("ss_imputation_ss", "cod_miss", collect([](const RunReport& r) { return r.cod_miss_ss; }));
    emit("ss_imputation_ss", "cod_miss_mean_baseline",
         collect([](const RunReport& r) { return r.cod_miss_mean; }));
    const int kmax = summary.config.k_max;
    struct Series {
        const char* name;
        std::vector<double> RunReport::* member;
    };
    const Series series[] = {
        {"ss_imputation_ss", &RunReport::cod_k_ss_imputed},
        {"ss_full", &RunReport::cod_k_ss_full},
        {"true_oracle", &RunReport::cod_k_oracle},
    };
    for (const auto& s : series) {
        for (int k = 1; k <= kmax; ++k) {
            emit(s.name, "cod_" + std::to_string(k),
                 collect([&](const RunReport& r) { return (r.*(s.member))[k - 1]; }));
        }
    }
    out << "failed_runs," << summary.failures << ",,,,," << "\n";
}

} // namespace ssid
