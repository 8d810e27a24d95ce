#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ssid/armax.hpp"
#include "ssid/errors.hpp"
#include "ssid/experiment.hpp"
#include "ssid/identify.hpp"
#include "ssid/io.hpp"

using namespace ssid;
namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* p = std::getenv("SSID_CLI");
    REQUIRE_MESSAGE(p != nullptr, "SSID_CLI must point at the ssid binary");
    return p;
}

int run_cli(const std::string& args) {
    const int rc = std::system((cli_path() + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("ssid_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Dataset random_dataset(std::uint64_t seed, int n, int inputs, double missing) {
    auto m = random_armax(2, inputs, 0.9, {1.0, 5.0}, seed);
    Dataset d = simulate(m, white_noise_inputs(inputs, n + 100, seed + 1), n, 100, seed + 2);
    d = mask_missing(d, missing, seed + 3);
    for (int i = 0; i < d.n(); ++i)
        if (d.missing[i]) d.outputs[i] = std::nan("");
    return d;
}

} // namespace

TEST_CASE("dataset CSV round trip") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const Dataset d = random_dataset(100 + rep, 30 + static_cast<int>(rng() % 40),
                                         1 + rep % 3, rep % 2 ? 0.3 : 0.0);
        const std::string text = dataset_csv_string(d);
        std::istringstream in(text);
        const Dataset back = read_dataset_csv_stream(in, "mem");
        REQUIRE(back.n() == d.n());
        CHECK(back.missing == d.missing);
        CHECK(back.times == d.times);
        for (int i = 0; i < d.n(); ++i) {
            if (!d.missing[i])
                CHECK(std::abs(back.outputs[i] - d.outputs[i]) <=
                      1e-12 * std::max(1.0, std::abs(d.outputs[i])));
            for (int l = 0; l < d.num_inputs(); ++l)
                CHECK(std::abs(back.inputs(l, i) - d.inputs(l, i)) <=
                      1e-12 * std::max(1.0, std::abs(d.inputs(l, i))));
        }
    }
}

TEST_CASE("dataset CSV parse errors carry line numbers") {
    std::istringstream bad1("t,u1\n");
    CHECK_THROWS_AS(read_dataset_csv_stream(bad1, "mem"), ParseError);
    std::istringstream bad2("t,u1,y\n0,1.0,2.0\n1,oops,2.0\n");
    try {
        read_dataset_csv_stream(bad2, "mem");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
    }
    std::istringstream bad3("t,u1,y\n0,1.0\n");
    CHECK_THROWS_AS(read_dataset_csv_stream(bad3, "mem"), ParseError);
}

TEST_CASE("model and predictor CSV round trips") {
    const auto dir = fresh_dir("model_io");
    const auto m = random_armax(3, 2, 0.9, {1.0, 5.0}, 77);
    write_model_csv(m, (dir / "model.csv").string());
    const ArmaxModel back = read_model_csv((dir / "model.csv").string());
    CHECK((m.a - back.a).cwiseAbs().maxCoeff() == 0.0);
    CHECK((m.c - back.c).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(back.b.size() == 2);
    for (int l = 0; l < 2; ++l) CHECK((m.b[l] - back.b[l]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.noise_std == m.noise_std);

    PredictorModel pm;
    pm.g_inputs.resize(2, 5);
    pm.g_output.resize(5);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int l = 0; l < 2; ++l)
        for (int j = 0; j < 5; ++j) pm.g_inputs(l, j) = gauss(rng);
    for (int j = 0; j < 5; ++j) pm.g_output[j] = gauss(rng);
    pm.hyperparameters.beta = 0.37;
    pm.hyperparameters.lambda = 12.5;
    pm.hyperparameters.enrichment = Enrichment{0.21, -0.11};
    write_predictor_csv(pm, (dir / "pred.csv").string());
    const PredictorModel pback = read_predictor_csv((dir / "pred.csv").string());
    CHECK((pm.g_inputs - pback.g_inputs).cwiseAbs().maxCoeff() == 0.0);
    CHECK((pm.g_output - pback.g_output).cwiseAbs().maxCoeff() == 0.0);
    CHECK(pback.hyperparameters.beta == pm.hyperparameters.beta);
    CHECK(pback.hyperparameters.enrichment->varphi == -0.11);
}

TEST_CASE("fit report carries the contract fields") {
    ImputationResult res;
    res.fitted.beta = 0.4;
    res.fitted.lambda = 3.0;
    res.log_objective = 123.5;
    res.condition_estimate = 42.0;
    const std::string text = fit_report_json(res, 200, 100);
    for (const char* key :
         {"\"beta\"", "\"lambda\"", "\"phi\"", "\"varphi\"", "\"J\"", "\"n_observed\"",
          "\"n_missing\"", "\"condition_estimate\""})
        CHECK(text.find(key) != std::string::npos);
}

TEST_CASE("experiment config parsing") {
    std::istringstream in(
        "# comment line\n"
        "runs 4\n"
        "train_n 120   # trailing comment\n"
        "order_range 2 6\n"
        "variant resonant\n"
        "missing_prob 0.3\n"
        "master_seed 99\n"
        "search.beta_grid 9\n"
        "predictor_search.pole_grid 3\n"
        "imputer.enriched 0\n"
        "predictor.truncation_len 50\n"
        "imputed_weight 1\n");
    const ExperimentConfig cfg = parse_experiment_config(in);
    CHECK(cfg.runs == 4);
    CHECK(cfg.train_n == 120);
    CHECK(cfg.order_min == 2);
    CHECK(cfg.order_max == 6);
    CHECK(cfg.variant == ExperimentVariant::kResonant);
    CHECK(cfg.pole_radius == 0.999);  // implied by the variant
    CHECK(cfg.missing_prob == 0.3);
    CHECK(cfg.master_seed == 99);
    CHECK(cfg.search.beta_grid == 9);
    CHECK(cfg.predictor_search.pole_grid == 3);
    CHECK_FALSE(cfg.imputer_kernel.enrichment.has_value());
    CHECK(cfg.predictor_kernel.truncation_len == 50);
    CHECK(cfg.imputed_weight == 1.0);
    cfg.validate();

    std::istringstream bad("runs 4\nnonsense 7\n");
    CHECK_THROWS_AS(parse_experiment_config(bad), ParseError);
}

TEST_CASE("cli usage and error exit codes") {
    CHECK(run_cli("") == 1);
    CHECK(run_cli("kernel nosuchkind --grid 1,2") == 1);
    CHECK(run_cli("impute /nonexistent/file.csv") == 2);
}

TEST_CASE("cli rejects an all-missing dataset") {
    const auto dir = fresh_dir("allmissing");
    {
        std::ofstream f(dir / "bad.csv");
        f << "t,u1,y\n0,0.5,\n1,-0.2,\n2,0.9,\n";
    }
    CHECK(run_cli("--out-dir " + dir.string() + " impute " + (dir / "bad.csv").string()) == 2);
}

TEST_CASE("cli kernel tables") {
    const auto dir = fresh_dir("kernel");
    const double ln2 = std::log(2.0);
    std::ostringstream cmd;
    cmd << "--out-dir " << dir.string() << " kernel rbf-dt --q 1 --beta " << ln2
        << " --grid 0,1,2,3";
    CHECK(run_cli(cmd.str()) == 0);
    const std::string table = slurp(dir / "kernel.csv");
    CHECK(table.find("argument,value") == 0);
    std::istringstream rows(table);
    std::string line;
    std::getline(rows, line);
    std::vector<double> values;
    while (std::getline(rows, line))
        values.push_back(std::stod(line.substr(line.find(',') + 1)));
    REQUIRE(values.size() == 4);
    CHECK(values[0] == doctest::Approx(1.0));
    CHECK(values[1] == doctest::Approx(0.5));
    CHECK(values[2] == doctest::Approx(0.25));
    CHECK(values[3] == doctest::Approx(0.125));

    // diagonal of the q=2 stable spline kernel decays as exp(-3 beta t)/3
    CHECK(run_cli("--out-dir " + dir.string() + " kernel ss --q 2 --beta 0.5 --grid 0,1,2") == 0);
    std::istringstream ss_rows(slurp(dir / "kernel.csv"));
    std::getline(ss_rows, line);
    int t = 0;
    while (std::getline(ss_rows, line)) {
        const double v = std::stod(line.substr(line.find(',') + 1));
        CHECK(v == doctest::Approx(std::exp(-1.5 * t) / 3.0).epsilon(1e-12));
        ++t;
    }

    // empty grid produces a header-only table
    CHECK(run_cli("--out-dir " + dir.string() + " kernel rbf-ct --q 1 --beta 1") == 0);
    CHECK(count_lines(slurp(dir / "kernel.csv")) == 1);
}

TEST_CASE("cli simulate, impute and identify round trip") {
    const auto dir = fresh_dir("pipeline");
    const auto cfg_path = dir / "cfg.txt";
    {
        std::ofstream cfg(cfg_path);
        cfg << "train_n 160\ntest_n 80\norder_range 1 3\nburn_in 200\n"
               "imputer.truncation_len 40\npredictor.truncation_len 30\n"
               "search.beta_grid 8\nsearch.pole_grid 3\nsearch.refine_budget 20\n"
               "predictor_search.beta_grid 4\npredictor_search.pole_grid 2\n"
               "predictor_search.refine_budget 10\nk_max 4\n";
    }
    const std::string base = "--config " + cfg_path.string() + " --out-dir " + dir.string();
    CHECK(run_cli(base + " --seed 5 simulate") == 0);
    CHECK(fs::exists(dir / "train.csv"));
    CHECK(fs::exists(dir / "train_truth.csv"));
    CHECK(fs::exists(dir / "test.csv"));
    CHECK(fs::exists(dir / "model.csv"));
    CHECK(count_lines(slurp(dir / "train.csv")) == 161);
    CHECK(count_lines(slurp(dir / "test.csv")) == 81);

    // same seed reproduces the files byte for byte
    const std::string first = slurp(dir / "train.csv");
    CHECK(run_cli(base + " --seed 5 simulate") == 0);
    CHECK(slurp(dir / "train.csv") == first);

    const Dataset train = read_dataset_csv((dir / "train.csv").string());
    CHECK(train.missing_count() > 10);

    CHECK(run_cli(base + " impute " + (dir / "train.csv").string() + " --truth " +
                  (dir / "train_truth.csv").string()) == 0);
    CHECK(fs::exists(dir / "completed.csv"));
    CHECK(fs::exists(dir / "fit_report.json"));
    const Dataset completed = read_dataset_csv((dir / "completed.csv").string());
    CHECK(completed.missing_count() == 0);
    REQUIRE(static_cast<int>(completed.imputed.size()) == completed.n());

    // posterior std column is present and nonnegative
    const std::string comp_text = slurp(dir / "completed.csv");
    CHECK(comp_text.find("posterior_std") != std::string::npos);
    std::istringstream comp_rows(comp_text);
    std::string line;
    std::getline(comp_rows, line);
    while (std::getline(comp_rows, line)) {
        const auto pos = line.rfind(',');
        CHECK(std::stod(line.substr(pos + 1)) >= 0.0);
    }

    // imputing a complete file leaves the outputs untouched
    CHECK(run_cli(base + " impute " + (dir / "train_truth.csv").string()) == 0);
    const Dataset completed2 = read_dataset_csv((dir / "completed.csv").string());
    const Dataset truth = read_dataset_csv((dir / "train_truth.csv").string());
    CHECK((completed2.outputs - truth.outputs).cwiseAbs().maxCoeff() == 0.0);

    CHECK(run_cli(base + " identify " + (dir / "train_truth.csv").string() + " --test " +
                  (dir / "test.csv").string()) == 0);
    CHECK(fs::exists(dir / "predictor.csv"));
    CHECK(fs::exists(dir / "cod_k.csv"));
    CHECK(count_lines(slurp(dir / "cod_k.csv")) == 5);
}

TEST_CASE("cli experiment smoke run") {
    const auto dir = fresh_dir("exp");
    const auto cfg_path = dir / "cfg.txt";
    {
        std::ofstream cfg(cfg_path);
        cfg << "runs 1\ntrain_n 100\ntest_n 60\norder_range 1 1\nburn_in 150\nk_max 3\n"
               "imputer.truncation_len 30\npredictor.truncation_len 25\n"
               "search.beta_grid 6\nsearch.pole_grid 2\nsearch.refine_budget 10\n"
               "predictor_search.beta_grid 3\npredictor_search.pole_grid 2\n"
               "predictor_search.refine_budget 8\n";
    }
    CHECK(run_cli("--config " + cfg_path.string() + " --out-dir " + dir.string() +
                  " experiment") == 0);
    const std::string runs = slurp(dir / "runs.csv");
    CHECK(count_lines(runs) == 4);  // header + one row per estimator
    CHECK(runs.find("ss_imputation_ss") != std::string::npos);
    CHECK(runs.find("ss_full") != std::string::npos);
    CHECK(runs.find("true_oracle") != std::string::npos);
    CHECK(fs::exists(dir / "aggregate.csv"));
}
