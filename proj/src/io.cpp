#include "ssid/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ssid/errors.hpp"

namespace ssid {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, int line_no, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(std::string("invalid ") + what + " value '" + s + "'", line_no);
    }
}

std::int64_t parse_int(const std::string& s, int line_no, const char* what) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(std::string("invalid ") + what + " value '" + s + "'", line_no);
    }
}

std::ofstream open_out(const std::string& path, const char* who) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(std::string(who) + ": cannot open " + path);
    return out;
}

} // namespace

Dataset read_dataset_csv_stream(std::istream& in, const std::string& name) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty dataset file " + name, 1);
    const auto header = split_csv_line(line);
    if (header.empty() || header[0] != "t")
        throw ParseError("dataset header must start with 't'", 1);

    int num_inputs = 0;
    std::size_t col = 1;
    while (col < header.size() && header[col] == "u" + std::to_string(num_inputs + 1)) {
        ++num_inputs;
        ++col;
    }
    if (col >= header.size() || header[col] != "y")
        throw ParseError("dataset header must contain 'y' after the input columns", 1);
    const std::size_t y_col = col++;
    int imputed_col = -1;
    int std_col = -1;
    for (; col < header.size(); ++col) {
        if (header[col] == "imputed") imputed_col = static_cast<int>(col);
        else if (header[col] == "posterior_std") std_col = static_cast<int>(col);
        else throw ParseError("unknown dataset column '" + header[col] + "'", 1);
    }

    Dataset d;
    std::vector<std::vector<double>> input_rows(num_inputs);
    std::vector<std::uint8_t> imputed;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_no);
        d.times.push_back(parse_int(fields[0], line_no, "time"));
        for (int l = 0; l < num_inputs; ++l)
            input_rows[l].push_back(parse_double(fields[1 + l], line_no, "input"));
        if (fields[y_col].empty()) {
            d.missing.push_back(1);
            d.outputs.conservativeResize(d.outputs.size() + 1);
            d.outputs[d.outputs.size() - 1] = kNaN;
        } else {
            d.missing.push_back(0);
            d.outputs.conservativeResize(d.outputs.size() + 1);
            d.outputs[d.outputs.size() - 1] = parse_double(fields[y_col], line_no, "output");
        }
        if (imputed_col >= 0)
            imputed.push_back(fields[imputed_col].empty()
                                  ? 0
                                  : static_cast<std::uint8_t>(
                                        parse_int(fields[imputed_col], line_no, "imputed")));
    }

    const int n = static_cast<int>(d.times.size());
    d.inputs.resize(num_inputs, n);
    for (int l = 0; l < num_inputs; ++l)
        for (int i = 0; i < n; ++i) d.inputs(l, i) = input_rows[l][i];
    if (imputed_col >= 0) d.imputed = std::move(imputed);
    d.validate();
    return d;
}

Dataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_dataset_csv: cannot open " + path);
    return read_dataset_csv_stream(in, path);
}

std::string dataset_csv_string(const Dataset& data, const std::vector<double>* posterior_std) {
    data.validate();
    if (posterior_std && static_cast<int>(posterior_std->size()) != data.n())
        throw std::invalid_argument("dataset_csv_string: posterior_std length mismatch");
    std::ostringstream out;
    out << "t";
    for (int l = 1; l <= data.num_inputs(); ++l) out << ",u" << l;
    out << ",y";
    const bool with_imputed = !data.imputed.empty();
    if (with_imputed) out << ",imputed";
    if (posterior_std) out << ",posterior_std";
    out << "\n";
    for (int i = 0; i < data.n(); ++i) {
        out << data.times[i];
        for (int l = 0; l < data.num_inputs(); ++l) out << "," << fmt(data.inputs(l, i));
        out << ",";
        if (!data.missing[i] && std::isfinite(data.outputs[i])) out << fmt(data.outputs[i]);
        if (with_imputed) out << "," << (data.imputed[i] ? 1 : 0);
        if (posterior_std) out << "," << fmt((*posterior_std)[i]);
        out << "\n";
    }
    return out.str();
}

void write_dataset_csv(const Dataset& data, const std::string& path,
                       const std::vector<double>* posterior_std) {
    auto out = open_out(path, "write_dataset_csv");
    out << dataset_csv_string(data, posterior_std);
}

void write_model_csv(const ArmaxModel& model, const std::string& path) {
    auto out = open_out(path, "write_model_csv");
    out << "poly,index,coefficient\n";
    auto dump = [&](const std::string& name, const Eigen::VectorXd& p) {
        for (Eigen::Index i = 0; i < p.size(); ++i)
            out << name << "," << i << "," << fmt(p[i]) << "\n";
    };
    dump("a", model.a);
    dump("c", model.c);
    for (int l = 0; l < model.num_inputs(); ++l) dump("b" + std::to_string(l + 1), model.b[l]);
    out << "noise_std,0," << fmt(model.noise_std) << "\n";
}

ArmaxModel read_model_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_model_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"poly", "index", "coefficient"})
        throw ParseError("model file must start with 'poly,index,coefficient'", 1);

    std::map<std::string, std::map<std::int64_t, double>> polys;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 3) throw ParseError("expected 3 fields", line_no);
        polys[fields[0]][parse_int(fields[1], line_no, "index")] =
            parse_double(fields[2], line_no, "coefficient");
    }
    auto to_vec = [&](const std::string& name) {
        const auto it = polys.find(name);
        if (it == polys.end()) throw std::runtime_error("read_model_csv: missing poly " + name);
        Eigen::VectorXd v(static_cast<Eigen::Index>(it->second.size()));
        for (const auto& [idx, val] : it->second) v[idx] = val;
        return v;
    };
    ArmaxModel model;
    model.a = to_vec("a");
    model.c = to_vec("c");
    for (int l = 1; polys.count("b" + std::to_string(l)); ++l)
        model.b.push_back(to_vec("b" + std::to_string(l)));
    if (polys.count("noise_std")) model.noise_std = polys["noise_std"][0];
    return model;
}

void write_predictor_csv(const PredictorModel& model, const std::string& path) {
    auto out = open_out(path, "write_predictor_csv");
    const auto& hp = model.hyperparameters;
    out << "# beta " << fmt(hp.beta) << "\n# lambda " << fmt(hp.lambda) << "\n";
    if (hp.enrichment)
        out << "# phi " << fmt(hp.enrichment->phi) << "\n# varphi " << fmt(hp.enrichment->varphi)
            << "\n";
    out << "# order_q " << hp.order_q << "\n";
    out << "channel,lag,coefficient\n";
    for (Eigen::Index l = 0; l < model.g_inputs.rows(); ++l)
        for (int j = 1; j <= model.coeff_len(); ++j)
            out << "u" << (l + 1) << "," << j << "," << fmt(model.g_inputs(l, j - 1)) << "\n";
    for (int j = 1; j <= model.coeff_len(); ++j)
        out << "y," << j << "," << fmt(model.g_output[j - 1]) << "\n";
}

PredictorModel read_predictor_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_predictor_csv: cannot open " + path);
    PredictorModel model;
    std::string line;
    int line_no = 0;
    std::map<std::string, std::map<int, double>> channels;
    bool header_seen = false;
    std::optional<double> phi, varphi;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string key;
            double value;
            if (ls >> key >> value) {
                if (key == "beta") model.hyperparameters.beta = value;
                else if (key == "lambda") model.hyperparameters.lambda = value;
                else if (key == "phi") phi = value;
                else if (key == "varphi") varphi = value;
                else if (key == "order_q") model.hyperparameters.order_q = static_cast<int>(value);
            }
            continue;
        }
        const auto fields = split_csv_line(line);
        if (!header_seen) {
            if (fields != std::vector<std::string>{"channel", "lag", "coefficient"})
                throw ParseError("predictor table header expected", line_no);
            header_seen = true;
            continue;
        }
        if (fields.size() != 3) throw ParseError("expected 3 fields", line_no);
        channels[fields[0]][static_cast<int>(parse_int(fields[1], line_no, "lag"))] =
            parse_double(fields[2], line_no, "coefficient");
    }
    if (phi && varphi) model.hyperparameters.enrichment = Enrichment{*phi, *varphi};
    const auto yit = channels.find("y");
    if (yit == channels.end()) throw std::runtime_error("read_predictor_csv: missing y channel");
    const int t_len = static_cast<int>(yit->second.size());
    model.g_output.resize(t_len);
    for (const auto& [lag, v] : yit->second) model.g_output[lag - 1] = v;
    int p = 0;
    while (channels.count("u" + std::to_string(p + 1))) ++p;
    model.g_inputs.resize(p, t_len);
    for (int l = 1; l <= p; ++l)
        for (const auto& [lag, v] : channels["u" + std::to_string(l)])
            model.g_inputs(l - 1, lag - 1) = v;
    return model;
}

std::string fit_report_json(const ImputationResult& result, int n_observed, int n_missing) {
    nlohmann::json j;
    j["beta"] = result.fitted.beta;
    j["lambda"] = result.fitted.lambda;
    if (result.fitted.enrichment) {
        j["phi"] = result.fitted.enrichment->phi;
        j["varphi"] = result.fitted.enrichment->varphi;
    } else {
        j["phi"] = nullptr;
        j["varphi"] = nullptr;
    }
    j["J"] = result.log_objective;
    j["n_observed"] = n_observed;
    j["n_missing"] = n_missing;
    j["condition_estimate"] = result.condition_estimate;
    return j.dump(2) + "\n";
}

ExperimentConfig parse_experiment_config(std::istream& in) {
    ExperimentConfig cfg;
    bool pole_radius_given = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;

        auto want_int = [&](int& field) {
            long long v;
            if (!(ls >> v)) throw ParseError("expected integer for " + key, line_no);
            field = static_cast<int>(v);
        };
        auto want_double = [&](double& field) {
            if (!(ls >> field)) throw ParseError("expected number for " + key, line_no);
        };
        auto want_search = [&](SearchConfig& s, const std::string& sub) {
            if (sub == "beta_min") want_double(s.beta_min);
            else if (sub == "beta_max") want_double(s.beta_max);
            else if (sub == "beta_grid") want_int(s.beta_grid);
            else if (sub == "pole_grid") want_int(s.pole_grid);
            else if (sub == "stability_margin") want_double(s.stability_margin);
            else if (sub == "refine_budget") want_int(s.refine_budget);
            else if (sub == "param_tol") want_double(s.param_tol);
            else if (sub == "lambda_min") want_double(s.lambda_min);
            else if (sub == "lambda_max") want_double(s.lambda_max);
            else throw ParseError("unknown search key " + key, line_no);
        };
        auto want_kernel = [&](KernelSpec& k, const std::string& sub) {
            if (sub == "order_q") want_int(k.order_q);
            else if (sub == "truncation_len") want_int(k.truncation_len);
            else if (sub == "enriched") {
                int flag = 0;
                want_int(flag);
                if (flag) {
                    if (!k.enrichment) k.enrichment = Enrichment{0.0, 0.0};
                } else {
                    k.enrichment.reset();
                }
            } else {
                throw ParseError("unknown kernel key " + key, line_no);
            }
        };

        if (key == "runs") want_int(cfg.runs);
        else if (key == "train_n") want_int(cfg.train_n);
        else if (key == "test_n") want_int(cfg.test_n);
        else if (key == "num_inputs") want_int(cfg.num_inputs);
        else if (key == "order_range") { want_int(cfg.order_min); want_int(cfg.order_max); }
        else if (key == "pole_radius") { want_double(cfg.pole_radius); pole_radius_given = true; }
        else if (key == "missing_prob") want_double(cfg.missing_prob);
        else if (key == "variant") {
            std::string name;
            if (!(ls >> name)) throw ParseError("expected variant name", line_no);
            cfg.variant = variant_from_name(name);
        } else if (key == "k_max") want_int(cfg.k_max);
        else if (key == "master_seed") {
            unsigned long long v;
            if (!(ls >> v)) throw ParseError("expected integer for master_seed", line_no);
            cfg.master_seed = v;
        } else if (key == "burn_in") want_int(cfg.burn_in);
        else if (key == "threads") want_int(cfg.threads);
        else if (key == "test_warmup") want_int(cfg.test_warmup);
        else if (key == "imputed_weight") want_double(cfg.imputed_weight);
        else if (key.rfind("search.", 0) == 0) want_search(cfg.search, key.substr(7));
        else if (key.rfind("predictor_search.", 0) == 0)
            want_search(cfg.predictor_search, key.substr(17));
        else if (key.rfind("imputer.", 0) == 0) want_kernel(cfg.imputer_kernel, key.substr(8));
        else if (key.rfind("predictor.", 0) == 0) want_kernel(cfg.predictor_kernel, key.substr(10));
        else throw ParseError("unknown config key " + key, line_no);

        std::string extra;
        if (ls >> extra) throw ParseError("trailing content after " + key, line_no);
    }
    if (cfg.variant == ExperimentVariant::kResonant && !pole_radius_given) cfg.pole_radius = 0.999;
    return cfg;
}

ExperimentConfig read_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_experiment_config: cannot open " + path);
    return parse_experiment_config(in);
}

} // namespace ssid
