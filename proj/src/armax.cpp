#include "ssid/armax.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "ssid/errors.hpp"

namespace ssid {

namespace {

constexpr int kMaxGenerationAttempts = 10000;

// Horizon long enough that the geometric tail of an impulse response with
// pole radius rho is negligible for l2-norm purposes.
int norm_horizon(double rho) {
    if (rho <= 0.0) return 1000;
    const double len = std::log(1e-12) / std::log(std::min(rho, 1.0 - 1e-9));
    return std::clamp(static_cast<int>(std::ceil(len)), 1000, 60000);
}

Eigen::VectorXd sample_stable_poly(int degree, double rho, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::VectorXd poly(1);
    poly << 1.0;
    int remaining = degree;
    if (remaining % 2 == 1) {
        const double m = rho * unif(rng);
        const double sign = unif(rng) < 0.5 ? 1.0 : -1.0;
        Eigen::VectorXd lin(2);
        lin << 1.0, -sign * m;
        poly = poly_multiply(poly, lin);
        --remaining;
    }
    while (remaining > 0) {
        const double m = rho * unif(rng);
        const double angle = M_PI * unif(rng);
        Eigen::VectorXd quad(3);
        quad << 1.0, -2.0 * m * std::cos(angle), m * m;
        poly = poly_multiply(poly, quad);
        remaining -= 2;
    }
    return poly;
}

double response_l2(const std::vector<double>& f) {
    double acc = 0.0;
    for (double v : f) acc += v * v;
    return std::sqrt(acc);
}

void require_fully_observed(const Dataset& record, const char* who) {
    for (auto m : record.missing)
        if (m) throw std::invalid_argument(std::string(who) + ": record must be fully observed");
}

} // namespace

Eigen::VectorXd poly_multiply(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(p.size() + q.size() - 1);
    for (Eigen::Index i = 0; i < p.size(); ++i)
        for (Eigen::Index j = 0; j < q.size(); ++j) out[i + j] += p[i] * q[j];
    return out;
}

std::vector<std::complex<double>> poly_roots(const Eigen::VectorXd& coeffs) {
    if (coeffs.size() == 0 || coeffs[0] == 0.0)
        throw std::invalid_argument("poly_roots: leading coefficient must be nonzero");
    const int d = static_cast<int>(coeffs.size()) - 1;
    if (d == 0) return {};
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(d, d);
    for (int j = 0; j < d; ++j) companion(0, j) = -coeffs[j + 1] / coeffs[0];
    for (int i = 1; i < d; ++i) companion(i, i - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
    std::vector<std::complex<double>> roots(d);
    for (int i = 0; i < d; ++i) roots[i] = solver.eigenvalues()[i];
    return roots;
}

double max_root_modulus(const Eigen::VectorXd& coeffs) {
    double m = 0.0;
    for (const auto& r : poly_roots(coeffs)) m = std::max(m, std::abs(r));
    return m;
}

ArmaxModel random_armax(int order, int num_inputs, double rho,
                        std::pair<double, double> ratio_range, std::uint64_t seed) {
    if (order < 1) throw std::invalid_argument("random_armax: order must be >= 1");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("random_armax: rho must lie in (0,1)");
    if (num_inputs < 0) throw std::invalid_argument("random_armax: num_inputs must be >= 0");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int horizon = norm_horizon(rho);

    for (int attempt = 0; attempt < kMaxGenerationAttempts; ++attempt) {
        ArmaxModel model;
        model.a = sample_stable_poly(order, rho, rng);
        model.c = sample_stable_poly(order, rho, rng);
        model.b.resize(num_inputs);
        for (int l = 0; l < num_inputs; ++l) {
            Eigen::VectorXd bl = Eigen::VectorXd::Zero(order + 1);
            for (int j = 1; j <= order; ++j) bl[j] = gauss(rng);
            model.b[l] = bl;
        }
        if (num_inputs == 0) return model;

        double input_norms = 0.0;
        for (int l = 0; l < num_inputs; ++l)
            input_norms += response_l2(impulse_response(model, l, horizon));
        const double noise_norm = response_l2(impulse_response(model, kNoiseChannel, horizon));
        const double ratio = input_norms / noise_norm;
        if (ratio >= ratio_range.first && ratio <= ratio_range.second) return model;
    }
    throw GenerationError("random_armax: norm-ratio constraint not met within 10^4 attempts");
}

ArmaxModel add_resonance(const ArmaxModel& model, double b, double a) {
    if (!(std::abs(b) < 1.0)) throw std::invalid_argument("add_resonance: |b| must be < 1");
    if (!(std::abs(a) <= 1.0)) throw std::invalid_argument("add_resonance: |a| must be <= 1");
    Eigen::VectorXd res(3);
    res << 1.0, 2.0 * a * b, b * b;
    ArmaxModel out = model;
    out.a = poly_multiply(model.a, res);
    return out;
}

std::vector<double> impulse_response(const ArmaxModel& model, int channel, int length) {
    if (length < 1) throw std::invalid_argument("impulse_response: length must be >= 1");
    const Eigen::VectorXd* num = nullptr;
    if (channel == kNoiseChannel) {
        num = &model.c;
    } else if (channel >= 0 && channel < model.num_inputs()) {
        num = &model.b[channel];
    } else {
        throw std::invalid_argument("impulse_response: no such channel");
    }
    const int d = model.order();
    std::vector<double> f(static_cast<std::size_t>(length), 0.0);
    for (int t = 0; t < length; ++t) {
        double v = (t < num->size()) ? (*num)[t] : 0.0;
        const int jmax = std::min(t, d);
        for (int j = 1; j <= jmax; ++j) v -= model.a[j] * f[t - j];
        f[t] = v;
    }
    return f;
}

Dataset simulate(const ArmaxModel& model, const Eigen::MatrixXd& inputs, int n, int burn_in,
                 std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("simulate: n must be >= 1");
    if (burn_in < 0) throw std::invalid_argument("simulate: burn_in must be >= 0");
    if (inputs.rows() != model.num_inputs())
        throw std::invalid_argument("simulate: input channel count disagrees with model");
    const int total = burn_in + n;
    if (model.num_inputs() > 0 && inputs.cols() < total)
        throw std::invalid_argument("simulate: inputs must cover burn_in + n samples");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int da = static_cast<int>(model.a.size()) - 1;
    const int dc = static_cast<int>(model.c.size()) - 1;

    std::vector<double> e(static_cast<std::size_t>(total));
    for (int t = 0; t < total; ++t) e[t] = model.noise_std * gauss(rng);

    std::vector<double> y(static_cast<std::size_t>(total), 0.0);
    for (int t = 0; t < total; ++t) {
        double v = e[t];
        for (int j = 1; j <= dc && j <= t; ++j) v += model.c[j] * e[t - j];
        for (int l = 0; l < model.num_inputs(); ++l) {
            const auto& bl = model.b[l];
            for (int j = 1; j < bl.size() && j <= t; ++j) v += bl[j] * inputs(l, t - j);
        }
        for (int j = 1; j <= da && j <= t; ++j) v -= model.a[j] * y[t - j];
        y[t] = v;
    }

    Dataset out;
    out.times.resize(n);
    for (int i = 0; i < n; ++i) out.times[i] = i;
    out.inputs = model.num_inputs() > 0 ? inputs.middleCols(burn_in, n).eval()
                                        : Eigen::MatrixXd(0, n);
    out.outputs.resize(n);
    for (int i = 0; i < n; ++i) out.outputs[i] = y[burn_in + i];
    out.missing.assign(n, 0);
    return out;
}

Dataset mask_missing(const Dataset& data, double prob, std::uint64_t seed) {
    if (!(prob >= 0.0 && prob < 1.0))
        throw std::invalid_argument("mask_missing: prob must lie in [0,1)");
    Dataset out = data;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int n = data.n();
    while (true) {
        bool any_observed = false;
        for (int i = 0; i < n; ++i) {
            out.missing[i] = unif(rng) < prob ? 1 : 0;
            if (!out.missing[i]) any_observed = true;
        }
        if (any_observed) break;
    }
    return out;
}

std::vector<double> innovations(const ArmaxModel& model, const Dataset& record) {
    require_fully_observed(record, "innovations");
    const int n = record.n();
    const int da = static_cast<int>(model.a.size()) - 1;
    const int dc = static_cast<int>(model.c.size()) - 1;
    std::vector<double> e(static_cast<std::size_t>(n), 0.0);
    for (int t = 0; t < n; ++t) {
        double v = record.outputs[t];
        for (int j = 1; j <= da && j <= t; ++j) v += model.a[j] * record.outputs[t - j];
        for (int l = 0; l < model.num_inputs(); ++l) {
            const auto& bl = model.b[l];
            for (int j = 1; j < bl.size() && j <= t; ++j) v -= bl[j] * record.inputs(l, t - j);
        }
        for (int j = 1; j <= dc && j <= t; ++j) v -= model.c[j] * e[t - j];
        e[t] = v;
    }
    return e;
}

Eigen::MatrixXd kstep_predict_true_all(const ArmaxModel& model, const Dataset& record, int k_max) {
    if (k_max < 1 || k_max > 20)
        throw std::invalid_argument("kstep_predict_true_all: horizon must lie in [1,20]");
    require_fully_observed(record, "kstep_predict_true_all");
    if (record.num_inputs() != model.num_inputs())
        throw std::invalid_argument("kstep_predict_true_all: input channel count disagrees with model");
    if (max_root_modulus(model.c) >= 1.0)
        throw PredictorInstabilityError(
            "kstep_predict_true_all: C(z) has roots on or outside the unit circle");

    const int n = record.n();
    const int da = static_cast<int>(model.a.size()) - 1;
    const int dc = static_cast<int>(model.c.size()) - 1;
    const auto e_hat = innovations(model, record);

    Eigen::MatrixXd result(k_max, n);
    std::vector<double> horizon(static_cast<std::size_t>(k_max + 1), 0.0);

    for (int origin = -k_max; origin < n - 1; ++origin) {
        // horizon[j] caches yhat(origin + j | origin)
        auto past_y = [&](int tau) -> double {
            if (tau < 0) return 0.0;
            if (tau <= origin) return record.outputs[tau];
            return horizon[tau - origin];
        };
        auto past_e = [&](int tau) -> double {
            if (tau < 0 || tau > origin) return 0.0;
            return e_hat[tau];
        };
        for (int j = 1; j <= k_max; ++j) {
            const int t = origin + j;
            if (t >= n) break;
            if (t < 0) continue;
            double v = 0.0;
            for (int m = 1; m <= da; ++m) v -= model.a[m] * past_y(t - m);
            for (int l = 0; l < model.num_inputs(); ++l) {
                const auto& bl = model.b[l];
                for (int m = 1; m < bl.size(); ++m)
                    if (t - m >= 0) v += bl[m] * record.inputs(l, t - m);
            }
            for (int m = 1; m <= dc; ++m) v += model.c[m] * past_e(t - m);
            horizon[j] = v;
            result(j - 1, t) = v;
        }
    }
    return result;
}

std::vector<double> kstep_predict_true(const ArmaxModel& model, const Dataset& record, int k) {
    const Eigen::MatrixXd all = kstep_predict_true_all(model, record, k);
    std::vector<double> out(static_cast<std::size_t>(record.n()));
    for (int i = 0; i < record.n(); ++i) out[i] = all(k - 1, i);
    return out;
}

Eigen::MatrixXd white_noise_inputs(int num_inputs, int len, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd u(num_inputs, len);
    for (int l = 0; l < num_inputs; ++l)
        for (int t = 0; t < len; ++t) u(l, t) = gauss(rng);
    return u;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> random_lowpass_filter(double rho, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Eigen::VectorXd den = sample_stable_poly(2, rho, rng);
    Eigen::VectorXd num(3);
    num << 0.0, gauss(rng), gauss(rng);
    return {num, den};
}

Eigen::MatrixXd apply_filter(const Eigen::VectorXd& num, const Eigen::VectorXd& den,
                             const Eigen::MatrixXd& channels) {
    if (den.size() == 0 || den[0] != 1.0)
        throw std::invalid_argument("apply_filter: denominator must be monic");
    Eigen::MatrixXd out(channels.rows(), channels.cols());
    for (Eigen::Index l = 0; l < channels.rows(); ++l) {
        for (Eigen::Index t = 0; t < channels.cols(); ++t) {
            double v = 0.0;
            for (Eigen::Index j = 0; j < num.size() && j <= t; ++j)
                v += num[j] * channels(l, t - j);
            for (Eigen::Index j = 1; j < den.size() && j <= t; ++j) v -= den[j] * out(l, t - j);
            out(l, t) = v;
        }
    }
    return out;
}

} // namespace ssid
