#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "ssid/armax.hpp"
#include "ssid/errors.hpp"

using namespace ssid;

namespace {

double l2(const std::vector<double>& v, std::size_t from = 0, std::size_t to = SIZE_MAX) {
    double acc = 0.0;
    for (std::size_t i = from; i < std::min(to, v.size()); ++i) acc += v[i] * v[i];
    return std::sqrt(acc);
}

ArmaxModel ar1_model(double pole) {
    ArmaxModel m;
    m.a.resize(2);
    m.a << 1.0, -pole;
    m.c.resize(1);
    m.c << 1.0;
    return m;
}

} // namespace

TEST_CASE("polynomial helpers") {
    Eigen::VectorXd p(2), q(3);
    p << 1.0, -0.5;
    q << 1.0, 0.0, 0.25;
    const Eigen::VectorXd prod = poly_multiply(p, q);
    CHECK(prod.size() == 4);
    CHECK(prod[0] == 1.0);
    CHECK(prod[1] == -0.5);
    CHECK(prod[2] == 0.25);
    CHECK(prod[3] == -0.125);

    Eigen::VectorXd cubic(4);
    cubic << 1.0, -0.9, 0.2, 0.0;  // roots 0.5, 0.4, 0
    double got = max_root_modulus(cubic);
    CHECK(got == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("random armax satisfies the generation constraints") {
    const auto m1 = random_armax(1, 3, 0.95, {1.0, 5.0}, 7);
    CHECK(m1.a.size() == 2);
    CHECK(std::abs(m1.a[1]) < 0.95);

    const auto again = random_armax(1, 3, 0.95, {1.0, 5.0}, 7);
    CHECK((m1.a - again.a).cwiseAbs().maxCoeff() == 0.0);
    CHECK((m1.c - again.c).cwiseAbs().maxCoeff() == 0.0);
    for (int l = 0; l < 3; ++l) CHECK((m1.b[l] - again.b[l]).cwiseAbs().maxCoeff() == 0.0);

    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> order_draw(1, 30);
    for (int rep = 0; rep < 500; ++rep) {
        const int order = order_draw(rng);
        const auto m = random_armax(order, 3, 0.95, {1.0, 5.0}, 1000 + rep);
        CHECK(max_root_modulus(m.a) < 0.95);
        CHECK(max_root_modulus(m.c) < 0.95);
        for (const auto& b : m.b) CHECK(b[0] == 0.0);
        double in_norms = 0.0;
        for (int l = 0; l < 3; ++l) in_norms += l2(impulse_response(m, l, 2000));
        const double ratio = in_norms / l2(impulse_response(m, kNoiseChannel, 2000));
        CHECK(ratio >= 1.0 - 1e-9);
        CHECK(ratio <= 5.0 + 1e-9);
    }
}

TEST_CASE("impossible norm-ratio range exhausts the resampling budget") {
    CHECK_THROWS_AS(random_armax(1, 3, 0.9, {1e9, 2e9}, 1), GenerationError);
}

TEST_CASE("add_resonance") {
    const auto base = random_armax(2, 1, 0.9, {0.0, 1e9}, 3);

    const auto centered = add_resonance(base, 0.999, 0.0);
    bool found = false;
    for (const auto& r : poly_roots(centered.a))
        if (std::abs(r.real()) < 1e-9 && std::abs(std::abs(r.imag()) - 0.999) < 1e-9) found = true;
    CHECK(found);
    CHECK(max_root_modulus(centered.a) < 0.999 + 1e-9);

    const auto doubled = add_resonance(base, 0.999, 1.0);
    int near = 0;
    for (const auto& r : poly_roots(doubled.a))
        if (std::abs(r - std::complex<double>(-0.999, 0.0)) < 1e-6) ++near;
    CHECK(near == 2);

    // impulse response of the modified system is the original convolved
    // with the resonator response
    const auto fast = add_resonance(base, 0.6, 0.25);
    const int len = 400;
    const auto orig = impulse_response(base, 0, len);
    const auto got = impulse_response(fast, 0, len);
    std::vector<double> res(len, 0.0);
    res[0] = 1.0;
    for (int t = 1; t < len; ++t) {
        res[t] = -2.0 * 0.25 * 0.6 * res[t - 1];
        if (t >= 2) res[t] -= 0.36 * res[t - 2];
    }
    for (int t = 0; t < len; ++t) {
        double conv = 0.0;
        for (int j = 0; j <= t; ++j) conv += orig[j] * res[t - j];
        CHECK(got[t] == doctest::Approx(conv).epsilon(1e-9));
    }

    CHECK_THROWS_AS(add_resonance(base, 1.2, 0.0), std::invalid_argument);
}

TEST_CASE("impulse response") {
    ArmaxModel m = ar1_model(0.5);
    m.b.push_back((Eigen::VectorXd(2) << 0.0, 1.0).finished());
    const auto f = impulse_response(m, 0, 6);
    CHECK(f[0] == 0.0);
    CHECK(f[1] == 1.0);
    CHECK(f[2] == 0.5);
    CHECK(f[3] == 0.25);
    CHECK(f[5] == doctest::Approx(0.0625));

    // C = A makes the disturbance channel a pure delta
    ArmaxModel white = m;
    white.c = white.a;
    const auto fp = impulse_response(white, kNoiseChannel, 5);
    CHECK(fp[0] == 1.0);
    for (int t = 1; t < 5; ++t) CHECK(fp[t] == 0.0);

    CHECK_THROWS_AS(impulse_response(m, 3, 5), std::invalid_argument);
}

TEST_CASE("impulse response geometric tail bound") {
    const int tf = 1000;
    for (int rep = 0; rep < 10; ++rep) {
        const auto m = random_armax(5 + rep, 3, 0.95, {1.0, 5.0}, 400 + rep);
        const auto f = impulse_response(m, rep % 3, 2 * tf);
        const double head = l2(f, 0, tf);
        const double tail = l2(f, tf, 2 * tf);
        CHECK(tail < std::pow(0.95, tf) * head / (1.0 - 0.95) + 1e-280);
    }
}

TEST_CASE("simulate") {
    ArmaxModel m = ar1_model(0.6);
    m.b.push_back((Eigen::VectorXd(2) << 0.0, 0.7).finished());
    m.noise_std = 0.0;

    const Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(1, 50);
    const Dataset silent = simulate(m, zeros, 40, 10, 1);
    CHECK(silent.outputs.cwiseAbs().maxCoeff() == 0.0);
    CHECK(silent.n() == 40);
    CHECK(silent.times.front() == 0);

    // unit impulse and no noise reproduces the impulse response
    Eigen::MatrixXd impulse = Eigen::MatrixXd::Zero(1, 60);
    impulse(0, 0) = 1.0;
    const Dataset d = simulate(m, impulse, 60, 0, 1);
    const auto f = impulse_response(m, 0, 60);
    for (int t = 0; t < 60; ++t) CHECK(d.outputs[t] == doctest::Approx(f[t]).epsilon(1e-12));

    // determinism and linearity in the inputs
    ArmaxModel noisy = m;
    noisy.noise_std = 1.0;
    const Eigen::MatrixXd u1 = white_noise_inputs(1, 100, 11);
    const Eigen::MatrixXd u2 = white_noise_inputs(1, 100, 12);
    const Dataset a = simulate(noisy, u1, 80, 20, 5);
    const Dataset b = simulate(noisy, u1, 80, 20, 5);
    CHECK((a.outputs - b.outputs).cwiseAbs().maxCoeff() == 0.0);

    ArmaxModel quiet = m;
    quiet.noise_std = 0.0;
    const Dataset s1 = simulate(quiet, u1, 80, 20, 5);
    const Dataset s2 = simulate(quiet, u2, 80, 20, 5);
    const Dataset s12 = simulate(quiet, u1 + u2, 80, 20, 5);
    for (int t = 0; t < 80; ++t)
        CHECK(s12.outputs[t] ==
              doctest::Approx(s1.outputs[t] + s2.outputs[t]).epsilon(1e-10));
}

TEST_CASE("simulated variance matches the impulse-response identity") {
    const auto m = random_armax(3, 2, 0.8, {1.0, 5.0}, 17);
    const int n = 20000;
    const Dataset d = simulate(m, white_noise_inputs(2, n + 300, 23), n, 300, 29);

    double expected = 0.0;
    for (int l = 0; l < 2; ++l) {
        const auto f = impulse_response(m, l, 3000);
        expected += std::pow(l2(f), 2);
    }
    expected += std::pow(l2(impulse_response(m, kNoiseChannel, 3000)), 2);

    // batch means give an honest standard error for the correlated series
    const int batches = 10;
    const int blen = n / batches;
    std::vector<double> bvar(batches, 0.0);
    for (int b = 0; b < batches; ++b) {
        for (int i = 0; i < blen; ++i) bvar[b] += d.outputs[b * blen + i] * d.outputs[b * blen + i];
        bvar[b] /= blen;
    }
    const double mean = std::accumulate(bvar.begin(), bvar.end(), 0.0) / batches;
    double sd = 0.0;
    for (double v : bvar) sd += (v - mean) * (v - mean);
    sd = std::sqrt(sd / (batches - 1.0));
    CHECK(std::abs(mean - expected) < 3.0 * sd / std::sqrt(static_cast<double>(batches)));
}

TEST_CASE("mask_missing") {
    ArmaxModel m = ar1_model(0.5);
    const Dataset d = simulate(m, Eigen::MatrixXd(0, 0), 300, 100, 3);

    const Dataset none = mask_missing(d, 0.0, 1);
    CHECK(none.missing_count() == 0);

    const Dataset once = mask_missing(d, 0.25, 42);
    const Dataset twice = mask_missing(d, 0.25, 42);
    CHECK(once.missing == twice.missing);

    double total = 0.0;
    for (int seed = 0; seed < 500; ++seed)
        total += mask_missing(d, 0.25, 9000 + seed).missing_count();
    const double mean_count = total / 500.0;
    CHECK(std::abs(mean_count - 75.0) < 3.0 * std::sqrt(300 * 0.25 * 0.75));
}

TEST_CASE("true k-step predictor") {
    // one-step errors are the innovations: their sample variance matches
    // the noise variance
    const auto m = random_armax(3, 2, 0.8, {1.0, 5.0}, 8);
    const int n = 5000;
    const Dataset d = simulate(m, white_noise_inputs(2, n + 300, 31), n, 300, 37);
    const auto one = kstep_predict_true(m, d, 1);
    const int skip = 200;  // innovation filter warms up from zero state
    std::vector<double> sq;
    for (int t = skip; t < n; ++t) sq.push_back(std::pow(d.outputs[t] - one[t], 2));
    const int batches = 10;
    const int blen = static_cast<int>(sq.size()) / batches;
    std::vector<double> bm(batches, 0.0);
    for (int b = 0; b < batches; ++b) {
        for (int i = 0; i < blen; ++i) bm[b] += sq[b * blen + i];
        bm[b] /= blen;
    }
    const double mean = std::accumulate(bm.begin(), bm.end(), 0.0) / batches;
    double sd = 0.0;
    for (double v : bm) sd += (v - mean) * (v - mean);
    sd = std::sqrt(sd / (batches - 1.0));
    CHECK(std::abs(mean - 1.0) < 3.0 * sd / std::sqrt(static_cast<double>(batches)));

    // long-horizon predictions of a strongly stable model with no inputs
    // decay toward the mean
    ArmaxModel fast = ar1_model(0.5);
    const Dataset df = simulate(fast, Eigen::MatrixXd(0, 0), 400, 100, 5);
    const auto far = kstep_predict_true(fast, df, 20);
    double maxabs = 0.0;
    for (int t = 50; t < 400; ++t) maxabs = std::max(maxabs, std::abs(far[t]));
    CHECK(maxabs < 1e-5 * df.outputs.cwiseAbs().maxCoeff());

    // C = A: predictions are the pure input-driven response at any horizon
    ArmaxModel white;
    white.a.resize(3);
    white.a << 1.0, -0.9, 0.2;
    white.c = white.a;
    white.b.push_back((Eigen::VectorXd(3) << 0.0, 1.0, -0.3).finished());
    const Eigen::MatrixXd u = white_noise_inputs(1, 260, 41);
    const Dataset dw = simulate(white, u, 250, 10, 43);
    const Eigen::MatrixXd preds = kstep_predict_true_all(white, dw, 6);
    std::vector<double> filt(250, 0.0);
    for (int t = 0; t < 250; ++t) {
        double v = 0.0;
        for (int j = 1; j <= 2 && j <= t; ++j) v += white.b[0][j] * dw.inputs(0, t - j);
        for (int j = 1; j <= 2 && j <= t; ++j) v -= white.a[j] * filt[t - j];
        filt[t] = v;
    }
    for (int k = 1; k <= 6; ++k)
        for (int t = 0; t < 250; ++t)
            CHECK(preds(k - 1, t) == doctest::Approx(filt[t]).epsilon(1e-10));

    // unstable C is rejected
    ArmaxModel badc = ar1_model(0.5);
    badc.c.resize(2);
    badc.c << 1.0, -1.2;
    CHECK_THROWS_AS(kstep_predict_true(badc, df, 1), PredictorInstabilityError);
}

TEST_CASE("one-step predictions dominate longer horizons") {
    for (int rep = 0; rep < 20; ++rep) {
        const auto m = random_armax(1 + rep % 6, 2, 0.9, {1.0, 5.0}, 600 + rep);
        const int n = 3000;
        const Dataset d = simulate(m, white_noise_inputs(2, n + 300, 700 + rep), n, 300, 800 + rep);
        const Eigen::MatrixXd preds = kstep_predict_true_all(m, d, 8);
        auto mse = [&](int k) {
            double acc = 0.0;
            for (int t = 100; t < n; ++t) acc += std::pow(d.outputs[t] - preds(k - 1, t), 2);
            return acc / (n - 100);
        };
        const double m1 = mse(1);
        for (int k = 2; k <= 8; ++k) CHECK(m1 <= mse(k) * (1.0 + 1e-9));
    }
}

TEST_CASE("lowpass input filter") {
    const auto [num, den] = random_lowpass_filter(0.95, 13);
    CHECK(num[0] == 0.0);
    CHECK(den[0] == 1.0);
    CHECK(max_root_modulus(den) < 0.95);
    const Eigen::MatrixXd white = white_noise_inputs(2, 500, 15);
    const Eigen::MatrixXd filtered = apply_filter(num, den, white);
    CHECK(filtered.rows() == 2);
    // a strictly proper filter cannot pass the first sample through
    CHECK(filtered(0, 0) == 0.0);
    CHECK(std::isfinite(filtered.cwiseAbs().maxCoeff()));
}
