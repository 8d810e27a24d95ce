// Independent reference implementations used by the test suites: direct
// summation and quadrature for the kernel closed forms, brute-force
// convolution for the output kernel, and the explicit finite-dimensional
// missing-data estimator. These deliberately avoid the library's
// factored/GEMM code paths.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ssid/dataset.hpp"
#include "ssid/kernels.hpp"

namespace ssid::testing {

/// sum_{j>=1} K(j, j+|lag|) by direct summation, stopping when a term
/// falls below 1e-16 of the accumulated sum.
inline double rbf_discrete_by_summation(std::int64_t lag, const KernelSpec& spec) {
    KernelSpec base = spec;
    base.enrichment.reset();
    const std::int64_t x = std::llabs(lag);
    double acc = 0.0;
    for (std::int64_t j = 1; j < 20000000; ++j) {
        const double term = stable_spline_k(static_cast<double>(j), static_cast<double>(j + x), base);
        acc += term;
        if (j > 1 && term < 1e-16 * acc) return acc;
    }
    throw std::runtime_error("rbf_discrete_by_summation: did not converge");
}

/// Same summation against the truncated enriched kernel.
inline double enriched_rbf_by_summation(std::int64_t lag, const KernelSpec& spec) {
    const std::int64_t x = std::llabs(lag);
    double acc = 0.0;
    for (std::int64_t j = 1; j < 2000000; ++j) {
        const double term = enriched_kernel(j, j + x, spec);
        acc += term;
        if (j > spec.truncation_len && std::abs(term) < 1e-16 * std::abs(acc)) return acc;
    }
    throw std::runtime_error("enriched_rbf_by_summation: did not converge");
}

/// Recursive adaptive Simpson, independent of the library's version.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double eps, int depth = 0) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double left = (m - a) / 6.0 * (fa + 4.0 * f(lm) + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * f(rm) + fb);
    if (depth > 48 || std::abs(left + right - whole) <= 15.0 * eps)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, 0.5 * eps, depth + 1) +
           adaptive_simpson(f, m, b, 0.5 * eps, depth + 1);
}

/// integral_0^inf K(y, y+|x|) dy: adaptive quadrature over [0, 60/beta]
/// with the analytic tail bound checked negligible.
inline double rbf_continuous_by_quadrature(double x, const KernelSpec& spec, double tol = 1e-10) {
    KernelSpec base = spec;
    base.enrichment.reset();
    const double ax = std::abs(x);
    const double cut = 60.0 / spec.beta;
    const double tail_bound = std::exp(-spec.beta * (cut + ax)) / spec.beta;
    if (tail_bound > 1e-12) throw std::runtime_error("tail bound not negligible");
    return adaptive_simpson(
        [&](double y) { return stable_spline_k(y, y + ax, base); }, 0.0, cut, tol);
}

/// Reversed input window of length tf ending at time t (zero before the
/// record start), built by the obvious scalar loop.
inline Eigen::RowVectorXd input_window(const Dataset& d, int channel, std::int64_t t, int tf) {
    Eigen::RowVectorXd w = Eigen::RowVectorXd::Zero(tf);
    for (int a = 0; a < tf; ++a) {
        const std::int64_t tau = t - a;
        if (tau < d.times.front() || tau > d.times.back()) continue;
        w[a] = d.inputs(channel, tau - d.times.front());
    }
    return w;
}

/// Pointwise truncated kernel table K(a,b), enriched when configured.
inline Eigen::MatrixXd kernel_table(const KernelSpec& spec) {
    KernelSpec base = spec;
    base.enrichment.reset();
    Eigen::MatrixXd k(spec.truncation_len, spec.truncation_len);
    for (int a = 0; a < spec.truncation_len; ++a)
        for (int b = 0; b < spec.truncation_len; ++b)
            k(a, b) = spec.enrichment
                          ? enriched_kernel(a, b, spec)
                          : stable_spline_k(static_cast<double>(a), static_cast<double>(b), base);
    return k;
}

/// Triple-loop evaluation of the output kernel entry.
inline double output_kernel_direct(const Dataset& d, std::int64_t x, std::int64_t y,
                                   const KernelSpec& spec, const Eigen::MatrixXd& ktab) {
    double acc = 0.0;
    for (int l = 0; l < d.num_inputs(); ++l) {
        const Eigen::RowVectorXd wx = input_window(d, l, x, spec.truncation_len);
        const Eigen::RowVectorXd wy = input_window(d, l, y, spec.truncation_len);
        for (int a = 0; a < spec.truncation_len; ++a)
            for (int b = 0; b < spec.truncation_len; ++b) acc += wx[a] * ktab(a, b) * wy[b];
    }
    return acc;
}

/// Explicit best-linear-predictor of the missing outputs: stacked
/// regression matrices, block-diagonal impulse-response prior and the
/// stationary disturbance covariances assembled as dense matrices.
inline Eigen::VectorXd missing_estimator_explicit(const Dataset& masked, const KernelSpec& spec) {
    const auto obs = masked.observed_indices();
    const auto mis = masked.missing_indices();
    const int p = masked.num_inputs();
    const int tf = spec.truncation_len;

    const Eigen::MatrixXd ktab = kernel_table(spec);
    Eigen::MatrixXd sigma_f = Eigen::MatrixXd::Zero(p * tf, p * tf);
    for (int l = 0; l < p; ++l) sigma_f.block(l * tf, l * tf, tf, tf) = ktab;

    auto phi = [&](const std::vector<int>& rows) {
        Eigen::MatrixXd m(rows.size(), p * tf);
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (int l = 0; l < p; ++l)
                m.block(r, l * tf, 1, tf) = input_window(masked, l, masked.times[rows[r]], tf);
        return m;
    };
    const Eigen::MatrixXd phi_o = phi(obs);
    const Eigen::MatrixXd phi_m = phi(mis);

    auto rmat = [&](const std::vector<int>& rows, const std::vector<int>& cols) {
        Eigen::MatrixXd m(rows.size(), cols.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < cols.size(); ++j) {
                const std::int64_t lag = masked.times[rows[i]] - masked.times[cols[j]];
                m(i, j) = spec.enrichment ? enriched_rbf_by_summation(lag, spec)
                                          : rbf_discrete_by_summation(lag, spec);
            }
        return m;
    };
    const Eigen::MatrixXd r_oo = rmat(obs, obs);
    const Eigen::MatrixXd r_mo = rmat(mis, obs);

    Eigen::VectorXd y_o(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) y_o[i] = masked.outputs[obs[i]];

    const Eigen::MatrixXd gram = phi_o * sigma_f * phi_o.transpose() + r_oo;
    const Eigen::MatrixXd cross = phi_m * sigma_f * phi_o.transpose() + r_mo;
    return cross * gram.ldlt().solve(y_o);
}

inline double min_eigenvalue(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

} // namespace ssid::testing
