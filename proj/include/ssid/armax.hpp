#pragma once

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ssid/dataset.hpp"

namespace ssid {

/// Channel selector for impulse_response: nonnegative values pick an
/// observable input, kNoiseChannel picks the disturbance path C/A.
inline constexpr int kNoiseChannel = -1;

/// ARMAX model in backshift form,
///   A(q^-1) y = sum_l B_l(q^-1) u_l + C(q^-1) e,
/// with A, C monic (leading coefficient 1) and every B_l carrying at
/// least one sample of delay (zero constant term).
struct ArmaxModel {
    Eigen::VectorXd a;                // [1, a1, ..., ad]
    std::vector<Eigen::VectorXd> b;   // each [0, b1, ..., bd]
    Eigen::VectorXd c;                // [1, c1, ..., cd]
    double noise_std = 1.0;

    int order() const { return static_cast<int>(a.size()) - 1; }
    int num_inputs() const { return static_cast<int>(b.size()); }
};

/// Product of two polynomials given as coefficient vectors (ascending lag).
Eigen::VectorXd poly_multiply(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// Roots of 1 + p1 z^-1 + ... + pd z^-d, i.e. of z^d + p1 z^{d-1} + ... + pd,
/// via the companion matrix. Input must start with a nonzero coefficient.
std::vector<std::complex<double>> poly_roots(const Eigen::VectorXd& coeffs);

double max_root_modulus(const Eigen::VectorXd& coeffs);

/// Draws a random stable ARMAX model: A and C sampled root-wise with
/// moduli uniform on [0, rho), B coefficients standard normal with unit
/// delay; the draw is repeated until the ratio between the summed l2 norms
/// of the input responses and the norm of the disturbance response falls
/// in `ratio_range`. Deterministic in `seed`; throws GenerationError after
/// 10^4 attempts.
ArmaxModel random_armax(int order, int num_inputs, double rho,
                        std::pair<double, double> ratio_range, std::uint64_t seed);

/// Multiplies every transfer function by z^2 / (z^2 + 2 a b z + b^2),
/// i.e. appends a lowly damped pole pair to the common denominator.
ArmaxModel add_resonance(const ArmaxModel& model, double b, double a);

/// First `length` samples of B_l/A (or C/A for kNoiseChannel) by the
/// long-division recursion.
std::vector<double> impulse_response(const ArmaxModel& model, int channel, int length);

/// Runs the ARMAX difference equation with unit-spaced times and Gaussian
/// innovations of standard deviation model.noise_std, discarding the first
/// `burn_in` samples. `inputs` must provide burn_in + n columns; the
/// returned record keeps the last n, relabelled to times 0..n-1.
Dataset simulate(const ArmaxModel& model, const Eigen::MatrixXd& inputs, int n, int burn_in,
                 std::uint64_t seed);

/// Marks each training output missing independently with probability
/// `prob`; resamples the mask if everything would be discarded. The test
/// split, if any, is left untouched.
Dataset mask_missing(const Dataset& data, double prob, std::uint64_t seed);

/// Exact k-step-ahead predictions of the true model over `record`
/// (fully observed): the one-step predictor g_l = B_l/C,
/// g_p = (C - A)/C is iterated with its own predictions substituted for
/// in-horizon outputs; samples before the record start are treated as
/// zero. Entry i predicts record.outputs[i] from data up to i-k.
std::vector<double> kstep_predict_true(const ArmaxModel& model, const Dataset& record, int k);

/// All horizons at once: row k-1 holds the k-step predictions.
Eigen::MatrixXd kstep_predict_true_all(const ArmaxModel& model, const Dataset& record, int k_max);

/// Innovation estimates e(t) = y(t) - yhat(t|t-1) under the model, with
/// zero initialization before the record.
std::vector<double> innovations(const ArmaxModel& model, const Dataset& record);

/// Independent unit-variance Gaussian channels, one row per input.
Eigen::MatrixXd white_noise_inputs(int num_inputs, int len, std::uint64_t seed);

/// Random strictly proper second-order transfer function with poles
/// sampled like the system's: returns (numerator, denominator) in
/// ascending-lag form, the numerator with unit delay.
std::pair<Eigen::VectorXd, Eigen::VectorXd> random_lowpass_filter(double rho, std::uint64_t seed);

/// Runs each row of `channels` through num/den with zero initial state.
Eigen::MatrixXd apply_filter(const Eigen::VectorXd& num, const Eigen::VectorXd& den,
                             const Eigen::MatrixXd& channels);

} // namespace ssid
