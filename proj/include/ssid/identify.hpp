#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ssid/dataset.hpp"
#include "ssid/imputer.hpp"
#include "ssid/kernels.hpp"

namespace ssid {

/// One-step-ahead linear predictor with nonparametric impulse responses:
/// yhat(t) = sum_l sum_{j=1..T} g_inputs(l,j-1) u_l(t-j)
///         + sum_{j=1..T} g_output(j-1) y(t-j).
struct PredictorModel {
    Eigen::MatrixXd g_inputs;   // (p-1) x T, lag j stored at column j-1
    Eigen::VectorXd g_output;   // T
    Hyperparameters hyperparameters;

    int coeff_len() const { return static_cast<int>(g_output.size()); }
};

/// Fits the predictor coefficients by regularized least squares with a
/// shared (possibly enriched) stable spline prior over every channel and
/// a unit-variance residual; (beta, phi, varphi) by grid + simplex search
/// of the marginal likelihood, the scale by an inner one-dimensional
/// profile. Regressor entries before the first record time are zero.
/// Rows whose output was imputed can be down-weighted via
/// `imputed_weight` (default keeps them at full weight). The record must
/// be fully observed and hold at least 10 rows.
PredictorModel fit_predictor(const Dataset& data, const KernelSpec& family,
                             const SearchConfig& search, double imputed_weight = 1.0);

/// Same regression at fixed hyperparameters, skipping the search.
PredictorModel fit_predictor_fixed(const Dataset& data, const KernelSpec& family,
                                   const Hyperparameters& hp, double imputed_weight = 1.0);

/// k-step-ahead predictions over `record`: the fitted one-step predictor
/// is iterated, substituting its own predictions for in-horizon outputs;
/// inputs are known throughout and samples before the record start count
/// as zero. Entry i predicts record.outputs[i] from data up to i-k.
std::vector<double> kstep_predict(const PredictorModel& model, const Dataset& record, int k);

/// All horizons at once; row k-1 holds the k-step predictions.
Eigen::MatrixXd kstep_predict_all(const PredictorModel& model, const Dataset& record, int k_max);

/// Coefficient of determination 1 - |truth - estimate|^2 / |truth - mean|^2.
/// Throws std::invalid_argument when the truth is constant.
double cod_miss(std::span<const double> truth, std::span<const double> estimates);

/// Same statistic over a test record and its k-step predictions.
double cod_k(std::span<const double> test_truth, std::span<const double> predictions);

} // namespace ssid
