#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ssid/errors.hpp"

namespace ssid::detail {

/// Symmetric PSD square root factor L with M ~= L L^T; negative
/// eigenvalue noise is clamped to zero.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const Eigen::VectorXd scale = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * scale.asDiagonal();
}

struct SpdFactor {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
    double condition = 1.0;   // rough estimate from the Cholesky diagonal
    double logdet = 0.0;
};

/// Cholesky factorization with jitter escalation delta * (trace/n) * I,
/// delta in {0, 1e-12, 1e-10, 1e-8}. Throws IllConditionedError when even
/// the largest jitter fails.
inline SpdFactor factor_spd(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    const double scale = m.trace() / std::max(n, 1);
    constexpr double deltas[] = {0.0, 1e-12, 1e-10, 1e-8};
    for (double delta : deltas) {
        Eigen::MatrixXd jittered = m;
        if (delta > 0.0) jittered.diagonal().array() += delta * scale;
        SpdFactor f;
        f.llt.compute(jittered);
        if (f.llt.info() != Eigen::Success) continue;
        const auto diag = f.llt.matrixLLT().diagonal();
        const double dmin = diag.minCoeff();
        const double dmax = diag.maxCoeff();
        if (!(dmin > 0.0) || !std::isfinite(dmax)) continue;
        f.jitter = delta * scale;
        f.condition = (dmax / dmin) * (dmax / dmin);
        f.logdet = 2.0 * diag.array().log().sum();
        return f;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    const double condition = lo != 0.0 ? std::abs(hi / lo) : std::numeric_limits<double>::infinity();
    throw IllConditionedError("kernel matrix not positive definite after jitter escalation",
                              condition);
}

/// Lag-window regressor rows: entry (r, j) holds series(t_r - lag0 - j)
/// where the series value at integer time t is series[t - t_first], zero
/// before t_first. Query times may not look past the series end.
inline Eigen::MatrixXd lag_window_matrix(const Eigen::Ref<const Eigen::VectorXd>& series,
                                         std::int64_t t_first,
                                         std::span<const std::int64_t> query_times, int lag0,
                                         int count) {
    const std::int64_t len = series.size();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(query_times.size()), count);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
        const std::int64_t t = query_times[r];
        if (t - lag0 >= t_first + len)
            throw std::out_of_range("lag_window_matrix: query time beyond series end");
        for (int j = 0; j < count; ++j) {
            const std::int64_t tau = t - lag0 - j;
            if (tau < t_first) break;  // earlier samples are all zero-padded
            if (tau < t_first + len) w(r, j) = series[tau - t_first];
        }
    }
    return w;
}

} // namespace ssid::detail
