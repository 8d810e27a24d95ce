#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ssid {

/// Coefficients of the all-pole filter H(z) = z^2 / (z^2 + phi z + varphi)
/// used to enrich a smooth kernel with a pair of (possibly resonant) poles.
struct Enrichment {
    double phi = 0.0;
    double varphi = 0.0;
};

/// True when the roots of z^2 + phi z + varphi lie strictly inside the
/// unit circle (|varphi| < 1 and |phi| < 1 + varphi).
bool inside_stability_triangle(double phi, double varphi);

/// Configuration of one kernel: order, decay rate, optional parametric
/// enrichment and the truncation length used by discrete convolutions.
struct KernelSpec {
    int order_q = 2;           // closed forms exist for q in {1, 2}
    double beta = 1.0;         // exponential decay rate, > 0
    std::optional<Enrichment> enrichment;
    int truncation_len = 100;  // impulse-response support kept in convolutions

    /// Throws std::invalid_argument when any invariant is violated.
    void validate() const;
};

struct GramMatrix {
    Eigen::MatrixXd entries;
    std::vector<double> times;
};

/// Spline kernel W_q(s,t): covariance of q-fold integrated white noise on
/// [0,1]. Closed forms for q = 1 (min) and q = 2; other orders go through
/// spline_kernel_quadrature.
double spline_kernel_w(double s, double t, int q);

/// Numerically integrates G_q(s,u) G_q(t,u) over [0,1] to absolute
/// accuracy tol (adaptive Simpson). Supports any q >= 1; throws
/// QuadratureAccuracyError when the tolerance cannot be met.
double spline_kernel_quadrature(double s, double t, int q, double tol);

/// Stable spline kernel K(s,t) = W_q(exp(-beta s), exp(-beta t)) on
/// nonnegative times; identical formula serves the sampled (integer-time)
/// version.
double stable_spline_k(double s, double t, const KernelSpec& spec);

/// Stationary covariance h(x) of a process obtained by feeding white noise
/// through an impulse response with stable spline prior, continuous time:
/// h(x) = integral_0^inf K(y, y+|x|) dy.
double rbf_h_continuous(double x, const KernelSpec& spec);

/// Discrete-time counterpart: h(x) = sum_{j>=1} K(j, j+|x|).
double rbf_h_discrete(std::int64_t lag, const KernelSpec& spec);

/// First `length` samples of H(z) = z^2/(z^2 + phi z + varphi):
/// h(0) = 1, h(1) = -phi, h(k) = -phi h(k-1) - varphi h(k-2).
/// Throws std::invalid_argument for coefficients outside the stability
/// triangle.
std::vector<double> enrichment_impulse(double phi, double varphi, int length);

/// Kernel of the enriched process f = g (x) h where g has stable spline
/// covariance: sum_{a,b < T_f} h(a) h(b) K(s-a, t-b), with K vanishing
/// off the nonnegative quadrant. Discrete time only; requires
/// spec.enrichment.
double enriched_kernel(std::int64_t s, std::int64_t t, const KernelSpec& spec);

/// Stationary covariance sum_{j>=1} K_enr(j, j+|x|) of the disturbance when
/// the underlying kernel is enriched; evaluated exactly through geometric
/// tail sums. Falls back to rbf_h_discrete when no enrichment is configured.
double enriched_rbf_h(std::int64_t lag, const KernelSpec& spec);

/// n x n matrix [h(t_i - t_j)] over strictly increasing integer instants.
GramMatrix gram_matrix_rbf(std::span<const std::int64_t> times, const KernelSpec& spec);

/// Continuous-time version using rbf_h_continuous (no enrichment support).
GramMatrix gram_matrix_rbf_continuous(std::span<const double> times, const KernelSpec& spec);

/// T_f x T_f Gram of the (possibly enriched) stable spline kernel over
/// lags 0..T_f-1, the building block of output-kernel and regression
/// covariances.
Eigen::MatrixXd truncated_kernel_gram(const KernelSpec& spec);

/// Geometric tail sum_{i>=i0} K(i, i+d) of the sampled stable spline
/// kernel, i0 >= 0, d >= 0, in closed form.
double stable_spline_tail(int i0, std::int64_t d, int q, double beta);

} // namespace ssid
