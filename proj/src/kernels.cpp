#include "ssid/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ssid/errors.hpp"

namespace ssid {

namespace {

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

// (r - u)_+^{q-1} / (q-1)!
double green_gq(double r, double u, int q) {
    const double d = r - u;
    if (d < 0.0) return 0.0;
    if (q == 1) return 1.0;
    return std::pow(d, q - 1) / factorial(q - 1);
}

struct SimpsonState {
    double s, t;
    int q;
    double tol;
    int max_depth = 60;
};

double integrand(const SimpsonState& st, double u) {
    return green_gq(st.s, u, st.q) * green_gq(st.t, u, st.q);
}

double adaptive_simpson(const SimpsonState& st, double a, double b, double fa, double fm, double fb,
                        double whole, double eps, int depth, bool& converged) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = integrand(st, lm);
    const double frm = integrand(st, rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * eps || (b - a) < 1e-14) {
        return left + right + delta / 15.0;
    }
    if (depth >= st.max_depth) {
        converged = false;
        return left + right + delta / 15.0;
    }
    return adaptive_simpson(st, a, m, fa, flm, fm, left, 0.5 * eps, depth + 1, converged) +
           adaptive_simpson(st, m, b, fm, frm, fb, right, 0.5 * eps, depth + 1, converged);
}

} // namespace

bool inside_stability_triangle(double phi, double varphi) {
    return std::abs(varphi) < 1.0 && std::abs(phi) < 1.0 + varphi;
}

void KernelSpec::validate() const {
    if (!(beta > 0.0)) throw std::invalid_argument("KernelSpec: beta must be positive");
    if (order_q != 1 && order_q != 2)
        throw std::invalid_argument("KernelSpec: closed forms require order_q in {1,2}");
    if (truncation_len < 1) throw std::invalid_argument("KernelSpec: truncation_len must be >= 1");
    if (enrichment && !inside_stability_triangle(enrichment->phi, enrichment->varphi))
        throw std::invalid_argument("KernelSpec: enrichment outside the stability triangle");
}

double spline_kernel_w(double s, double t, int q) {
    if (s < 0.0 || s > 1.0 || t < 0.0 || t > 1.0)
        throw std::domain_error("spline_kernel_w: arguments must lie in [0,1]");
    const double lo = std::min(s, t);
    const double hi = std::max(s, t);
    switch (q) {
        case 1:
            return lo;
        case 2:
            return hi * lo * lo / 2.0 - lo * lo * lo / 6.0;
        default:
            throw std::invalid_argument("spline_kernel_w: unsupported order q (closed forms: 1, 2)");
    }
}

double spline_kernel_quadrature(double s, double t, int q, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("spline_kernel_quadrature: tol must be positive");
    if (q < 1) throw std::invalid_argument("spline_kernel_quadrature: q must be >= 1");
    if (s < 0.0 || s > 1.0 || t < 0.0 || t > 1.0)
        throw std::domain_error("spline_kernel_quadrature: arguments must lie in [0,1]");
    const double upper = std::min(s, t); // integrand vanishes beyond min(s,t)
    if (upper <= 0.0) return 0.0;
    SimpsonState st{s, t, q, tol};
    const double fa = integrand(st, 0.0);
    const double fb = integrand(st, upper);
    const double fm = integrand(st, 0.5 * upper);
    const double whole = upper / 6.0 * (fa + 4.0 * fm + fb);
    bool converged = true;
    const double value = adaptive_simpson(st, 0.0, upper, fa, fm, fb, whole, tol, 0, converged);
    if (!converged)
        throw QuadratureAccuracyError("spline_kernel_quadrature: accuracy not reached", value, tol);
    return value;
}

double stable_spline_k(double s, double t, const KernelSpec& spec) {
    spec.validate();
    if (s < 0.0 || t < 0.0) throw std::domain_error("stable_spline_k: times must be nonnegative");
    const double beta = spec.beta;
    const double hi = std::max(s, t);
    if (spec.order_q == 1) return std::exp(-beta * hi);
    return std::exp(-beta * (s + t)) * std::exp(-beta * hi) / 2.0 - std::exp(-3.0 * beta * hi) / 6.0;
}

double rbf_h_continuous(double x, const KernelSpec& spec) {
    spec.validate();
    const double beta = spec.beta;
    const double ax = std::abs(x);
    if (spec.order_q == 1) return std::exp(-beta * ax) / beta;
    return (3.0 * std::exp(-2.0 * beta * ax) - std::exp(-3.0 * beta * ax)) / (18.0 * beta);
}

double rbf_h_discrete(std::int64_t lag, const KernelSpec& spec) {
    spec.validate();
    return stable_spline_tail(1, std::llabs(lag), spec.order_q, spec.beta);
}

double stable_spline_tail(int i0, std::int64_t d, int q, double beta) {
    // K(i, i+d) factors as E(i) * F(d); summing the geometric part over
    // i >= i0 gives E(i0)/(1 - ratio) * F(d).
    if (q == 1) {
        return std::exp(-beta * (static_cast<double>(d) + i0)) / (1.0 - std::exp(-beta));
    }
    const double f = (3.0 * std::exp(-2.0 * beta * static_cast<double>(d)) -
                      std::exp(-3.0 * beta * static_cast<double>(d))) / 6.0;
    return f * std::exp(-3.0 * beta * i0) / (1.0 - std::exp(-3.0 * beta));
}

std::vector<double> enrichment_impulse(double phi, double varphi, int length) {
    if (length < 1) throw std::invalid_argument("enrichment_impulse: length must be >= 1");
    if (!inside_stability_triangle(phi, varphi))
        throw std::invalid_argument("enrichment_impulse: (phi, varphi) outside the stability triangle");
    std::vector<double> h(static_cast<std::size_t>(length), 0.0);
    h[0] = 1.0;
    if (length > 1) h[1] = -phi;
    for (int k = 2; k < length; ++k) h[k] = -phi * h[k - 1] - varphi * h[k - 2];
    return h;
}

double enriched_kernel(std::int64_t s, std::int64_t t, const KernelSpec& spec) {
    spec.validate();
    if (!spec.enrichment)
        throw std::invalid_argument("enriched_kernel: spec has no enrichment configured");
    if (s < 0 || t < 0) throw std::domain_error("enriched_kernel: times must be nonnegative");
    const auto h = enrichment_impulse(spec.enrichment->phi, spec.enrichment->varphi, spec.truncation_len);
    KernelSpec base = spec;
    base.enrichment.reset();
    const std::int64_t amax = std::min<std::int64_t>(s, spec.truncation_len - 1);
    const std::int64_t bmax = std::min<std::int64_t>(t, spec.truncation_len - 1);
    double acc = 0.0;
    for (std::int64_t a = 0; a <= amax; ++a) {
        for (std::int64_t b = 0; b <= bmax; ++b) {
            acc += h[a] * h[b] *
                   stable_spline_k(static_cast<double>(s - a), static_cast<double>(t - b), base);
        }
    }
    return acc;
}

double enriched_rbf_h(std::int64_t lag, const KernelSpec& spec) {
    spec.validate();
    if (!spec.enrichment) return rbf_h_discrete(lag, spec);

    const int q = spec.order_q;
    const double beta = spec.beta;
    const int tf = spec.truncation_len;
    const std::int64_t x = std::llabs(lag);
    const auto h = enrichment_impulse(spec.enrichment->phi, spec.enrichment->varphi, tf);

    // sum_{j>=1} K_enr(j, j+x) = sum_{a,b} h(a) h(b) sum_i K(i, i+(a+x-b));
    // the inner sum is a geometric tail whose start index depends only on
    // whether a = 0 and on the sign of d = a + x - b.
    const double rate = (q == 1) ? beta : 3.0 * beta;
    const double geo = 1.0 / (1.0 - std::exp(-rate));
    const double e0 = geo;
    const double e1 = std::exp(-rate) * geo;

    std::vector<double> f(static_cast<std::size_t>(tf + x), 0.0);
    for (std::int64_t d = 0; d < static_cast<std::int64_t>(f.size()); ++d) {
        if (q == 1) {
            f[d] = std::exp(-beta * static_cast<double>(d));
        } else {
            f[d] = (3.0 * std::exp(-2.0 * beta * static_cast<double>(d)) -
                    std::exp(-3.0 * beta * static_cast<double>(d))) / 6.0;
        }
    }

    double acc = 0.0;
    for (int a = 0; a < tf; ++a) {
        const double ea = (a == 0) ? e1 : e0;
        const double ha = h[a];
        if (ha == 0.0) continue;
        double row = 0.0;
        for (int b = 0; b < tf; ++b) {
            const std::int64_t d = a + x - b;
            row += (d >= 0) ? h[b] * ea * f[d] : h[b] * e0 * f[-d];
        }
        acc += ha * row;
    }
    return acc;
}

GramMatrix gram_matrix_rbf(std::span<const std::int64_t> times, const KernelSpec& spec) {
    spec.validate();
    const int n = static_cast<int>(times.size());
    for (int i = 1; i < n; ++i)
        if (times[i] <= times[i - 1])
            throw std::invalid_argument("gram_matrix_rbf: times must be strictly increasing");

    // memoize h per distinct lag so equal lags share one value exactly
    const std::int64_t span_len = n > 0 ? times[n - 1] - times[0] : 0;
    std::vector<double> h_by_lag(static_cast<std::size_t>(span_len) + 1);
    std::vector<bool> have(h_by_lag.size(), false);
    auto h_at = [&](std::int64_t lag) {
        if (!have[lag]) {
            h_by_lag[lag] = enriched_rbf_h(lag, spec);
            have[lag] = true;
        }
        return h_by_lag[lag];
    };

    GramMatrix g;
    g.entries.resize(n, n);
    g.times.reserve(n);
    for (auto t : times) g.times.push_back(static_cast<double>(t));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            const double v = h_at(times[i] - times[j]);
            g.entries(i, j) = v;
            g.entries(j, i) = v;
        }
    }
    return g;
}

GramMatrix gram_matrix_rbf_continuous(std::span<const double> times, const KernelSpec& spec) {
    spec.validate();
    if (spec.enrichment)
        throw std::invalid_argument("gram_matrix_rbf_continuous: enrichment is discrete-time only");
    const int n = static_cast<int>(times.size());
    for (int i = 1; i < n; ++i)
        if (!(times[i] > times[i - 1]))
            throw std::invalid_argument("gram_matrix_rbf_continuous: times must be strictly increasing");
    GramMatrix g;
    g.entries.resize(n, n);
    g.times.assign(times.begin(), times.end());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            const double v = rbf_h_continuous(times[i] - times[j], spec);
            g.entries(i, j) = v;
            g.entries(j, i) = v;
        }
    }
    return g;
}

Eigen::MatrixXd truncated_kernel_gram(const KernelSpec& spec) {
    spec.validate();
    const int tf = spec.truncation_len;
    KernelSpec base = spec;
    base.enrichment.reset();
    Eigen::MatrixXd k(tf, tf);
    for (int i = 0; i < tf; ++i) {
        for (int j = 0; j <= i; ++j) {
            const double v = stable_spline_k(static_cast<double>(i), static_cast<double>(j), base);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    if (!spec.enrichment) return k;

    const auto h = enrichment_impulse(spec.enrichment->phi, spec.enrichment->varphi, tf);
    Eigen::MatrixXd filt = Eigen::MatrixXd::Zero(tf, tf);
    for (int i = 0; i < tf; ++i)
        for (int j = 0; j <= i; ++j) filt(i, j) = h[i - j];
    Eigen::MatrixXd enriched = filt * k * filt.transpose();
    enriched = ((enriched + enriched.transpose()) / 2.0).eval();
    return enriched;
}

} // namespace ssid
