#include "ssid/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ssid {

namespace {

double simplex_diameter(const std::vector<std::vector<double>>& pts) {
    double d = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        for (std::size_t k = 0; k < pts[i].size(); ++k)
            d = std::max(d, std::abs(pts[i][k] - pts[0][k]));
    return d;
}

} // namespace

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                          const std::vector<double>& start,
                          const std::vector<double>& initial_step,
                          int max_evals, double param_tol) {
    const std::size_t dim = start.size();
    if (dim == 0) throw std::invalid_argument("nelder_mead: empty start point");
    if (initial_step.size() != dim)
        throw std::invalid_argument("nelder_mead: step size dimension mismatch");

    constexpr double kReflect = 1.0;
    constexpr double kExpand = 2.0;
    constexpr double kContract = 0.5;
    constexpr double kShrink = 0.5;

    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        const double v = objective(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    std::vector<std::vector<double>> pts(dim + 1, start);
    std::vector<double> vals(dim + 1);
    for (std::size_t i = 1; i <= dim; ++i) pts[i][i - 1] += initial_step[i - 1];
    for (std::size_t i = 0; i <= dim && evals < max_evals; ++i) vals[i] = eval(pts[i]);

    auto order = [&] {
        std::vector<std::size_t> idx(dim + 1);
        for (std::size_t i = 0; i <= dim; ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
        std::vector<std::vector<double>> p2(dim + 1);
        std::vector<double> v2(dim + 1);
        for (std::size_t i = 0; i <= dim; ++i) {
            p2[i] = pts[idx[i]];
            v2[i] = vals[idx[i]];
        }
        pts.swap(p2);
        vals.swap(v2);
    };
    order();

    while (evals < max_evals && simplex_diameter(pts) > param_tol) {
        std::vector<double> centroid(dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t k = 0; k < dim; ++k) centroid[k] += pts[i][k] / static_cast<double>(dim);

        auto blend = [&](double coeff) {
            std::vector<double> x(dim);
            for (std::size_t k = 0; k < dim; ++k)
                x[k] = centroid[k] + coeff * (centroid[k] - pts[dim][k]);
            return x;
        };

        const auto reflected = blend(kReflect);
        const double fr = eval(reflected);
        if (fr < vals[0]) {
            const auto expanded = blend(kExpand);
            const double fe = eval(expanded);
            if (fe < fr) {
                pts[dim] = expanded;
                vals[dim] = fe;
            } else {
                pts[dim] = reflected;
                vals[dim] = fr;
            }
        } else if (fr < vals[dim - 1]) {
            pts[dim] = reflected;
            vals[dim] = fr;
        } else {
            const bool outside = fr < vals[dim];
            std::vector<double> contracted(dim);
            for (std::size_t k = 0; k < dim; ++k) {
                const double target = outside ? reflected[k] : pts[dim][k];
                contracted[k] = centroid[k] + kContract * (target - centroid[k]);
            }
            const double fc = eval(contracted);
            if (fc < (outside ? fr : vals[dim])) {
                pts[dim] = contracted;
                vals[dim] = fc;
            } else {
                for (std::size_t i = 1; i <= dim && evals < max_evals; ++i) {
                    for (std::size_t k = 0; k < dim; ++k)
                        pts[i][k] = pts[0][k] + kShrink * (pts[i][k] - pts[0][k]);
                    vals[i] = eval(pts[i]);
                }
            }
        }
        order();
    }

    return SimplexResult{pts[0], vals[0], evals};
}

} // namespace ssid
