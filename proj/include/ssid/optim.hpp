#pragma once

#include <functional>
#include <vector>

namespace ssid {

struct SimplexResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
};

/// Derivative-free Nelder-Mead minimization with the standard
/// reflection/expansion/contraction/shrink coefficients. Stops when the
/// simplex diameter falls below `param_tol` or after `max_evals`
/// objective evaluations. The objective may return +inf to reject a
/// point.
SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                          const std::vector<double>& start,
                          const std::vector<double>& initial_step,
                          int max_evals, double param_tol);

} // namespace ssid
