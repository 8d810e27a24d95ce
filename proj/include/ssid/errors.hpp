#pragma once

#include <stdexcept>
#include <string>

namespace ssid {

/// Adaptive quadrature gave up before reaching the requested accuracy.
/// Carries the best estimate so callers can decide whether it is usable.
class QuadratureAccuracyError : public std::runtime_error {
public:
    QuadratureAccuracyError(const std::string& what, double estimate, double error)
        : std::runtime_error(what), achieved_estimate(estimate), achieved_error(error) {}
    double achieved_estimate;
    double achieved_error;
};

/// Kernel matrix could not be factorized even after jitter escalation.
class IllConditionedError : public std::runtime_error {
public:
    IllConditionedError(const std::string& what, double condition)
        : std::runtime_error(what), condition_estimate(condition) {}
    double condition_estimate;
};

/// Random model generation exhausted its resampling budget.
class GenerationError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The one-step predictor of a model is unstable (C has roots on or
/// outside the unit circle).
class PredictorInstabilityError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Hyperparameter search failed at every candidate point.
class OptimizationError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input file; carries the offending 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line_number)
        : std::runtime_error(what + " (line " + std::to_string(line_number) + ")"),
          line(line_number) {}
    int line;
};

} // namespace ssid
