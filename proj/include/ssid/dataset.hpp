#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace ssid {

/// One input/output record: integer sampling instants, one row of `inputs`
/// per observable input channel, outputs with a missing mask. `imputed`
/// stays empty until an imputation pass fills the record, after which it
/// marks the rows whose output value is an estimate. `test` optionally
/// carries a held-out record used for k-step evaluation.
struct Dataset {
    std::vector<std::int64_t> times;
    Eigen::MatrixXd inputs;             // (p-1) x n, possibly 0 x n
    Eigen::VectorXd outputs;            // NaN where missing
    std::vector<std::uint8_t> missing;  // size n
    std::vector<std::uint8_t> imputed;  // empty, or size n once completed
    std::shared_ptr<const Dataset> test;

    int n() const { return static_cast<int>(times.size()); }
    int num_inputs() const { return static_cast<int>(inputs.rows()); }

    int observed_count() const;
    int missing_count() const;
    std::vector<std::int64_t> observed_times() const;
    std::vector<std::int64_t> missing_times() const;
    std::vector<int> observed_indices() const;
    std::vector<int> missing_indices() const;

    /// Throws std::invalid_argument when sizes disagree, times are not
    /// strictly increasing, or (with inputs present) spacing is not unit.
    void validate() const;
};

} // namespace ssid
