#include "ssid/dataset.hpp"

#include <stdexcept>

namespace ssid {

int Dataset::observed_count() const {
    int c = 0;
    for (auto m : missing)
        if (!m) ++c;
    return c;
}

int Dataset::missing_count() const { return n() - observed_count(); }

std::vector<std::int64_t> Dataset::observed_times() const {
    std::vector<std::int64_t> out;
    for (int i = 0; i < n(); ++i)
        if (!missing[i]) out.push_back(times[i]);
    return out;
}

std::vector<std::int64_t> Dataset::missing_times() const {
    std::vector<std::int64_t> out;
    for (int i = 0; i < n(); ++i)
        if (missing[i]) out.push_back(times[i]);
    return out;
}

std::vector<int> Dataset::observed_indices() const {
    std::vector<int> out;
    for (int i = 0; i < n(); ++i)
        if (!missing[i]) out.push_back(i);
    return out;
}

std::vector<int> Dataset::missing_indices() const {
    std::vector<int> out;
    for (int i = 0; i < n(); ++i)
        if (missing[i]) out.push_back(i);
    return out;
}

void Dataset::validate() const {
    const int len = n();
    if (outputs.size() != len || static_cast<int>(missing.size()) != len)
        throw std::invalid_argument("Dataset: outputs/missing sizes disagree with times");
    if (!imputed.empty() && static_cast<int>(imputed.size()) != len)
        throw std::invalid_argument("Dataset: imputed flags have wrong length");
    if (inputs.rows() > 0 && inputs.cols() != len)
        throw std::invalid_argument("Dataset: inputs column count disagrees with times");
    for (int i = 1; i < len; ++i) {
        if (times[i] <= times[i - 1])
            throw std::invalid_argument("Dataset: times must be strictly increasing");
        if (inputs.rows() > 0 && times[i] != times[i - 1] + 1)
            throw std::invalid_argument("Dataset: unit spacing required when inputs are present");
    }
}

} // namespace ssid
