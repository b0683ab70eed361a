#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "nanorotor/errors.hpp"

namespace nanorotor {

/// Uniformly sampled scalar series starting at t0.
struct SignalTrace {
    double sample_rate = 0.0;  // Hz
    double t0 = 0.0;           // s
    std::vector<double> samples;

    [[nodiscard]] std::size_t size() const { return samples.size(); }
    [[nodiscard]] bool empty() const { return samples.empty(); }
    [[nodiscard]] double interval() const { return 1.0 / sample_rate; }
    [[nodiscard]] double time(std::size_t i) const { return t0 + static_cast<double>(i) / sample_rate; }
    [[nodiscard]] double duration() const {
        return samples.empty() ? 0.0 : static_cast<double>(samples.size() - 1) / sample_rate;
    }
    [[nodiscard]] double max() const {
        return samples.empty() ? 0.0 : *std::max_element(samples.begin(), samples.end());
    }

    void validate() const {
        if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
            throw ValidityError("sample rate must be positive");
        }
    }
};

}  // namespace nanorotor
