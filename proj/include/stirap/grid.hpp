#pragma once

#include <string>

#include "stirap/common.hpp"

namespace stirap {

/// Uniform grid t_k = k*h on [0, T] with M steps (M + 1 nodes).
struct TimeGrid {
    double duration = 0.0;
    int steps = 0;

    TimeGrid() = default;
    TimeGrid(double T, int M) : duration(T), steps(M) { validate(); }

    void validate() const {
        if (!(duration > 0.0))
            throw ConfigError("time grid duration must be positive");
        if (steps < 2)
            throw ConfigError("time grid needs at least 2 steps, got " + std::to_string(steps));
    }

    double step() const { return duration / steps; }
    int nodes() const { return steps + 1; }
    double time(int k) const { return k == steps ? duration : k * step(); }

    bool operator==(const TimeGrid&) const = default;
};

/// Composite trapezoidal rule over the grid nodes.
template <typename F>
double trapezoid(const TimeGrid& grid, F&& sample) {
    double sum = 0.5 * (sample(0) + sample(grid.steps));
    for (int k = 1; k < grid.steps; ++k) sum += sample(k);
    return sum * grid.step();
}

}  // namespace stirap
