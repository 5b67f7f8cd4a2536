#include "fwlab/grid.hpp"

#include <cmath>

namespace fwlab {

TimeGrid validate_grid(const TimeGrid& grid) {
    if (!(grid.t0 < grid.t1) || grid.steps < 1)
        throw SolverError(ErrorCode::ConfigError, "time grid requires t0 < t1 and steps >= 1");
    return grid;
}

namespace {

// Locates s in the grid and returns (left index, interpolation weight).
std::pair<int, double> locate(const TimeGrid& grid, double s) {
    if (s < grid.t0 || s > grid.t1)
        throw SolverError(ErrorCode::OutOfSpan, "time " + std::to_string(s) + " outside [" +
                                                    std::to_string(grid.t0) + ", " +
                                                    std::to_string(grid.t1) + "]");
    double pos = (s - grid.t0) / (grid.t1 - grid.t0) * grid.steps;
    int k = static_cast<int>(std::floor(pos));
    if (k >= grid.steps) return {grid.steps - 1, 1.0};
    return {k, pos - k};
}

} // namespace

std::vector<double> interpolate(const SpacePath& path, double s) {
    auto [k, w] = locate(path.grid, s);
    std::vector<double> out(path.dim);
    auto a = path.at(k);
    auto b = path.at(k + 1);
    for (int i = 0; i < path.dim; ++i) out[i] = (1.0 - w) * a[i] + w * b[i];
    return out;
}

double interpolate(const ScalarPath& path, double s) {
    auto [k, w] = locate(path.grid, s);
    return (1.0 - w) * path.values[k] + w * path.values[k + 1];
}

} // namespace fwlab
