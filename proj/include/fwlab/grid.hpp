#pragma once

#include <span>
#include <vector>

#include "fwlab/errors.hpp"

namespace fwlab {

/// Uniform grid on [t0, t1] with `steps` intervals (steps+1 nodes).
struct TimeGrid {
    double t0 = 0.0;
    double t1 = 1.0;
    int steps = 1;

    double dt() const { return (t1 - t0) / steps; }

    // node(steps) == t1 exactly, independent of rounding in dt().
    double node(int k) const {
        return k == steps ? t1 : t0 + (t1 - t0) * (static_cast<double>(k) / steps);
    }

    int node_count() const { return steps + 1; }

    bool operator==(const TimeGrid&) const = default;
};

TimeGrid validate_grid(const TimeGrid& grid);

/// Vector-valued trajectory on a time grid, row-major (node-major) storage.
struct SpacePath {
    TimeGrid grid;
    int dim = 1;
    std::vector<double> values;  // (steps+1) * dim

    SpacePath() = default;
    SpacePath(TimeGrid g, int n)
        : grid(g), dim(n), values(static_cast<size_t>(g.node_count()) * n, 0.0) {}

    std::span<double> at(int k) {
        return {values.data() + static_cast<size_t>(k) * dim, static_cast<size_t>(dim)};
    }
    std::span<const double> at(int k) const {
        return {values.data() + static_cast<size_t>(k) * dim, static_cast<size_t>(dim)};
    }
};

/// Scalar trajectory on a time grid.
struct ScalarPath {
    TimeGrid grid;
    std::vector<double> values;  // steps+1

    ScalarPath() = default;
    explicit ScalarPath(TimeGrid g) : grid(g), values(g.node_count(), 0.0) {}
};

/// Piecewise-linear interpolation, exact at nodes. Throws OutOfSpan.
std::vector<double> interpolate(const SpacePath& path, double s);
double interpolate(const ScalarPath& path, double s);

} // namespace fwlab
