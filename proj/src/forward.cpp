#include "fwlab/forward.hpp"

#include <cmath>

namespace fwlab {

namespace {

void check_finite(std::span<const double> x, int node) {
    for (double v : x)
        if (!std::isfinite(v))
            throw SolverError(ErrorCode::NonfiniteState,
                              "state left the representable range at node " +
                                  std::to_string(node));
}

void check_span(const ProblemSpec& spec, const TimeGrid& grid) {
    validate_grid(grid);
    if (std::abs(grid.t0 - spec.t0) > 1e-12 || std::abs(grid.t1 - spec.T) > 1e-12)
        throw SolverError(ErrorCode::IncompatibleGrid, "grid does not span [t, T]");
}

} // namespace

SpacePath simulate_forward(const ProblemSpec& spec, double eps, const TimeGrid& grid,
                           const NoiseStream& noise) {
    check_span(spec, grid);
    const int n = spec.dimension;
    if (noise.steps != grid.steps || noise.dim != n)
        throw SolverError(ErrorCode::IncompatibleGrid, "noise stream dimensioned for another grid");

    SpacePath path(grid, n);
    std::copy(spec.x0.begin(), spec.x0.end(), path.at(0).begin());
    const double dt = grid.dt();
    const double root_eps = std::sqrt(eps);
    std::vector<double> b(n);
    for (int k = 0; k < grid.steps; ++k) {
        auto xk = path.at(k);
        auto xn = path.at(k + 1);
        drift_of(spec, grid.node(k), xk, b);
        for (int i = 0; i < n; ++i) xn[i] = xk[i] + b[i] * dt + root_eps * noise.dw(k, i);
        check_finite(xn, k + 1);
    }
    return path;
}

SpacePath solve_flow(const ProblemSpec& spec, const TimeGrid& grid) {
    check_span(spec, grid);
    const int n = spec.dimension;
    SpacePath path(grid, n);
    std::copy(spec.x0.begin(), spec.x0.end(), path.at(0).begin());
    const double dt = grid.dt();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    for (int k = 0; k < grid.steps; ++k) {
        auto xk = path.at(k);
        auto xn = path.at(k + 1);
        const double t = grid.node(k);
        drift_of(spec, t, xk, k1);
        for (int i = 0; i < n; ++i) tmp[i] = xk[i] + 0.5 * dt * k1[i];
        drift_of(spec, t + 0.5 * dt, tmp, k2);
        for (int i = 0; i < n; ++i) tmp[i] = xk[i] + 0.5 * dt * k2[i];
        drift_of(spec, t + 0.5 * dt, tmp, k3);
        for (int i = 0; i < n; ++i) tmp[i] = xk[i] + dt * k3[i];
        drift_of(spec, t + dt, tmp, k4);
        for (int i = 0; i < n; ++i)
            xn[i] = xk[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        check_finite(xn, k + 1);
    }
    return path;
}

ForwardRunStats deviation_stats(const ProblemSpec& spec, double eps, const TimeGrid& grid,
                                int sample_count, std::uint64_t master_seed) {
    if (sample_count < 2)
        throw SolverError(ErrorCode::ConfigError, "deviation_stats needs M >= 2");
    const SpacePath flow = solve_flow(spec, grid);
    const int n = spec.dimension;

    // Per-trajectory values first, reduced in index order: the result is
    // identical under any trajectory-level parallelism.
    std::vector<double> dev(sample_count);
    for (int m = 0; m < sample_count; ++m) {
        const NoiseStream noise = make_noise(master_seed, m, grid, n);
        const SpacePath x = simulate_forward(spec, eps, grid, noise);
        double sup = 0.0;
        for (int k = 0; k <= grid.steps; ++k) {
            auto a = x.at(k);
            auto c = flow.at(k);
            double d2 = 0.0;
            for (int i = 0; i < n; ++i) d2 += (a[i] - c[i]) * (a[i] - c[i]);
            sup = std::max(sup, d2);
        }
        dev[m] = std::sqrt(sup);
    }

    double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
    for (double d : dev) {
        s1 += d;
        s2 += d * d;
        s3 += d * d * d;
        s4 += d * d * d * d;
    }
    const double M = sample_count;
    ForwardRunStats stats;
    stats.sample_count = sample_count;
    stats.sup_dev_l1 = s1 / M;
    stats.sup_dev_l2 = s2 / M;
    const double var1 = std::max(0.0, s2 / M - stats.sup_dev_l1 * stats.sup_dev_l1);
    const double var2 = std::max(0.0, s4 / M - stats.sup_dev_l2 * stats.sup_dev_l2);
    stats.se_l1 = std::sqrt(var1 / M);
    stats.se_l2 = std::sqrt(var2 / M);
    (void)s3;
    return stats;
}

} // namespace fwlab
