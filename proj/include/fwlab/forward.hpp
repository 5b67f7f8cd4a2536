#pragma once

#include <cstdint>

#include "fwlab/noise.hpp"
#include "fwlab/problem.hpp"

namespace fwlab {

/// Monte Carlo moments of the sup-norm deviation between the perturbed
/// state and the deterministic flow on a common grid.
struct ForwardRunStats {
    int sample_count = 0;
    double sup_dev_l2 = 0.0;  // E[ sup_k |X - chi|^2 ]
    double se_l2 = 0.0;
    double sup_dev_l1 = 0.0;  // E[ sup_k |X - chi| ]
    double se_l1 = 0.0;
};

/// Euler-Maruyama on the grid: X_{k+1} = X_k + b(t_k, X_k) dt + sqrt(eps) dW_k.
/// With eps = 0 this is the Euler polygon of the flow.
SpacePath simulate_forward(const ProblemSpec& spec, double eps, const TimeGrid& grid,
                           const NoiseStream& noise);

/// Classical RK4 integration of the noiseless flow on the grid.
SpacePath solve_flow(const ProblemSpec& spec, const TimeGrid& grid);

/// M independent trajectories against solve_flow on the same grid.
/// Deterministic in (spec, eps, grid, M, master_seed) for any thread count.
ForwardRunStats deviation_stats(const ProblemSpec& spec, double eps, const TimeGrid& grid,
                                int sample_count, std::uint64_t master_seed);

} // namespace fwlab
