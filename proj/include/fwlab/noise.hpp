#pragma once

#include <cstdint>
#include <vector>

#include "fwlab/grid.hpp"

namespace fwlab {

/// Brownian increments for one trajectory, derived counter-style from
/// (master_seed, trajectory_index) alone so that trajectory-level
/// parallelism cannot change the draws.
struct NoiseStream {
    std::uint64_t master_seed = 0;
    std::uint64_t trajectory_index = 0;
    int steps = 0;
    int dim = 1;
    std::vector<double> increments;  // steps * dim, each ~ N(0, dt)

    double dw(int k, int i) const {
        return increments[static_cast<size_t>(k) * dim + i];
    }
};

NoiseStream make_noise(std::uint64_t master_seed, std::uint64_t trajectory_index,
                       const TimeGrid& grid, int dim);

namespace rng {

// SplitMix64 output function; the whole stream is a pure function of the key.
std::uint64_t mix64(std::uint64_t z);

// Counter-based standard normal: deterministic in (key, counter).
double standard_normal(std::uint64_t key, std::uint64_t counter);

// Uniform in [0, 1).
double uniform01(std::uint64_t key, std::uint64_t counter);

std::uint64_t stream_key(std::uint64_t master_seed, std::uint64_t trajectory_index);

} // namespace rng

} // namespace fwlab
