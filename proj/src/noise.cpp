#include "fwlab/noise.hpp"

#include <cmath>
#include <numbers>

namespace fwlab {
namespace rng {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;  // SplitMix64 increment
}

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t stream_key(std::uint64_t master_seed, std::uint64_t trajectory_index) {
    return mix64(mix64(master_seed + kGamma) + trajectory_index * kGamma);
}

double uniform01(std::uint64_t key, std::uint64_t counter) {
    std::uint64_t r = mix64(key + (counter + 1) * kGamma);
    return static_cast<double>(r >> 11) * 0x1.0p-53;
}

double standard_normal(std::uint64_t key, std::uint64_t counter) {
    // Box-Muller on two counter slots; u1 shifted into (0, 1].
    double u1 = 1.0 - uniform01(key, 2 * counter);
    double u2 = uniform01(key, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace rng

NoiseStream make_noise(std::uint64_t master_seed, std::uint64_t trajectory_index,
                       const TimeGrid& grid, int dim) {
    validate_grid(grid);
    NoiseStream stream;
    stream.master_seed = master_seed;
    stream.trajectory_index = trajectory_index;
    stream.steps = grid.steps;
    stream.dim = dim;
    stream.increments.resize(static_cast<size_t>(grid.steps) * dim);
    const std::uint64_t key = rng::stream_key(master_seed, trajectory_index);
    const double scale = std::sqrt(grid.dt());
    for (size_t i = 0; i < stream.increments.size(); ++i)
        stream.increments[i] = scale * rng::standard_normal(key, i);
    return stream;
}

} // namespace fwlab
