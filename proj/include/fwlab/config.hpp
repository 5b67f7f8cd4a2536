#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fwlab/obstacle_pde.hpp"
#include "fwlab/problem.hpp"
#include "fwlab/rate.hpp"
#include "fwlab/rbsde.hpp"

namespace fwlab {

struct MeshSection {
    std::vector<double> x_lo;
    std::vector<double> x_hi;
    int space_steps = 200;
    int time_steps = 0;  // 0: reuse the problem time grid steps
};

struct ForwardSection {
    std::vector<double> epsilons;
    int sample_count = 1000;
};

struct PdeSection {
    double epsilon = 0.0;
    bool dump = false;  // export the full surface
};

struct RbsdeSection {
    double epsilon = 0.04;
    int sample_count = 10000;
    RegressionBasis basis;
    bool dump_trajectories = false;
};

struct EventSection {
    EventSpec event;
};

struct SweepSection {
    std::vector<double> epsilons;
    int sample_count = 10000;
    EventSpec event;
};

struct ConvergenceSection {
    std::vector<double> epsilons;
    int sample_count = 1000;
};

/// Parsed configuration file. Unknown keys anywhere are errors; all
/// randomness flows from master_seed.
struct ExperimentConfig {
    ProblemSpec problem;
    int steps = 100;  // time grid steps
    std::uint64_t master_seed = 0;
    std::string output_dir = ".";

    std::optional<MeshSection> mesh;
    std::optional<ForwardSection> forward;
    std::optional<PdeSection> pde;
    std::optional<RbsdeSection> rbsde;
    std::optional<EventSection> rate;
    std::optional<SweepSection> sweep;
    std::optional<ConvergenceSection> convergence;

    std::uint64_t config_hash = 0;  // FNV-1a of the raw file bytes

    TimeGrid grid() const { return problem.horizon_grid(steps); }
    Mesh make_mesh(double eps_max) const;
};

/// Loads and strictly validates a JSON config. Throws
/// SolverError(ConfigError) with the offending key on any problem.
ExperimentConfig load_config(const std::string& path);

/// Applies a `section.key=value` override to the raw JSON text form of the
/// config before parsing; used by the CLI's --set flags.
ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides);

EventSpec parse_event_json_text(const std::string& text);

} // namespace fwlab
