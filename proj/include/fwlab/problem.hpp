#pragma once

#include <string>
#include <vector>

#include "fwlab/coefficients.hpp"
#include "fwlab/grid.hpp"

namespace fwlab {

/// The standing problem data: coefficient quadruple, dimension, horizon,
/// start point and the shared Lipschitz/growth constant.
struct ProblemSpec {
    int dimension = 1;
    double t0 = 0.0;
    double T = 1.0;
    std::vector<double> x0;  // size dimension
    Coefficient drift;       // b(t, x) -> R^n
    Coefficient driver;      // f(t, x, y, z) -> R
    Coefficient terminal;    // g(x) -> R
    Coefficient obstacle;    // h(t, x) -> R
    double lipschitz_K = 1.0;

    TimeGrid horizon_grid(int steps) const { return {t0, T, steps}; }
};

/// Axis-aligned sampling box for assumption checks.
struct SpaceBox {
    std::vector<double> lo;
    std::vector<double> hi;
};

struct AssumptionCheck {
    std::string name;
    double worst_ratio = 0.0;  // worst observed ratio to compare against K
    double threshold = 0.0;    // K (or 0 for pure sign checks)
    bool pass = true;
    bool informational = false;
};

struct ValidationReport {
    std::vector<AssumptionCheck> checks;
    bool rejected = false;

    const AssumptionCheck* find(const std::string& name) const;
};

/// Samples the growth/Lipschitz assumptions on `box` with a deterministic
/// gridded design and compares worst ratios against spec.lipschitz_K.
/// A spec is rejected when any non-informational ratio exceeds K by more
/// than 1%.
ValidationReport validate_spec(const ProblemSpec& spec, const SpaceBox& box, int samples);

/// Throws SolverError(RejectedSpec) when validate_spec rejects.
void ensure_valid(const ProblemSpec& spec, const SpaceBox& box, int samples);

// Role-bound evaluation shorthands.
void drift_of(const ProblemSpec& spec, double t, std::span<const double> x,
              std::span<double> out);
double driver_of(const ProblemSpec& spec, double t, std::span<const double> x,
                 double y, std::span<const double> z);
double terminal_of(const ProblemSpec& spec, std::span<const double> x);
double obstacle_of(const ProblemSpec& spec, double t, std::span<const double> x);

} // namespace fwlab
