#pragma once

#include <vector>

#include "fwlab/problem.hpp"

namespace fwlab {

/// Dense time x space mesh; 1 or 2 space dimensions.
struct Mesh {
    TimeGrid tgrid;
    std::vector<double> x_lo;     // per axis
    std::vector<double> x_hi;     // per axis
    std::vector<int> space_steps; // intervals per axis

    int dim() const { return static_cast<int>(x_lo.size()); }
    double dx(int axis) const { return (x_hi[axis] - x_lo[axis]) / space_steps[axis]; }
    int nodes(int axis) const { return space_steps[axis] + 1; }
    int space_node_count() const;
    double coord(int axis, int i) const {
        return i == space_steps[axis]
                   ? x_hi[axis]
                   : x_lo[axis] + (x_hi[axis] - x_lo[axis]) *
                                      (static_cast<double>(i) / space_steps[axis]);
    }
};

/// Builds a box around the flow's reachable set from spec.x0 with margin
/// >= 3*sqrt(eps_max*(T-t0)) on each side.
Mesh default_mesh(const ProblemSpec& spec, double eps_max, int time_steps, int space_steps);

struct PdeDiagnostics {
    int substeps_per_level = 0;     // internal CFL sub-steps per stored level
    double dt_effective = 0.0;
    double max_complementarity_residual = 0.0;
    long projected_nodes = 0;       // nodes clipped to the obstacle
    double boundary_scheme_order = 1.0;  // one-sided differences at the box edge
};

/// Value surface u^eps on the mesh, stored time-major then row-major in space.
struct ValueSurface {
    Mesh mesh;
    double epsilon = 0.0;
    std::vector<double> u;  // (time nodes) * (space nodes)
    PdeDiagnostics diag;

    double node_value(int k, int flat_space_index) const {
        return u[static_cast<size_t>(k) * mesh.space_node_count() + flat_space_index];
    }
};

/// Explicit projected upwind scheme for
///   min(u - h, -u_t - (eps/2) Lap u - b . grad u - f(t, x, u, sqrt(eps) grad u)) = 0,
///   u(T, .) = g,
/// stepping backward from T with the driver lagged one time level and a
/// nodewise projection u <- max(u, h) after every step. Internal sub-stepping
/// keeps the explicit part under its CFL bound; the number of sub-steps is
/// recorded in diagnostics. Throws CflViolation when the required sub-step
/// count is absurd and MeshTooSmall when the flow leaves the box.
ValueSurface solve_obstacle_pde(const ProblemSpec& spec, double eps, const Mesh& mesh);

/// Multilinear interpolation in time and space, exact at nodes.
double eval_value(const ValueSurface& surface, double s, std::span<const double> x);

/// Centered finite difference of the interpolated surface, one-sided near
/// the box edge.
std::vector<double> gradient(const ValueSurface& surface, double s,
                             std::span<const double> x);

/// The value map G^eps: psi -> [ s -> u^eps(s, psi(s)) ] on psi's grid.
ScalarPath apply_G(const ValueSurface& surface, const SpacePath& psi);

} // namespace fwlab
