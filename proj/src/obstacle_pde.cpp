#include "fwlab/obstacle_pde.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fwlab/forward.hpp"

namespace fwlab {

int Mesh::space_node_count() const {
    int c = 1;
    for (int a = 0; a < dim(); ++a) c *= nodes(a);
    return c;
}

Mesh default_mesh(const ProblemSpec& spec, double eps_max, int time_steps, int space_steps) {
    const TimeGrid tgrid{spec.t0, spec.T, time_steps};
    const SpacePath flow = solve_flow(spec, tgrid);
    const int n = spec.dimension;
    Mesh mesh;
    mesh.tgrid = tgrid;
    mesh.x_lo.assign(n, 0.0);
    mesh.x_hi.assign(n, 0.0);
    mesh.space_steps.assign(n, space_steps);
    const double margin =
        std::max(3.0 * std::sqrt(std::max(eps_max, 0.0) * (spec.T - spec.t0)), 0.5);
    for (int a = 0; a < n; ++a) {
        double lo = flow.at(0)[a], hi = flow.at(0)[a];
        for (int k = 0; k <= tgrid.steps; ++k) {
            lo = std::min(lo, flow.at(k)[a]);
            hi = std::max(hi, flow.at(k)[a]);
        }
        mesh.x_lo[a] = lo - margin;
        mesh.x_hi[a] = hi + margin;
    }
    return mesh;
}

namespace {

constexpr int kMaxSubsteps = 200000;

struct MeshIndexer {
    int n;
    std::array<int, 2> nodes{1, 1};
    std::array<int, 2> stride{1, 1};

    explicit MeshIndexer(const Mesh& mesh) : n(mesh.dim()) {
        for (int a = 0; a < n; ++a) nodes[a] = mesh.nodes(a);
        stride[n - 1] = 1;
        if (n == 2) stride[0] = nodes[1];
    }
    int flat(int i0, int i1 = 0) const { return i0 * stride[0] + i1 * (n == 2 ? 1 : 0); }
};

// Largest drift magnitude per axis over a coarse sample of the mesh.
std::vector<double> drift_bound(const ProblemSpec& spec, const Mesh& mesh) {
    const int n = mesh.dim();
    std::vector<double> bmax(n, 0.0), b(n), x(n);
    const int probes = 17;
    auto sweep = [&](double t) {
        if (n == 1) {
            for (int i = 0; i < probes; ++i) {
                x[0] = mesh.x_lo[0] + (mesh.x_hi[0] - mesh.x_lo[0]) * i / (probes - 1);
                drift_of(spec, t, x, b);
                bmax[0] = std::max(bmax[0], std::abs(b[0]));
            }
        } else {
            for (int i = 0; i < probes; ++i)
                for (int j = 0; j < probes; ++j) {
                    x[0] = mesh.x_lo[0] + (mesh.x_hi[0] - mesh.x_lo[0]) * i / (probes - 1);
                    x[1] = mesh.x_lo[1] + (mesh.x_hi[1] - mesh.x_lo[1]) * j / (probes - 1);
                    drift_of(spec, t, x, b);
                    for (int a = 0; a < n; ++a) bmax[a] = std::max(bmax[a], std::abs(b[a]));
                }
        }
    };
    for (int s = 0; s < 5; ++s)
        sweep(mesh.tgrid.t0 + (mesh.tgrid.t1 - mesh.tgrid.t0) * s / 4.0);
    return bmax;
}

} // namespace

ValueSurface solve_obstacle_pde(const ProblemSpec& spec, double eps, const Mesh& mesh) {
    const int n = mesh.dim();
    if (n != spec.dimension || n < 1 || n > 2)
        throw SolverError(ErrorCode::ConfigError, "obstacle mesh supports n in {1, 2}");
    if (eps < 0.0) throw SolverError(ErrorCode::ConfigError, "eps must be nonnegative");
    validate_grid(mesh.tgrid);

    // The flow from x0 must stay strictly inside the box.
    {
        const SpacePath flow = solve_flow(spec, mesh.tgrid);
        for (int k = 0; k <= mesh.tgrid.steps; ++k)
            for (int a = 0; a < n; ++a)
                if (flow.at(k)[a] <= mesh.x_lo[a] || flow.at(k)[a] >= mesh.x_hi[a])
                    throw SolverError(ErrorCode::MeshTooSmall,
                                      "flow exits the space box at node " + std::to_string(k));
    }

    const MeshIndexer idx(mesh);
    const int nt = mesh.tgrid.steps;
    const int ns = mesh.space_node_count();
    const double dt_user = mesh.tgrid.dt();

    // Explicit-part stability: dt * sum_a (eps/dx_a^2 + |b|_a/dx_a) <= 0.9.
    const auto bmax = drift_bound(spec, mesh);
    double lam = 0.0;
    for (int a = 0; a < n; ++a) lam += eps / (mesh.dx(a) * mesh.dx(a)) + bmax[a] / mesh.dx(a);
    int substeps = lam > 0.0 ? static_cast<int>(std::ceil(dt_user * lam / 0.9)) : 1;
    substeps = std::max(substeps, 1);
    if (substeps > kMaxSubsteps)
        throw SolverError(ErrorCode::CflViolation,
                          "stability requires " + std::to_string(substeps) +
                              " sub-steps per level (mesh too fine in space or eps too large)");
    const double dt = dt_user / substeps;

    ValueSurface surface;
    surface.mesh = mesh;
    surface.epsilon = eps;
    surface.u.assign(static_cast<size_t>(nt + 1) * ns, 0.0);
    surface.diag.substeps_per_level = substeps;
    surface.diag.dt_effective = dt;

    std::vector<double> coords0(idx.nodes[0]), coords1(std::max(idx.nodes[1], 1));
    for (int i = 0; i < idx.nodes[0]; ++i) coords0[i] = mesh.coord(0, i);
    if (n == 2)
        for (int j = 0; j < idx.nodes[1]; ++j) coords1[j] = mesh.coord(1, j);

    std::vector<double> cur(ns), nxt(ns);
    const double root_eps = std::sqrt(eps);

    // Terminal condition u(T, .) = g.
    {
        std::vector<double> x(n);
        for (int i = 0; i < idx.nodes[0]; ++i) {
            x[0] = coords0[i];
            if (n == 1) {
                nxt[idx.flat(i)] = terminal_of(spec, x);
            } else {
                for (int j = 0; j < idx.nodes[1]; ++j) {
                    x[1] = coords1[j];
                    nxt[idx.flat(i, j)] = terminal_of(spec, x);
                }
            }
        }
        std::copy(nxt.begin(), nxt.end(), surface.u.end() - ns);
    }

    std::array<double, 2> dxs{1.0, 1.0};
    for (int a = 0; a < n; ++a) dxs[a] = mesh.dx(a);

    long projected = 0;
    std::vector<double> b(n);
    std::array<double, 2> zarg{0.0, 0.0};  // sqrt(eps) * grad u, driver argument
    std::vector<double> x(n);

    auto step_node = [&](double t_from, double t_to, int i, int j) {
        const int f = n == 1 ? idx.flat(i) : idx.flat(i, j);
        x[0] = coords0[i];
        if (n == 2) x[1] = coords1[j];

        double lap = 0.0;
        double advect = 0.0;
        drift_of(spec, t_from, x, b);
        for (int a = 0; a < n; ++a) {
            const int ia = a == 0 ? i : j;
            const int last = idx.nodes[a] - 1;
            const double dxa = dxs[a];
            const double um = ia > 0 ? nxt[f - idx.stride[a]] : 0.0;
            const double up = ia < last ? nxt[f + idx.stride[a]] : 0.0;
            const double uc = nxt[f];
            double grad_a;
            if (ia > 0 && ia < last) {
                lap += (up - 2.0 * uc + um) / (dxa * dxa);
                grad_a = (up - um) / (2.0 * dxa);
            } else if (ia == 0) {
                grad_a = (up - uc) / dxa;  // one-sided; second difference dropped
            } else {
                grad_a = (uc - um) / dxa;
            }
            zarg[a] = root_eps * grad_a;
            // Upwind first difference for the drift term.
            double dua;
            if (b[a] >= 0.0)
                dua = ia < last ? (up - uc) / dxa : (uc - um) / dxa;
            else
                dua = ia > 0 ? (uc - um) / dxa : (up - uc) / dxa;
            advect += b[a] * dua;
        }
        const double fval = driver_of(
            spec, t_from, x, nxt[f],
            std::span<const double>(zarg.data(), static_cast<size_t>(n)));
        double unew = nxt[f] + (t_from - t_to) * (0.5 * eps * lap + advect + fval);
        const double hval = obstacle_of(spec, t_to, x);
        if (unew < hval) {
            unew = hval;
            ++projected;
        }
        if (!std::isfinite(unew))
            throw SolverError(ErrorCode::NonfiniteState, "PDE value blew up");
        cur[f] = unew;
    };

    for (int k = nt - 1; k >= 0; --k) {
        std::copy(surface.u.begin() + static_cast<size_t>(k + 1) * ns,
                  surface.u.begin() + static_cast<size_t>(k + 2) * ns, nxt.begin());
        for (int s = 0; s < substeps; ++s) {
            const double t_from = mesh.tgrid.node(k + 1) - s * dt;
            const double t_to = t_from - dt;
            if (n == 1) {
                for (int i = 0; i < idx.nodes[0]; ++i) step_node(t_from, t_to, i, 0);
            } else {
                for (int i = 0; i < idx.nodes[0]; ++i)
                    for (int j = 0; j < idx.nodes[1]; ++j) step_node(t_from, t_to, i, j);
            }
            std::swap(cur, nxt);
        }
        std::copy(nxt.begin(), nxt.end(),
                  surface.u.begin() + static_cast<size_t>(k) * ns);
    }
    surface.diag.projected_nodes = projected;

    // Nodewise complementarity residual at the stored levels (diagnostic).
    double max_resid = 0.0;
    for (int k = 0; k < nt; ++k) {
        const double* uk = surface.u.data() + static_cast<size_t>(k) * ns;
        const double* un = surface.u.data() + static_cast<size_t>(k + 1) * ns;
        const double t = mesh.tgrid.node(k);
        auto resid_node = [&](int i, int j) {
            const int f = n == 1 ? idx.flat(i) : idx.flat(i, j);
            x[0] = coords0[i];
            if (n == 2) x[1] = coords1[j];
            double lap = 0.0, advect = 0.0;
            drift_of(spec, t, x, b);
            for (int a = 0; a < n; ++a) {
                const double dxa = dxs[a];
                const double um = uk[f - idx.stride[a]];
                const double up = uk[f + idx.stride[a]];
                lap += (up - 2.0 * uk[f] + um) / (dxa * dxa);
                zarg[a] = root_eps * (up - um) / (2.0 * dxa);
                advect += b[a] * (b[a] >= 0.0 ? (up - uk[f]) : (uk[f] - um)) / dxa;
            }
            const double fval = driver_of(
                spec, t, x, uk[f],
                std::span<const double>(zarg.data(), static_cast<size_t>(n)));
            const double pde = -(un[f] - uk[f]) / dt_user - 0.5 * eps * lap - advect - fval;
            const double slack = uk[f] - obstacle_of(spec, t, x);
            max_resid = std::max(max_resid, std::abs(std::min(slack, pde)));
        };
        if (n == 1) {
            for (int i = 1; i < idx.nodes[0] - 1; ++i) resid_node(i, 0);
        } else {
            for (int i = 1; i < idx.nodes[0] - 1; ++i)
                for (int j = 1; j < idx.nodes[1] - 1; ++j) resid_node(i, j);
        }
    }
    surface.diag.max_complementarity_residual = max_resid;
    return surface;
}

double eval_value(const ValueSurface& surface, double s, std::span<const double> x) {
    const Mesh& mesh = surface.mesh;
    const int n = mesh.dim();
    if (s < mesh.tgrid.t0 || s > mesh.tgrid.t1)
        throw SolverError(ErrorCode::OutOfSpan, "time outside the mesh span");
    for (int a = 0; a < n; ++a)
        if (x[a] < mesh.x_lo[a] || x[a] > mesh.x_hi[a])
            throw SolverError(ErrorCode::OutOfSpan, "point outside the mesh box");

    double tpos = (s - mesh.tgrid.t0) / (mesh.tgrid.t1 - mesh.tgrid.t0) * mesh.tgrid.steps;
    int kt = std::min(static_cast<int>(tpos), mesh.tgrid.steps - 1);
    double wt = tpos - kt;

    std::array<int, 2> ix{0, 0};
    std::array<double, 2> wx{0.0, 0.0};
    for (int a = 0; a < n; ++a) {
        double pos = (x[a] - mesh.x_lo[a]) / (mesh.x_hi[a] - mesh.x_lo[a]) * mesh.space_steps[a];
        ix[a] = std::min(static_cast<int>(pos), mesh.space_steps[a] - 1);
        wx[a] = pos - ix[a];
    }
    const MeshIndexer idx(mesh);
    auto level_value = [&](int k) {
        const double* u = surface.u.data() + static_cast<size_t>(k) * mesh.space_node_count();
        if (n == 1) {
            const int f = idx.flat(ix[0]);
            return (1.0 - wx[0]) * u[f] + wx[0] * u[f + idx.stride[0]];
        }
        const int f = idx.flat(ix[0], ix[1]);
        const double v00 = u[f];
        const double v01 = u[f + 1];
        const double v10 = u[f + idx.stride[0]];
        const double v11 = u[f + idx.stride[0] + 1];
        return (1.0 - wx[0]) * ((1.0 - wx[1]) * v00 + wx[1] * v01) +
               wx[0] * ((1.0 - wx[1]) * v10 + wx[1] * v11);
    };
    return (1.0 - wt) * level_value(kt) + wt * level_value(kt + 1);
}

std::vector<double> gradient(const ValueSurface& surface, double s,
                             std::span<const double> x) {
    const Mesh& mesh = surface.mesh;
    const int n = mesh.dim();
    std::vector<double> g(n, 0.0);
    std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
    for (int a = 0; a < n; ++a) {
        const double h = mesh.dx(a);
        double hi = std::min(x[a] + h, mesh.x_hi[a]);
        double lo = std::max(x[a] - h, mesh.x_lo[a]);
        xp[a] = hi;
        xm[a] = lo;
        g[a] = (eval_value(surface, s, xp) - eval_value(surface, s, xm)) / (hi - lo);
        xp[a] = x[a];
        xm[a] = x[a];
    }
    return g;
}

ScalarPath apply_G(const ValueSurface& surface, const SpacePath& psi) {
    ScalarPath out(psi.grid);
    for (int k = 0; k <= psi.grid.steps; ++k) {
        try {
            out.values[k] = eval_value(surface, psi.grid.node(k), psi.at(k));
        } catch (const SolverError& e) {
            if (e.code() == ErrorCode::OutOfSpan)
                throw SolverError(ErrorCode::OutOfSpan,
                                  "path leaves the mesh at node " + std::to_string(k));
            throw;
        }
    }
    return out;
}

} // namespace fwlab
