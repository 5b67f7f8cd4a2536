#include "fwlab/rate.hpp"

#include <algorithm>
#include <cmath>

#include "fwlab/forward.hpp"

namespace fwlab {

namespace {

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Control v_k = (xi_{k+1} - xi_k)/dt - b(t_k, xi_k); last node slot is zero.
SpacePath control_of(const ProblemSpec& spec, const SpacePath& xi) {
    const int n = xi.dim;
    const int N = xi.grid.steps;
    const double dt = xi.grid.dt();
    SpacePath v(xi.grid, n);
    std::vector<double> b(n);
    for (int k = 0; k < N; ++k) {
        drift_of(spec, xi.grid.node(k), xi.at(k), b);
        for (int i = 0; i < n; ++i)
            v.at(k)[i] = (xi.at(k + 1)[i] - xi.at(k)[i]) / dt - b[i];
    }
    return v;
}

double action_of(const ProblemSpec& spec, const SpacePath& xi) {
    const SpacePath v = control_of(spec, xi);
    const double dt = xi.grid.dt();
    double a = 0.0;
    for (int k = 0; k < xi.grid.steps; ++k) {
        double s = 0.0;
        for (int i = 0; i < xi.dim; ++i) s += v.at(k)[i] * v.at(k)[i];
        a += s;
    }
    return 0.5 * a * dt;
}

// The optimization problem: action plus a quadratically penalized constraint
// on either the X path itself or its image under the eps = 0 value map.
struct PathProblem {
    const ProblemSpec& spec;
    TimeGrid grid;
    int n;
    int N;
    SpacePath flow;
    const ValueSurface* u0 = nullptr;          // backward constraints only
    const ScalarPath* target = nullptr;        // path-target mode
    const EventSpec* event = nullptr;          // event mode
    ScalarPath y_limit{};                      // limit Y path for sup-deviation events

    bool backward() const { return u0 != nullptr; }
};

struct Evaluation {
    double objective = 0.0;   // action + lambda * penalty
    double action = 0.0;
    double residual = 0.0;    // constraint violation in its natural norm
    bool in_domain = true;
    std::vector<double> grad; // d(objective)/d(theta), free nodes 1..N
};

SpacePath unpack(const PathProblem& p, const std::vector<double>& theta) {
    SpacePath xi(p.grid, p.n);
    std::copy(p.spec.x0.begin(), p.spec.x0.end(), xi.at(0).begin());
    for (int k = 1; k <= p.N; ++k)
        for (int i = 0; i < p.n; ++i)
            xi.at(k)[i] = theta[static_cast<size_t>(k - 1) * p.n + i];
    return xi;
}

// Finite-difference Jacobian of b with respect to x, column-major in dx.
void drift_jacobian(const ProblemSpec& spec, double t, std::span<const double> x,
                    std::vector<double>& jac) {
    const int n = static_cast<int>(x.size());
    jac.assign(static_cast<size_t>(n) * n, 0.0);
    std::vector<double> xp(x.begin(), x.end());
    std::vector<double> b0(n), b1(n);
    drift_of(spec, t, x, b0);
    for (int j = 0; j < n; ++j) {
        const double h = 1e-6 * (1.0 + std::abs(x[j]));
        xp[j] = x[j] + h;
        drift_of(spec, t, xp, b1);
        xp[j] = x[j];
        for (int i = 0; i < n; ++i) jac[static_cast<size_t>(i) * n + j] = (b1[i] - b0[i]) / h;
    }
}

Evaluation evaluate(const PathProblem& p, const std::vector<double>& theta, double lambda,
                    bool want_grad) {
    Evaluation ev;
    ev.grad.assign(theta.size(), 0.0);
    const SpacePath xi = unpack(p, theta);
    const double dt = p.grid.dt();
    const int n = p.n;
    const int N = p.N;

    // Action and its gradient.
    std::vector<double> b(n), jac;
    std::vector<double> v(static_cast<size_t>(N) * n);
    for (int k = 0; k < N; ++k) {
        drift_of(p.spec, p.grid.node(k), xi.at(k), b);
        for (int i = 0; i < n; ++i) {
            const double vk = (xi.at(k + 1)[i] - xi.at(k)[i]) / dt - b[i];
            v[static_cast<size_t>(k) * n + i] = vk;
            ev.action += 0.5 * vk * vk * dt;
        }
    }
    if (want_grad) {
        for (int j = 1; j <= N; ++j) {
            double* g = ev.grad.data() + static_cast<size_t>(j - 1) * n;
            const double* vprev = v.data() + static_cast<size_t>(j - 1) * n;
            for (int i = 0; i < n; ++i) g[i] += vprev[i];
            if (j < N) {
                const double* vj = v.data() + static_cast<size_t>(j) * n;
                drift_jacobian(p.spec, p.grid.node(j), xi.at(j), jac);
                for (int i = 0; i < n; ++i) {
                    g[i] -= vj[i];
                    for (int r = 0; r < n; ++r)
                        g[i] -= dt * jac[static_cast<size_t>(r) * n + i] * vj[r];
                }
            }
        }
    }

    // Constraint. Backward modes read the value surface; a path outside the
    // mesh box makes the point infeasible for the line search.
    auto value_and_grad = [&](int k, std::vector<double>& gu) -> double {
        const double t = p.grid.node(k);
        const double y = eval_value(*p.u0, t, xi.at(k));
        if (want_grad) gu = gradient(*p.u0, t, xi.at(k));
        return y;
    };

    try {
        if (p.target != nullptr) {
            double c = 0.0;
            std::vector<double> gu;
            for (int k = 0; k <= N; ++k) {
                const double r = value_and_grad(k, gu) - p.target->values[k];
                c += r * r;
                if (want_grad && k >= 1)
                    for (int i = 0; i < n; ++i)
                        ev.grad[static_cast<size_t>(k - 1) * n + i] += 2.0 * lambda * r * gu[i];
            }
            ev.objective = ev.action + lambda * c;
            ev.residual = std::sqrt(c / (N + 1));
            return ev;
        }

        // Event mode: violation V >= 0 with a sparse subgradient.
        const EventSpec& e = *p.event;
        double V = 0.0;
        int node = -1;                    // node carrying the subgradient
        std::vector<double> dphi(n, 0.0); // d(functional)/d(xi_node)
        const bool on_y = e.target == EventTarget::BackwardValue;

        auto functional_terminal = [&]() {
            if (on_y) {
                std::vector<double> gu;
                const double y = value_and_grad(N, gu);
                node = N;
                if (want_grad) dphi = gu;
                return y;
            }
            node = N;
            dphi.assign(n, 0.0);
            dphi[0] = 1.0;
            return xi.at(N)[0];
        };

        switch (e.kind) {
            case EventKind::TerminalAtLeast: {
                const double phi = functional_terminal();
                V = std::max(0.0, e.a - phi);
                if (want_grad)
                    for (double& d : dphi) d = -d;  // d(a - phi)
                break;
            }
            case EventKind::TerminalInInterval: {
                const double phi = functional_terminal();
                if (phi < e.a) {
                    V = e.a - phi;
                    if (want_grad)
                        for (double& d : dphi) d = -d;
                } else if (phi > e.b) {
                    V = phi - e.b;
                } else {
                    V = 0.0;
                }
                break;
            }
            case EventKind::SupDeviationAtLeast: {
                double best = -std::numeric_limits<double>::infinity();
                int kbest = 0;
                std::vector<double> gu;
                for (int k = 0; k <= N; ++k) {
                    double d;
                    if (on_y) {
                        d = eval_value(*p.u0, p.grid.node(k), xi.at(k)) - p.y_limit.values[k];
                    } else if (n == 1) {
                        d = xi.at(k)[0] - p.flow.at(k)[0];
                    } else {
                        double s = 0.0;
                        for (int i = 0; i < n; ++i) {
                            const double di = xi.at(k)[i] - p.flow.at(k)[i];
                            s += di * di;
                        }
                        d = std::sqrt(s);
                    }
                    if (d > best) {
                        best = d;
                        kbest = k;
                    }
                }
                V = std::max(0.0, e.a - best);
                node = kbest;
                if (want_grad && V > 0.0 && kbest >= 1) {
                    if (on_y) {
                        gu = gradient(*p.u0, p.grid.node(kbest), xi.at(kbest));
                        for (int i = 0; i < n; ++i) dphi[i] = -gu[i];
                    } else if (n == 1) {
                        dphi[0] = -1.0;
                    } else {
                        double s = 0.0;
                        for (int i = 0; i < n; ++i) {
                            const double di = xi.at(kbest)[i] - p.flow.at(kbest)[i];
                            s += di * di;
                        }
                        const double nrm = std::max(std::sqrt(s), 1e-12);
                        for (int i = 0; i < n; ++i)
                            dphi[i] = -(xi.at(kbest)[i] - p.flow.at(kbest)[i]) / nrm;
                    }
                } else {
                    dphi.assign(n, 0.0);
                }
                break;
            }
        }

        ev.objective = ev.action + lambda * V * V;
        ev.residual = V;
        if (want_grad && V > 0.0 && node >= 1)
            for (int i = 0; i < n; ++i)
                ev.grad[static_cast<size_t>(node - 1) * n + i] += 2.0 * lambda * V * dphi[i];
        return ev;
    } catch (const SolverError& err) {
        if (err.code() != ErrorCode::OutOfSpan) throw;
        ev.in_domain = false;
        ev.objective = std::numeric_limits<double>::infinity();
        ev.residual = std::numeric_limits<double>::infinity();
        return ev;
    }
}

struct StageResult {
    std::vector<double> theta;
    double action = 0.0;
    double residual = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
};

// Momentum gradient descent with backtracking line search on the penalized
// objective; momentum resets when a step is rejected.
StageResult optimize_stage(const PathProblem& p, std::vector<double> theta, double lambda,
                           const OptimizerOptions& opts) {
    const size_t dim = theta.size();
    std::vector<double> vel(dim, 0.0), trial(dim);
    double alpha = 0.25 * p.grid.dt();
    const double mu = 0.9;

    Evaluation ev = evaluate(p, theta, lambda, true);
    int it = 0;
    double gnorm = 0.0;
    for (; it < opts.max_iterations; ++it) {
        gnorm = 0.0;
        for (double g : ev.grad) gnorm = std::max(gnorm, std::abs(g));
        if (gnorm <= opts.grad_tol * (1.0 + std::abs(ev.objective))) break;

        bool accepted = false;
        for (int bt = 0; bt < 50; ++bt) {
            double decrease = 0.0;
            for (size_t i = 0; i < dim; ++i) {
                const double step = mu * vel[i] - alpha * ev.grad[i];
                trial[i] = theta[i] + step;
                decrease += ev.grad[i] * step;
            }
            Evaluation trial_ev = evaluate(p, trial, lambda, true);
            if (trial_ev.in_domain && trial_ev.objective <= ev.objective + 1e-4 * decrease) {
                for (size_t i = 0; i < dim; ++i) vel[i] = trial[i] - theta[i];
                theta.swap(trial);
                ev = std::move(trial_ev);
                alpha = std::min(alpha * 1.25, 1e3);
                accepted = true;
                break;
            }
            alpha *= 0.5;
            std::fill(vel.begin(), vel.end(), 0.0);
        }
        if (!accepted) break;  // line search exhausted at machine precision
    }

    StageResult out;
    out.theta = std::move(theta);
    out.action = ev.action;
    out.residual = ev.residual;
    out.grad_norm = gnorm;
    out.iterations = it;
    return out;
}

// Fixed multi-start family: the flow plus ramp and half-sine bridges scaled
// to an event-informed amplitude.
std::vector<std::vector<double>> build_starts(const PathProblem& p, double amplitude,
                                              int count) {
    const int n = p.n;
    const int N = p.N;
    std::vector<std::vector<double>> starts;
    auto pack_flow = [&]() {
        std::vector<double> th(static_cast<size_t>(N) * n);
        for (int k = 1; k <= N; ++k)
            for (int i = 0; i < n; ++i)
                th[static_cast<size_t>(k - 1) * n + i] = p.flow.at(k)[i];
        return th;
    };
    const double a = amplitude;
    const std::vector<std::pair<double, int>> shapes = {
        {0.0, 0},  {1.0, 0},  {1.5, 0},  {-1.0, 0},
        {1.0, 1},  {-1.0, 1}, {0.5, 2},  {2.0, 0},
    };
    for (int s = 0; s < count && s < static_cast<int>(shapes.size()); ++s) {
        auto th = pack_flow();
        const double scale = shapes[s].first * a;
        const int mode = shapes[s].second;
        if (scale != 0.0) {
            for (int k = 1; k <= N; ++k) {
                const double frac = static_cast<double>(k) / N;
                const double shape = mode == 0 ? frac : std::sin((mode)*M_PI * frac);
                th[static_cast<size_t>(k - 1) * n] += scale * shape;
            }
        }
        starts.push_back(std::move(th));
    }
    return starts;
}

double event_amplitude(const PathProblem& p) {
    // How far, in x units, the flow misses the event; used only to scale the
    // multi-start family.
    const Evaluation ev = evaluate(p, build_starts(p, 0.0, 1)[0], 0.0, false);
    double deficit = ev.residual;
    if (p.backward()) {
        std::vector<double> g = gradient(*p.u0, p.grid.t1, p.flow.at(p.N));
        const double slope = std::max(norm2(g), 0.1);
        deficit /= slope;
    }
    return deficit > 0.0 ? deficit : 0.5;
}

RateResult run_optimizer(const PathProblem& p, const OptimizerOptions& opts,
                         bool infinite_on_infeasible) {
    const double amplitude = event_amplitude(p);
    auto starts = build_starts(p, amplitude, opts.multistarts);

    RateResult best;
    bool have_best = false;
    int total_iterations = 0;
    for (size_t s = 0; s < starts.size(); ++s) {
        std::vector<double> theta = starts[s];
        StageResult stage;
        double lambda = opts.penalty_start;
        for (;;) {
            stage = optimize_stage(p, std::move(theta), lambda, opts);
            theta = stage.theta;
            total_iterations += stage.iterations;
            if (stage.residual <= 0.25 * opts.feasibility_tol || lambda >= opts.penalty_max)
                break;
            lambda *= opts.penalty_factor;
        }
        const bool feasible = stage.residual <= opts.feasibility_tol;
        // Total order: feasibility first, then value, then start index.
        const bool better =
            !have_best ||
            (feasible && best.feasibility_residual > opts.feasibility_tol) ||
            (feasible == (best.feasibility_residual <= opts.feasibility_tol) &&
             stage.action < best.value);
        if (better) {
            best.value = stage.action;
            best.minimizer = unpack(p, stage.theta);
            best.feasibility_residual = stage.residual;
            best.diag.grad_norm = stage.grad_norm;
            best.diag.penalty_final = lambda;
            best.diag.best_start = static_cast<int>(s);
            have_best = true;
        }
    }
    best.diag.iterations = total_iterations;
    best.control = control_of(p.spec, best.minimizer);
    const bool feasible = best.feasibility_residual <= opts.feasibility_tol;
    best.diag.converged = feasible;
    if (!feasible && infinite_on_infeasible) {
        best.infinite = true;
        best.value = std::numeric_limits<double>::infinity();
    }
    return best;
}

} // namespace

double forward_action(const ProblemSpec& spec, const SpacePath& xi) {
    if (xi.dim != spec.dimension)
        throw SolverError(ErrorCode::IncompatibleGrid, "path dimension mismatch");
    for (int i = 0; i < xi.dim; ++i)
        if (std::abs(xi.at(0)[i] - spec.x0[i]) > 1e-9)
            throw SolverError(ErrorCode::WrongStart, "path does not start at x");
    return action_of(spec, xi);
}

RateResult minimize_forward_action(const ProblemSpec& spec, const EventSpec& event,
                                   const TimeGrid& grid, const OptimizerOptions& opts) {
    if (event.target != EventTarget::ForwardState)
        throw SolverError(ErrorCode::ConfigError, "event must target the X process");
    validate_grid(grid);
    PathProblem p{spec, grid, spec.dimension, grid.steps, solve_flow(spec, grid)};
    p.event = &event;
    return run_optimizer(p, opts, /*infinite_on_infeasible=*/false);
}

RateResult backward_rate(const ProblemSpec& spec, const ValueSurface& u0,
                         const std::optional<ScalarPath>& target_path,
                         const std::optional<EventSpec>& event, const TimeGrid& grid,
                         const OptimizerOptions& opts) {
    if (u0.epsilon != 0.0)
        throw SolverError(ErrorCode::ConfigError, "backward_rate needs the eps = 0 surface");
    if (target_path.has_value() == event.has_value())
        throw SolverError(ErrorCode::ConfigError,
                          "provide exactly one of target path or event");
    validate_grid(grid);
    PathProblem p{spec, grid, spec.dimension, grid.steps, solve_flow(spec, grid)};
    p.u0 = &u0;
    if (target_path) {
        if (!(target_path->grid == grid))
            throw SolverError(ErrorCode::IncompatibleGrid, "target grid differs");
        p.target = &*target_path;
    } else {
        if (event->target != EventTarget::BackwardValue)
            throw SolverError(ErrorCode::ConfigError, "event must target the Y process");
        p.event = &*event;
        if (event->kind == EventKind::SupDeviationAtLeast)
            p.y_limit = apply_G(u0, p.flow);
    }
    return run_optimizer(p, opts, /*infinite_on_infeasible=*/true);
}

} // namespace fwlab
