#pragma once

#include <limits>
#include <optional>

#include "fwlab/obstacle_pde.hpp"
#include "fwlab/problem.hpp"

namespace fwlab {

enum class EventTarget { ForwardState, BackwardValue };  // X or Y

/// Closed threshold events in sup-norm topology.
enum class EventKind {
    TerminalAtLeast,      // X(T) >= a (first coordinate) / Y(T) >= a
    SupDeviationAtLeast,  // sup_s (X(s) - chi(s)) >= a (signed, first coord in 1d;
                          // Euclidean norm for n > 1) / sup_s (Y(s) - Y^0(s)) >= a
    TerminalInInterval,   // X(T) in [a, b] / Y(T) in [a, b]
};

struct EventSpec {
    EventTarget target = EventTarget::ForwardState;
    EventKind kind = EventKind::TerminalAtLeast;
    double a = 0.0;
    double b = 0.0;  // TerminalInInterval only
};

struct OptimizerDiagnostics {
    int iterations = 0;
    double grad_norm = 0.0;
    double penalty_final = 0.0;
    bool converged = true;
    int best_start = 0;
};

struct RateResult {
    double value = 0.0;        // action at the minimizer; meaningless if infinite
    bool infinite = false;     // no feasible path found at maximum penalty weight
    SpacePath minimizer;
    SpacePath control;         // v_k = (xi_{k+1}-xi_k)/dt - b(t_k, xi_k)
    double feasibility_residual = 0.0;
    OptimizerDiagnostics diag;
};

struct OptimizerOptions {
    int max_iterations = 4000;       // per penalty stage
    double grad_tol = 1e-7;
    double feasibility_tol = 1e-4;
    double penalty_start = 10.0;
    double penalty_factor = 10.0;
    double penalty_max = 1e8;
    int multistarts = 8;
};

/// Discrete action (1/2) sum_k |v_k|^2 dt with v_k = (xi_{k+1}-xi_k)/dt -
/// b(t_k, xi_k). Throws WrongStart when xi(t0) != x.
double forward_action(const ProblemSpec& spec, const SpacePath& xi);

/// Minimizes the discrete action over interior and terminal nodes subject to
/// an event on the X path, imposed by quadratic penalty with geometric
/// weight escalation; multi-start from the flow plus fixed perturbations.
RateResult minimize_forward_action(const ProblemSpec& spec, const EventSpec& event,
                                   const TimeGrid& grid,
                                   const OptimizerOptions& opts = {});

/// Contraction-principle rate for the backward value: minimizes the forward
/// action over xi subject to either a target scalar path for
/// [k -> u0(t_k, xi_k)] or an event on that scalar path. u0 must be the
/// eps = 0 surface. Returns an infinite marker when no feasible xi exists at
/// the maximum penalty weight.
RateResult backward_rate(const ProblemSpec& spec, const ValueSurface& u0,
                         const std::optional<ScalarPath>& target_path,
                         const std::optional<EventSpec>& event, const TimeGrid& grid,
                         const OptimizerOptions& opts = {});

} // namespace fwlab
