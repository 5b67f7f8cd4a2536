#pragma once

#include "fwlab/problem.hpp"

namespace fwlab::testing {

// b = 0, f = 0, g(x) = x, obstacle far below: u(t, x) = x.
inline ProblemSpec linear_spec() {
    ProblemSpec spec;
    spec.dimension = 1;
    spec.t0 = 0.0;
    spec.T = 1.0;
    spec.x0 = {1.0};
    spec.drift = Coefficient::zero();
    spec.driver = Coefficient::zero();
    spec.terminal = {CoeffFamily::Affine, {0.0, 1.0}, {}, {}};
    spec.obstacle = Coefficient::constant(-1e6);
    spec.lipschitz_K = 1.0;
    return spec;
}

// b(t, x) = -x from x0 = 1: flow chi(s) = exp(-s).
inline ProblemSpec ou_spec() {
    ProblemSpec spec = linear_spec();
    spec.drift = {CoeffFamily::ScalarLinear, {-1.0}, {}, {}};
    return spec;
}

// American-put-like optimal stopping: b = 0, f = 0,
// g(x) = h(t, x) = max(1 - x, 0), start at the money.
inline ProblemSpec put_spec() {
    ProblemSpec spec;
    spec.dimension = 1;
    spec.t0 = 0.0;
    spec.T = 1.0;
    spec.x0 = {1.0};
    spec.drift = Coefficient::zero();
    spec.driver = Coefficient::zero();
    spec.terminal = Coefficient::custom("put_payoff", {1.0});
    spec.obstacle = Coefficient::custom("put_payoff", {1.0});
    spec.lipschitz_K = 1.0;
    return spec;
}

} // namespace fwlab::testing
