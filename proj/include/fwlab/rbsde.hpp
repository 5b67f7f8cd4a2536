#pragma once

#include <cstdint>
#include <string>

#include "fwlab/obstacle_pde.hpp"
#include "fwlab/problem.hpp"

namespace fwlab {

/// Least-squares regression basis: total-degree polynomials in x plus,
/// optionally, the obstacle itself (captures the reflection kink).
struct RegressionBasis {
    int poly_degree = 4;
    bool include_obstacle = true;

    int size(int dim) const;
    std::string describe() const;
};

/// Output of the discretely-reflected LSMC scheme. Node paths are
/// cross-sectional means; start-node values are the deterministic
/// regression-at-x estimates. Aggregates needed by the Skorohod and
/// a priori diagnostics are accumulated over all trajectories.
struct RBSDESolution {
    ScalarPath y_mean;   // E[Y_k]
    ScalarPath y_se;     // standard error of the mean per node
    SpacePath z_mean;    // E[Z_k] per noise coordinate
    ScalarPath k_mean;   // E[K_k]
    ScalarPath dk_mean;  // E[dK at node k]
    double y0 = 0.0;     // Y at the start node (deterministic estimate)
    double y0_se = 0.0;
    int trajectory_count = 0;
    std::string basis_descriptor;

    // Pathwise invariant aggregates (over every node of every trajectory).
    double min_obstacle_slack = 0.0;     // min (Y - h)
    double min_dk = 0.0;                 // min reflection increment
    double max_skorohod_sum = 0.0;       // max_m sum_k (Y_k - h_k) dK_k
    // A priori estimate ingredients (Monte Carlo means).
    double e_sup_y2 = 0.0;   // E[ sup_k Y_k^2 ]
    double e_int_z2 = 0.0;   // E[ sum_k |Z_k|^2 dt ]
    double e_kT2 = 0.0;      // E[ K(T)^2 ]
    double e_g2 = 0.0;       // E[ g(X_T)^2 ]
    double e_int_f2 = 0.0;   // E[ sum_k f(t_k, X_k, 0, 0)^2 dt ]
    double e_sup_h2 = 0.0;   // E[ sup_k h(t_k, X_k)^2 ]
};

struct AprioriReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
    bool degenerate_rhs = false;
};

/// Backward Euler with projection along the RK4 flow:
///   Ytil_k = Y_{k+1} + f(t_k, chi_k, Y_{k+1}, 0) dt,
///   Y_k = max(Ytil_k, h(t_k, chi_k)),  dK_k = Y_k - Ytil_k,
/// K accumulated so that K(t0) = 0 and K is nondecreasing.
struct DeterministicLimit {
    ScalarPath y;
    ScalarPath k;
};
DeterministicLimit solve_deterministic_limit(const ProblemSpec& spec, const TimeGrid& grid);

/// Discretely-reflected least-squares Monte Carlo for the reflected BSDE.
/// Per backward step: Z_k = Regress(Y_{k+1} dW_k | X_k) / dt, continuation
/// C_k = Regress(Y_{k+1} | X_k), one predictor-corrector pass on the driver's
/// implicit Y argument, then projection on the obstacle. Throws
/// SingularRegression when the normal equations are rank-deficient.
RBSDESolution solve_rbsde_mc(const ProblemSpec& spec, double eps, const TimeGrid& grid,
                             int trajectory_count, const RegressionBasis& basis,
                             std::uint64_t master_seed);

/// Both sides of the a priori estimate and their ratio.
AprioriReport apriori_check(const RBSDESolution& solution);

} // namespace fwlab
