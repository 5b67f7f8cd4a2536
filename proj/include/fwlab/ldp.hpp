#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fwlab/forward.hpp"
#include "fwlab/rate.hpp"

namespace fwlab {

struct SweepRow {
    double eps = 0.0;
    double p_hat = 0.0;
    double se = 0.0;          // Wilson-interval standard error
    double eps_log_p = 0.0;   // eps * log(p_hat); -inf when p_hat = 0
    long hits = 0;
    int sample_count = 0;
    bool too_few_hits = false;
};

struct SweepTable {
    std::vector<SweepRow> rows;       // sorted by eps descending
    double rate_prediction = 0.0;     // I(Gamma); may be +inf
    bool rate_infinite = false;
    OptimizerDiagnostics rate_diag;
};

struct LdpVerdict {
    double limit = 0.0;            // extrapolated eps * log P at eps = 0
    double limit_se = 0.0;
    double rate_prediction = 0.0;  // -I(Gamma)
    double band = 0.0;
    bool pass = false;
    bool upper_bound_ok = false;   // limit <= -I + band  (closed-set side)
    bool lower_bound_ok = false;   // limit >= -I - band  (open-set side)
};

struct ConvergenceRow {
    double eps = 0.0;
    double forward_l2 = 0.0;   // E[ sup |X^eps - chi|^2 ]
    double forward_se = 0.0;
    double backward_sup = 0.0; // max over probes of sup_s |u^eps(s,phi) - u^0(s,phi)|
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    double forward_slope = 0.0;
    double forward_r2 = 0.0;
    double backward_slope = 0.0;
    double backward_r2 = 0.0;
};

/// eps-matched value surfaces for realizing Y-events through the value map;
/// provider(0.0) must yield the eps = 0 surface.
using SurfaceProvider = std::function<const ValueSurface*(double eps)>;

/// Crude Monte Carlo sweep over eps with common random numbers: per eps,
/// M forward trajectories, the event functional on the realized process,
/// Wilson standard errors and the rate prediction from path optimization.
SweepTable estimate_rare_event(const ProblemSpec& spec, const EventSpec& event,
                               const std::vector<double>& eps_list, int sample_count,
                               const TimeGrid& grid, std::uint64_t master_seed,
                               const SurfaceProvider& surfaces = {});

/// Extrapolates eps*log(P) to eps = 0 over rows with at least 20 hits using
/// the model a + b*eps + c*eps*log(eps) (the eps*log(eps) regressor absorbs
/// the pre-exponential bias). Throws InsufficientRows below 3 usable rows.
LdpVerdict fit_ldp_slope(const SweepTable& table, double relative_band = 0.25);

/// Forward L2 sup-deviation and backward value-map sup-difference per eps,
/// with fitted log-log slopes. Probe paths default to the flow plus two
/// fixed perturbations when probes is empty.
ConvergenceTable convergence_experiment(const ProblemSpec& spec,
                                        const std::vector<double>& eps_list,
                                        const TimeGrid& grid, int sample_count,
                                        std::uint64_t master_seed, const Mesh& mesh,
                                        std::vector<SpacePath> probes = {});

/// Least-squares slope of log(y) against log(x) with R^2.
struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};
LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

} // namespace fwlab
