// End-to-end acceptance harness: eight pinned experiments, one PASS/FAIL
// line each, nonzero exit if any line fails.
#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "fwlab/forward.hpp"
#include "fwlab/ldp.hpp"
#include "fwlab/obstacle_pde.hpp"
#include "fwlab/rate.hpp"
#include "fwlab/rbsde.hpp"
#include "helpers.hpp"

using namespace fwlab;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// 1. Forward sup-deviation second moment is O(eps): slope 1.0 +- 0.15,
//    R^2 >= 0.99 on b = -x, x0 = 1, N = 400, M = 2000.
void criterion1() {
    ProblemSpec spec = testing::ou_spec();
    TimeGrid grid{0.0, 1.0, 400};
    std::vector<double> eps{0.2, 0.1, 0.05, 0.025}, m2;
    for (double e : eps)
        m2.push_back(deviation_stats(spec, e, grid, 2000, 1001).sup_dev_l2);
    auto fit = fit_loglog(eps, m2);
    const bool pass = std::abs(fit.slope - 1.0) <= 0.15 && fit.r2 >= 0.99;
    report(1, pass, fmt("forward moment slope %.4f (want 1.0 +- 0.15), R^2 %.5f (want >= 0.99)",
                        fit.slope, fit.r2));
}

// 2. Value-surface convergence |u^eps - u^0| = O(eps^p), p in [0.35, 1.2] on
//    the optimal-stopping instance, 400x400 mesh; sup entries move < 30%
//    under 2x refinement.
void criterion2() {
    ProblemSpec spec = testing::put_spec();
    const std::vector<double> eps{0.16, 0.08, 0.04, 0.02};
    auto sup_diffs = [&](int resolution) {
        Mesh mesh = default_mesh(spec, 0.16, resolution, resolution);
        auto u0 = solve_obstacle_pde(spec, 0.0, mesh);
        std::vector<double> sups;
        for (double e : eps) {
            auto ue = solve_obstacle_pde(spec, e, mesh);
            double sup = 0.0;
            for (size_t i = 0; i < ue.u.size(); ++i)
                sup = std::max(sup, std::abs(ue.u[i] - u0.u[i]));
            sups.push_back(sup);
        }
        return sups;
    };
    const auto coarse = sup_diffs(400);
    const auto fine = sup_diffs(800);
    auto fit = fit_loglog(eps, coarse);
    bool stable = true;
    double worst_change = 0.0;
    for (size_t i = 0; i < eps.size(); ++i) {
        const double change = std::abs(fine[i] - coarse[i]) / coarse[i];
        worst_change = std::max(worst_change, change);
        stable = stable && change < 0.30;
    }
    const bool pass = fit.slope >= 0.35 && fit.slope <= 1.2 && stable;
    report(2, pass,
           fmt("surface gap slope %.4f (want [0.35, 1.2]), refinement change %.1f%% (want < 30%%)",
               fit.slope, 100.0 * worst_change));
}

// 3. LSMC start value vs the PDE surface at eps = 0.04, M = 5e4:
//    |difference| <= 3 SE + 0.02. (The solution is reused by criterion 4.)
RBSDESolution criterion3(const ValueSurface& surface) {
    ProblemSpec spec = testing::put_spec();
    TimeGrid grid{0.0, 1.0, 100};
    RegressionBasis basis;  // degree 4 + obstacle column
    auto sol = solve_rbsde_mc(spec, 0.04, grid, 50000, basis, 1003);
    const double u = eval_value(surface, 0.0, spec.x0);
    const double diff = std::abs(sol.y0 - u);
    const double tol = 3.0 * sol.y0_se + 0.02;
    report(3, diff <= tol,
           fmt("|LSMC Y(0) - u(0, x0)| = |%.5f - %.5f| = %.5f (want <= %.5f)", sol.y0, u, diff,
               tol));
    return sol;
}

// 4. Skorohod complementarity on the LSMC run and a deterministic-limit run:
//    Y >= h - 1e-8, K nondecreasing, sum (Y - h) dK <= 1e-8.
void criterion4(const RBSDESolution& sol) {
    bool pass = sol.min_obstacle_slack >= -1e-8 && sol.min_dk >= 0.0 &&
                sol.max_skorohod_sum <= 1e-8;

    ProblemSpec spec = testing::ou_spec();
    spec.obstacle = {CoeffFamily::Affine, {0.7, -0.4, 0.05}, {}, {}};
    TimeGrid grid{0.0, 1.0, 500};
    auto limit = solve_deterministic_limit(spec, grid);
    auto chi = solve_flow(spec, grid);
    double limit_skorohod = 0.0;
    double min_slack = std::numeric_limits<double>::infinity();
    bool monotone = true;
    for (int k = 0; k < 500; ++k) {
        const double h = obstacle_of(spec, grid.node(k), chi.at(k));
        min_slack = std::min(min_slack, limit.y.values[k] - h);
        const double dk = limit.k.values[k + 1] - limit.k.values[k];
        monotone = monotone && dk >= 0.0;
        limit_skorohod += (limit.y.values[k] - h) * dk;
    }
    pass = pass && min_slack >= -1e-8 && monotone && limit_skorohod <= 1e-8;
    report(4, pass,
           fmt("LSMC slack %.2e / min dK %.2e / Skorohod %.2e; limit slack %.2e / Skorohod %.2e "
               "(want >= -1e-8, >= 0, <= 1e-8)",
               sol.min_obstacle_slack, sol.min_dk, sol.max_skorohod_sum, min_slack,
               limit_skorohod));
}

// 5. Forward LDP: b = 0, sup-deviation >= 0.5, eps in {0.2, 0.1, 0.05},
//    M = 1e5: extrapolated eps log P within 20% of -0.125 and the optimized
//    action equal to 0.125 +- 1e-3.
void criterion5() {
    ProblemSpec spec = testing::linear_spec();
    TimeGrid grid{0.0, 1.0, 400};
    EventSpec event{EventTarget::ForwardState, EventKind::SupDeviationAtLeast, 0.5, 0.0};
    auto table = estimate_rare_event(spec, event, {0.2, 0.1, 0.05}, 100000, grid, 1005);
    auto verdict = fit_ldp_slope(table, 0.20);
    const double rel = std::abs(verdict.limit - (-0.125)) / 0.125;
    const double rate_err = std::abs(table.rate_prediction - 0.125);
    const bool pass = rel <= 0.20 && rate_err <= 1e-3;
    report(5, pass,
           fmt("extrapolated eps log P = %.5f vs -0.125 (off %.1f%%, want <= 20%%); action %.6f "
               "(want 0.125 +- 1e-3)",
               verdict.limit, 100.0 * rel, table.rate_prediction));
}

// 6. Backward LDP through the value map: linear instance (u(t,x) = x),
//    Y(T) >= x0 + 0.5 realized via the surface; extrapolated eps log P within
//    25% of -rate, rate = 0.125 +- 1e-3.
void criterion6() {
    ProblemSpec spec = testing::linear_spec();
    TimeGrid grid{0.0, 1.0, 400};
    Mesh mesh = default_mesh(spec, 0.2, 400, 240);
    std::vector<ValueSurface> surfaces;
    for (double e : {0.0, 0.2, 0.1, 0.05})
        surfaces.push_back(solve_obstacle_pde(spec, e, mesh));
    SurfaceProvider provider = [&](double e) -> const ValueSurface* {
        for (const auto& s : surfaces)
            if (s.epsilon == e) return &s;
        return nullptr;
    };
    EventSpec event{EventTarget::BackwardValue, EventKind::TerminalAtLeast, 1.5, 0.0};
    auto table =
        estimate_rare_event(spec, event, {0.2, 0.1, 0.05}, 100000, grid, 1006, provider);
    auto verdict = fit_ldp_slope(table, 0.25);
    const double rate = table.rate_prediction;
    const double rel = std::abs(verdict.limit - (-rate)) / std::max(rate, 1e-12);
    const bool pass = rel <= 0.25 && std::abs(rate - 0.125) <= 1e-3;
    report(6, pass,
           fmt("extrapolated eps log P = %.5f vs -rate = %.5f (off %.1f%%, want <= 25%%); rate "
               "%.6f (want 0.125 +- 1e-3)",
               verdict.limit, -rate, 100.0 * rel, rate));
}

// 7. Deterministic limit vs the running-max closed form (f = 0):
//    Y(s) = max(g(chi(T)), max_{r in [s, T]} h(r, chi(r))), sup-node error
//    <= 2 dt L on an instance whose obstacle is active.
void criterion7() {
    ProblemSpec spec = testing::ou_spec();
    spec.obstacle = {CoeffFamily::Affine, {0.7, -0.4, 0.05}, {}, {}};
    const int N = 500;
    TimeGrid grid{0.0, 1.0, N};
    auto limit = solve_deterministic_limit(spec, grid);
    auto chi = solve_flow(spec, grid);
    const double gT = terminal_of(spec, chi.at(N));
    double running = -std::numeric_limits<double>::infinity();
    double worst = 0.0;
    bool active = false;
    for (int k = N; k >= 0; --k) {
        running = std::max(running, obstacle_of(spec, grid.node(k), chi.at(k)));
        const double closed = std::max(gT, running);
        if (closed > gT + 1e-9) active = true;
        worst = std::max(worst, std::abs(limit.y.values[k] - closed));
    }
    const double lip = 1.0;  // |dh/dr along the flow| <= 0.4 + 0.05 e^{-r} < 1
    const double tol = 2.0 * grid.dt() * lip;
    report(7, worst <= tol && active,
           fmt("running-max formula sup error %.2e (want <= %.2e, obstacle active: %s)", worst,
               tol, active ? "yes" : "no"));
}

// 8. A priori estimate stability: the lhs/rhs ratio moves < 50% across
//    eps in {0.1, 0.05} and across doubling M.
void criterion8() {
    ProblemSpec spec = testing::put_spec();
    TimeGrid grid{0.0, 1.0, 100};
    RegressionBasis basis;
    std::vector<double> ratios;
    for (double e : {0.1, 0.05})
        for (int m : {10000, 20000})
            ratios.push_back(apriori_check(solve_rbsde_mc(spec, e, grid, m, basis, 1008)).ratio);
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    const double spread = (*hi - *lo) / *lo;
    report(8, spread < 0.50,
           fmt("a priori ratio in [%.4f, %.4f], spread %.1f%% (want < 50%%)", *lo, *hi,
               100.0 * spread));
}

} // namespace

int main() {
    criterion1();
    criterion2();

    // Criterion 3 needs the eps = 0.04 surface; solve it at the pinned
    // 400x400 resolution.
    {
        ProblemSpec put = testing::put_spec();
        Mesh mesh = default_mesh(put, 0.16, 400, 400);
        auto surface = solve_obstacle_pde(put, 0.04, mesh);
        auto sol = criterion3(surface);
        criterion4(sol);
    }

    criterion5();
    criterion6();
    criterion7();
    criterion8();

    if (failures == 0) {
        std::printf("all 8 criteria PASS\n");
        return 0;
    }
    std::printf("%d criteria FAILED\n", failures);
    return 1;
}
