#include <cmath>

#include <doctest.h>

#include "fwlab/rbsde.hpp"
#include "helpers.hpp"

using namespace fwlab;

TEST_CASE("deterministic limit solves y' = y backward for f = -y") {
    // g = 1, obstacle far below: Y(s) = exp(s - T).
    ProblemSpec spec = testing::linear_spec();
    spec.terminal = Coefficient::constant(1.0);
    spec.driver = {CoeffFamily::Affine, {0.0, -1.0}, {}, {}};
    TimeGrid grid{0.0, 1.0, 1000};
    auto limit = solve_deterministic_limit(spec, grid);
    CHECK(std::abs(limit.y.values[0] - std::exp(-1.0)) <= 1e-3);
    CHECK(limit.y.values[1000] == 1.0);
    for (double k : limit.k.values) CHECK(k == 0.0);  // obstacle never binds
}

TEST_CASE("deterministic limit respects the obstacle with a flat reflector") {
    // Flow exp(-s), g(x) = x, h = 0.5: Y is clamped at 0.5 once the
    // continuation drops below it, and K picks up exactly the deficit.
    ProblemSpec spec = testing::ou_spec();
    spec.obstacle = Coefficient::constant(0.5);
    TimeGrid grid{0.0, 1.0, 500};
    auto limit = solve_deterministic_limit(spec, grid);
    CHECK(limit.y.values[500] == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
    CHECK(limit.y.values[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(limit.k.values[0] == 0.0);
    for (int k = 0; k < 500; ++k) {
        CHECK(limit.k.values[k + 1] >= limit.k.values[k]);
        CHECK(limit.y.values[k] >= 0.5 - 1e-12);
    }
    CHECK(limit.k.values[500] == doctest::Approx(0.5 - std::exp(-1.0)).epsilon(1e-3));
}

TEST_CASE("LSMC reproduces the martingale case Y = X") {
    ProblemSpec spec = testing::linear_spec();
    TimeGrid grid{0.0, 1.0, 50};
    RegressionBasis basis;
    auto sol = solve_rbsde_mc(spec, 0.04, grid, 20000, basis, 11);
    CHECK(std::abs(sol.y0 - 1.0) <= 3.0 * sol.y0_se + 2e-3);
    // Z = sqrt(eps) * du/dx = 0.2 at interior nodes. The first few nodes have
    // almost no cross-sectional spread, so skip them.
    double worst = 0.0;
    for (int k = 5; k < 50; ++k)
        worst = std::max(worst, std::abs(sol.z_mean.at(k)[0] - 0.2));
    CHECK(worst <= 0.03);
    // Nothing reflects: K stays flat at zero.
    CHECK(std::abs(sol.k_mean.values[50]) <= 1e-12);
    CHECK(sol.max_skorohod_sum <= 1e-8);
}

TEST_CASE("LSMC on the put instance satisfies the reflection invariants") {
    ProblemSpec spec = testing::put_spec();
    TimeGrid grid{0.0, 1.0, 50};
    RegressionBasis basis;
    auto sol = solve_rbsde_mc(spec, 0.04, grid, 20000, basis, 23);
    // Tree oracle for the continuous problem: 0.07979.
    CHECK(std::abs(sol.y0 - 0.07979) <= 3.0 * sol.y0_se + 0.02);
    CHECK(sol.min_obstacle_slack >= -1e-8);
    CHECK(sol.min_dk >= 0.0);
    CHECK(sol.max_skorohod_sum <= 1e-8);
    CHECK(sol.k_mean.values[0] == 0.0);
    for (int k = 0; k < 50; ++k)
        CHECK(sol.k_mean.values[k + 1] >= sol.k_mean.values[k] - 1e-12);
    CHECK(sol.trajectory_count == 20000);
}

TEST_CASE("LSMC with a driver tracks the deterministic limit as eps shrinks") {
    ProblemSpec spec = testing::linear_spec();
    spec.terminal = Coefficient::constant(1.0);
    spec.driver = {CoeffFamily::Affine, {0.0, -1.0}, {}, {}};
    TimeGrid grid{0.0, 1.0, 50};
    RegressionBasis basis;
    auto sol = solve_rbsde_mc(spec, 0.01, grid, 10000, basis, 7);
    // Predictor-corrector kills the O(dt) time bias: compare to exp(-1).
    CHECK(std::abs(sol.y0 - std::exp(-1.0)) <= 3.0 * sol.y0_se + 5e-3);
}

TEST_CASE("degenerate cross-sections make the regression singular") {
    // eps = 0 collapses every trajectory onto the flow: the design matrix has
    // rank 1 against a degree-4 basis.
    ProblemSpec spec = testing::linear_spec();
    TimeGrid grid{0.0, 1.0, 10};
    RegressionBasis basis;
    try {
        solve_rbsde_mc(spec, 0.0, grid, 500, basis, 3);
        FAIL("expected a singular-regression failure");
    } catch (const SolverError& err) {
        CHECK(err.code() == ErrorCode::SingularRegression);
    }
}

TEST_CASE("a priori estimate holds with a moderate ratio") {
    ProblemSpec spec = testing::put_spec();
    TimeGrid grid{0.0, 1.0, 50};
    RegressionBasis basis;
    auto sol = solve_rbsde_mc(spec, 0.04, grid, 10000, basis, 31);
    auto report = apriori_check(sol);
    CHECK_FALSE(report.degenerate_rhs);
    CHECK(report.lhs > 0.0);
    CHECK(report.rhs > 0.0);
    CHECK(report.ratio == doctest::Approx(report.lhs / report.rhs));
    CHECK(report.ratio < 100.0);
}

TEST_CASE("LSMC runs are bitwise deterministic in the master seed") {
    ProblemSpec spec = testing::put_spec();
    TimeGrid grid{0.0, 1.0, 25};
    RegressionBasis basis;
    auto a = solve_rbsde_mc(spec, 0.04, grid, 4000, basis, 99);
    auto b = solve_rbsde_mc(spec, 0.04, grid, 4000, basis, 99);
    CHECK(a.y0 == b.y0);
    CHECK(a.y_mean.values == b.y_mean.values);
    CHECK(a.k_mean.values == b.k_mean.values);
    auto c = solve_rbsde_mc(spec, 0.04, grid, 4000, basis, 100);
    CHECK(a.y0 != c.y0);
}

TEST_CASE("basis size counts total-degree monomials plus the obstacle column") {
    RegressionBasis basis;
    CHECK(basis.size(1) == 6);   // 1, x, x^2, x^3, x^4, h
    CHECK(basis.size(2) == 16);  // C(6, 2) monomials + h
    basis.include_obstacle = false;
    CHECK(basis.size(1) == 5);
    CHECK(basis.describe().size() > 0);
}
