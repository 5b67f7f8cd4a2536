#include <cmath>

#include <doctest.h>

#include "fwlab/ldp.hpp"
#include "fwlab/obstacle_pde.hpp"
#include "helpers.hpp"

using namespace fwlab;

TEST_CASE("sup-crossing frequency agrees with the reflection principle") {
    // b = 0, sup-deviation >= 0.5 at eps = 0.05: the continuous-time value is
    // 2(1 - Phi(0.5/sqrt(0.05))) = 0.02535; discrete monitoring at N = 400
    // pulls it to ~0.0235 (Broadie-Glasserman barrier shift).
    ProblemSpec spec = testing::linear_spec();
    TimeGrid grid{0.0, 1.0, 400};
    EventSpec event{EventTarget::ForwardState, EventKind::SupDeviationAtLeast, 0.5, 0.0};
    auto table = estimate_rare_event(spec, event, {0.05}, 20000, grid, 17);
    REQUIRE(table.rows.size() == 1);
    const auto& row = table.rows[0];
    CHECK_FALSE(row.too_few_hits);
    CHECK(row.p_hat > 0.019);
    CHECK(row.p_hat < 0.028);
    CHECK(row.se > 0.0);
    CHECK(row.eps_log_p == doctest::Approx(0.05 * std::log(row.p_hat)));
    CHECK_FALSE(table.rate_infinite);
    CHECK(std::abs(table.rate_prediction - 0.125) <= 1e-3);
}

TEST_CASE("near-certain events carry zero rate and a near-zero limit") {
    ProblemSpec spec = testing::linear_spec();
    TimeGrid grid{0.0, 1.0, 100};
    // X(T) >= x0 - 1 happens essentially always.
    EventSpec event{EventTarget::ForwardState, EventKind::TerminalAtLeast, 0.0, 0.0};
    auto table =
        estimate_rare_event(spec, event, {0.2, 0.1, 0.05, 0.025}, 2000, grid, 9);
    CHECK(table.rate_prediction <= 1e-6);
    auto verdict = fit_ldp_slope(table);
    CHECK(std::abs(verdict.limit) <= 0.02);
    CHECK(verdict.pass);
}

TEST_CASE("too few usable rows abort the extrapolation") {
    SweepTable table;
    for (int i = 0; i < 4; ++i) {
        SweepRow row;
        row.eps = 0.2 / (1 << i);
        row.hits = i < 2 ? 100 : 3;
        row.too_few_hits = i >= 2;
        row.p_hat = 0.01;
        row.eps_log_p = row.eps * std::log(row.p_hat);
        row.se = 1e-3;
        table.rows.push_back(row);
    }
    try {
        fit_ldp_slope(table);
        FAIL("expected an insufficient-rows failure");
    } catch (const SolverError& err) {
        CHECK(err.code() == ErrorCode::InsufficientRows);
    }
}

TEST_CASE("nested events stay nested under common random numbers") {
    ProblemSpec spec = testing::linear_spec();
    TimeGrid grid{0.0, 1.0, 200};
    EventSpec near{EventTarget::ForwardState, EventKind::SupDeviationAtLeast, 0.4, 0.0};
    EventSpec far{EventTarget::ForwardState, EventKind::SupDeviationAtLeast, 0.6, 0.0};
    auto tn = estimate_rare_event(spec, near, {0.2, 0.1}, 3000, grid, 55);
    auto tf = estimate_rare_event(spec, far, {0.2, 0.1}, 3000, grid, 55);
    for (size_t i = 0; i < tn.rows.size(); ++i) CHECK(tf.rows[i].hits <= tn.rows[i].hits);
}

TEST_CASE("sweeps are bitwise deterministic") {
    ProblemSpec spec = testing::ou_spec();
    TimeGrid grid{0.0, 1.0, 100};
    EventSpec event{EventTarget::ForwardState, EventKind::TerminalAtLeast, 1.1, 0.0};
    auto a = estimate_rare_event(spec, event, {0.2, 0.1}, 2000, grid, 1234);
    auto b = estimate_rare_event(spec, event, {0.2, 0.1}, 2000, grid, 1234);
    REQUIRE(a.rows.size() == b.rows.size());
    for (size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].hits == b.rows[i].hits);
        CHECK(a.rows[i].p_hat == b.rows[i].p_hat);
    }
}

TEST_CASE("log-log fit recovers an exact power law") {
    std::vector<double> x{0.2, 0.1, 0.05, 0.025}, y;
    for (double v : x) y.push_back(3.0 * v * v);
    auto fit = fit_loglog(x, y);
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-10));
    CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("convergence experiment rejects thin eps ranges") {
    ProblemSpec spec = testing::ou_spec();
    TimeGrid grid{0.0, 1.0, 50};
    Mesh mesh = default_mesh(spec, 0.2, 50, 80);
    CHECK_THROWS_AS(convergence_experiment(spec, {0.2, 0.1, 0.05}, grid, 100, 1, mesh),
                    SolverError);
    CHECK_THROWS_AS(
        convergence_experiment(spec, {0.2, 0.15, 0.1, 0.05}, grid, 100, 1, mesh),
        SolverError);
}

TEST_CASE("convergence experiment sees first-order forward decay") {
    ProblemSpec spec = testing::ou_spec();
    TimeGrid grid{0.0, 1.0, 100};
    Mesh mesh = default_mesh(spec, 0.2, 100, 120);
    auto table =
        convergence_experiment(spec, {0.2, 0.1, 0.05, 0.025}, grid, 800, 21, mesh);
    CHECK(table.forward_slope == doctest::Approx(1.0).epsilon(0.15));
    CHECK(table.forward_r2 > 0.99);
    CHECK(table.backward_slope > 0.0);
    REQUIRE(table.rows.size() == 4);
    for (size_t i = 1; i < table.rows.size(); ++i) {
        CHECK(table.rows[i].forward_l2 < table.rows[i - 1].forward_l2);
        CHECK(table.rows[i].backward_sup <= table.rows[i - 1].backward_sup + 1e-12);
    }
}

TEST_CASE("Y-events realized through the value map need a surface provider") {
    ProblemSpec spec = testing::linear_spec();
    TimeGrid grid{0.0, 1.0, 100};
    EventSpec event{EventTarget::BackwardValue, EventKind::TerminalAtLeast, 1.3, 0.0};
    CHECK_THROWS_AS(estimate_rare_event(spec, event, {0.2, 0.1}, 2000, grid, 1),
                    SolverError);

    // With the identity surface the Y event is the X event in disguise.
    Mesh mesh{grid, {-2.0}, {4.0}, {200}};
    auto u0 = solve_obstacle_pde(spec, 0.0, mesh);
    SurfaceProvider provider = [&](double) { return &u0; };
    auto ty = estimate_rare_event(spec, event, {0.2, 0.1}, 3000, grid, 77, provider);
    EventSpec xevent{EventTarget::ForwardState, EventKind::TerminalAtLeast, 1.3, 0.0};
    auto tx = estimate_rare_event(spec, xevent, {0.2, 0.1}, 3000, grid, 77);
    for (size_t i = 0; i < ty.rows.size(); ++i) CHECK(ty.rows[i].hits == tx.rows[i].hits);
    CHECK(std::abs(ty.rate_prediction - tx.rate_prediction) <= 1e-3);
}
