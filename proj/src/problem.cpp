#include "fwlab/problem.hpp"

#include <cmath>

namespace fwlab {

void drift_of(const ProblemSpec& spec, double t, std::span<const double> x,
              std::span<double> out) {
    eval_drift(spec.drift, t, x, out);
}
double driver_of(const ProblemSpec& spec, double t, std::span<const double> x, double y,
                 std::span<const double> z) {
    return eval_driver(spec.driver, t, x, y, z);
}
double terminal_of(const ProblemSpec& spec, std::span<const double> x) {
    return eval_terminal(spec.terminal, x);
}
double obstacle_of(const ProblemSpec& spec, double t, std::span<const double> x) {
    return eval_obstacle(spec.obstacle, t, x);
}

const AssumptionCheck* ValidationReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

namespace {

double norm_of(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

// Gridded sample points on the box: `samples` nodes per axis (full tensor
// grid for n <= 2, axis sweeps through the center above that).
std::vector<std::vector<double>> sample_points(const SpaceBox& box, int samples) {
    const int n = static_cast<int>(box.lo.size());
    auto axis_value = [&](int axis, int i) {
        return samples == 1 ? 0.5 * (box.lo[axis] + box.hi[axis])
                            : box.lo[axis] + (box.hi[axis] - box.lo[axis]) * i / (samples - 1);
    };
    std::vector<std::vector<double>> pts;
    if (n == 1) {
        for (int i = 0; i < samples; ++i) pts.push_back({axis_value(0, i)});
    } else if (n == 2) {
        for (int i = 0; i < samples; ++i)
            for (int j = 0; j < samples; ++j)
                pts.push_back({axis_value(0, i), axis_value(1, j)});
    } else {
        std::vector<double> center(n);
        for (int a = 0; a < n; ++a) center[a] = axis_value(a, (samples - 1) / 2);
        for (int a = 0; a < n; ++a)
            for (int i = 0; i < samples; ++i) {
                auto p = center;
                p[a] = axis_value(a, i);
                pts.push_back(std::move(p));
            }
    }
    return pts;
}

struct RatioTracker {
    double worst = 0.0;
    void update(double r) {
        if (std::isfinite(r)) worst = std::max(worst, r);
    }
};

} // namespace

ValidationReport validate_spec(const ProblemSpec& spec, const SpaceBox& box, int samples) {
    if (box.lo.size() != static_cast<size_t>(spec.dimension) || box.lo.size() != box.hi.size())
        throw SolverError(ErrorCode::ConfigError, "validation box dimension mismatch");
    for (size_t a = 0; a < box.lo.size(); ++a)
        if (!(box.lo[a] < box.hi[a]))
            throw SolverError(ErrorCode::ConfigError, "validation box is empty");
    if (samples < 2)
        throw SolverError(ErrorCode::ConfigError, "validation needs samples >= 2");

    const int n = spec.dimension;
    const double K = spec.lipschitz_K;
    const auto pts = sample_points(box, samples);

    std::vector<double> times;
    const int nt = 7;
    for (int i = 0; i < nt; ++i)
        times.push_back(spec.t0 + (spec.T - spec.t0) * i / (nt - 1));

    double radius = 0.0;
    for (const auto& p : pts) radius = std::max(radius, norm_of(p));
    const double yz_range = 1.0 + radius;
    std::vector<double> scalars;
    for (int i = 0; i < 5; ++i) scalars.push_back(-yz_range + 2.0 * yz_range * i / 4);

    const std::vector<double> zeros(n, 0.0);
    std::vector<double> b1(n), b2(n);

    RatioTracker f_growth, f_lip, h_growth, h_lip, b_lip, b_growth, g_lip, g_growth;
    double worst_gh_gap = 0.0;  // max over box of h(T,x) - g(x)

    for (const auto& x : pts) {
        const double g = eval_terminal(spec.terminal, x);
        worst_gh_gap = std::max(worst_gh_gap, eval_obstacle(spec.obstacle, spec.T, x) - g);
        g_growth.update(std::abs(g) / (1.0 + norm_of(x) * norm_of(x)));
        for (double t : times) {
            f_growth.update(std::abs(eval_driver(spec.driver, t, x, 0.0, zeros)) /
                            (1.0 + norm_of(x) * norm_of(x)));
            h_growth.update(eval_obstacle(spec.obstacle, t, x) / (1.0 + norm_of(x)));
            eval_drift(spec.drift, t, x, b1);
            b_growth.update(norm_of(b1) / (1.0 + norm_of(x)));
        }
    }

    // Lipschitz probes: every pair of consecutive grid points along an axis
    // plus endpoint-to-endpoint pairs, at each time sample.
    auto probe_pair = [&](const std::vector<double>& xa, const std::vector<double>& xb) {
        double dx = 0.0;
        for (int i = 0; i < n; ++i) dx += (xa[i] - xb[i]) * (xa[i] - xb[i]);
        dx = std::sqrt(dx);
        if (dx == 0.0) return;
        const double ga = eval_terminal(spec.terminal, xa);
        const double gb = eval_terminal(spec.terminal, xb);
        g_lip.update(std::abs(ga - gb) / dx);
        for (double t : times) {
            h_lip.update(std::abs(eval_obstacle(spec.obstacle, t, xa) -
                                  eval_obstacle(spec.obstacle, t, xb)) /
                         dx);
            f_lip.update(std::abs(eval_driver(spec.driver, t, xa, 0.0, zeros) -
                                  eval_driver(spec.driver, t, xb, 0.0, zeros)) /
                         dx);
            eval_drift(spec.drift, t, xa, b1);
            eval_drift(spec.drift, t, xb, b2);
            double db = 0.0;
            for (int i = 0; i < n; ++i) db += (b1[i] - b2[i]) * (b1[i] - b2[i]);
            b_lip.update(std::sqrt(db) / dx);
        }
    };
    for (size_t i = 0; i + 1 < pts.size(); ++i) probe_pair(pts[i], pts[i + 1]);
    if (pts.size() > 2) probe_pair(pts.front(), pts.back());

    // Lipschitz of f in y and z at a representative set of states.
    for (size_t pi = 0; pi < pts.size(); pi += std::max<size_t>(1, pts.size() / 8)) {
        const auto& x = pts[pi];
        for (double t : times) {
            for (size_t i = 0; i + 1 < scalars.size(); ++i) {
                const double dy = scalars[i + 1] - scalars[i];
                f_lip.update(std::abs(eval_driver(spec.driver, t, x, scalars[i + 1], zeros) -
                                      eval_driver(spec.driver, t, x, scalars[i], zeros)) /
                             dy);
                std::vector<double> za(n, 0.0), zb(n, 0.0);
                za[0] = scalars[i];
                zb[0] = scalars[i + 1];
                f_lip.update(std::abs(eval_driver(spec.driver, t, x, 0.0, zb) -
                                      eval_driver(spec.driver, t, x, 0.0, za)) /
                             dy);
            }
        }
    }

    ValidationReport report;
    auto add = [&](const std::string& name, double worst, double threshold,
                   bool informational = false) {
        AssumptionCheck c;
        c.name = name;
        c.worst_ratio = worst;
        c.threshold = threshold;
        c.informational = informational;
        c.pass = informational || worst <= threshold * 1.01;
        report.checks.push_back(c);
        if (!c.pass) report.rejected = true;
    };
    add("f_growth", f_growth.worst, K);
    add("f_lipschitz", f_lip.worst, K);
    add("h_growth", h_growth.worst, K);
    add("h_lipschitz", h_lip.worst, K);
    add("b_lipschitz", b_lip.worst, K);
    add("b_growth", b_growth.worst, K);
    add("g_lipschitz", g_lip.worst, K);
    add("g_growth", g_growth.worst, K, /*informational=*/true);

    AssumptionCheck gh;
    gh.name = "g_dominates_terminal_obstacle";
    gh.worst_ratio = worst_gh_gap;
    gh.threshold = 0.0;
    gh.pass = worst_gh_gap <= 1e-12;
    if (!gh.pass) report.rejected = true;
    report.checks.push_back(gh);

    return report;
}

void ensure_valid(const ProblemSpec& spec, const SpaceBox& box, int samples) {
    auto report = validate_spec(spec, box, samples);
    if (report.rejected) {
        std::string detail;
        for (const auto& c : report.checks)
            if (!c.pass)
                detail += (detail.empty() ? "" : ", ") + c.name + " ratio " +
                          std::to_string(c.worst_ratio) + " vs " + std::to_string(c.threshold);
        throw SolverError(ErrorCode::RejectedSpec, detail);
    }
}

} // namespace fwlab
