// Command-line front end: wires a JSON experiment config to the solver
// modules and writes CSV/JSON artifacts plus a provenance manifest.
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fwlab/config.hpp"
#include "fwlab/forward.hpp"
#include "fwlab/ldp.hpp"
#include "fwlab/obstacle_pde.hpp"
#include "fwlab/rate.hpp"
#include "fwlab/rbsde.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fwlab;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Artifacts {
    fs::path dir;
    std::vector<std::string> files;

    std::ofstream csv(const std::string& name) {
        files.push_back(name);
        return std::ofstream(dir / name);
    }
    void write_json(const std::string& name, const json& doc) {
        files.push_back(name);
        std::ofstream(dir / name) << doc.dump(2) << "\n";
    }
};

void write_manifest(Artifacts& art, const ExperimentConfig& cfg, const std::string& command) {
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(cfg.config_hash));
    json doc{{"command", command},
             {"config_hash", hash},
             {"master_seed", cfg.master_seed},
             {"version", kVersion},
             {"artifacts", art.files}};
    std::ofstream(art.dir / "manifest.json") << doc.dump(2) << "\n";
}

json event_json(const EventSpec& e) {
    const char* kind = e.kind == EventKind::TerminalAtLeast     ? "terminal-at-least"
                       : e.kind == EventKind::SupDeviationAtLeast ? "sup-deviation-at-least"
                                                                  : "terminal-in-interval";
    json doc{{"target", e.target == EventTarget::ForwardState ? "X" : "Y"},
             {"kind", kind},
             {"a", e.a}};
    if (e.kind == EventKind::TerminalInInterval) doc["b"] = e.b;
    return doc;
}

int cmd_validate(const ExperimentConfig& cfg, Artifacts& art) {
    Mesh box = cfg.make_mesh(0.25);
    auto report = validate_spec(cfg.problem, SpaceBox{box.x_lo, box.x_hi}, 21);
    json checks = json::array();
    for (const auto& c : report.checks) {
        checks.push_back({{"name", c.name},
                          {"pass", c.pass},
                          {"worst_ratio", c.worst_ratio},
                          {"threshold", c.threshold}});
        std::cout << (c.pass ? "  ok   " : "  FAIL ") << c.name
                  << " (worst " << c.worst_ratio << " vs threshold " << c.threshold << ")\n";
    }
    art.write_json("validate.json", json{{"rejected", report.rejected}, {"checks", checks}});
    std::cout << (report.rejected ? "REJECTED" : "accepted") << "\n";
    return report.rejected ? 1 : 0;
}

int cmd_flow(const ExperimentConfig& cfg, Artifacts& art) {
    auto chi = solve_flow(cfg.problem, cfg.grid());
    auto out = art.csv("flow.csv");
    out << "t";
    for (int i = 0; i < chi.dim; ++i) out << ",x" << i;
    out << "\n";
    for (int k = 0; k <= chi.grid.steps; ++k) {
        out << chi.grid.node(k);
        for (int i = 0; i < chi.dim; ++i) out << "," << chi.at(k)[i];
        out << "\n";
    }
    std::cout << "flow: " << chi.grid.steps + 1 << " nodes written\n";
    return 0;
}

int cmd_forward(const ExperimentConfig& cfg, Artifacts& art) {
    if (!cfg.forward || cfg.forward->epsilons.empty())
        throw SolverError(ErrorCode::ConfigError, "'forward.epsilons' is required");
    auto out = art.csv("forward.csv");
    out << "eps,sup_dev_l2,se_l2,sup_dev_l1,se_l1\n";
    std::vector<double> eps = cfg.forward->epsilons, m2;
    std::sort(eps.rbegin(), eps.rend());
    for (double e : eps) {
        auto stats = deviation_stats(cfg.problem, e, cfg.grid(), cfg.forward->sample_count,
                                     cfg.master_seed);
        out << e << "," << stats.sup_dev_l2 << "," << stats.se_l2 << ","
            << stats.sup_dev_l1 << "," << stats.se_l1 << "\n";
        m2.push_back(stats.sup_dev_l2);
    }
    if (eps.size() >= 2) {
        auto fit = fit_loglog(eps, m2);
        art.write_json("forward.json",
                       json{{"slope", fit.slope}, {"r2", fit.r2}, {"intercept", fit.intercept}});
        std::cout << "forward: slope " << fit.slope << ", R^2 " << fit.r2 << "\n";
    } else {
        std::cout << "forward: " << eps.size() << " row written\n";
    }
    return 0;
}

int cmd_pde(const ExperimentConfig& cfg, Artifacts& art) {
    const double eps = cfg.pde ? cfg.pde->epsilon : 0.0;
    Mesh mesh = cfg.make_mesh(std::max(eps, 0.25));
    auto surface = solve_obstacle_pde(cfg.problem, eps, mesh);
    std::vector<double> probe = cfg.problem.x0;
    const double u_start = eval_value(surface, cfg.problem.t0, probe);
    art.write_json("pde.json",
                   json{{"epsilon", eps},
                        {"u_at_start", u_start},
                        {"substeps_per_level", surface.diag.substeps_per_level},
                        {"dt_effective", surface.diag.dt_effective},
                        {"max_complementarity_residual",
                         surface.diag.max_complementarity_residual},
                        {"projected_nodes", surface.diag.projected_nodes}});
    if (cfg.pde && cfg.pde->dump) {
        auto out = art.csv("pde_surface.csv");
        out << "t,flat_index,u\n";
        for (int k = 0; k <= mesh.tgrid.steps; ++k)
            for (int j = 0; j < mesh.space_node_count(); ++j)
                out << mesh.tgrid.node(k) << "," << j << "," << surface.node_value(k, j) << "\n";
    }
    std::cout << "pde: u(t0, x0) = " << u_start << " at eps = " << eps << "\n";
    return 0;
}

int cmd_limit(const ExperimentConfig& cfg, Artifacts& art) {
    auto limit = solve_deterministic_limit(cfg.problem, cfg.grid());
    auto out = art.csv("limit.csv");
    out << "t,y,k\n";
    for (int k = 0; k <= cfg.grid().steps; ++k)
        out << cfg.grid().node(k) << "," << limit.y.values[k] << "," << limit.k.values[k] << "\n";
    std::cout << "limit: Y(t0) = " << limit.y.values[0]
              << ", K(T) = " << limit.k.values[cfg.grid().steps] << "\n";
    return 0;
}

int cmd_rbsde(const ExperimentConfig& cfg, Artifacts& art) {
    RbsdeSection section = cfg.rbsde.value_or(RbsdeSection{});
    auto sol = solve_rbsde_mc(cfg.problem, section.epsilon, cfg.grid(), section.sample_count,
                              section.basis, cfg.master_seed);
    auto report = apriori_check(sol);
    art.write_json("rbsde.json",
                   json{{"epsilon", section.epsilon},
                        {"samples", sol.trajectory_count},
                        {"basis", sol.basis_descriptor},
                        {"y0", sol.y0},
                        {"y0_se", sol.y0_se},
                        {"min_obstacle_slack", sol.min_obstacle_slack},
                        {"min_dk", sol.min_dk},
                        {"max_skorohod_sum", sol.max_skorohod_sum},
                        {"apriori", {{"lhs", report.lhs},
                                     {"rhs", report.rhs},
                                     {"ratio", report.ratio},
                                     {"degenerate_rhs", report.degenerate_rhs}}}});
    auto out = art.csv("rbsde.csv");
    out << "t,y_mean,y_se,k_mean,dk_mean";
    for (int i = 0; i < sol.z_mean.dim; ++i) out << ",z" << i;
    out << "\n";
    for (int k = 0; k <= cfg.grid().steps; ++k) {
        out << cfg.grid().node(k) << "," << sol.y_mean.values[k] << "," << sol.y_se.values[k]
            << "," << sol.k_mean.values[k] << "," << sol.dk_mean.values[k];
        for (int i = 0; i < sol.z_mean.dim; ++i) out << "," << sol.z_mean.at(k)[i];
        out << "\n";
    }
    std::cout << "rbsde: Y(t0) = " << sol.y0 << " +- " << sol.y0_se << "\n";
    return 0;
}

int cmd_rate(const ExperimentConfig& cfg, Artifacts& art) {
    if (!cfg.rate) throw SolverError(ErrorCode::ConfigError, "'rate.event' is required");
    const EventSpec& event = cfg.rate->event;
    RateResult result;
    if (event.target == EventTarget::ForwardState) {
        result = minimize_forward_action(cfg.problem, event, cfg.grid());
    } else {
        Mesh mesh = cfg.make_mesh(0.25);
        auto u0 = solve_obstacle_pde(cfg.problem, 0.0, mesh);
        result = backward_rate(cfg.problem, u0, std::nullopt, event, cfg.grid());
    }
    art.write_json("rate.json",
                   json{{"event", event_json(event)},
                        {"value", result.infinite ? json("inf") : json(result.value)},
                        {"infinite", result.infinite},
                        {"feasibility_residual", result.feasibility_residual},
                        {"iterations", result.diag.iterations},
                        {"best_start", result.diag.best_start}});
    auto out = art.csv("rate_path.csv");
    out << "t";
    for (int i = 0; i < result.minimizer.dim; ++i) out << ",xi" << i;
    for (int i = 0; i < result.minimizer.dim; ++i) out << ",v" << i;
    out << "\n";
    for (int k = 0; k <= result.minimizer.grid.steps; ++k) {
        out << result.minimizer.grid.node(k);
        for (int i = 0; i < result.minimizer.dim; ++i) out << "," << result.minimizer.at(k)[i];
        for (int i = 0; i < result.minimizer.dim; ++i) out << "," << result.control.at(k)[i];
        out << "\n";
    }
    if (result.infinite)
        std::cout << "rate: event unreachable (infinite rate)\n";
    else
        std::cout << "rate: I = " << result.value << "\n";
    return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, Artifacts& art) {
    if (!cfg.sweep) throw SolverError(ErrorCode::ConfigError, "'sweep' section is required");
    const SweepSection& s = *cfg.sweep;
    std::vector<std::unique_ptr<ValueSurface>> cache;
    SurfaceProvider provider;
    if (s.event.target == EventTarget::BackwardValue) {
        const double eps_max = *std::max_element(s.epsilons.begin(), s.epsilons.end());
        Mesh mesh = cfg.make_mesh(eps_max);
        provider = [&, mesh](double eps) -> const ValueSurface* {
            for (const auto& c : cache)
                if (c->epsilon == eps) return c.get();
            cache.push_back(
                std::make_unique<ValueSurface>(solve_obstacle_pde(cfg.problem, eps, mesh)));
            return cache.back().get();
        };
    }
    auto table = estimate_rare_event(cfg.problem, s.event, s.epsilons, s.sample_count,
                                     cfg.grid(), cfg.master_seed, provider);
    auto out = art.csv("sweep.csv");
    out << "eps,hits,samples,p_hat,se,eps_log_p,too_few_hits\n";
    for (const auto& row : table.rows)
        out << row.eps << "," << row.hits << "," << row.sample_count << "," << row.p_hat << ","
            << row.se << "," << row.eps_log_p << "," << row.too_few_hits << "\n";
    auto verdict = fit_ldp_slope(table);
    art.write_json("sweep.json",
                   json{{"event", event_json(s.event)},
                        {"rate_prediction", table.rate_infinite ? json("inf")
                                                                : json(table.rate_prediction)},
                        {"limit", verdict.limit},
                        {"limit_se", verdict.limit_se},
                        {"band", verdict.band},
                        {"upper_bound_ok", verdict.upper_bound_ok},
                        {"lower_bound_ok", verdict.lower_bound_ok},
                        {"pass", verdict.pass}});
    std::cout << "ldp-sweep: limit " << verdict.limit << " vs -I " << verdict.rate_prediction
              << " -> " << (verdict.pass ? "PASS" : "FAIL") << "\n";
    return verdict.pass ? 0 : 1;
}

int cmd_convergence(const ExperimentConfig& cfg, Artifacts& art) {
    if (!cfg.convergence)
        throw SolverError(ErrorCode::ConfigError, "'convergence' section is required");
    const ConvergenceSection& s = *cfg.convergence;
    const double eps_max = *std::max_element(s.epsilons.begin(), s.epsilons.end());
    auto table = convergence_experiment(cfg.problem, s.epsilons, cfg.grid(), s.sample_count,
                                        cfg.master_seed, cfg.make_mesh(eps_max));
    auto out = art.csv("convergence.csv");
    out << "eps,forward_l2,forward_se,backward_sup\n";
    for (const auto& row : table.rows)
        out << row.eps << "," << row.forward_l2 << "," << row.forward_se << ","
            << row.backward_sup << "\n";
    art.write_json("convergence.json",
                   json{{"forward_slope", table.forward_slope},
                        {"forward_r2", table.forward_r2},
                        {"backward_slope", table.backward_slope},
                        {"backward_r2", table.backward_r2}});
    std::cout << "convergence: forward slope " << table.forward_slope << " (R^2 "
              << table.forward_r2 << "), backward slope " << table.backward_slope << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"small-noise forward/backward SDE laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::vector<std::string> overrides;
    int threads = 1;

    const std::vector<std::pair<std::string, int (*)(const ExperimentConfig&, Artifacts&)>>
        commands = {{"validate", cmd_validate},   {"flow", cmd_flow},
                    {"forward", cmd_forward},     {"pde", cmd_pde},
                    {"limit", cmd_limit},         {"rbsde", cmd_rbsde},
                    {"rate", cmd_rate},           {"ldp-sweep", cmd_sweep},
                    {"convergence", cmd_convergence}};
    for (const auto& [name, fn] : commands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--set", overrides, "override config values (section.key=value)");
        sub->add_option("--out", out_dir, "output directory (overrides config)");
        sub->add_option("--threads", threads,
                        "worker cap; results are identical for any value");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage errors exit 2
    }

    try {
        ExperimentConfig cfg = load_config(config_path, overrides);
        (void)threads;  // all solvers are deterministic and single-threaded
        Artifacts art;
        art.dir = out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(out_dir);
        fs::create_directories(art.dir);
        const std::string name = app.get_subcommands().front()->get_name();
        int status = 0;
        for (const auto& [cname, fn] : commands)
            if (cname == name) status = fn(cfg, art);
        write_manifest(art, cfg, name);
        return status;
    } catch (const SolverError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return err.code() == ErrorCode::ConfigError ? 2 : 1;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}
