#include "fwlab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fwlab {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& msg) {
    throw SolverError(ErrorCode::ConfigError, msg);
}

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.contains(it.key()))
            config_error("unknown key '" + where + it.key() + "'");
}

std::vector<double> number_or_array(const json& v, const std::string& where) {
    std::vector<double> out;
    if (v.is_number()) {
        out.push_back(v.get<double>());
    } else if (v.is_array()) {
        for (const auto& e : v) out.push_back(e.get<double>());
    } else {
        config_error(where + " must be a number or an array of numbers");
    }
    return out;
}

Coefficient parse_coefficient(const json& v, const std::string& where) {
    if (!v.is_object()) config_error(where + " must be an object");
    check_keys(v, where + ".", {"family", "params", "name", "terms"});
    if (!v.contains("family")) config_error(where + ".family is required");
    Coefficient c;
    c.family = parse_family(v["family"].get<std::string>());
    if (v.contains("params"))
        for (const auto& p : v["params"]) c.params.push_back(p.get<double>());
    if (c.family == CoeffFamily::Custom) {
        if (!v.contains("name")) config_error(where + ".name is required for registered-custom");
        c.custom_name = v["name"].get<std::string>();
    }
    if (c.family == CoeffFamily::CompositeSum) {
        if (!v.contains("terms")) config_error(where + ".terms is required for composite-sum");
        int i = 0;
        for (const auto& term : v["terms"])
            c.terms.push_back(parse_coefficient(term, where + ".terms[" + std::to_string(i++) + "]"));
    }
    return c;
}

EventSpec parse_event(const json& v, const std::string& where) {
    check_keys(v, where + ".", {"target", "kind", "a", "b"});
    EventSpec e;
    const std::string target = v.value("target", "X");
    if (target == "X")
        e.target = EventTarget::ForwardState;
    else if (target == "Y")
        e.target = EventTarget::BackwardValue;
    else
        config_error(where + ".target must be \"X\" or \"Y\"");
    const std::string kind = v.value("kind", "");
    if (kind == "terminal-at-least")
        e.kind = EventKind::TerminalAtLeast;
    else if (kind == "sup-deviation-at-least")
        e.kind = EventKind::SupDeviationAtLeast;
    else if (kind == "terminal-in-interval")
        e.kind = EventKind::TerminalInInterval;
    else
        config_error(where + ".kind unknown: '" + kind + "'");
    if (!v.contains("a")) config_error(where + ".a is required");
    e.a = v["a"].get<double>();
    e.b = v.value("b", e.a);
    return e;
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

ExperimentConfig parse(const json& root, std::uint64_t hash) {
    check_keys(root, "",
               {"dimension", "t0", "T", "x0", "steps", "drift", "driver", "terminal",
                "obstacle", "lipschitz_K", "master_seed", "output_dir", "mesh", "forward",
                "pde", "rbsde", "rate", "sweep", "convergence"});
    ExperimentConfig cfg;
    cfg.config_hash = hash;
    ProblemSpec& p = cfg.problem;
    if (!root.contains("dimension")) config_error("'dimension' is required");
    p.dimension = root["dimension"].get<int>();
    if (p.dimension < 1) config_error("'dimension' must be positive");
    p.t0 = root.value("t0", 0.0);
    if (!root.contains("T")) config_error("'T' is required");
    p.T = root["T"].get<double>();
    if (!(p.t0 < p.T)) config_error("need t0 < T");
    if (!root.contains("x0")) config_error("'x0' is required");
    p.x0 = number_or_array(root["x0"], "x0");
    if (static_cast<int>(p.x0.size()) != p.dimension)
        config_error("'x0' has " + std::to_string(p.x0.size()) + " entries, expected " +
                     std::to_string(p.dimension));
    p.drift = root.contains("drift") ? parse_coefficient(root["drift"], "drift")
                                     : Coefficient::zero();
    p.driver = root.contains("driver") ? parse_coefficient(root["driver"], "driver")
                                       : Coefficient::zero();
    if (!root.contains("terminal")) config_error("'terminal' is required");
    p.terminal = parse_coefficient(root["terminal"], "terminal");
    p.obstacle = root.contains("obstacle") ? parse_coefficient(root["obstacle"], "obstacle")
                                           : Coefficient::constant(-1e6);
    p.lipschitz_K = root.value("lipschitz_K", 1.0);
    if (p.lipschitz_K <= 0.0) config_error("'lipschitz_K' must be positive");

    cfg.steps = root.value("steps", 100);
    if (cfg.steps < 1) config_error("'steps' must be >= 1");
    cfg.master_seed = root.value("master_seed", std::uint64_t{0});
    cfg.output_dir = root.value("output_dir", std::string{"."});

    if (root.contains("mesh")) {
        const json& m = root["mesh"];
        check_keys(m, "mesh.", {"x_lo", "x_hi", "space_steps", "time_steps"});
        MeshSection ms;
        if (m.contains("x_lo")) ms.x_lo = number_or_array(m["x_lo"], "mesh.x_lo");
        if (m.contains("x_hi")) ms.x_hi = number_or_array(m["x_hi"], "mesh.x_hi");
        ms.space_steps = m.value("space_steps", 200);
        ms.time_steps = m.value("time_steps", 0);
        cfg.mesh = ms;
    }
    if (root.contains("forward")) {
        const json& f = root["forward"];
        check_keys(f, "forward.", {"epsilons", "samples"});
        ForwardSection fs;
        if (f.contains("epsilons"))
            for (const auto& e : f["epsilons"]) fs.epsilons.push_back(e.get<double>());
        fs.sample_count = f.value("samples", 1000);
        cfg.forward = fs;
    }
    if (root.contains("pde")) {
        const json& v = root["pde"];
        check_keys(v, "pde.", {"epsilon", "dump"});
        PdeSection s;
        s.epsilon = v.value("epsilon", 0.0);
        s.dump = v.value("dump", false);
        cfg.pde = s;
    }
    if (root.contains("rbsde")) {
        const json& v = root["rbsde"];
        check_keys(v, "rbsde.", {"epsilon", "samples", "poly_degree", "include_obstacle", "dump"});
        RbsdeSection s;
        s.epsilon = v.value("epsilon", 0.04);
        s.sample_count = v.value("samples", 10000);
        s.basis.poly_degree = v.value("poly_degree", 4);
        s.basis.include_obstacle = v.value("include_obstacle", true);
        s.dump_trajectories = v.value("dump", false);
        cfg.rbsde = s;
    }
    if (root.contains("rate")) {
        const json& v = root["rate"];
        check_keys(v, "rate.", {"event"});
        if (!v.contains("event")) config_error("rate.event is required");
        cfg.rate = EventSection{parse_event(v["event"], "rate.event")};
    }
    if (root.contains("sweep")) {
        const json& v = root["sweep"];
        check_keys(v, "sweep.", {"epsilons", "samples", "event"});
        SweepSection s;
        if (!v.contains("epsilons")) config_error("sweep.epsilons is required");
        for (const auto& e : v["epsilons"]) s.epsilons.push_back(e.get<double>());
        s.sample_count = v.value("samples", 10000);
        if (!v.contains("event")) config_error("sweep.event is required");
        s.event = parse_event(v["event"], "sweep.event");
        cfg.sweep = s;
    }
    if (root.contains("convergence")) {
        const json& v = root["convergence"];
        check_keys(v, "convergence.", {"epsilons", "samples"});
        ConvergenceSection s;
        if (!v.contains("epsilons")) config_error("convergence.epsilons is required");
        for (const auto& e : v["epsilons"]) s.epsilons.push_back(e.get<double>());
        s.sample_count = v.value("samples", 1000);
        cfg.convergence = s;
    }
    return cfg;
}

json apply_override(json root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) config_error("override needs the form section.key=value");
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value;  // unquoted strings are taken verbatim
    }
    json* node = &root;
    std::stringstream ss(path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    if (parts.empty()) config_error("empty override path");
    for (size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
    (*node)[parts.back()] = parsed;
    return root;
}

} // namespace

Mesh ExperimentConfig::make_mesh(double eps_max) const {
    const int tsteps = mesh && mesh->time_steps > 0 ? mesh->time_steps : steps;
    const int ssteps = mesh ? mesh->space_steps : 200;
    Mesh m = default_mesh(problem, eps_max, tsteps, ssteps);
    if (mesh && !mesh->x_lo.empty() && !mesh->x_hi.empty()) {
        if (static_cast<int>(mesh->x_lo.size()) != problem.dimension ||
            static_cast<int>(mesh->x_hi.size()) != problem.dimension)
            config_error("mesh box dimension mismatch");
        m.x_lo = mesh->x_lo;
        m.x_hi = mesh->x_hi;
    }
    return m;
}

ExperimentConfig load_config(const std::string& path) {
    return load_config(path, {});
}

ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) config_error("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();
    json root;
    try {
        root = json::parse(bytes);
    } catch (const json::parse_error& e) {
        config_error(std::string{"config parse failed: "} + e.what());
    }
    for (const auto& ov : overrides) root = apply_override(root, ov);
    return parse(root, fnv1a(bytes));
}

EventSpec parse_event_json_text(const std::string& text) {
    json v;
    try {
        v = json::parse(text);
    } catch (const json::parse_error& e) {
        config_error(std::string{"event parse failed: "} + e.what());
    }
    return parse_event(v, "event");
}

} // namespace fwlab
