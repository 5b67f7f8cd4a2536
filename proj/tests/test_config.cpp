#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>

#include "fwlab/config.hpp"

using namespace fwlab;

namespace {

struct TempConfig {
    std::string path;
    explicit TempConfig(const std::string& body) {
        static int counter = 0;
        path = (std::filesystem::temp_directory_path() /
                ("fwlab_cfg_" + std::to_string(++counter) + ".json"))
                   .string();
        std::ofstream out(path);
        out << body;
    }
    ~TempConfig() { std::remove(path.c_str()); }
};

const char* kBody = R"({
  "dimension": 1,
  "t0": 0.0,
  "T": 1.0,
  "x0": 1.0,
  "steps": 400,
  "master_seed": 42,
  "drift": {"family": "scalar-linear", "params": [-1.0]},
  "terminal": {"family": "affine", "params": [0.0, 1.0]},
  "obstacle": {"family": "constant", "params": [0.5]},
  "lipschitz_K": 1.0,
  "forward": {"epsilons": [0.2, 0.1], "samples": 2000},
  "sweep": {
    "epsilons": [0.2, 0.1, 0.05],
    "samples": 100000,
    "event": {"target": "X", "kind": "sup-deviation-at-least", "a": 0.5}
  }
})";

} // namespace

TEST_CASE("a full config round-trips") {
    TempConfig file(kBody);
    auto cfg = load_config(file.path);
    CHECK(cfg.problem.dimension == 1);
    CHECK(cfg.problem.x0 == std::vector<double>{1.0});
    CHECK(cfg.steps == 400);
    CHECK(cfg.master_seed == 42);
    CHECK(cfg.problem.drift.family == CoeffFamily::ScalarLinear);
    REQUIRE(cfg.forward.has_value());
    CHECK(cfg.forward->epsilons == std::vector<double>{0.2, 0.1});
    REQUIRE(cfg.sweep.has_value());
    CHECK(cfg.sweep->sample_count == 100000);
    CHECK(cfg.sweep->event.kind == EventKind::SupDeviationAtLeast);
    CHECK(cfg.sweep->event.a == 0.5);
    CHECK(cfg.config_hash != 0);
    CHECK(cfg.grid().steps == 400);
    // Same bytes, same hash.
    CHECK(load_config(file.path).config_hash == cfg.config_hash);
}

TEST_CASE("unknown keys are named in the error") {
    TempConfig file(R"({"dimension": 1, "T": 1.0, "x0": 1.0,
                        "terminal": {"family": "constant", "params": [0]},
                        "tpyo_key": 3})");
    try {
        load_config(file.path);
        FAIL("expected a config failure");
    } catch (const SolverError& err) {
        CHECK(err.code() == ErrorCode::ConfigError);
        CHECK(std::string{err.what()}.find("tpyo_key") != std::string::npos);
    }
}

TEST_CASE("missing required fields fail loudly") {
    TempConfig no_terminal(R"({"dimension": 1, "T": 1.0, "x0": 1.0})");
    CHECK_THROWS_AS(load_config(no_terminal.path), SolverError);
    TempConfig bad_x0(R"({"dimension": 2, "T": 1.0, "x0": [1.0],
                          "terminal": {"family": "constant", "params": [0]}})");
    CHECK_THROWS_AS(load_config(bad_x0.path), SolverError);
    TempConfig bad_order(R"({"dimension": 1, "t0": 2.0, "T": 1.0, "x0": 1.0,
                             "terminal": {"family": "constant", "params": [0]}})");
    CHECK_THROWS_AS(load_config(bad_order.path), SolverError);
}

TEST_CASE("dotted overrides rewrite scalars and nested keys") {
    TempConfig file(kBody);
    auto cfg = load_config(file.path, {"steps=100", "sweep.samples=500",
                                       "sweep.event.a=0.75", "output_dir=out"});
    CHECK(cfg.steps == 100);
    CHECK(cfg.sweep->sample_count == 500);
    CHECK(cfg.sweep->event.a == 0.75);
    CHECK(cfg.output_dir == "out");
    CHECK_THROWS_AS(load_config(file.path, {"steps"}), SolverError);
}

TEST_CASE("event text parses every documented shape") {
    auto e1 = parse_event_json_text(R"({"target": "Y", "kind": "terminal-at-least", "a": 1.5})");
    CHECK(e1.target == EventTarget::BackwardValue);
    CHECK(e1.kind == EventKind::TerminalAtLeast);
    auto e2 = parse_event_json_text(
        R"({"target": "X", "kind": "terminal-in-interval", "a": 1.2, "b": 1.8})");
    CHECK(e2.b == 1.8);
    CHECK_THROWS_AS(parse_event_json_text(R"({"kind": "sideways"})"), SolverError);
    CHECK_THROWS_AS(parse_event_json_text(R"({"target": "Q", "kind": "terminal-at-least", "a": 1})"),
                    SolverError);
}

TEST_CASE("mesh section overrides the default box") {
    TempConfig file(R"({
      "dimension": 1, "T": 1.0, "x0": 1.0,
      "terminal": {"family": "affine", "params": [0.0, 1.0]},
      "mesh": {"x_lo": -0.5, "x_hi": 2.5, "space_steps": 300, "time_steps": 150}
    })");
    auto cfg = load_config(file.path);
    Mesh mesh = cfg.make_mesh(0.2);
    CHECK(mesh.x_lo == std::vector<double>{-0.5});
    CHECK(mesh.x_hi == std::vector<double>{2.5});
    CHECK(mesh.space_steps == std::vector<int>{300});
    CHECK(mesh.tgrid.steps == 150);
}
