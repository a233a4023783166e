#include "doctest.h"
#include "dream/config.hpp"

using namespace dream;

TEST_CASE("empty config gives the defaults") {
  const RunConfig c = parse_run_config("{}");
  CHECK(c.scheme == "baseline");
  CHECK(c.controller == "fixed:baseline");
  CHECK(c.sim.window.window_len == WindowConfig{}.window_len);
  CHECK(c.sim.predictor.consistency_windows == 3);
  CHECK(c.sim.cost.scenario == CostScenario::InDram);
  CHECK_FALSE(c.trace_spec.has_value());
}

TEST_CASE("sections are read") {
  const RunConfig c = parse_run_config(R"({
    "geometry": {"banks_per_rank": 16, "rows_per_bank": 32768},
    "timing": {"t_cas": 14, "burst_cycles": 8},
    "scheduler": {"rob_size": 64},
    "window": {"window_len": 20000, "counter_bits": 20},
    "predictor": {"improvement_threshold": 0.1, "consistency_windows": 2},
    "cost_model": {"scenario": "nvdimm", "charge_relocations": false},
    "controller": "dream-online",
    "trace_spec": {"kind": "phase-switch", "components": [
      {"kind": "strided", "hot_bit": 20, "length": 10},
      {"kind": "strided", "hot_bit": 15, "length": 10}]},
    "seed": 9
  })");
  CHECK(c.sim.geometry.banks_per_rank == 16);
  CHECK(c.sim.geometry.rows_per_bank == 32768);
  CHECK(c.sim.timing.t_cas == 14);
  CHECK(c.sim.timing.t_rcd == 11);
  CHECK(c.sim.timing.burst_cycles == 8);
  CHECK(c.sim.scheduler.rob_size == 64);
  CHECK(c.sim.window.window_len == 20000);
  CHECK(c.sim.window.counter_bits == 20);
  CHECK(c.sim.predictor.improvement_threshold == doctest::Approx(0.1));
  CHECK(c.sim.predictor.consistency_windows == 2);
  CHECK(c.sim.cost.scenario == CostScenario::NvdimmBulk);
  CHECK_FALSE(c.sim.charge_relocations);
  CHECK(c.controller == "dream-online");
  REQUIRE(c.trace_spec.has_value());
  CHECK(c.trace_spec->kind == PatternKind::PhaseSwitch);
  REQUIRE(c.trace_spec->components.size() == 2);
  CHECK(c.trace_spec->components[1].hot_bit == 15u);
  CHECK(c.seed == 9);
}

TEST_CASE("strictness") {
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"windw": {}})"), "config: unknown key 'windw' in config",
                       std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config(R"({"window": {"length": 5}})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config(R"({"window": {"window_len": -5}})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config(R"({"window": {"window_len": 1}})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config(R"({"geometry": {"banks_per_rank": 6}})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config(R"({"cost_model": {"scenario": "magic"}})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config(R"({"trace_spec": {"kind": "zigzag"}})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config(R"({"trace_spec": {"write_ratio": 2}})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config("{"), std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config("[]"), std::invalid_argument);
}

TEST_CASE("round trip") {
  RunConfig c;
  c.sim.window.window_len = 12345;
  c.sim.cost.scenario = CostScenario::NanoCommit;
  c.sim.cost.overlap = true;
  c.controller = "dream-offline";
  c.runs = {"fixed:baseline", "dream-offline"};
  TraceSpec s;
  s.kind = PatternKind::Strided;
  s.hot_bit = 22;
  s.hot_toggle_prob = 0.5;
  c.trace_spec = s;
  const std::string j = run_config_to_json(c);
  const RunConfig back = parse_run_config(j);
  CHECK(run_config_to_json(back) == j);
  CHECK(back.sim.window.window_len == 12345);
  CHECK(back.sim.cost.scenario == CostScenario::NanoCommit);
  CHECK(back.trace_spec->hot_bit == 22u);
  CHECK(back.runs == c.runs);
}

TEST_CASE("controller specs") {
  DramGeometry g;
  const auto pams = builtin_scheme(BuiltinScheme::Permutation, g);
  CHECK(parse_controller("dream-online", pams, g).kind == ControllerKind::DreamOnline);
  const auto off = parse_controller("dream-offline", pams, g);
  CHECK(off.kind == ControllerKind::DreamOffline);
  CHECK(off.scheme == pams);
  const auto mini = parse_controller("fixed:minimalist", pams, g);
  CHECK(mini.kind == ControllerKind::Fixed);
  CHECK(mini.scheme.scheme_id == "minimalist");
  CHECK(mini.label() == "fixed:minimalist");
  CHECK(parse_controller("fixed", pams, g).scheme == pams);
  CHECK_THROWS_AS(parse_controller("dream", pams, g), std::invalid_argument);
  CHECK_THROWS_AS(parse_controller("fixed:", pams, g), std::invalid_argument);
}
