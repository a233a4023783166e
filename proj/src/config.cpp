#include "dream/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace dream {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument("config: " + what);
}

void only_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) fail(std::string(where) + " must be an object");
  const std::set<std::string_view> allowed(keys);
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) fail("unknown key '" + k + "' in " + std::string(where));
  }
}

template <typename T>
void read(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(std::string("bad value for '") + key + "'");
  }
}

template <typename T>
void read_unsigned(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number_unsigned()) fail(std::string("'") + key + "' must be a non-negative integer");
  dst = j.at(key).get<T>();
}

TraceSpec trace_spec_from(const json& j) {
  only_keys(j, "trace_spec",
            {"kind", "length", "start", "stride", "hot_bit", "hot_toggle_prob", "seed", "gap",
             "write_ratio", "components"});
  TraceSpec s;
  if (j.contains("kind")) {
    const auto k = pattern_from_name(j.at("kind").get<std::string>());
    if (!k) fail("unknown trace kind '" + j.at("kind").get<std::string>() + "'");
    s.kind = *k;
  }
  read_unsigned(j, "length", s.length);
  read_unsigned(j, "start", s.start);
  read_unsigned(j, "stride", s.stride);
  if (j.contains("hot_bit") && !j.at("hot_bit").is_null()) {
    unsigned b = 0;
    read_unsigned(j, "hot_bit", b);
    s.hot_bit = b;
  }
  read(j, "hot_toggle_prob", s.hot_toggle_prob);
  read_unsigned(j, "seed", s.seed);
  read_unsigned(j, "gap", s.gap);
  read(j, "write_ratio", s.write_ratio);
  if (j.contains("components")) {
    if (!j.at("components").is_array()) fail("'components' must be an array");
    for (const auto& c : j.at("components")) s.components.push_back(trace_spec_from(c));
  }
  if (s.hot_toggle_prob < 0.0 || s.hot_toggle_prob > 1.0) fail("hot_toggle_prob outside [0, 1]");
  if (s.write_ratio < 0.0 || s.write_ratio > 1.0) fail("write_ratio outside [0, 1]");
  return s;
}

ordered_json trace_spec_to(const TraceSpec& s) {
  ordered_json j;
  j["kind"] = pattern_name(s.kind);
  if (s.kind == PatternKind::PhaseSwitch || s.kind == PatternKind::Mix) {
    ordered_json comps = ordered_json::array();
    for (const auto& c : s.components) comps.push_back(trace_spec_to(c));
    j["components"] = std::move(comps);
    return j;
  }
  j["length"] = s.length;
  j["start"] = s.start;
  j["stride"] = s.stride;
  if (s.hot_bit) j["hot_bit"] = *s.hot_bit;
  j["hot_toggle_prob"] = s.hot_toggle_prob;
  j["seed"] = s.seed;
  j["gap"] = s.gap;
  j["write_ratio"] = s.write_ratio;
  return j;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(e.what());
  }
}

}  // namespace

void RunConfig::check() const {
  sim.check();
  if (workload_length < 2) fail("workload_length must be >= 2");
}

TraceSpec parse_trace_spec(std::string_view json_text) { return trace_spec_from(parse_json(json_text)); }

RunConfig parse_run_config(std::string_view json_text) {
  const json j = parse_json(json_text);
  only_keys(j, "config",
            {"geometry", "timing", "scheduler", "window", "predictor", "cost_model", "scheme",
             "controller", "traces", "trace_spec", "runs", "baseline", "workload_length", "seed",
             "out", "threads"});
  RunConfig c;
  if (j.contains("geometry")) {
    const auto& g = j.at("geometry");
    only_keys(g, "geometry",
              {"channels", "ranks_per_channel", "banks_per_rank", "rows_per_bank",
               "columns_per_row", "line_size", "cpu_to_mem_clock_ratio"});
    auto& d = c.sim.geometry;
    read_unsigned(g, "channels", d.channels);
    read_unsigned(g, "ranks_per_channel", d.ranks_per_channel);
    read_unsigned(g, "banks_per_rank", d.banks_per_rank);
    read_unsigned(g, "rows_per_bank", d.rows_per_bank);
    read_unsigned(g, "columns_per_row", d.columns_per_row);
    read_unsigned(g, "line_size", d.line_size);
    read_unsigned(g, "cpu_to_mem_clock_ratio", d.cpu_to_mem_clock_ratio);
  }
  if (j.contains("timing")) {
    const auto& t = j.at("timing");
    only_keys(t, "timing", {"t_cas", "t_rcd", "t_rp", "burst_cycles"});
    read_unsigned(t, "t_cas", c.sim.timing.t_cas);
    read_unsigned(t, "t_rcd", c.sim.timing.t_rcd);
    read_unsigned(t, "t_rp", c.sim.timing.t_rp);
    read_unsigned(t, "burst_cycles", c.sim.timing.burst_cycles);
  }
  if (j.contains("scheduler")) {
    const auto& s = j.at("scheduler");
    only_keys(s, "scheduler",
              {"rob_size", "write_queue_capacity", "write_high_watermark", "write_low_watermark",
               "rollback_rate"});
    auto& d = c.sim.scheduler;
    read_unsigned(s, "rob_size", d.rob_size);
    read_unsigned(s, "write_queue_capacity", d.write_queue_capacity);
    read_unsigned(s, "write_high_watermark", d.write_high_watermark);
    read_unsigned(s, "write_low_watermark", d.write_low_watermark);
    read_unsigned(s, "rollback_rate", d.rollback_rate);
  }
  if (j.contains("window")) {
    const auto& w = j.at("window");
    only_keys(w, "window", {"window_len", "counter_bits"});
    read_unsigned(w, "window_len", c.sim.window.window_len);
    read_unsigned(w, "counter_bits", c.sim.window.counter_bits);
  }
  if (j.contains("predictor")) {
    const auto& p = j.at("predictor");
    only_keys(p, "predictor", {"improvement_threshold", "consistency_windows", "freeze_column_bits"});
    read(p, "improvement_threshold", c.sim.predictor.improvement_threshold);
    read_unsigned(p, "consistency_windows", c.sim.predictor.consistency_windows);
    read(p, "freeze_column_bits", c.sim.predictor.freeze_column_bits);
  }
  if (j.contains("cost_model")) {
    const auto& m = j.at("cost_model");
    only_keys(m, "cost_model",
              {"scenario", "nvdimm_bandwidth_bytes_per_s", "nanocommit_write_ns",
               "reboot_penalty_s", "cpu_clock_hz", "overlap", "charge_relocations"});
    auto& d = c.sim.cost;
    if (m.contains("scenario")) {
      const auto s = cost_scenario_from_name(m.at("scenario").get<std::string>());
      if (!s) fail("unknown cost model '" + m.at("scenario").get<std::string>() + "'");
      d.scenario = *s;
    }
    read(m, "nvdimm_bandwidth_bytes_per_s", d.nvdimm_bandwidth_bytes_per_s);
    read(m, "nanocommit_write_ns", d.nanocommit_write_ns);
    read(m, "reboot_penalty_s", d.reboot_penalty_s);
    read(m, "cpu_clock_hz", d.cpu_clock_hz);
    read(m, "overlap", d.overlap);
    read(m, "charge_relocations", c.sim.charge_relocations);
  }
  read(j, "scheme", c.scheme);
  read(j, "controller", c.controller);
  read(j, "traces", c.traces);
  if (j.contains("trace_spec")) c.trace_spec = trace_spec_from(j.at("trace_spec"));
  read(j, "runs", c.runs);
  read(j, "baseline", c.baseline);
  read_unsigned(j, "workload_length", c.workload_length);
  read_unsigned(j, "seed", c.seed);
  read(j, "out", c.out);
  read_unsigned(j, "threads", c.threads);
  c.check();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string run_config_to_json(const RunConfig& c) {
  ordered_json j;
  const auto& g = c.sim.geometry;
  j["geometry"] = {{"channels", g.channels},
                   {"ranks_per_channel", g.ranks_per_channel},
                   {"banks_per_rank", g.banks_per_rank},
                   {"rows_per_bank", g.rows_per_bank},
                   {"columns_per_row", g.columns_per_row},
                   {"line_size", g.line_size},
                   {"cpu_to_mem_clock_ratio", g.cpu_to_mem_clock_ratio}};
  const auto& t = c.sim.timing;
  j["timing"] = {{"t_cas", t.t_cas}, {"t_rcd", t.t_rcd}, {"t_rp", t.t_rp},
                 {"burst_cycles", t.burst_cycles}};
  const auto& s = c.sim.scheduler;
  j["scheduler"] = {{"rob_size", s.rob_size},
                    {"write_queue_capacity", s.write_queue_capacity},
                    {"write_high_watermark", s.write_high_watermark},
                    {"write_low_watermark", s.write_low_watermark},
                    {"rollback_rate", s.rollback_rate}};
  j["window"] = {{"window_len", c.sim.window.window_len},
                 {"counter_bits", c.sim.window.counter_bits}};
  j["predictor"] = {{"improvement_threshold", c.sim.predictor.improvement_threshold},
                    {"consistency_windows", c.sim.predictor.consistency_windows},
                    {"freeze_column_bits", c.sim.predictor.freeze_column_bits}};
  const auto& m = c.sim.cost;
  j["cost_model"] = {{"scenario", cost_scenario_name(m.scenario)},
                     {"nvdimm_bandwidth_bytes_per_s", m.nvdimm_bandwidth_bytes_per_s},
                     {"nanocommit_write_ns", m.nanocommit_write_ns},
                     {"reboot_penalty_s", m.reboot_penalty_s},
                     {"cpu_clock_hz", m.cpu_clock_hz},
                     {"overlap", m.overlap},
                     {"charge_relocations", c.sim.charge_relocations}};
  j["scheme"] = c.scheme;
  j["controller"] = c.controller;
  j["traces"] = c.traces;
  if (c.trace_spec) j["trace_spec"] = trace_spec_to(*c.trace_spec);
  j["runs"] = c.runs;
  j["baseline"] = c.baseline;
  j["workload_length"] = c.workload_length;
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["threads"] = c.threads;
  return j.dump(2) + "\n";
}

ControllerSpec parse_controller(std::string_view spec, const MappingScheme& pams,
                                const DramGeometry& geom) {
  ControllerSpec c;
  if (spec == "dream-online") {
    c.kind = ControllerKind::DreamOnline;
    c.scheme = pams;
  } else if (spec == "dream-offline") {
    c.kind = ControllerKind::DreamOffline;
    c.scheme = pams;
  } else if (spec.starts_with("fixed:") && spec.size() > 6) {
    c.kind = ControllerKind::Fixed;
    c.scheme = resolve_scheme(spec.substr(6), geom);
  } else if (spec == "fixed") {
    c.kind = ControllerKind::Fixed;
    c.scheme = pams;
  } else {
    throw std::invalid_argument("unknown controller '" + std::string(spec) +
                                "' (fixed:<scheme>, dream-online, dream-offline)");
  }
  return c;
}

}  // namespace dream
