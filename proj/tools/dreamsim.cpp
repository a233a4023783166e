// dreamsim: command-line front end for profiling, prediction, simulation and
// the comparison / correlation experiments.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dream/config.hpp"
#include "dream/dramsim.hpp"
#include "dream/experiments.hpp"
#include "dream/migration.hpp"
#include "dream/monitor.hpp"
#include "dream/predictor.hpp"
#include "dream/trace.hpp"

namespace fs = std::filesystem;
using namespace dream;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIntegrity = 3;

struct Flags {
  std::string config;
  std::vector<std::string> traces;
  std::string scheme;
  std::string controller;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> window;
  std::optional<double> threshold;
  std::optional<unsigned> consistency;
  std::string cost_model;
  std::optional<unsigned> threads;

  // compare
  std::vector<std::string> runs;
  std::string baseline;
  // correlate
  std::optional<std::uint64_t> length;
  // gen-trace
  std::string pattern;
  std::optional<std::uint64_t> start;
  std::optional<std::uint64_t> stride;
  std::optional<unsigned> hot_bit;
  std::optional<double> toggle_prob;
  std::optional<std::uint64_t> gap;
  std::optional<double> write_ratio;
  std::string output;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "run configuration (JSON)");
  sub->add_option("--trace", f.traces, "trace file (plain or gzip)");
  sub->add_option("--scheme", f.scheme, "predefined scheme: builtin name or scheme file");
  sub->add_option("--controller", f.controller, "fixed:<scheme> | dream-online | dream-offline");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--seed", f.seed, "generator seed");
  sub->add_option("--window", f.window, "requests per monitoring window");
  sub->add_option("--threshold", f.threshold, "improvement threshold (fraction)");
  sub->add_option("--consistency", f.consistency, "consecutive qualifying windows to adopt");
  sub->add_option("--cost-model", f.cost_model, "in-dram | offline-reboot | nvdimm | nanocommit");
  sub->add_option("--threads", f.threads, "worker threads for compare/correlate");
}

RunConfig build_config(const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (!f.traces.empty()) c.traces = f.traces;
  if (!f.scheme.empty()) c.scheme = f.scheme;
  if (!f.controller.empty()) c.controller = f.controller;
  if (!f.out.empty()) c.out = f.out;
  if (f.seed) {
    c.seed = *f.seed;
    if (c.trace_spec) c.trace_spec->seed = *f.seed;
  }
  if (f.window) c.sim.window.window_len = *f.window;
  if (f.threshold) c.sim.predictor.improvement_threshold = *f.threshold;
  if (f.consistency) c.sim.predictor.consistency_windows = *f.consistency;
  if (!f.cost_model.empty()) {
    const auto s = cost_scenario_from_name(f.cost_model);
    if (!s) throw std::invalid_argument("unknown cost model '" + f.cost_model + "'");
    c.sim.cost.scenario = *s;
  }
  if (f.threads) c.threads = *f.threads;
  if (!f.runs.empty()) c.runs = f.runs;
  if (!f.baseline.empty()) c.baseline = f.baseline;
  if (f.length) c.workload_length = *f.length;
  c.check();
  return c;
}

std::vector<NamedTrace> load_traces(const RunConfig& c) {
  std::vector<NamedTrace> out;
  for (const auto& path : c.traces) {
    out.push_back({fs::path(path).filename().string(), load_trace_file(path)});
  }
  if (out.empty() && c.trace_spec) out.push_back({"generated", generate(*c.trace_spec, c.sim.geometry)});
  if (out.empty()) throw std::invalid_argument("no trace given (--trace or trace_spec)");
  return out;
}

NamedTrace single_trace(const RunConfig& c) {
  auto traces = load_traces(c);
  if (traces.size() != 1) throw std::invalid_argument("expected exactly one trace");
  if (traces.front().trace.empty()) throw std::invalid_argument("no requests observed");
  check_trace(traces.front().trace, c.sim.geometry);
  return std::move(traces.front());
}

std::ofstream open_out(const RunConfig& c, const std::string& name) {
  fs::create_directories(c.out);
  std::ofstream out(fs::path(c.out) / name);
  if (!out) throw std::runtime_error("cannot write " + (fs::path(c.out) / name).string());
  out.precision(12);
  return out;
}

void save_config(const RunConfig& c) { open_out(c, "config.json") << run_config_to_json(c); }

std::vector<BitChangeSignature> profile_windows(const Trace& trace, const RunConfig& c) {
  BitChangeMonitor mon(c.sim.geometry.address_bits(), c.sim.window);
  std::vector<BitChangeSignature> windows;
  for (const auto& r : trace) {
    mon.observe(r.address);
    if (mon.window_full()) windows.push_back(mon.finalize_window());
  }
  if (mon.requests_observed() > 0) windows.push_back(mon.finalize_window());
  return windows;
}

int cmd_profile(const RunConfig& c) {
  const NamedTrace t = single_trace(c);
  const auto windows = profile_windows(t.trace, c);
  save_config(c);
  {
    auto out = open_out(c, "signature.csv");
    write_signature_csv(out, windows);
  }
  auto rates = open_out(c, "rates.csv");
  rates << "window_id,bit,rate\n";
  for (const auto& w : windows) {
    if (w.requests_observed < 2) continue;
    const auto r = change_rates(w);
    for (std::size_t b = 0; b < r.size(); ++b) rates << w.window_id << ',' << b << ',' << r[b] << '\n';
  }
  const BitChangeSignature agg = aggregate(windows);
  std::cout << "requests " << t.trace.size() << ", windows " << windows.size() << "\n";
  if (agg.requests_observed >= 2) {
    const auto r = change_rates(agg);
    std::cout << "bit rates (MSB..LSB):";
    for (std::size_t b = r.size(); b-- > 0;) std::cout << ' ' << b << '=' << r[b];
    std::cout << '\n';
  }
  return 0;
}

int cmd_predict(const RunConfig& c) {
  const NamedTrace t = single_trace(c);
  const MappingScheme pams = resolve_scheme(c.scheme, c.sim.geometry);
  const auto windows = profile_windows(t.trace, c);
  const auto decisions = decide(windows, pams, c.sim.predictor);
  const BitChangeSignature agg = aggregate(windows);
  const MappingScheme eams = estimate_mapping(agg, pams, c.sim.predictor, "eams-roi");
  save_config(c);
  {
    auto out = open_out(c, "decisions.csv");
    write_decision_csv(out, decisions);
  }
  open_out(c, "eams.json") << scheme_to_json(eams);
  std::cout << "windows " << windows.size() << ", whole-trace improvement "
            << improvement(agg, pams, eams) << "\n";
  for (const auto& d : decisions) {
    if (d.action != Action::Keep) {
      std::cout << "window " << d.window_id << ": " << action_name(d.action) << " ("
                << d.improvement << ")\n";
    }
  }
  return 0;
}

int cmd_simulate(const RunConfig& c) {
  const NamedTrace t = single_trace(c);
  const MappingScheme pams = resolve_scheme(c.scheme, c.sim.geometry);
  const ControllerSpec ctl = parse_controller(c.controller, pams, c.sim.geometry);
  const SimReport r = run(t.trace, ctl, c.sim);
  save_config(c);
  open_out(c, "report.json") << report_to_json(r) << '\n';
  {
    auto out = open_out(c, "relocations.csv");
    write_relocation_csv(out, r.relocation_log);
  }
  {
    auto out = open_out(c, "decisions.csv");
    write_decision_csv(out, r.decisions);
  }
  std::cout << r.controller << ": requests " << r.requests << ", hits " << r.page_hits
            << ", empties " << r.page_empties << ", conflicts " << r.page_conflicts
            << ", cpu cycles " << static_cast<std::uint64_t>(r.total_cpu_cycles)
            << ", relocations " << r.relocations.inter_bank << "\n";
  return 0;
}

int cmd_compare(const RunConfig& c) {
  const auto traces = load_traces(c);
  const MappingScheme pams = resolve_scheme(c.scheme, c.sim.geometry);
  std::vector<std::string> names = c.runs;
  if (names.empty()) {
    names = {"fixed:baseline", "fixed:permutation", "fixed:minimalist", "dream-offline"};
  }
  std::vector<ControllerSpec> runs;
  std::size_t base_idx = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    runs.push_back(parse_controller(names[i], pams, c.sim.geometry));
    if (!c.baseline.empty() && names[i] == c.baseline) base_idx = i;
  }
  if (!c.baseline.empty() && names[base_idx] != c.baseline) {
    throw std::invalid_argument("baseline '" + c.baseline + "' is not among the runs");
  }
  const CompareMatrix m = compare_matrix(traces, runs, base_idx, c.sim, c.threads);
  save_config(c);
  {
    auto out = open_out(c, "compare.csv");
    write_matrix_csv(out, m);
  }
  std::cout << "baseline " << m.baseline << "\n";
  for (const auto& cell : m.cells) {
    std::cout << cell.trace << ' ' << cell.run << ' ' << cell.normalized << "\n";
  }
  for (const auto& [run, g] : m.gmean) std::cout << "GMEAN " << run << ' ' << g << "\n";
  return 0;
}

int cmd_correlate(const RunConfig& c) {
  std::vector<NamedTrace> traces;
  if (!c.traces.empty()) {
    traces = load_traces(c);
  } else {
    for (const auto& w : correlation_suite(c.workload_length, c.seed)) {
      traces.push_back({w.name, generate(w.spec, c.sim.geometry)});
    }
  }
  if (traces.size() < 3) throw std::invalid_argument("correlate needs at least 3 workloads");
  const MappingScheme pams = resolve_scheme(c.scheme, c.sim.geometry);
  const CorrelationResult r = correlate(traces, pams, c.sim, c.threads);
  save_config(c);
  {
    auto out = open_out(c, "correlation.csv");
    write_correlation_csv(out, r);
  }
  open_out(c, "correlation.json") << "{\n  \"workloads\": " << r.points.size()
                                  << ",\n  \"pearson_r\": " << r.pearson_r
                                  << ",\n  \"p_value\": " << r.p_value << "\n}\n";
  std::cout << "workloads " << r.points.size() << ", pearson r " << r.pearson_r << ", p "
            << r.p_value << "\n";
  return 0;
}

int cmd_gen_trace(const RunConfig& base, const Flags& f) {
  RunConfig c = base;
  TraceSpec s = c.trace_spec.value_or(TraceSpec{});
  if (!f.pattern.empty()) {
    const auto k = pattern_from_name(f.pattern);
    if (!k) throw std::invalid_argument("unknown pattern '" + f.pattern + "'");
    s.kind = *k;
  }
  if (f.length) s.length = *f.length;
  if (f.start) s.start = *f.start;
  if (f.stride) s.stride = *f.stride;
  if (f.hot_bit) s.hot_bit = *f.hot_bit;
  if (f.toggle_prob) s.hot_toggle_prob = *f.toggle_prob;
  if (f.seed) s.seed = *f.seed;
  if (f.gap) s.gap = *f.gap;
  if (f.write_ratio) s.write_ratio = *f.write_ratio;
  const Trace t = generate(s, c.sim.geometry);
  const std::string path = f.output.empty() ? (fs::path(c.out) / "trace.txt").string() : f.output;
  if (const auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
  save_trace_file(path, t);
  std::cout << "wrote " << t.size() << " requests to " << path << "\n";
  return 0;
}

int cmd_storage(const RunConfig& c) {
  const std::string report = storage_report_json(c.sim.geometry, c.sim.window.counter_bits);
  save_config(c);
  open_out(c, "storage.json") << report;
  std::cout << report;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DRAM address-mapping simulator"};
  app.require_subcommand(1);
  Flags f;

  auto* profile = app.add_subcommand("profile", "per-bit change signature of a trace");
  auto* predict = app.add_subcommand("predict", "estimated mapping and decision log");
  auto* simulate = app.add_subcommand("simulate", "run one controller over a trace");
  auto* compare = app.add_subcommand("compare", "normalized execution time across controllers");
  auto* correlate = app.add_subcommand("correlate", "bit-change vs performance improvement");
  auto* gen = app.add_subcommand("gen-trace", "write a synthetic trace");
  auto* storage = app.add_subcommand("storage", "table and monitor storage overheads");
  for (auto* s : {profile, predict, simulate, compare, correlate, gen, storage}) add_common(s, f);

  compare->add_option("--run", f.runs, "controller to compare (repeatable)");
  compare->add_option("--baseline", f.baseline, "run used for normalization");
  correlate->add_option("--length", f.length, "requests per generated workload");
  gen->add_option("--pattern", f.pattern, "sequential | strided | random");
  gen->add_option("--length", f.length, "requests");
  gen->add_option("--start", f.start, "start address");
  gen->add_option("--stride", f.stride, "stride in bytes");
  gen->add_option("--hot-bit", f.hot_bit, "address bit toggled between accesses");
  gen->add_option("--toggle-prob", f.toggle_prob, "probability the hot bit flips per access");
  gen->add_option("--gap", f.gap, "CPU cycles between requests");
  gen->add_option("--write-ratio", f.write_ratio, "fraction of writes");
  gen->add_option("--output", f.output, "trace path (.gz compresses)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    const RunConfig c = build_config(f);
    if (*profile) return cmd_profile(c);
    if (*predict) return cmd_predict(c);
    if (*simulate) return cmd_simulate(c);
    if (*compare) return cmd_compare(c);
    if (*correlate) return cmd_correlate(c);
    if (*gen) return cmd_gen_trace(c, f);
    if (*storage) return cmd_storage(c);
  } catch (const IntegrityError& e) {
    std::cerr << "integrity failure: " << e.what() << "\n";
    return kExitIntegrity;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
