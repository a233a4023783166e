#include "dream/experiments.hpp"

#include <ostream>
#include <stdexcept>

#include "dream/monitor.hpp"
#include "dream/predictor.hpp"
#include "dream/stats.hpp"
#include "json.hpp"

namespace dream {

namespace {

TraceSpec strided(std::uint64_t length, std::uint64_t stride, std::optional<unsigned> hot,
                  double toggle, std::uint64_t seed) {
  TraceSpec s;
  s.kind = PatternKind::Strided;
  s.length = length;
  s.stride = stride;
  s.hot_bit = hot;
  s.hot_toggle_prob = toggle;
  s.seed = seed;
  return s;
}

TraceSpec random_spec(std::uint64_t length, std::uint64_t seed) {
  TraceSpec s;
  s.kind = PatternKind::Random;
  s.length = length;
  s.seed = seed;
  return s;
}

TraceSpec sequential(std::uint64_t length, PhysAddr start) {
  TraceSpec s;
  s.kind = PatternKind::Sequential;
  s.length = length;
  s.start = start;
  return s;
}

TraceSpec combine(PatternKind kind, std::vector<TraceSpec> parts) {
  // Mixed threads need issue gaps, otherwise the merge degenerates into a
  // concatenation.
  if (kind == PatternKind::Mix) {
    for (auto& p : parts) p.gap = 1;
  }
  TraceSpec s;
  s.kind = kind;
  s.components = std::move(parts);
  return s;
}

}  // namespace

std::vector<Workload> correlation_suite(std::uint64_t length, std::uint64_t seed) {
  const std::uint64_t n = length;
  std::vector<Workload> w;
  w.push_back({"sequential", sequential(n, 0)});
  for (std::uint64_t k = 0; k < 3; ++k) {
    w.push_back({"random-" + std::to_string(k), random_spec(n, seed + k)});
  }
  for (unsigned bit : {16u, 18u, 20u, 22u, 24u, 26u, 28u, 30u}) {
    w.push_back({"hot" + std::to_string(bit), strided(n, 64, bit, 1.0, seed)});
  }
  for (double p : {0.5, 0.25, 0.1, 0.02}) {
    const auto pct = std::to_string(static_cast<int>(p * 100));
    w.push_back({"hot20-p" + pct, strided(n, 64, 20, p, seed + 7)});
  }
  w.push_back({"stride-8k", strided(n, 8192, std::nullopt, 1.0, seed)});
  w.push_back({"stride-64k", strided(n, 65536, std::nullopt, 1.0, seed)});
  w.push_back({"stride128-hot25-p50", strided(n, 128, 25, 0.5, seed + 3)});
  w.push_back({"mix-hot-random",
               combine(PatternKind::Mix, {strided(n / 2, 64, 22, 1.0, seed),
                                          random_spec(n / 2, seed + 11)})});
  w.push_back({"mix-seq-hot", combine(PatternKind::Mix, {sequential(n / 2, 1ull << 28),
                                                         strided(n / 2, 64, 27, 1.0, seed)})});
  w.push_back({"mix-4random", combine(PatternKind::Mix, {random_spec(n / 4, seed + 21),
                                                         random_spec(n / 4, seed + 22),
                                                         random_spec(n / 4, seed + 23),
                                                         random_spec(n / 4, seed + 24)})});
  w.push_back({"phase-hot20-hot24", combine(PatternKind::PhaseSwitch,
                                            {strided(n / 2, 64, 20, 1.0, seed),
                                             strided(n / 2, 64, 24, 1.0, seed)})});
  w.push_back({"phase-seq-random", combine(PatternKind::PhaseSwitch,
                                           {sequential(n / 2, 0), random_spec(n / 2, seed + 31)})});
  return w;
}

CorrelationResult correlate(const std::vector<NamedTrace>& traces, const MappingScheme& pams,
                            const SimConfig& cfg, unsigned threads) {
  if (traces.size() < 3) throw std::invalid_argument("correlate needs at least 3 workloads");
  CorrelationResult out;
  out.points = parallel_map<CorrelationPoint>(traces.size(), threads, [&](std::size_t i) {
    const Trace& t = traces[i].trace;
    const SimReport base = run(t, {ControllerKind::Fixed, pams}, cfg);
    const SimReport off = run(t, {ControllerKind::DreamOffline, pams}, cfg);
    CorrelationPoint p;
    p.name = traces[i].name;
    p.requests = t.size();
    p.bitchange_improvement = improvement(*off.roi_signature, pams, *off.offline_scheme);
    p.baseline_cycles = base.total_cpu_cycles;
    p.dream_cycles = off.total_cpu_cycles;
    p.perf_improvement = (base.total_cpu_cycles - off.total_cpu_cycles) / base.total_cpu_cycles;
    p.baseline_conflicts = base.page_conflicts;
    p.dream_conflicts = off.page_conflicts;
    return p;
  });
  std::vector<double> xs, ys;
  for (const auto& p : out.points) {
    xs.push_back(p.bitchange_improvement);
    ys.push_back(p.perf_improvement);
  }
  out.pearson_r = pearson(xs, ys);
  out.p_value = pearson_p_value(out.pearson_r, xs.size());
  return out;
}

void write_correlation_csv(std::ostream& out, const CorrelationResult& r) {
  out << "workload,requests,bitchange_improvement,perf_improvement,baseline_cycles,dream_cycles,"
         "baseline_conflicts,dream_conflicts\n";
  for (const auto& p : r.points) {
    out << p.name << ',' << p.requests << ',' << p.bitchange_improvement << ','
        << p.perf_improvement << ',' << p.baseline_cycles << ',' << p.dream_cycles << ','
        << p.baseline_conflicts << ',' << p.dream_conflicts << '\n';
  }
}

CompareMatrix compare_matrix(const std::vector<NamedTrace>& traces,
                             const std::vector<ControllerSpec>& runs, std::size_t baseline_index,
                             const SimConfig& cfg, unsigned threads) {
  if (traces.empty() || runs.empty()) throw std::invalid_argument("compare needs traces and runs");
  if (baseline_index >= runs.size()) throw std::invalid_argument("baseline run missing");
  const std::size_t nr = runs.size();
  auto reports = parallel_map<SimReport>(traces.size() * nr, threads, [&](std::size_t k) {
    return run(traces[k / nr].trace, runs[k % nr], cfg);
  });

  CompareMatrix m;
  m.baseline = runs[baseline_index].label();
  std::vector<std::vector<double>> norms(nr);
  for (std::size_t t = 0; t < traces.size(); ++t) {
    std::vector<NamedRun> named;
    for (std::size_t r = 0; r < nr; ++r) {
      named.push_back({runs[r].label(), reports[t * nr + r].total_cpu_cycles});
    }
    // Positional lookup keeps duplicate labels apart.
    const double base = named[baseline_index].cpu_cycles;
    for (std::size_t r = 0; r < nr; ++r) {
      const double norm = named[r].cpu_cycles / base;
      m.cells.push_back({traces[t].name, named[r].name, named[r].cpu_cycles, norm,
                         reports[t * nr + r].page_conflicts});
      norms[r].push_back(norm);
    }
  }
  for (std::size_t r = 0; r < nr; ++r) {
    if (r == baseline_index) continue;
    m.gmean.emplace_back(runs[r].label(), gmean(norms[r]));
  }
  return m;
}

void write_matrix_csv(std::ostream& out, const CompareMatrix& m) {
  out << "trace,run,cpu_cycles,normalized,page_conflicts\n";
  for (const auto& c : m.cells) {
    out << c.trace << ',' << c.run << ',' << c.cpu_cycles << ',' << c.normalized << ','
        << c.page_conflicts << '\n';
  }
  for (const auto& [run, g] : m.gmean) out << "GMEAN," << run << ",," << g << ",\n";
}

std::string storage_report_json(const DramGeometry& geom, unsigned counter_bits) {
  using nlohmann::ordered_json;
  const TableStorage t = table_storage(geom);
  ordered_json j;
  j["geometry"] = {{"capacity_bytes", geom.capacity_bytes()},
                   {"total_rows", geom.total_rows()},
                   {"row_size_bytes", geom.row_size_bytes()}};
  j["tables"] = {{"bits", t.bits},
                 {"bytes", t.bytes},
                 {"fraction", t.fraction},
                 {"percent", t.fraction * 100.0},
                 {"note",
                  "fraction is table bits per data bit; the 3e-5 figure matches the fraction, "
                  "not the percentage"}};

  const unsigned abits = geom.address_bits();
  j["monitor"] = {{"address_bits", abits},
                  {"counter_bits", counter_bits},
                  {"bytes", monitor_storage_bytes(abits, counter_bits)}};

  // 512 GB with the default bank and row-buffer organisation.
  DramGeometry big = geom;
  big.channels = 1;
  big.ranks_per_channel = 1;
  big.rows_per_bank = static_cast<std::uint32_t>(
      (std::uint64_t{512} << 30) /
      (std::uint64_t{big.banks_per_rank} * big.columns_per_row * big.line_size));
  const unsigned big_bits = big.address_bits();
  const unsigned row_bank = big.field_width(Field::Row) + big.field_width(Field::Bank);
  const std::uint64_t counters_full = (std::uint64_t{big_bits} * counter_bits + 7) / 8;
  const std::uint64_t counters_rb = (std::uint64_t{row_bank} * counter_bits + 7) / 8;
  j["monitor_512GB"] = {
      {"address_bits", big_bits},
      {"full_width_bytes", monitor_storage_bytes(big_bits, counter_bits)},
      {"full_width_counters_only_bytes", counters_full},
      {"row_bank_bits", row_bank},
      {"row_bank_counters_only_bytes", counters_rb},
      {"row_bank_bytes", monitor_storage_bytes(row_bank, counter_bits)},
      {"reference_bound_bytes", 60},
      {"note",
       "the full-width monitor exceeds the 60-byte reference bound; only the row and bank "
       "counters without the history register fit under it"}};
  return j.dump(2) + "\n";
}

}  // namespace dream
