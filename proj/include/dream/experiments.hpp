#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dream/dramsim.hpp"
#include "dream/trace.hpp"

namespace dream {

/// Runs fn(0..n-1) on up to `threads` workers; results keep index order.
template <typename T>
std::vector<T> parallel_map(std::size_t n, unsigned threads, const std::function<T(std::size_t)>& fn);

struct Workload {
  std::string name;
  TraceSpec spec;
};

/// The bundled correlation suite: sequential, random, hot-bit strided over the
/// row field, large strides, multithread mixes and phase switches.
std::vector<Workload> correlation_suite(std::uint64_t length, std::uint64_t seed);

struct CorrelationPoint {
  std::string name;
  std::uint64_t requests = 0;
  double bitchange_improvement = 0.0;
  double perf_improvement = 0.0;
  double baseline_cycles = 0.0;
  double dream_cycles = 0.0;
  std::uint64_t baseline_conflicts = 0;
  std::uint64_t dream_conflicts = 0;
};

struct CorrelationResult {
  std::vector<CorrelationPoint> points;
  double pearson_r = 0.0;
  double p_value = 1.0;
};

struct NamedTrace {
  std::string name;
  Trace trace;
};

/// Fixed(pams) vs DreamOffline for every trace. Throws std::invalid_argument
/// for fewer than three workloads.
CorrelationResult correlate(const std::vector<NamedTrace>& traces, const MappingScheme& pams,
                            const SimConfig& cfg, unsigned threads);

/// CSV `workload,requests,bitchange_improvement,perf_improvement,...`.
void write_correlation_csv(std::ostream& out, const CorrelationResult& result);

struct MatrixCell {
  std::string trace;
  std::string run;
  double cpu_cycles = 0.0;
  double normalized = 0.0;
  std::uint64_t page_conflicts = 0;
};

struct CompareMatrix {
  std::string baseline;
  std::vector<MatrixCell> cells;  // trace-major
  /// Per non-baseline run, geometric mean of normalized time across traces.
  std::vector<std::pair<std::string, double>> gmean;
};

CompareMatrix compare_matrix(const std::vector<NamedTrace>& traces,
                             const std::vector<ControllerSpec>& runs, std::size_t baseline_index,
                             const SimConfig& cfg, unsigned threads);

/// CSV `trace,run,cpu_cycles,normalized,page_conflicts` plus GMEAN rows.
void write_matrix_csv(std::ostream& out, const CompareMatrix& m);

/// Table and monitor storage for `geom` and the 512 GB reference system.
std::string storage_report_json(const DramGeometry& geom, unsigned counter_bits);

}  // namespace dream

#include "dream/detail/parallel.hpp"
