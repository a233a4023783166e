#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dream/dramsim.hpp"
#include "dream/trace.hpp"

namespace dream {

/// Everything a CLI run needs. Defaults are the stock system configuration.
struct RunConfig {
  SimConfig sim;
  /// PAMS for the dream controllers and the default fixed scheme: a builtin
  /// name or a scheme file.
  std::string scheme = "baseline";
  std::string controller = "fixed:baseline";
  std::vector<std::string> traces;
  /// Generated instead of read when no trace path is given.
  std::optional<TraceSpec> trace_spec;
  /// compare: controller specs, the first one is the baseline unless set.
  std::vector<std::string> runs;
  std::string baseline;
  /// correlate: requests per generated workload.
  std::uint64_t workload_length = 200'000;
  std::uint64_t seed = 1;
  std::string out = "out";
  unsigned threads = 0;  // 0: hardware concurrency

  void check() const;
};

/// Strict: unknown keys are errors. Throws std::invalid_argument.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& cfg);

TraceSpec parse_trace_spec(std::string_view json_text);

/// "fixed:<scheme>", "dream-online" or "dream-offline". The dream controllers
/// take `pams` as their predefined scheme.
ControllerSpec parse_controller(std::string_view spec, const MappingScheme& pams,
                                const DramGeometry& geom);

}  // namespace dream
