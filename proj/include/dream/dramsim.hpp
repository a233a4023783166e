#pragma once

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dream/addrmap.hpp"
#include "dream/migration.hpp"
#include "dream/monitor.hpp"
#include "dream/predictor.hpp"
#include "dream/trace.hpp"

namespace dream {

/// DDR3-1600-class latencies in memory cycles.
struct TimingParams {
  std::uint32_t t_cas = 11;
  std::uint32_t t_rcd = 11;
  std::uint32_t t_rp = 11;
  std::uint32_t burst_cycles = 4;

  void check() const;
};

enum class PageOutcome { Hit, Empty, Conflict };
std::string_view outcome_name(PageOutcome o);

struct BankState {
  std::optional<std::uint32_t> open_row;
  std::uint64_t busy_until = 0;  // memory cycle the bank accepts its next command
  /// End of the bank's last data burst; the open row cannot close before it.
  std::uint64_t data_until = 0;

  /// Earliest cycle an access to `row` may start.
  std::uint64_t ready_for(std::uint32_t row) const {
    return open_row == row ? busy_until : std::max(busy_until, data_until);
  }
};

struct Classification {
  PageOutcome outcome = PageOutcome::Empty;
  std::uint32_t latency = 0;
};

/// Row-buffer outcome of accessing `row`; leaves `row` open.
Classification classify(std::uint32_t row, BankState& bank, const TimingParams& timing);
inline Classification classify(const DramCoordinate& coord, BankState& bank,
                               const TimingParams& timing) {
  return classify(coord.row, bank, timing);
}

struct SchedulerParams {
  std::uint32_t rob_size = 32;  // outstanding reads per thread
  std::uint32_t write_queue_capacity = 64;
  std::uint32_t write_high_watermark = 32;
  std::uint32_t write_low_watermark = 16;
  std::uint32_t rollback_rate = 1;  // rows returned per scheduling slot

  void check() const;
};

struct PendingRequest {
  std::uint64_t seq = 0;  // arrival order
  Op op = Op::Read;
  PhysAddr address = 0;
  RowLocation loc;
  std::uint32_t thread_id = 0;
};

/// FR-FCFS over `pending` (oldest first). Only requests whose bank is ready
/// for them at `now` are candidates; the oldest row hit wins, else the oldest request.
/// Reads go first unless `drain_writes`, and the other class is served when
/// the preferred one has no candidate. Returns an index into `pending`.
std::optional<std::size_t> schedule_next(std::span<const PendingRequest> pending,
                                         std::span<const BankState> banks, std::uint64_t now,
                                         bool drain_writes);

enum class ControllerKind { Fixed, DreamOnline, DreamOffline };
std::string_view controller_name(ControllerKind k);

struct ControllerSpec {
  ControllerKind kind = ControllerKind::Fixed;
  /// Fixed: the scheme used throughout. Dream controllers: the predefined
  /// scheme (PAMS).
  MappingScheme scheme;

  std::string label() const;
};

struct SimConfig {
  DramGeometry geometry;
  TimingParams timing;
  SchedulerParams scheduler;
  WindowConfig window;
  PredictorConfig predictor;
  CostModel cost;
  /// Add relocation charges to the execution time.
  bool charge_relocations = true;
  /// Cross-check migration tables against the shadow map at every window.
  bool verify_integrity = false;

  void check() const;
};

struct RelocationCounts {
  std::uint64_t inter_bank = 0;
  std::uint64_t intra_bank = 0;
  std::uint64_t swaps = 0;
  std::uint64_t rollbacks = 0;
};

struct SimReport {
  std::string controller;
  std::string pams_id;
  std::string final_scheme_id;
  std::uint64_t requests = 0;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t page_hits = 0;
  std::uint64_t page_empties = 0;
  std::uint64_t page_conflicts = 0;
  std::uint64_t completion_mem_cycles = 0;
  /// completion x ratio plus every charged relocation and mapping change.
  double total_cpu_cycles = 0.0;
  double relocation_cpu_cycles = 0.0;
  double mapping_change_seconds = 0.0;
  std::uint64_t mapping_changes = 0;
  /// Offline reboot cost, never folded into total_cpu_cycles.
  double reboot_penalty_s = 0.0;
  RelocationCounts relocations;
  std::uint64_t migrated_rows_final = 0;
  std::uint64_t migrated_rows_peak = 0;

  std::vector<BitChangeSignature> windows;
  std::vector<Decision> decisions;
  /// Migrated rows right after each window's decision.
  std::vector<std::uint64_t> migrated_after_window;
  std::vector<RelocationEvent> relocation_log;
  /// Offline only: the profiled whole-trace signature.
  std::optional<BitChangeSignature> roi_signature;
  std::optional<MappingScheme> offline_scheme;
};

/// Throws std::invalid_argument for an empty trace or invalid config,
/// std::out_of_range for addresses beyond capacity and IntegrityError on a
/// migration invariant breach.
SimReport run(std::span<const MemoryRequest> trace, const ControllerSpec& controller,
              const SimConfig& cfg);

/// The estimated scheme the offline controller derives from a whole-trace profile.
MappingScheme offline_scheme(std::span<const MemoryRequest> trace, const MappingScheme& pams,
                             const SimConfig& cfg, BitChangeSignature* roi = nullptr);

struct NamedRun {
  std::string name;
  double cpu_cycles = 0.0;
};

struct CompareRow {
  std::string name;
  double cpu_cycles = 0.0;
  double normalized = 0.0;
};

struct CompareTable {
  std::string baseline;
  std::vector<CompareRow> rows;  // baseline first
  /// Geometric mean over every row, baseline included.
  std::optional<double> gmean;
};

/// Throws std::invalid_argument when `baseline` is not among `runs`.
CompareTable compare(std::span<const NamedRun> runs, const std::string& baseline);

/// CSV `name,cpu_cycles,normalized` with a trailing GMEAN row when present.
void write_compare_csv(std::ostream& out, const CompareTable& table);

std::string report_to_json(const SimReport& report, int indent = 2);

}  // namespace dream
