#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dream/addrmap.hpp"

namespace dream {

/// Raised when the migration tables disagree with the shadow residency map or
/// a swap-chain walk does not terminate.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Memory cycles to move one row between banks over the internal 64-bit bus
/// (4 Kbit row buffer per device at 64 bits per clock).
inline constexpr std::uint32_t kRowTransferMemCycles = 64;
inline constexpr std::uint32_t kSwapMemCycles = 2 * kRowTransferMemCycles;

enum class RelocationKind { Migrate, Swap, RollbackMove };
std::string_view relocation_kind_name(RelocationKind k);

struct RelocationEvent {
  RelocationKind kind = RelocationKind::Swap;
  RowLocation src;
  RowLocation dst;
  bool inter_bank = true;
  /// Intra-bank relocations are recorded but not carried out.
  bool executed = true;
  std::uint32_t rows_moved = 0;
  std::uint32_t mem_cycles = 0;
};

enum class CostScenario { InDram, OfflineReboot, NvdimmBulk, NanoCommit };
std::string_view cost_scenario_name(CostScenario s);
std::optional<CostScenario> cost_scenario_from_name(std::string_view name);

struct CostModel {
  CostScenario scenario = CostScenario::InDram;
  /// NVDIMM save/restore bandwidth (4 GB/s each way).
  double nvdimm_bandwidth_bytes_per_s = 4.0 * (1ull << 30);
  /// NanoCommit flash commit latency per DRAM write.
  double nanocommit_write_ns = 48.0;
  /// Reboot cost for the offline scenario; reported apart from execution time.
  double reboot_penalty_s = 0.0;
  /// CPU clock used to convert wall time into cycles (3.2 GHz).
  double cpu_clock_hz = 3.2e9;
  /// Let in-DRAM relocations overlap with other banks instead of stalling.
  bool overlap = false;
};

struct Charge {
  double cpu_cycles = 0.0;
  double seconds = 0.0;
};

/// InDram: mem_cycles x clock ratio. NanoCommit: 48 ns per row written.
/// NvdimmBulk and OfflineReboot charge per mapping change, not per event.
Charge relocation_cost(const RelocationEvent& event, const CostModel& model,
                       const DramGeometry& geom);
/// NvdimmBulk: save + restore of the whole capacity. OfflineReboot: the
/// reboot penalty. Zero otherwise.
Charge mapping_change_cost(const CostModel& model, const DramGeometry& geom);
Charge nanocommit_write_cost(const CostModel& model);

struct TableStorage {
  std::uint64_t bits = 0;
  std::uint64_t bytes = 0;
  /// Table bits per row bit: 2 / row size in bits.
  double fraction = 0.0;
};

/// Migration + Swap tables: two bits per row.
TableStorage table_storage(const DramGeometry& geom);

struct RelocationStats {
  std::uint64_t inter_bank = 0;  // executed relocations
  std::uint64_t intra_bank = 0;  // attempted, skipped
  std::uint64_t swaps = 0;
  std::uint64_t rollback_moves = 0;
  std::uint64_t rollback_swaps = 0;
  std::uint64_t attempted() const { return inter_bank + intra_bank; }
};

struct ResolveResult {
  RowLocation service;
  std::vector<RelocationEvent> events;
};

/// Dual-mapping state for on-demand row migration.
///
/// Rows are identified by their home location under the predefined scheme
/// (PAMS); dest(h) is the location of the same data under the estimated
/// scheme (EAMS). Column and offset bits must agree between the two schemes,
/// so dest() is a permutation of row locations.
///
///   mt[h] = 1  row h lives at dest(h)
///   st[h] = 1  row h was displaced by a swap: not migrated, and the row
///              whose destination is h has migrated
///
/// Where every row sits is a function of the migrated set alone: a maximal
/// backward run of migrated rows x1 <- ... <- xk ending just before an
/// unmigrated row v leaves v at x1, the run's first location. The swap-chain
/// walk follows the reverse mapping to find x1.
///
/// A shadow residency map (location <-> row) is kept as an oracle when
/// track_residency is set; it is not part of the hardware state.
class MigrationState {
 public:
  MigrationState(MappingScheme pams, DramGeometry geom, bool track_residency = true);

  /// Starts on-demand migration towards `eams`. Throws std::invalid_argument
  /// if the schemes disagree on column or offset bits, std::logic_error if a
  /// mapping is already active.
  void activate(MappingScheme eams);
  /// Stop migrating; rows drain back through rollback_step().
  void begin_rollback();

  bool active() const { return eams_.has_value(); }
  bool rolling_back() const { return rolling_back_; }

  /// Serves a request and performs the migration it triggers.
  ResolveResult resolve(PhysAddr addr);
  /// Current location of the row holding `addr`; no side effects.
  RowLocation locate(PhysAddr addr) const;

  /// Returns up to `budget` migrated rows home. When nothing is left the
  /// estimated scheme is retired and every table bit is 0.
  std::vector<RelocationEvent> rollback_step(std::size_t budget);

  std::uint64_t migrated_rows() const { return migrated_count_; }
  bool migration_bit(RowLocation home) const { return mt_[home.index(geom_)] != 0; }
  bool swap_bit(RowLocation home) const { return st_[home.index(geom_)] != 0; }
  std::uint64_t set_table_bits() const;

  RowLocation home_of(PhysAddr addr) const { return pams_.locate(addr); }
  RowLocation dest_of(PhysAddr addr) const;

  /// Shadow residency: home index of the row stored at `loc`.
  std::optional<std::uint64_t> resident_row(RowLocation loc) const;

  /// Full cross-check of tables against the shadow map. Throws IntegrityError.
  void check_integrity() const;

  const RelocationStats& stats() const { return stats_; }
  const MappingScheme& pams() const { return pams_.scheme(); }
  const std::optional<AddressTranslator>& eams() const { return eams_; }
  const DramGeometry& geometry() const { return geom_; }

 private:
  std::uint64_t dest(std::uint64_t home) const;
  std::uint64_t source(std::uint64_t loc) const;
  std::uint64_t position(std::uint64_t home) const;
  void refresh_swap_bit(std::uint64_t home);
  void set_migrated(std::uint64_t home, bool value);
  void swap_contents(std::uint64_t a, std::uint64_t b);
  RelocationEvent make_event(RelocationKind kind, std::uint64_t src, std::uint64_t dst,
                             bool executed, std::uint32_t rows) const;
  void retire();

  AddressTranslator pams_;
  DramGeometry geom_;
  std::optional<AddressTranslator> eams_;
  bool rolling_back_ = false;
  bool track_residency_;

  std::vector<std::uint8_t> mt_;
  std::vector<std::uint8_t> st_;
  std::vector<std::uint8_t> intra_seen_;
  std::uint64_t migrated_count_ = 0;
  std::uint64_t rollback_cursor_ = 0;

  std::vector<std::uint32_t> loc_to_row_;
  std::vector<std::uint32_t> row_to_loc_;

  RelocationStats stats_;
};

/// CSV `event_seq,kind,src_bank,src_row,dst_bank,dst_row,inter_bank,mem_cycles`.
void write_relocation_csv(std::ostream& out, std::span<const RelocationEvent> events);

}  // namespace dream
