#include "dream/migration.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

namespace dream {

std::string_view relocation_kind_name(RelocationKind k) {
  switch (k) {
    case RelocationKind::Migrate: return "migrate";
    case RelocationKind::Swap: return "swap";
    case RelocationKind::RollbackMove: return "rollback";
  }
  return "?";
}

MigrationState::MigrationState(MappingScheme pams, DramGeometry geom, bool track_residency)
    : pams_(std::move(pams), geom), geom_(geom), track_residency_(track_residency) {
  const std::uint64_t n = geom_.total_rows();
  if (n > UINT32_MAX) throw std::invalid_argument("too many rows for migration tables");
  mt_.assign(n, 0);
  st_.assign(n, 0);
  intra_seen_.assign(n, 0);
  if (track_residency_) {
    loc_to_row_.resize(n);
    std::iota(loc_to_row_.begin(), loc_to_row_.end(), 0u);
    row_to_loc_ = loc_to_row_;
  }
}

void MigrationState::activate(MappingScheme eams) {
  if (eams_) throw std::logic_error("an estimated mapping is already active");
  for (Field f : {Field::Column, Field::Offset}) {
    if (eams.bits(f) != pams_.scheme().bits(f)) {
      throw std::invalid_argument("row migration needs identical " +
                                  std::string(field_name(f)) + " bits in both schemes");
    }
  }
  eams_.emplace(std::move(eams), geom_);
  rolling_back_ = false;
  rollback_cursor_ = 0;
}

void MigrationState::begin_rollback() {
  if (!eams_) throw std::logic_error("no estimated mapping to roll back");
  rolling_back_ = true;
  rollback_cursor_ = 0;
}

std::uint64_t MigrationState::dest(std::uint64_t home) const {
  return eams_->locate(pams_.row_base(RowLocation::from_index(home, geom_))).index(geom_);
}

std::uint64_t MigrationState::source(std::uint64_t loc) const {
  return pams_.locate(eams_->row_base(RowLocation::from_index(loc, geom_))).index(geom_);
}

RowLocation MigrationState::dest_of(PhysAddr addr) const {
  return eams_ ? eams_->locate(addr) : pams_.locate(addr);
}

std::uint64_t MigrationState::position(std::uint64_t home) const {
  if (mt_[home]) return dest(home);
  if (!st_[home]) return home;
  // Displaced: walk back through the migrated rows that pushed it out.
  const std::uint64_t limit = mt_.size();
  std::uint64_t x = source(home);
  for (std::uint64_t steps = 1;; ++steps) {
    if (!mt_[x]) {
      throw IntegrityError("swap chain for row " + std::to_string(home) +
                           " reached unmigrated row " + std::to_string(x));
    }
    const std::uint64_t p = source(x);
    if (p == home || !mt_[p]) return x;
    x = p;
    if (steps > limit) {
      throw IntegrityError("swap chain for row " + std::to_string(home) + " does not terminate");
    }
  }
}

void MigrationState::refresh_swap_bit(std::uint64_t home) {
  st_[home] = (!mt_[home] && mt_[source(home)]) ? 1 : 0;
}

void MigrationState::set_migrated(std::uint64_t home, bool value) {
  if (static_cast<bool>(mt_[home]) == value) return;
  mt_[home] = value ? 1 : 0;
  if (value) {
    ++migrated_count_;
  } else {
    --migrated_count_;
  }
  refresh_swap_bit(home);
  refresh_swap_bit(dest(home));
}

void MigrationState::swap_contents(std::uint64_t a, std::uint64_t b) {
  if (!track_residency_) return;
  const std::uint32_t ra = loc_to_row_[a];
  const std::uint32_t rb = loc_to_row_[b];
  loc_to_row_[a] = rb;
  loc_to_row_[b] = ra;
  row_to_loc_[rb] = static_cast<std::uint32_t>(a);
  row_to_loc_[ra] = static_cast<std::uint32_t>(b);
}

RelocationEvent MigrationState::make_event(RelocationKind kind, std::uint64_t src,
                                           std::uint64_t dst, bool executed,
                                           std::uint32_t rows) const {
  RelocationEvent e;
  e.kind = kind;
  e.src = RowLocation::from_index(src, geom_);
  e.dst = RowLocation::from_index(dst, geom_);
  e.inter_bank = e.src.bank != e.dst.bank;
  e.executed = executed;
  e.rows_moved = executed ? rows : 0;
  e.mem_cycles = executed ? rows * kRowTransferMemCycles : 0;
  return e;
}

RowLocation MigrationState::locate(PhysAddr addr) const {
  const std::uint64_t home = pams_.locate(addr).index(geom_);
  if (!eams_) return RowLocation::from_index(home, geom_);
  return RowLocation::from_index(position(home), geom_);
}

ResolveResult MigrationState::resolve(PhysAddr addr) {
  ResolveResult out;
  const std::uint64_t home = pams_.locate(addr).index(geom_);
  const std::uint64_t cur = eams_ ? position(home) : home;
  out.service = RowLocation::from_index(cur, geom_);

  // The request is served before its row moves.
  if (track_residency_ && loc_to_row_[cur] != home) {
    throw IntegrityError("row " + std::to_string(home) + " resolved to location " +
                         std::to_string(cur) + " which holds row " +
                         std::to_string(loc_to_row_[cur]));
  }
  if (!eams_ || rolling_back_ || mt_[home]) return out;

  const std::uint64_t dst = dest(home);
  if (cur == dst) {
    set_migrated(home, true);
    return out;
  }
  if (cur / geom_.rows_per_bank == dst / geom_.rows_per_bank) {
    if (!intra_seen_[home]) {
      intra_seen_[home] = 1;
      ++stats_.intra_bank;
      out.events.push_back(make_event(RelocationKind::Swap, cur, dst, false, 2));
    }
    return out;
  }
  // The occupant of dst is always an unmigrated row: swap with it.
  swap_contents(cur, dst);
  set_migrated(home, true);
  ++stats_.inter_bank;
  ++stats_.swaps;
  out.events.push_back(make_event(RelocationKind::Swap, cur, dst, true, 2));
  return out;
}

std::vector<RelocationEvent> MigrationState::rollback_step(std::size_t budget) {
  if (!rolling_back_) throw std::logic_error("rollback not started");
  std::vector<RelocationEvent> events;
  while (budget > 0 && migrated_count_ > 0) {
    while (!mt_[rollback_cursor_]) ++rollback_cursor_;
    const std::uint64_t h = rollback_cursor_;

    // First location of the migrated run that contains h.
    std::uint64_t head = h;
    bool whole_cycle = false;
    for (std::uint64_t steps = 0;; ++steps) {
      const std::uint64_t p = source(head);
      if (p == h) {
        whole_cycle = true;
        break;
      }
      if (!mt_[p]) break;
      head = p;
      if (steps > mt_.size()) throw IntegrityError("rollback walk does not terminate");
    }

    if (whole_cycle) {
      // Every row of the cycle is migrated: h already sits where an
      // unmigrated-but-displaced h belongs.
      set_migrated(h, false);
    } else {
      const std::uint64_t at = dest(h);
      swap_contents(head, at);
      set_migrated(h, false);
      events.push_back(make_event(RelocationKind::RollbackMove, at, head, true, 2));
      ++stats_.rollback_swaps;
    }
    ++stats_.rollback_moves;
    --budget;
  }
  if (migrated_count_ == 0) retire();
  return events;
}

void MigrationState::retire() {
  eams_.reset();
  rolling_back_ = false;
  rollback_cursor_ = 0;
  std::fill(intra_seen_.begin(), intra_seen_.end(), 0);
  std::fill(st_.begin(), st_.end(), 0);
}

std::uint64_t MigrationState::set_table_bits() const {
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < mt_.size(); ++i) n += mt_[i] + st_[i];
  return n;
}

std::optional<std::uint64_t> MigrationState::resident_row(RowLocation loc) const {
  if (!track_residency_) return std::nullopt;
  return loc_to_row_[loc.index(geom_)];
}

void MigrationState::check_integrity() const {
  const std::uint64_t n = mt_.size();
  std::uint64_t migrated = 0;
  for (std::uint64_t h = 0; h < n; ++h) {
    migrated += mt_[h];
    if (!eams_) {
      if (mt_[h] || st_[h]) throw IntegrityError("table bit set without an estimated mapping");
      continue;
    }
    const bool expect_st = !mt_[h] && mt_[source(h)];
    if (static_cast<bool>(st_[h]) != expect_st) {
      throw IntegrityError("swap bit of row " + std::to_string(h) + " inconsistent");
    }
  }
  if (migrated != migrated_count_) throw IntegrityError("migrated row count drifted");
  if (!track_residency_) return;
  for (std::uint64_t h = 0; h < n; ++h) {
    if (loc_to_row_[row_to_loc_[h]] != h) throw IntegrityError("residency map is not a bijection");
    const std::uint64_t pos = eams_ ? position(h) : h;
    if (pos != row_to_loc_[h]) {
      throw IntegrityError("row " + std::to_string(h) + " resolves to " + std::to_string(pos) +
                           " but resides at " + std::to_string(row_to_loc_[h]));
    }
  }
}

// ---------------------------------------------------------------------------
// Cost models

std::string_view cost_scenario_name(CostScenario s) {
  switch (s) {
    case CostScenario::InDram: return "in-dram";
    case CostScenario::OfflineReboot: return "offline-reboot";
    case CostScenario::NvdimmBulk: return "nvdimm";
    case CostScenario::NanoCommit: return "nanocommit";
  }
  return "?";
}

std::optional<CostScenario> cost_scenario_from_name(std::string_view name) {
  for (auto s : {CostScenario::InDram, CostScenario::OfflineReboot, CostScenario::NvdimmBulk,
                 CostScenario::NanoCommit}) {
    if (cost_scenario_name(s) == name) return s;
  }
  return std::nullopt;
}

Charge relocation_cost(const RelocationEvent& event, const CostModel& model,
                       const DramGeometry& geom) {
  Charge c;
  if (!event.executed) return c;
  switch (model.scenario) {
    case CostScenario::InDram:
      c.cpu_cycles = static_cast<double>(event.mem_cycles) * geom.cpu_to_mem_clock_ratio;
      c.seconds = c.cpu_cycles / model.cpu_clock_hz;
      break;
    case CostScenario::NanoCommit:
      c.seconds = event.rows_moved * model.nanocommit_write_ns * 1e-9;
      c.cpu_cycles = c.seconds * model.cpu_clock_hz;
      break;
    case CostScenario::NvdimmBulk:
    case CostScenario::OfflineReboot:
      break;
  }
  return c;
}

Charge mapping_change_cost(const CostModel& model, const DramGeometry& geom) {
  Charge c;
  switch (model.scenario) {
    case CostScenario::NvdimmBulk: {
      const double one_way =
          static_cast<double>(geom.capacity_bytes()) / model.nvdimm_bandwidth_bytes_per_s;
      c.seconds = 2.0 * one_way;  // save under the old mapping, restore under the new
      c.cpu_cycles = c.seconds * model.cpu_clock_hz;
      break;
    }
    case CostScenario::OfflineReboot:
      c.seconds = model.reboot_penalty_s;
      c.cpu_cycles = c.seconds * model.cpu_clock_hz;
      break;
    case CostScenario::InDram:
    case CostScenario::NanoCommit:
      break;
  }
  return c;
}

Charge nanocommit_write_cost(const CostModel& model) {
  Charge c;
  c.seconds = model.nanocommit_write_ns * 1e-9;
  c.cpu_cycles = c.seconds * model.cpu_clock_hz;
  return c;
}

TableStorage table_storage(const DramGeometry& geom) {
  geom.check();
  TableStorage t;
  t.bits = 2 * geom.total_rows();
  t.bytes = (t.bits + 7) / 8;
  t.fraction = 2.0 / static_cast<double>(geom.row_size_bytes() * 8);
  return t;
}

void write_relocation_csv(std::ostream& out, std::span<const RelocationEvent> events) {
  out << "event_seq,kind,src_bank,src_row,dst_bank,dst_row,inter_bank,mem_cycles\n";
  std::uint64_t seq = 0;
  for (const auto& e : events) {
    out << seq++ << ',' << relocation_kind_name(e.kind) << ',' << e.src.bank << ','
        << e.src.row << ',' << e.dst.bank << ',' << e.dst.row << ','
        << (e.inter_bank ? 1 : 0) << ',' << e.mem_cycles << '\n';
  }
}

}  // namespace dream
