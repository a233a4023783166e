#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "dream/migration.hpp"
#include "oracles.hpp"

using namespace dream;

namespace {

using oracle::random_eams;
using oracle::Shadow;

struct Fixture {
  DramGeometry g = oracle::tiny_geometry();
  MappingScheme pams = builtin_scheme(BuiltinScheme::Baseline, g);
  AddressTranslator pt{pams, g};
};

PhysAddr addr_of_row(const AddressTranslator& t, std::uint64_t index) {
  return t.row_base(RowLocation::from_index(index, t.geometry()));
}

}  // namespace

TEST_CASE("fresh state serves at the predefined location") {
  Fixture f;
  MigrationState m(f.pams, f.g);
  CHECK_FALSE(m.active());
  const auto r = m.resolve(0x1240);
  CHECK(r.service == f.pt.locate(0x1240));
  CHECK(r.events.empty());
  CHECK(m.set_table_bits() == 0);
}

TEST_CASE("self-mapped row is marked without moving") {
  Fixture f;
  MigrationState m(f.pams, f.g);
  m.activate(f.pams);  // identity estimate
  const auto r = m.resolve(0x40);
  CHECK(r.events.empty());
  CHECK(r.service == f.pt.locate(0x40));
  CHECK(m.migration_bit(f.pt.locate(0x40)));
  CHECK(m.migrated_rows() == 1);
}

TEST_CASE("swap with an unmigrated occupant") {
  Fixture f;
  // Exchange the lowest bank bit with the lowest row bit.
  MappingScheme e = f.pams;
  std::swap(e.bits(Field::Bank)[0], e.bits(Field::Row)[0]);
  const AddressTranslator et(e, f.g);
  MigrationState m(f.pams, f.g);
  m.activate(e);

  // A: bank 1, row 0 in the PAMS -> bank 0, row 1 in the EAMS.
  DramCoordinate ca;
  ca.bank = 1;
  const PhysAddr a = f.pt.compose(ca);
  const RowLocation la = f.pt.locate(a);
  const RowLocation lb = et.locate(a);
  REQUIRE(la.bank != lb.bank);
  const PhysAddr b = f.pt.row_base(lb);  // B's home is A's destination

  const auto ra = m.resolve(a);
  CHECK(ra.service == la);
  REQUIRE(ra.events.size() == 1);
  CHECK(ra.events[0].kind == RelocationKind::Swap);
  CHECK(ra.events[0].mem_cycles == 128);
  CHECK(ra.events[0].inter_bank);
  CHECK(ra.events[0].src == la);
  CHECK(ra.events[0].dst == lb);
  CHECK(m.resident_row(lb) == la.index(f.g));
  CHECK(m.resident_row(la) == lb.index(f.g));
  CHECK(m.migration_bit(la));
  CHECK(m.swap_bit(lb));

  const auto rb = m.resolve(b);
  CHECK(rb.service == la);  // B was displaced into A's home

  const auto again = m.resolve(a);
  CHECK(again.service == lb);
  CHECK(again.events.empty());
  CHECK(m.stats().swaps >= 1);
  m.check_integrity();
}

TEST_CASE("intra-bank moves are recorded but skipped") {
  Fixture f;
  MappingScheme e = f.pams;
  std::swap(e.bits(Field::Row)[0], e.bits(Field::Row)[1]);
  MigrationState m(f.pams, f.g);
  m.activate(e);
  DramCoordinate c;
  c.row = 1;
  const PhysAddr a = f.pt.compose(c);
  const auto r1 = m.resolve(a);
  REQUIRE(r1.events.size() == 1);
  CHECK_FALSE(r1.events[0].executed);
  CHECK_FALSE(r1.events[0].inter_bank);
  CHECK(r1.events[0].mem_cycles == 0);
  CHECK_FALSE(m.migration_bit(f.pt.locate(a)));
  CHECK(m.resolve(a).events.empty());
  CHECK(m.stats().intra_bank == 1);
  CHECK(m.stats().inter_bank == 0);
  CHECK(m.stats().attempted() == 1);
}

TEST_CASE("activation checks") {
  Fixture f;
  MigrationState m(f.pams, f.g);
  MappingScheme bad = f.pams;
  std::swap(bad.bits(Field::Column)[0], bad.bits(Field::Row)[0]);
  CHECK_THROWS_AS(m.activate(bad), std::invalid_argument);
  CHECK_THROWS_AS(m.begin_rollback(), std::logic_error);
  CHECK_THROWS_AS(m.rollback_step(1), std::logic_error);
  m.activate(f.pams);
  CHECK_THROWS_AS(m.activate(f.pams), std::logic_error);
}

TEST_CASE("conservation against a shadow replay") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 30; ++trial) {
    const DramGeometry g = oracle::tiny_geometry(1u << (rng() % 3), 1u << (rng() % 7));
    const bool xor_ok = g.field_width(Field::Row) >= g.field_width(Field::Bank);
    const MappingScheme pams = builtin_scheme(
        trial % 2 && xor_ok ? BuiltinScheme::Permutation : BuiltinScheme::Baseline, g);
    const AddressTranslator pt(pams, g);
    const MappingScheme eams = random_eams(rng, pams);
    const AddressTranslator et(eams, g);
    MigrationState m(pams, g);
    m.activate(eams);
    Shadow sh(g.total_rows());
    const std::uint64_t rows = g.total_rows();

    for (int i = 0; i < 10000; ++i) {
      const PhysAddr a = rng() & (g.capacity_bytes() - 1);
      const std::uint64_t home = pt.locate(a).index(g);
      const auto r = m.resolve(a);
      REQUIRE(r.service.index(g) == sh.where[home]);
      for (const auto& e : r.events) {
        if (e.executed) {
          REQUIRE(e.inter_bank);
          REQUIRE(e.mem_cycles == kSwapMemCycles);
          REQUIRE(sh.at[e.src.index(g)] == home);
        }
        sh.apply(e, g);
      }
      if (!r.events.empty() && r.events[0].executed) {
        REQUIRE(sh.where[home] == et.locate(a).index(g));
      }
      // Second resolve with nothing in between is silent.
      REQUIRE(m.resolve(a).events.empty());
      if (i % 1000 == 0) m.check_integrity();
    }
    m.check_integrity();
    for (std::uint64_t h = 0; h < rows; ++h) {
      REQUIRE(m.locate(addr_of_row(pt, h)).index(g) == sh.where[h]);
    }
    CHECK(m.stats().attempted() == m.stats().inter_bank + m.stats().intra_bank);

    // Drain with accesses interleaved, then everything is home again.
    m.begin_rollback();
    while (m.active()) {
      for (const auto& e : m.rollback_step(1 + rng() % 3)) sh.apply(e, g);
      const PhysAddr a = rng() & (g.capacity_bytes() - 1);
      const auto r = m.resolve(a);
      REQUIRE(r.events.empty());
      REQUIRE(r.service.index(g) == sh.where[pt.locate(a).index(g)]);
    }
    CHECK(m.set_table_bits() == 0);
    CHECK(m.migrated_rows() == 0);
    for (std::uint64_t h = 0; h < rows; ++h) {
      REQUIRE(sh.where[h] == h);
      REQUIRE(m.locate(addr_of_row(pt, h)).index(g) == h);
    }
    m.check_integrity();
  }
}

TEST_CASE("rollback examples") {
  Fixture f;
  {
    MigrationState m(f.pams, f.g);
    m.activate(f.pams);
    m.begin_rollback();
    CHECK(m.rollback_step(4).empty());
    CHECK_FALSE(m.active());
  }
  MappingScheme e = f.pams;
  std::swap(e.bits(Field::Bank)[0], e.bits(Field::Row)[0]);
  MigrationState m(f.pams, f.g);
  m.activate(e);
  DramCoordinate c;
  c.bank = 1;
  const PhysAddr a = f.pt.compose(c);
  REQUIRE(m.resolve(a).events.size() == 1);
  m.begin_rollback();
  const auto ev = m.rollback_step(10);
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].kind == RelocationKind::RollbackMove);
  CHECK(ev[0].mem_cycles == 128);
  CHECK(ev[0].rows_moved == 2);
  CHECK(m.set_table_bits() == 0);
  CHECK_FALSE(m.active());
  CHECK(m.resolve(a).service == f.pt.locate(a));
  CHECK(m.resident_row(f.pt.locate(a)) == f.pt.locate(a).index(f.g));
  CHECK(m.stats().rollback_moves == 1);
}

TEST_CASE("a long swap chain is walked") {
  // Rotate the four row bits of a single bank: dest is a permutation with
  // long cycles, so displaced rows sit several hops away from home.
  DramGeometry g = oracle::tiny_geometry(2, 16);
  const auto pams = builtin_scheme(BuiltinScheme::Baseline, g);
  MappingScheme e = pams;
  auto& row = e.bits(Field::Row);
  std::rotate(row.begin(), row.begin() + 1, row.end());
  std::swap(e.bits(Field::Bank)[0], row[0]);
  const AddressTranslator pt(pams, g);
  MigrationState m(pams, g);
  m.activate(e);
  Shadow sh(g.total_rows());
  std::mt19937_64 rng(5);
  for (int i = 0; i < 2000; ++i) {
    const std::uint64_t h = rng() % g.total_rows();
    const auto r = m.resolve(addr_of_row(pt, h));
    REQUIRE(r.service.index(g) == sh.where[h]);
    for (const auto& ev : r.events) sh.apply(ev, g);
  }
  m.check_integrity();
}

TEST_CASE("timing constants and cost models") {
  DramGeometry g;
  CostModel in_dram;
  RelocationEvent swap;
  swap.kind = RelocationKind::Swap;
  swap.rows_moved = 2;
  swap.mem_cycles = kSwapMemCycles;
  CHECK(kRowTransferMemCycles == 64);
  CHECK(kSwapMemCycles == 128);
  CHECK(relocation_cost(swap, in_dram, g).cpu_cycles == 512.0);

  RelocationEvent mig;
  mig.kind = RelocationKind::Migrate;
  mig.rows_moved = 1;
  mig.mem_cycles = kRowTransferMemCycles;
  CHECK(relocation_cost(mig, in_dram, g).cpu_cycles == 256.0);

  RelocationEvent skipped = swap;
  skipped.executed = false;
  CHECK(relocation_cost(skipped, in_dram, g).cpu_cycles == 0.0);

  CostModel nv;
  nv.scenario = CostScenario::NvdimmBulk;
  CHECK(mapping_change_cost(nv, g).seconds == 2.0);
  CHECK(relocation_cost(swap, nv, g).cpu_cycles == 0.0);
  CHECK(mapping_change_cost(in_dram, g).seconds == 0.0);

  CostModel nc;
  nc.scenario = CostScenario::NanoCommit;
  CHECK(nanocommit_write_cost(nc).seconds == doctest::Approx(48e-9).epsilon(1e-15));
  CHECK(relocation_cost(mig, nc, g).seconds == doctest::Approx(48e-9).epsilon(1e-15));
  CHECK(relocation_cost(swap, nc, g).seconds == doctest::Approx(96e-9).epsilon(1e-15));

  CostModel reboot;
  reboot.scenario = CostScenario::OfflineReboot;
  CHECK(mapping_change_cost(reboot, g).seconds == 0.0);
  reboot.reboot_penalty_s = 30.0;
  CHECK(mapping_change_cost(reboot, g).seconds == 30.0);

  CHECK(cost_scenario_from_name("nvdimm") == CostScenario::NvdimmBulk);
  CHECK_FALSE(cost_scenario_from_name("tape").has_value());
}

TEST_CASE("table storage") {
  DramGeometry g;
  const auto t = table_storage(g);
  CHECK(t.bytes == 131072);
  CHECK(t.fraction == 2.0 / 65536.0);

  DramGeometry one = oracle::tiny_geometry(1, 1);
  CHECK(table_storage(one).bits == 2);

  DramGeometry twice = g;
  twice.rows_per_bank *= 2;
  CHECK(table_storage(twice).bytes == 2 * t.bytes);
  CHECK(table_storage(twice).fraction == t.fraction);
}

TEST_CASE("relocation csv") {
  RelocationEvent e;
  e.src = {1, 2};
  e.dst = {3, 4};
  e.mem_cycles = 128;
  std::vector<RelocationEvent> v{e};
  std::ostringstream ss;
  write_relocation_csv(ss, v);
  CHECK(ss.str() ==
        "event_seq,kind,src_bank,src_row,dst_bank,dst_row,inter_bank,mem_cycles\n"
        "0,swap,1,2,3,4,1,128\n");
}
