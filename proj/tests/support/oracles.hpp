// Reference models used only by the tests. They are written directly from the
// definitions and share no code with the library beyond plain data types.
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "dream/addrmap.hpp"
#include "dream/migration.hpp"
#include "dream/monitor.hpp"
#include "dream/trace.hpp"

namespace oracle {

using dream::DramCoordinate;
using dream::DramGeometry;
using dream::Field;
using dream::MappingScheme;
using dream::PhysAddr;

inline std::uint32_t gather(PhysAddr addr, const std::vector<unsigned>& bits) {
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) v |= static_cast<std::uint32_t>((addr >> bits[i]) & 1u) << i;
  return v;
}

inline PhysAddr scatter(std::uint32_t value, const std::vector<unsigned>& bits) {
  PhysAddr a = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) a |= static_cast<PhysAddr>((value >> i) & 1u) << bits[i];
  return a;
}

/// Bit-by-bit extraction.
inline DramCoordinate decompose(PhysAddr addr, const MappingScheme& s) {
  DramCoordinate c;
  c.channel = gather(addr, s.bits(Field::Channel));
  c.rank = gather(addr, s.bits(Field::Rank));
  c.bank = gather(addr, s.bits(Field::Bank));
  c.row = gather(addr, s.bits(Field::Row));
  c.column = gather(addr, s.bits(Field::Column));
  c.offset = gather(addr, s.bits(Field::Offset));
  if (!s.xor_bank_sources.empty()) c.bank ^= gather(addr, s.xor_bank_sources);
  return c;
}

inline PhysAddr compose(const DramCoordinate& c, const MappingScheme& s) {
  PhysAddr a = scatter(c.channel, s.bits(Field::Channel)) | scatter(c.rank, s.bits(Field::Rank)) |
               scatter(c.row, s.bits(Field::Row)) | scatter(c.column, s.bits(Field::Column)) |
               scatter(c.offset, s.bits(Field::Offset));
  std::uint32_t bank = c.bank;
  if (!s.xor_bank_sources.empty()) bank ^= gather(a, s.xor_bank_sources);
  return a | scatter(bank, s.bits(Field::Bank));
}

/// Field widths from the geometry, positions shuffled. Offset bits stay at the
/// bottom unless `shuffle_offset`.
inline MappingScheme random_scheme(std::mt19937_64& rng, const DramGeometry& g,
                                   bool shuffle_offset = false, bool allow_xor = true) {
  const unsigned n = g.address_bits();
  const unsigned ow = g.field_width(Field::Offset);
  std::vector<unsigned> bits(n);
  std::iota(bits.begin(), bits.end(), 0u);
  auto first = shuffle_offset ? bits.begin() : bits.begin() + ow;
  std::shuffle(first, bits.end(), rng);
  MappingScheme s;
  s.scheme_id = "random";
  std::size_t k = 0;
  for (Field f : {Field::Offset, Field::Column, Field::Bank, Field::Rank, Field::Channel, Field::Row}) {
    for (unsigned i = 0; i < g.field_width(f); ++i) s.bits(f).push_back(bits[k++]);
  }
  if (allow_xor && (rng() & 1) && s.bits(Field::Row).size() >= s.bits(Field::Bank).size()) {
    auto rows = s.bits(Field::Row);
    std::shuffle(rows.begin(), rows.end(), rng);
    s.xor_bank_sources.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(s.bits(Field::Bank).size()));
  }
  return s;
}

/// Per-bit count of changes between consecutive addresses.
inline std::vector<std::uint64_t> recount(const std::vector<PhysAddr>& addrs, unsigned bits) {
  std::vector<std::uint64_t> c(bits, 0);
  for (std::size_t i = 1; i < addrs.size(); ++i) {
    for (unsigned b = 0; b < bits; ++b) {
      if (((addrs[i] >> b) & 1) != ((addrs[i - 1] >> b) & 1)) ++c[b];
    }
  }
  return c;
}

/// In-order, one-request-at-a-time timing model: each request waits for the
/// previous one, opens its row and transfers one burst.
struct StraightLine {
  std::uint64_t hits = 0, empties = 0, conflicts = 0;
  std::uint64_t completion = 0;
};

inline StraightLine straight_line(const dream::Trace& trace, const MappingScheme& s,
                                  const DramGeometry& g, unsigned t_cas, unsigned t_rcd,
                                  unsigned t_rp, unsigned burst) {
  StraightLine out;
  const std::uint64_t ratio = g.cpu_to_mem_clock_ratio;
  std::map<std::uint64_t, std::uint32_t> open;  // global bank -> row
  std::uint64_t last_issue = 0, prev_done = 0;
  for (const auto& r : trace) {
    const std::uint64_t issue = last_issue + r.gap;
    const std::uint64_t arrival = (issue + ratio - 1) / ratio;
    const std::uint64_t start = std::max(arrival, prev_done);
    last_issue = arrival < start ? start * ratio : issue;
    const DramCoordinate c = decompose(r.address, s);
    const std::uint64_t bank =
        (static_cast<std::uint64_t>(c.channel) * g.ranks_per_channel + c.rank) * g.banks_per_rank + c.bank;
    std::uint64_t lat;
    auto it = open.find(bank);
    if (it == open.end()) {
      lat = t_rcd + t_cas;
      ++out.empties;
    } else if (it->second == c.row) {
      lat = t_cas;
      ++out.hits;
    } else {
      lat = t_rp + t_rcd + t_cas;
      ++out.conflicts;
    }
    open[bank] = c.row;
    prev_done = start + lat + burst;
  }
  out.completion = prev_done;
  return out;
}

// Same column/offset bits as `base`, row/bank/channel/rank positions shuffled.
inline MappingScheme random_eams(std::mt19937_64& rng, const MappingScheme& base) {
  std::vector<unsigned> pool;
  for (Field f : {Field::Row, Field::Bank, Field::Rank, Field::Channel}) {
    for (unsigned b : base.bits(f)) pool.push_back(b);
  }
  std::shuffle(pool.begin(), pool.end(), rng);
  MappingScheme e = base;
  e.scheme_id = "eams";
  std::size_t k = 0;
  for (Field f : {Field::Row, Field::Bank, Field::Rank, Field::Channel}) {
    for (auto& b : e.bits(f)) b = pool[k++];
  }
  if (e.has_xor()) {
    auto rows = e.bits(Field::Row);
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t i = 0; i < e.xor_bank_sources.size(); ++i) e.xor_bank_sources[i] = rows[i];
  }
  return e;
}

// Data placement replayed from the emitted events alone.
struct Shadow {
  std::vector<std::uint64_t> at;     // location -> row
  std::vector<std::uint64_t> where;  // row -> location

  explicit Shadow(std::uint64_t n) : at(n), where(n) {
    for (std::uint64_t i = 0; i < n; ++i) at[i] = where[i] = i;
  }
  void apply(const dream::RelocationEvent& e, const DramGeometry& g) {
    if (!e.executed) return;
    const auto a = e.src.index(g);
    const auto b = e.dst.index(g);
    std::swap(at[a], at[b]);
    where[at[a]] = a;
    where[at[b]] = b;
  }
};

inline DramGeometry tiny_geometry(std::uint32_t banks = 4, std::uint32_t rows = 64) {
  DramGeometry g;
  g.banks_per_rank = banks;
  g.rows_per_bank = rows;
  g.columns_per_row = 4;
  g.line_size = 64;
  return g;
}

}  // namespace oracle
