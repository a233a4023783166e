#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dream {

using PhysAddr = std::uint64_t;

enum class Field : std::uint8_t { Channel, Rank, Bank, Row, Column, Offset };
inline constexpr std::size_t kFieldCount = 6;
inline constexpr std::array<Field, kFieldCount> kAllFields = {
    Field::Channel, Field::Rank, Field::Bank, Field::Row, Field::Column, Field::Offset};

std::string_view field_name(Field f);
std::optional<Field> field_from_name(std::string_view name);

/// Memory organisation. Every count must be a power of two.
struct DramGeometry {
  std::uint32_t channels = 1;
  std::uint32_t ranks_per_channel = 1;
  std::uint32_t banks_per_rank = 8;
  std::uint32_t rows_per_bank = 65536;
  std::uint32_t columns_per_row = 128;  // cache lines per row
  std::uint32_t line_size = 64;         // bytes
  std::uint32_t cpu_to_mem_clock_ratio = 4;

  std::uint64_t capacity_bytes() const;
  unsigned address_bits() const;
  std::uint64_t field_count(Field f) const;
  unsigned field_width(Field f) const;
  /// Banks across all channels and ranks.
  std::uint32_t total_banks() const;
  std::uint64_t total_rows() const;
  std::uint64_t row_size_bytes() const;

  std::vector<std::string> violations() const;
  /// Throws std::invalid_argument listing every violation.
  void check() const;

  bool operator==(const DramGeometry&) const = default;
};

struct DramCoordinate {
  std::uint32_t channel = 0;
  std::uint32_t rank = 0;
  std::uint32_t bank = 0;
  std::uint32_t row = 0;
  std::uint32_t column = 0;
  std::uint32_t offset = 0;

  std::uint32_t get(Field f) const;
  void set(Field f, std::uint32_t value);
  bool operator==(const DramCoordinate&) const = default;
};

/// A DRAM row position: bank is flattened over channel and rank.
struct RowLocation {
  std::uint32_t bank = 0;
  std::uint32_t row = 0;

  std::uint64_t index(const DramGeometry& geom) const {
    return static_cast<std::uint64_t>(bank) * geom.rows_per_bank + row;
  }
  static RowLocation from_index(std::uint64_t index, const DramGeometry& geom) {
    return {static_cast<std::uint32_t>(index / geom.rows_per_bank),
            static_cast<std::uint32_t>(index % geom.rows_per_bank)};
  }
  bool operator==(const RowLocation&) const = default;
};

RowLocation row_location(const DramCoordinate& coord, const DramGeometry& geom);

/// Assignment of physical address bits to coordinate fields. Each field lists
/// its bit positions LSB-first. When xor_bank_sources is non-empty, bank bit i
/// is additionally XORed with address bit xor_bank_sources[i].
struct MappingScheme {
  std::string scheme_id;
  std::array<std::vector<unsigned>, kFieldCount> field_bits;
  std::vector<unsigned> xor_bank_sources;

  const std::vector<unsigned>& bits(Field f) const {
    return field_bits[static_cast<std::size_t>(f)];
  }
  std::vector<unsigned>& bits(Field f) { return field_bits[static_cast<std::size_t>(f)]; }
  bool has_xor() const { return !xor_bank_sources.empty(); }
  /// Equality ignoring scheme_id.
  bool same_layout(const MappingScheme& other) const {
    return field_bits == other.field_bits && xor_bank_sources == other.xor_bank_sources;
  }
  bool operator==(const MappingScheme&) const = default;
};

enum class BuiltinScheme { Baseline, Permutation, Minimalist };

std::optional<BuiltinScheme> builtin_from_name(std::string_view name);
std::string_view builtin_name(BuiltinScheme kind);

/// Baseline:    row | channel | rank | bank | column | offset   (MSB..LSB)
/// Permutation: baseline with the lowest row bits XORed into the bank index.
/// Minimalist:  row | column-high | channel | rank | bank | column-low | offset
MappingScheme builtin_scheme(BuiltinScheme kind, const DramGeometry& geom);

/// Every invariant violation of `scheme` against `geom`; empty iff valid.
std::vector<std::string> validate(const MappingScheme& scheme, const DramGeometry& geom);

/// Compiled form of a scheme. The mapping address -> packed coordinate is
/// linear over GF(2), so both directions are evaluated with per-byte lookup
/// tables.
class AddressTranslator {
 public:
  /// Throws std::invalid_argument if the scheme is invalid for the geometry.
  AddressTranslator(MappingScheme scheme, DramGeometry geom);

  /// Throws std::out_of_range for addresses at or beyond capacity.
  DramCoordinate decompose(PhysAddr addr) const;
  /// Throws std::out_of_range for coordinates outside the geometry.
  PhysAddr compose(const DramCoordinate& coord) const;

  RowLocation locate(PhysAddr addr) const { return row_location(decompose(addr), geom_); }
  /// Lowest address stored in the given row (column 0, offset 0).
  PhysAddr row_base(RowLocation loc) const;

  const MappingScheme& scheme() const { return scheme_; }
  const DramGeometry& geometry() const { return geom_; }

 private:
  std::uint64_t pack(const DramCoordinate& coord) const;
  DramCoordinate unpack(std::uint64_t packed) const;

  MappingScheme scheme_;
  DramGeometry geom_;
  unsigned address_bits_ = 0;
  std::array<unsigned, kFieldCount> shift_{};
  std::array<unsigned, kFieldCount> width_{};
  std::vector<std::array<std::uint64_t, 256>> forward_;
  std::vector<std::array<std::uint64_t, 256>> inverse_;
};

DramCoordinate decompose(PhysAddr addr, const MappingScheme& scheme, const DramGeometry& geom);
PhysAddr compose(const DramCoordinate& coord, const MappingScheme& scheme,
                 const DramGeometry& geom);

/// Scheme file: {"scheme_id", "fields": {channel,rank,bank,row,column,offset},
/// "xor_bank_sources"?}. Throws std::invalid_argument on malformed input.
MappingScheme parse_scheme_json(std::string_view text);
std::string scheme_to_json(const MappingScheme& scheme);
MappingScheme load_scheme_file(const std::string& path);
void save_scheme_file(const MappingScheme& scheme, const std::string& path);

/// A builtin name ("baseline", "permutation", "minimalist") or a scheme file.
MappingScheme resolve_scheme(std::string_view name_or_path, const DramGeometry& geom);

}  // namespace dream
