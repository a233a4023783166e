#include "dream/addrmap.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dream {

namespace {

constexpr unsigned kMaxAddressBits = 48;

std::size_t idx(Field f) { return static_cast<std::size_t>(f); }

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += "; ";
    out += p;
  }
  return out;
}

// Packed coordinate order, LSB first.
constexpr std::array<Field, kFieldCount> kPackOrder = {
    Field::Offset, Field::Column, Field::Bank, Field::Rank, Field::Channel, Field::Row};

}  // namespace

std::string_view field_name(Field f) {
  switch (f) {
    case Field::Channel: return "channel";
    case Field::Rank: return "rank";
    case Field::Bank: return "bank";
    case Field::Row: return "row";
    case Field::Column: return "column";
    case Field::Offset: return "offset";
  }
  return "?";
}

std::optional<Field> field_from_name(std::string_view name) {
  for (Field f : kAllFields) {
    if (field_name(f) == name) return f;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// DramGeometry

std::uint64_t DramGeometry::capacity_bytes() const {
  return static_cast<std::uint64_t>(channels) * ranks_per_channel * banks_per_rank *
         rows_per_bank * columns_per_row * line_size;
}

unsigned DramGeometry::address_bits() const {
  return static_cast<unsigned>(std::bit_width(capacity_bytes()) - 1);
}

std::uint64_t DramGeometry::field_count(Field f) const {
  switch (f) {
    case Field::Channel: return channels;
    case Field::Rank: return ranks_per_channel;
    case Field::Bank: return banks_per_rank;
    case Field::Row: return rows_per_bank;
    case Field::Column: return columns_per_row;
    case Field::Offset: return line_size;
  }
  return 1;
}

unsigned DramGeometry::field_width(Field f) const {
  return static_cast<unsigned>(std::countr_zero(field_count(f)));
}

std::uint32_t DramGeometry::total_banks() const {
  return channels * ranks_per_channel * banks_per_rank;
}

std::uint64_t DramGeometry::total_rows() const {
  return static_cast<std::uint64_t>(total_banks()) * rows_per_bank;
}

std::uint64_t DramGeometry::row_size_bytes() const {
  return static_cast<std::uint64_t>(columns_per_row) * line_size;
}

std::vector<std::string> DramGeometry::violations() const {
  std::vector<std::string> out;
  unsigned total_width = 0;
  for (Field f : kAllFields) {
    const std::uint64_t n = field_count(f);
    if (n == 0 || !std::has_single_bit(n)) {
      out.push_back(std::string(field_name(f)) + " count " + std::to_string(n) +
                    " is not a power of two");
    } else {
      total_width += field_width(f);
    }
  }
  if (cpu_to_mem_clock_ratio == 0) out.emplace_back("cpu_to_mem_clock_ratio must be >= 1");
  if (out.empty() && total_width > kMaxAddressBits) {
    out.push_back("capacity needs " + std::to_string(total_width) +
                  " address bits; at most " + std::to_string(kMaxAddressBits) + " supported");
  }
  return out;
}

void DramGeometry::check() const {
  const auto v = violations();
  if (!v.empty()) throw std::invalid_argument("invalid geometry: " + join(v));
}

// ---------------------------------------------------------------------------
// Coordinates

std::uint32_t DramCoordinate::get(Field f) const {
  switch (f) {
    case Field::Channel: return channel;
    case Field::Rank: return rank;
    case Field::Bank: return bank;
    case Field::Row: return row;
    case Field::Column: return column;
    case Field::Offset: return offset;
  }
  return 0;
}

void DramCoordinate::set(Field f, std::uint32_t value) {
  switch (f) {
    case Field::Channel: channel = value; break;
    case Field::Rank: rank = value; break;
    case Field::Bank: bank = value; break;
    case Field::Row: row = value; break;
    case Field::Column: column = value; break;
    case Field::Offset: offset = value; break;
  }
}

RowLocation row_location(const DramCoordinate& coord, const DramGeometry& geom) {
  const std::uint32_t bank =
      (coord.channel * geom.ranks_per_channel + coord.rank) * geom.banks_per_rank + coord.bank;
  return {bank, coord.row};
}

// ---------------------------------------------------------------------------
// Builtin schemes

std::optional<BuiltinScheme> builtin_from_name(std::string_view name) {
  if (name == "baseline") return BuiltinScheme::Baseline;
  if (name == "permutation") return BuiltinScheme::Permutation;
  if (name == "minimalist") return BuiltinScheme::Minimalist;
  return std::nullopt;
}

std::string_view builtin_name(BuiltinScheme kind) {
  switch (kind) {
    case BuiltinScheme::Baseline: return "baseline";
    case BuiltinScheme::Permutation: return "permutation";
    case BuiltinScheme::Minimalist: return "minimalist";
  }
  return "?";
}

MappingScheme builtin_scheme(BuiltinScheme kind, const DramGeometry& geom) {
  geom.check();
  MappingScheme s;
  s.scheme_id = std::string(builtin_name(kind));
  unsigned next = 0;
  auto take = [&](Field f, unsigned n) {
    for (unsigned i = 0; i < n; ++i) s.bits(f).push_back(next++);
  };

  take(Field::Offset, geom.field_width(Field::Offset));
  const unsigned col_width = geom.field_width(Field::Column);
  if (kind == BuiltinScheme::Minimalist) {
    const unsigned low = (col_width + 1) / 2;
    take(Field::Column, low);
    take(Field::Bank, geom.field_width(Field::Bank));
    take(Field::Rank, geom.field_width(Field::Rank));
    take(Field::Channel, geom.field_width(Field::Channel));
    take(Field::Column, col_width - low);
  } else {
    take(Field::Column, col_width);
    take(Field::Bank, geom.field_width(Field::Bank));
    take(Field::Rank, geom.field_width(Field::Rank));
    take(Field::Channel, geom.field_width(Field::Channel));
  }
  take(Field::Row, geom.field_width(Field::Row));

  if (kind == BuiltinScheme::Permutation) {
    const unsigned bank_width = geom.field_width(Field::Bank);
    if (bank_width > geom.field_width(Field::Row)) {
      throw std::invalid_argument("permutation scheme needs at least as many row bits as bank bits");
    }
    const auto& row = s.bits(Field::Row);
    s.xor_bank_sources.assign(row.begin(), row.begin() + bank_width);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Validation

std::vector<std::string> validate(const MappingScheme& scheme, const DramGeometry& geom) {
  std::vector<std::string> out = geom.violations();
  if (!out.empty()) return out;

  const unsigned nbits = geom.address_bits();
  std::vector<int> owner(64, -1);
  for (Field f : kAllFields) {
    const auto& bits = scheme.bits(f);
    const unsigned expected = geom.field_width(f);
    if (bits.size() != expected) {
      out.push_back(std::string(field_name(f)) + " width " + std::to_string(bits.size()) +
                    " != " + std::to_string(expected));
    }
    for (unsigned b : bits) {
      if (b >= nbits) {
        out.push_back("bit " + std::to_string(b) + " in " + std::string(field_name(f)) +
                      " is outside the " + std::to_string(nbits) + "-bit address");
        continue;
      }
      if (owner[b] >= 0) {
        out.push_back("overlapping bit " + std::to_string(b));
      } else {
        owner[b] = static_cast<int>(idx(f));
      }
    }
  }
  for (unsigned b = 0; b < nbits; ++b) {
    if (owner[b] < 0) out.push_back("bit " + std::to_string(b) + " is not assigned");
  }

  if (scheme.has_xor()) {
    const auto& bank = scheme.bits(Field::Bank);
    if (scheme.xor_bank_sources.size() != bank.size()) {
      out.push_back("xor_bank_sources length " + std::to_string(scheme.xor_bank_sources.size()) +
                    " != bank width " + std::to_string(bank.size()));
    }
    const auto& row = scheme.bits(Field::Row);
    for (unsigned src : scheme.xor_bank_sources) {
      if (std::find(row.begin(), row.end(), src) == row.end()) {
        out.push_back("xor source bit " + std::to_string(src) + " is not a row bit");
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// AddressTranslator

AddressTranslator::AddressTranslator(MappingScheme scheme, DramGeometry geom)
    : scheme_(std::move(scheme)), geom_(geom) {
  const auto v = validate(scheme_, geom_);
  if (!v.empty()) {
    throw std::invalid_argument("scheme '" + scheme_.scheme_id + "' invalid: " + join(v));
  }
  address_bits_ = geom_.address_bits();

  unsigned shift = 0;
  for (Field f : kPackOrder) {
    shift_[idx(f)] = shift;
    width_[idx(f)] = geom_.field_width(f);
    shift += width_[idx(f)];
  }

  // Image of each address bit in packed-coordinate space, and vice versa.
  std::vector<std::uint64_t> fwd_bit(address_bits_, 0);
  std::vector<std::uint64_t> inv_bit(address_bits_, 0);
  const auto& bank_bits = scheme_.bits(Field::Bank);
  for (Field f : kAllFields) {
    const auto& bits = scheme_.bits(f);
    for (unsigned i = 0; i < bits.size(); ++i) {
      const unsigned packed_bit = shift_[idx(f)] + i;
      fwd_bit[bits[i]] |= std::uint64_t{1} << packed_bit;
      std::uint64_t image = std::uint64_t{1} << bits[i];
      if (f == Field::Row) {
        for (unsigned j = 0; j < scheme_.xor_bank_sources.size(); ++j) {
          if (scheme_.xor_bank_sources[j] == bits[i]) image ^= std::uint64_t{1} << bank_bits[j];
        }
      }
      inv_bit[packed_bit] = image;
    }
  }
  for (unsigned j = 0; j < scheme_.xor_bank_sources.size(); ++j) {
    fwd_bit[scheme_.xor_bank_sources[j]] ^= std::uint64_t{1} << (shift_[idx(Field::Bank)] + j);
  }

  auto build = [&](const std::vector<std::uint64_t>& images) {
    const std::size_t nbytes = (address_bits_ + 7) / 8;
    std::vector<std::array<std::uint64_t, 256>> tables(nbytes);
    for (std::size_t byte = 0; byte < nbytes; ++byte) {
      for (unsigned v = 0; v < 256; ++v) {
        std::uint64_t acc = 0;
        for (unsigned b = 0; b < 8; ++b) {
          const std::size_t bit = byte * 8 + b;
          if ((v >> b & 1u) && bit < images.size()) acc ^= images[bit];
        }
        tables[byte][v] = acc;
      }
    }
    return tables;
  };
  forward_ = build(fwd_bit);
  inverse_ = build(inv_bit);
}

std::uint64_t AddressTranslator::pack(const DramCoordinate& coord) const {
  std::uint64_t packed = 0;
  for (Field f : kAllFields) {
    const std::uint64_t v = coord.get(f);
    if (v >= geom_.field_count(f)) {
      throw std::out_of_range(std::string(field_name(f)) + " index " + std::to_string(v) +
                              " out of range");
    }
    packed |= v << shift_[idx(f)];
  }
  return packed;
}

DramCoordinate AddressTranslator::unpack(std::uint64_t packed) const {
  DramCoordinate c;
  for (Field f : kAllFields) {
    const std::uint64_t mask = (std::uint64_t{1} << width_[idx(f)]) - 1;
    c.set(f, static_cast<std::uint32_t>((packed >> shift_[idx(f)]) & mask));
  }
  return c;
}

DramCoordinate AddressTranslator::decompose(PhysAddr addr) const {
  if (addr >> address_bits_) {
    throw std::out_of_range("address " + std::to_string(addr) + " beyond capacity");
  }
  std::uint64_t packed = 0;
  for (std::size_t byte = 0; byte < forward_.size(); ++byte) {
    packed ^= forward_[byte][(addr >> (8 * byte)) & 0xff];
  }
  return unpack(packed);
}

PhysAddr AddressTranslator::compose(const DramCoordinate& coord) const {
  const std::uint64_t packed = pack(coord);
  PhysAddr addr = 0;
  for (std::size_t byte = 0; byte < inverse_.size(); ++byte) {
    addr ^= inverse_[byte][(packed >> (8 * byte)) & 0xff];
  }
  return addr;
}

PhysAddr AddressTranslator::row_base(RowLocation loc) const {
  DramCoordinate c;
  const std::uint32_t per_channel = geom_.ranks_per_channel * geom_.banks_per_rank;
  c.channel = loc.bank / per_channel;
  c.rank = (loc.bank % per_channel) / geom_.banks_per_rank;
  c.bank = loc.bank % geom_.banks_per_rank;
  c.row = loc.row;
  return compose(c);
}

DramCoordinate decompose(PhysAddr addr, const MappingScheme& scheme, const DramGeometry& geom) {
  return AddressTranslator(scheme, geom).decompose(addr);
}

PhysAddr compose(const DramCoordinate& coord, const MappingScheme& scheme,
                 const DramGeometry& geom) {
  return AddressTranslator(scheme, geom).compose(coord);
}

// ---------------------------------------------------------------------------
// Scheme files

MappingScheme parse_scheme_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("scheme file: ") + e.what());
  }
  if (!j.is_object() || !j.contains("fields") || !j["fields"].is_object()) {
    throw std::invalid_argument("scheme file: expected an object with a 'fields' object");
  }
  auto bit_list = [](const nlohmann::json& arr, std::string_view what) {
    if (!arr.is_array()) {
      throw std::invalid_argument("scheme file: '" + std::string(what) + "' must be an array");
    }
    std::vector<unsigned> out;
    for (const auto& v : arr) {
      if (!v.is_number_unsigned()) {
        throw std::invalid_argument("scheme file: '" + std::string(what) +
                                    "' must hold non-negative integers");
      }
      out.push_back(v.get<unsigned>());
    }
    return out;
  };

  MappingScheme s;
  s.scheme_id = j.value("scheme_id", std::string("custom"));
  for (const auto& [key, value] : j["fields"].items()) {
    const auto f = field_from_name(key);
    if (!f) throw std::invalid_argument("scheme file: unknown field '" + key + "'");
    s.bits(*f) = bit_list(value, key);
  }
  if (j.contains("xor_bank_sources") && !j["xor_bank_sources"].is_null()) {
    s.xor_bank_sources = bit_list(j["xor_bank_sources"], "xor_bank_sources");
  }
  return s;
}

std::string scheme_to_json(const MappingScheme& scheme) {
  nlohmann::ordered_json j;
  j["scheme_id"] = scheme.scheme_id;
  nlohmann::ordered_json fields = nlohmann::ordered_json::object();
  for (Field f : kAllFields) fields[std::string(field_name(f))] = scheme.bits(f);
  j["fields"] = fields;
  if (scheme.has_xor()) j["xor_bank_sources"] = scheme.xor_bank_sources;
  return j.dump(2) + "\n";
}

MappingScheme load_scheme_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open scheme file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scheme_json(ss.str());
}

void save_scheme_file(const MappingScheme& scheme, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scheme file " + path);
  out << scheme_to_json(scheme);
}

MappingScheme resolve_scheme(std::string_view name_or_path, const DramGeometry& geom) {
  if (auto kind = builtin_from_name(name_or_path)) return builtin_scheme(*kind, geom);
  return load_scheme_file(std::string(name_or_path));
}

}  // namespace dream
