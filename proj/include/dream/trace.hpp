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

enum class Op : std::uint8_t { Read, Write };

struct MemoryRequest {
  std::uint64_t gap = 0;  // CPU cycles since the previous request was issued
  Op op = Op::Read;
  PhysAddr address = 0;
  std::uint32_t thread_id = 0;

  bool operator==(const MemoryRequest&) const = default;
};

using Trace = std::vector<MemoryRequest>;

class TraceParseError : public std::invalid_argument {
 public:
  TraceParseError(std::size_t line, const std::string& what)
      : std::invalid_argument("trace line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// One `<gap> <R|W> <0x-hex-address>` line.
MemoryRequest parse_trace_line(std::string_view line, std::size_t line_no = 1);
/// Blank lines and lines starting with '#' are skipped.
Trace parse_trace(std::istream& in);
void serialize_trace(std::ostream& out, std::span<const MemoryRequest> trace);

/// Reads plain or gzip-compressed traces (detected by magic bytes).
Trace load_trace_file(const std::string& path);
/// Writes gzip when the path ends in ".gz".
void save_trace_file(const std::string& path, std::span<const MemoryRequest> trace);

/// Throws std::out_of_range for the first address beyond capacity.
void check_trace(std::span<const MemoryRequest> trace, const DramGeometry& geom);

enum class PatternKind { Sequential, Strided, Random, PhaseSwitch, Mix };
std::string_view pattern_name(PatternKind k);
std::optional<PatternKind> pattern_from_name(std::string_view name);

struct TraceSpec {
  PatternKind kind = PatternKind::Sequential;
  std::uint64_t length = 1000;
  PhysAddr start = 0;
  std::uint64_t stride = 64;
  /// Strided only: bit XOR-toggled between accesses.
  std::optional<unsigned> hot_bit;
  /// Probability that the hot bit flips on a given access; 1 toggles every access.
  double hot_toggle_prob = 1.0;
  std::uint64_t seed = 1;
  std::uint64_t gap = 0;
  double write_ratio = 0.0;
  /// PhaseSwitch: phases in order. Mix: one component per thread.
  std::vector<TraceSpec> components;
};

Trace generate(const TraceSpec& spec, const DramGeometry& geom);

Trace gen_sequential(PhysAddr start, std::uint64_t n, const DramGeometry& geom);
Trace gen_strided(PhysAddr start, std::uint64_t stride, std::optional<unsigned> hot_bit,
                  std::uint64_t n, const DramGeometry& geom);
Trace gen_random(std::uint64_t seed, std::uint64_t n, const DramGeometry& geom);

/// Merges per-thread traces by cumulative issue time; ties go to the lower
/// thread index. thread_id is set to the source index and gaps are rebased on
/// the merged stream.
Trace interleave(std::span<const Trace> traces);

}  // namespace dream
