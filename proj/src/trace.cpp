#include "dream/trace.hpp"

#include <zlib.h>

#include <charconv>
#include <istream>
#include <memory>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>

namespace dream {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::string_view next_token(std::string_view& s) {
  s = trim(s);
  std::size_t end = 0;
  while (end < s.size() && s[end] != ' ' && s[end] != '\t') ++end;
  const auto tok = s.substr(0, end);
  s.remove_prefix(end);
  return tok;
}

struct GzCloser {
  void operator()(gzFile f) const { gzclose(f); }
};
using GzHandle = std::unique_ptr<std::remove_pointer_t<gzFile>, GzCloser>;

// Uniform double in [0, 1) from the top 53 bits.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

MemoryRequest parse_trace_line(std::string_view line, std::size_t line_no) {
  std::string_view rest = line;
  const auto gap_tok = next_token(rest);
  const auto op_tok = next_token(rest);
  const auto addr_tok = next_token(rest);
  if (gap_tok.empty() || op_tok.empty() || addr_tok.empty() || !trim(rest).empty()) {
    throw TraceParseError(line_no, "expected '<gap> <R|W> <0x-address>'");
  }

  MemoryRequest r;
  auto [gp, gec] = std::from_chars(gap_tok.data(), gap_tok.data() + gap_tok.size(), r.gap);
  if (gec != std::errc{} || gp != gap_tok.data() + gap_tok.size()) {
    throw TraceParseError(line_no, "bad gap '" + std::string(gap_tok) + "'");
  }
  if (op_tok == "R") {
    r.op = Op::Read;
  } else if (op_tok == "W") {
    r.op = Op::Write;
  } else {
    throw TraceParseError(line_no, "bad operation '" + std::string(op_tok) + "'");
  }
  if (addr_tok.size() < 3 || addr_tok[0] != '0' || (addr_tok[1] != 'x' && addr_tok[1] != 'X')) {
    throw TraceParseError(line_no, "address must be 0x-prefixed hex");
  }
  const char* first = addr_tok.data() + 2;
  const char* last = addr_tok.data() + addr_tok.size();
  auto [ap, aec] = std::from_chars(first, last, r.address, 16);
  if (aec != std::errc{} || ap != last) {
    throw TraceParseError(line_no, "bad address '" + std::string(addr_tok) + "'");
  }
  return r;
}

Trace parse_trace(std::istream& in) {
  Trace out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    out.push_back(parse_trace_line(t, line_no));
  }
  return out;
}

void serialize_trace(std::ostream& out, std::span<const MemoryRequest> trace) {
  for (const auto& r : trace) {
    out << r.gap << ' ' << (r.op == Op::Read ? 'R' : 'W') << " 0x" << std::hex << r.address
        << std::dec << '\n';
  }
}

Trace load_trace_file(const std::string& path) {
  // gzread passes uncompressed files through unchanged.
  GzHandle f(gzopen(path.c_str(), "rb"));
  if (!f) throw std::invalid_argument("cannot open trace " + path);
  std::string data;
  char buf[1 << 16];
  int n = 0;
  while ((n = gzread(f.get(), buf, sizeof buf)) > 0) data.append(buf, static_cast<std::size_t>(n));
  if (n < 0) throw std::invalid_argument("cannot read trace " + path);
  std::istringstream ss(std::move(data));
  return parse_trace(ss);
}

void save_trace_file(const std::string& path, std::span<const MemoryRequest> trace) {
  std::ostringstream ss;
  serialize_trace(ss, trace);
  const std::string data = ss.str();
  const bool gz = path.size() >= 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
  // "wT" writes without compression.
  GzHandle f(gzopen(path.c_str(), gz ? "wb" : "wT"));
  if (!f) throw std::runtime_error("cannot write trace " + path);
  if (!data.empty() &&
      gzwrite(f.get(), data.data(), static_cast<unsigned>(data.size())) !=
          static_cast<int>(data.size())) {
    throw std::runtime_error("short write to " + path);
  }
}

void check_trace(std::span<const MemoryRequest> trace, const DramGeometry& geom) {
  const std::uint64_t cap = geom.capacity_bytes();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace[i].address >= cap) {
      throw std::out_of_range("request " + std::to_string(i) + " address beyond capacity");
    }
  }
}

// ---------------------------------------------------------------------------
// Generators

std::string_view pattern_name(PatternKind k) {
  switch (k) {
    case PatternKind::Sequential: return "sequential";
    case PatternKind::Strided: return "strided";
    case PatternKind::Random: return "random";
    case PatternKind::PhaseSwitch: return "phase-switch";
    case PatternKind::Mix: return "mix";
  }
  return "?";
}

std::optional<PatternKind> pattern_from_name(std::string_view name) {
  for (auto k : {PatternKind::Sequential, PatternKind::Strided, PatternKind::Random,
                 PatternKind::PhaseSwitch, PatternKind::Mix}) {
    if (pattern_name(k) == name) return k;
  }
  return std::nullopt;
}

Trace generate(const TraceSpec& spec, const DramGeometry& geom) {
  geom.check();
  const std::uint64_t cap = geom.capacity_bytes();
  const unsigned nbits = geom.address_bits();

  if (spec.kind == PatternKind::PhaseSwitch || spec.kind == PatternKind::Mix) {
    if (spec.components.empty()) {
      throw std::invalid_argument(std::string(pattern_name(spec.kind)) + " needs components");
    }
    std::vector<Trace> parts;
    for (const auto& c : spec.components) parts.push_back(generate(c, geom));
    if (spec.kind == PatternKind::Mix) return interleave(parts);
    Trace out;
    for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
  }

  if (spec.length < 1) throw std::invalid_argument("trace length must be >= 1");
  if (spec.kind == PatternKind::Strided &&
      (spec.stride == 0 || spec.stride % geom.line_size != 0)) {
    throw std::invalid_argument("stride must be a positive multiple of the line size");
  }
  if (spec.hot_bit && *spec.hot_bit >= nbits) {
    throw std::invalid_argument("hot bit " + std::to_string(*spec.hot_bit) +
                                " outside the address");
  }
  if (spec.start >= cap) throw std::invalid_argument("start address beyond capacity");

  std::mt19937_64 rng(spec.seed);
  // Independent stream for operation types so addresses do not depend on it.
  std::mt19937_64 op_rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
  const std::uint64_t lines = cap / geom.line_size;

  Trace out;
  out.reserve(spec.length);
  bool hot_state = false;
  for (std::uint64_t i = 0; i < spec.length; ++i) {
    MemoryRequest r;
    r.gap = spec.gap;
    switch (spec.kind) {
      case PatternKind::Sequential:
        r.address = (spec.start + i * geom.line_size) & (cap - 1);
        break;
      case PatternKind::Strided: {
        r.address = (spec.start + i * spec.stride) & (cap - 1);
        if (spec.hot_bit) {
          if (i > 0 && (spec.hot_toggle_prob >= 1.0 || unit(rng) < spec.hot_toggle_prob)) {
            hot_state = !hot_state;
          }
          if (hot_state) r.address ^= std::uint64_t{1} << *spec.hot_bit;
        }
        break;
      }
      case PatternKind::Random:
        r.address = (rng() & (lines - 1)) * geom.line_size;
        break;
      default:
        break;
    }
    if (spec.write_ratio > 0.0 && unit(op_rng) < spec.write_ratio) r.op = Op::Write;
    out.push_back(r);
  }
  return out;
}

Trace gen_sequential(PhysAddr start, std::uint64_t n, const DramGeometry& geom) {
  TraceSpec s;
  s.kind = PatternKind::Sequential;
  s.start = start;
  s.length = n;
  return generate(s, geom);
}

Trace gen_strided(PhysAddr start, std::uint64_t stride, std::optional<unsigned> hot_bit,
                  std::uint64_t n, const DramGeometry& geom) {
  TraceSpec s;
  s.kind = PatternKind::Strided;
  s.start = start;
  s.stride = stride;
  s.hot_bit = hot_bit;
  s.length = n;
  return generate(s, geom);
}

Trace gen_random(std::uint64_t seed, std::uint64_t n, const DramGeometry& geom) {
  TraceSpec s;
  s.kind = PatternKind::Random;
  s.seed = seed;
  s.length = n;
  return generate(s, geom);
}

Trace interleave(std::span<const Trace> traces) {
  struct Head {
    std::uint64_t time;
    std::uint32_t thread;
    std::size_t pos;
    bool operator>(const Head& o) const {
      return time != o.time ? time > o.time : thread > o.thread;
    }
  };
  std::priority_queue<Head, std::vector<Head>, std::greater<>> heads;
  std::size_t total = 0;
  for (std::uint32_t t = 0; t < traces.size(); ++t) {
    total += traces[t].size();
    if (!traces[t].empty()) heads.push({traces[t][0].gap, t, 0});
  }
  Trace out;
  out.reserve(total);
  std::uint64_t last = 0;
  while (!heads.empty()) {
    const Head h = heads.top();
    heads.pop();
    MemoryRequest r = traces[h.thread][h.pos];
    r.gap = h.time - last;
    r.thread_id = h.thread;
    last = h.time;
    out.push_back(r);
    if (h.pos + 1 < traces[h.thread].size()) {
      heads.push({h.time + traces[h.thread][h.pos + 1].gap, h.thread, h.pos + 1});
    }
  }
  return out;
}

}  // namespace dream
