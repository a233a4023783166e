#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "dream/addrmap.hpp"
#include "dream/config.hpp"
#include "dream/dramsim.hpp"
#include "dream/migration.hpp"
#include "dream/monitor.hpp"
#include "dream/predictor.hpp"
#include "dream/stats.hpp"
#include "dream/trace.hpp"

namespace py = pybind11;
using namespace dream;

namespace {

BitChangeSignature signature_of(const std::vector<PhysAddr>& addrs, unsigned bits) {
  WindowConfig cfg;
  cfg.window_len = std::max<std::uint64_t>(2, addrs.size());
  cfg.counter_bits = 32;
  BitChangeMonitor mon(bits, cfg);
  for (PhysAddr a : addrs) mon.observe(a);
  return mon.finalize_window();
}

Trace to_trace(const std::vector<std::tuple<std::uint64_t, std::string, PhysAddr>>& rows) {
  Trace t;
  for (const auto& [gap, op, addr] : rows) {
    if (op != "R" && op != "W") throw std::invalid_argument("op must be 'R' or 'W'");
    t.push_back({gap, op == "R" ? Op::Read : Op::Write, addr, 0});
  }
  return t;
}

py::list from_trace(const Trace& t) {
  py::list out;
  for (const auto& r : t) out.append(py::make_tuple(r.gap, r.op == Op::Read ? "R" : "W", r.address));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "DRAM address mapping, bit-change monitoring and timing simulation";

  py::register_exception<IntegrityError>(m, "IntegrityError");

  py::class_<DramGeometry>(m, "DramGeometry")
      .def(py::init<>())
      .def_readwrite("channels", &DramGeometry::channels)
      .def_readwrite("ranks_per_channel", &DramGeometry::ranks_per_channel)
      .def_readwrite("banks_per_rank", &DramGeometry::banks_per_rank)
      .def_readwrite("rows_per_bank", &DramGeometry::rows_per_bank)
      .def_readwrite("columns_per_row", &DramGeometry::columns_per_row)
      .def_readwrite("line_size", &DramGeometry::line_size)
      .def_readwrite("cpu_to_mem_clock_ratio", &DramGeometry::cpu_to_mem_clock_ratio)
      .def_property_readonly("capacity_bytes", &DramGeometry::capacity_bytes)
      .def_property_readonly("address_bits", &DramGeometry::address_bits)
      .def("violations", &DramGeometry::violations);

  py::class_<DramCoordinate>(m, "DramCoordinate")
      .def(py::init<>())
      .def(py::init([](std::uint32_t channel, std::uint32_t rank, std::uint32_t bank,
                       std::uint32_t row, std::uint32_t column, std::uint32_t offset) {
             return DramCoordinate{channel, rank, bank, row, column, offset};
           }),
           py::arg("channel") = 0, py::arg("rank") = 0, py::arg("bank") = 0, py::arg("row") = 0,
           py::arg("column") = 0, py::arg("offset") = 0)
      .def_readwrite("channel", &DramCoordinate::channel)
      .def_readwrite("rank", &DramCoordinate::rank)
      .def_readwrite("bank", &DramCoordinate::bank)
      .def_readwrite("row", &DramCoordinate::row)
      .def_readwrite("column", &DramCoordinate::column)
      .def_readwrite("offset", &DramCoordinate::offset)
      .def(py::self == py::self)
      .def("__repr__", [](const DramCoordinate& c) {
        std::ostringstream s;
        s << "DramCoordinate(channel=" << c.channel << ", rank=" << c.rank << ", bank=" << c.bank
          << ", row=" << c.row << ", column=" << c.column << ", offset=" << c.offset << ")";
        return s.str();
      });

  py::class_<MappingScheme>(m, "MappingScheme")
      .def_readwrite("scheme_id", &MappingScheme::scheme_id)
      .def_readwrite("xor_bank_sources", &MappingScheme::xor_bank_sources)
      .def("bits", [](const MappingScheme& s, const std::string& field) {
        const auto f = field_from_name(field);
        if (!f) throw std::invalid_argument("unknown field '" + field + "'");
        return s.bits(*f);
      })
      .def("to_json", &scheme_to_json)
      .def_static("from_json", [](const std::string& text) { return parse_scheme_json(text); });

  m.def("builtin_scheme", [](const std::string& name, const DramGeometry& geom) {
    const auto k = builtin_from_name(name);
    if (!k) throw std::invalid_argument("unknown scheme '" + name + "'");
    return builtin_scheme(*k, geom);
  }, py::arg("name"), py::arg("geom") = DramGeometry{});
  m.def("validate", &validate, py::arg("scheme"), py::arg("geom") = DramGeometry{});
  m.def("decompose", py::overload_cast<PhysAddr, const MappingScheme&, const DramGeometry&>(&decompose),
        py::arg("addr"), py::arg("scheme"), py::arg("geom") = DramGeometry{});
  m.def("compose",
        py::overload_cast<const DramCoordinate&, const MappingScheme&, const DramGeometry&>(&compose),
        py::arg("coord"), py::arg("scheme"), py::arg("geom") = DramGeometry{});

  m.def("bit_change_counters", [](const std::vector<PhysAddr>& addrs, unsigned bits) {
    return signature_of(addrs, bits).counters;
  }, py::arg("addresses"), py::arg("address_bits") = 32);
  m.def("estimate_mapping", [](const std::vector<PhysAddr>& addrs, const MappingScheme& base,
                               const DramGeometry& geom) {
    return estimate_mapping(signature_of(addrs, geom.address_bits()), base, PredictorConfig{});
  }, py::arg("addresses"), py::arg("base"), py::arg("geom") = DramGeometry{});
  m.def("improvement", [](const std::vector<PhysAddr>& addrs, const MappingScheme& base,
                          const MappingScheme& candidate, const DramGeometry& geom) {
    return improvement(signature_of(addrs, geom.address_bits()), base, candidate);
  }, py::arg("addresses"), py::arg("base"), py::arg("candidate"), py::arg("geom") = DramGeometry{});

  m.def("gen_sequential", [](PhysAddr start, std::uint64_t n, const DramGeometry& g) {
    return from_trace(gen_sequential(start, n, g));
  }, py::arg("start"), py::arg("n"), py::arg("geom") = DramGeometry{});
  m.def("gen_strided", [](PhysAddr start, std::uint64_t stride, std::optional<unsigned> hot_bit,
                          std::uint64_t n, const DramGeometry& g) {
    return from_trace(gen_strided(start, stride, hot_bit, n, g));
  }, py::arg("start"), py::arg("stride"), py::arg("hot_bit"), py::arg("n"),
     py::arg("geom") = DramGeometry{});
  m.def("gen_random", [](std::uint64_t seed, std::uint64_t n, const DramGeometry& g) {
    return from_trace(gen_random(seed, n, g));
  }, py::arg("seed"), py::arg("n"), py::arg("geom") = DramGeometry{});
  m.def("parse_trace", [](const std::string& text) {
    std::istringstream in(text);
    return from_trace(parse_trace(in));
  });

  m.def("_simulate", [](const std::vector<std::tuple<std::uint64_t, std::string, PhysAddr>>& rows,
                        const std::string& controller, const std::string& config_json) {
    const RunConfig cfg = parse_run_config(config_json.empty() ? "{}" : config_json);
    const MappingScheme pams = resolve_scheme(cfg.scheme, cfg.sim.geometry);
    const Trace t = to_trace(rows);
    SimReport r;
    {
      py::gil_scoped_release release;
      r = run(t, parse_controller(controller, pams, cfg.sim.geometry), cfg.sim);
    }
    return report_to_json(r, -1);
  }, py::arg("trace"), py::arg("controller") = "fixed:baseline", py::arg("config_json") = "");

  m.def("swap_cost_cpu_cycles", [](const DramGeometry& g) {
    RelocationEvent e;
    e.kind = RelocationKind::Swap;
    e.rows_moved = 2;
    e.mem_cycles = kSwapMemCycles;
    return relocation_cost(e, CostModel{}, g).cpu_cycles;
  }, py::arg("geom") = DramGeometry{});
  m.def("table_storage_bytes", [](const DramGeometry& g) { return table_storage(g).bytes; },
        py::arg("geom") = DramGeometry{});
  m.def("monitor_storage_bytes", &monitor_storage_bytes);
  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) {
    return pearson(x, y);
  });
}
