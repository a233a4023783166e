#include "dream/dramsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>
#include <stdexcept>

#include "json.hpp"

namespace dream {

void TimingParams::check() const {
  if (t_cas == 0 || t_rcd == 0 || t_rp == 0 || burst_cycles == 0) {
    throw std::invalid_argument("timing parameters must be positive");
  }
}

std::string_view outcome_name(PageOutcome o) {
  switch (o) {
    case PageOutcome::Hit: return "hit";
    case PageOutcome::Empty: return "empty";
    case PageOutcome::Conflict: return "conflict";
  }
  return "?";
}

Classification classify(std::uint32_t row, BankState& bank, const TimingParams& timing) {
  Classification c;
  if (!bank.open_row) {
    c = {PageOutcome::Empty, timing.t_rcd + timing.t_cas};
  } else if (*bank.open_row == row) {
    c = {PageOutcome::Hit, timing.t_cas};
  } else {
    c = {PageOutcome::Conflict, timing.t_rp + timing.t_rcd + timing.t_cas};
  }
  bank.open_row = row;
  return c;
}

void SchedulerParams::check() const {
  if (rob_size == 0) throw std::invalid_argument("rob_size must be >= 1");
  if (write_queue_capacity == 0) throw std::invalid_argument("write queue capacity must be >= 1");
  if (write_low_watermark > write_high_watermark ||
      write_high_watermark > write_queue_capacity) {
    throw std::invalid_argument("need write_low <= write_high <= write queue capacity");
  }
  if (rollback_rate == 0) throw std::invalid_argument("rollback_rate must be >= 1");
}

std::optional<std::size_t> schedule_next(std::span<const PendingRequest> pending,
                                         std::span<const BankState> banks, std::uint64_t now,
                                         bool drain_writes) {
  auto pick = [&](Op want) -> std::optional<std::size_t> {
    std::optional<std::size_t> oldest;
    for (std::size_t i = 0; i < pending.size(); ++i) {
      const auto& p = pending[i];
      if (p.op != want) continue;
      const BankState& b = banks[p.loc.bank];
      if (b.ready_for(p.loc.row) > now) continue;
      if (b.open_row == p.loc.row) return i;
      if (!oldest) oldest = i;
    }
    return oldest;
  };
  const Op first = drain_writes ? Op::Write : Op::Read;
  const Op second = drain_writes ? Op::Read : Op::Write;
  if (auto i = pick(first)) return i;
  return pick(second);
}

std::string_view controller_name(ControllerKind k) {
  switch (k) {
    case ControllerKind::Fixed: return "fixed";
    case ControllerKind::DreamOnline: return "dream-online";
    case ControllerKind::DreamOffline: return "dream-offline";
  }
  return "?";
}

std::string ControllerSpec::label() const {
  if (kind == ControllerKind::Fixed) return "fixed:" + scheme.scheme_id;
  return std::string(controller_name(kind));
}

void SimConfig::check() const {
  geometry.check();
  timing.check();
  scheduler.check();
  window.check();
  predictor.check();
  if (!(cost.cpu_clock_hz > 0.0) || !(cost.nvdimm_bandwidth_bytes_per_s > 0.0) ||
      cost.nanocommit_write_ns < 0.0 || cost.reboot_penalty_s < 0.0) {
    throw std::invalid_argument("cost model parameters must be positive");
  }
}

MappingScheme offline_scheme(std::span<const MemoryRequest> trace, const MappingScheme& pams,
                             const SimConfig& cfg, BitChangeSignature* roi) {
  if (trace.empty()) throw std::invalid_argument("no requests observed");
  BitChangeMonitor mon(cfg.geometry.address_bits(), cfg.window);
  std::vector<BitChangeSignature> windows;
  for (const auto& r : trace) {
    mon.observe(r.address);
    if (mon.window_full()) windows.push_back(mon.finalize_window());
  }
  if (mon.requests_observed() > 0) windows.push_back(mon.finalize_window());
  BitChangeSignature agg = aggregate(windows);
  MappingScheme out = estimate_mapping(agg, pams, cfg.predictor, "eams-roi");
  if (roi) *roi = std::move(agg);
  return out;
}

namespace {

struct InFlight {
  std::uint64_t done;
  std::uint32_t thread;
  bool operator>(const InFlight& o) const { return done > o.done; }
};

class Simulator {
 public:
  Simulator(std::span<const MemoryRequest> trace, ControllerKind kind, const MappingScheme& scheme,
            const SimConfig& cfg)
      : trace_(trace),
        cfg_(cfg),
        ratio_(cfg.geometry.cpu_to_mem_clock_ratio),
        pams_(scheme, cfg.geometry),
        current_(scheme, cfg.geometry),
        banks_(cfg.geometry.total_banks()) {
    if (kind == ControllerKind::DreamOnline) {
      if (cfg_.cost.scenario == CostScenario::OfflineReboot) {
        throw std::invalid_argument("the offline-reboot cost model needs the offline controller");
      }
      monitor_.emplace(cfg_.geometry.address_bits(), cfg_.window);
      engine_.emplace(scheme, cfg_.predictor);
      if (cfg_.cost.scenario != CostScenario::NvdimmBulk) {
        if (!cfg_.predictor.freeze_column_bits) {
          throw std::invalid_argument("online row migration needs freeze_column_bits");
        }
        migration_.emplace(scheme, cfg_.geometry);
      }
    }
    std::uint32_t threads = 1;
    for (const auto& r : trace_) threads = std::max(threads, r.thread_id + 1);
    outstanding_.assign(threads, 0);
  }

  SimReport run() {
    report_.pams_id = pams_.scheme().scheme_id;
    const std::size_t n = trace_.size();
    std::size_t next = 0;
    std::uint64_t now = 0;
    std::uint64_t last_issue = 0;

    while (next < n || !pending_.empty()) {
      while (!inflight_.empty() && inflight_.top().done <= now) {
        --outstanding_[inflight_.top().thread];
        inflight_.pop();
      }

      // Admit requests in trace order until one is not due or cannot issue.
      bool blocked = false;
      std::uint64_t next_arrival = kNever;
      while (next < n) {
        const MemoryRequest& r = trace_[next];
        const std::uint64_t issue = last_issue + r.gap;
        const std::uint64_t arrival = (issue + ratio_ - 1) / ratio_;
        if (arrival > now) {
          next_arrival = arrival;
          break;
        }
        if ((r.op == Op::Read && outstanding_[r.thread_id] >= cfg_.scheduler.rob_size) ||
            (r.op == Op::Write && writes_pending_ >= cfg_.scheduler.write_queue_capacity)) {
          blocked = true;
          break;
        }
        // A request held back by a full window issues when a slot frees up.
        last_issue = arrival < now ? now * ratio_ : issue;
        admit(r);
        ++next;
      }

      if (writes_pending_ > cfg_.scheduler.write_high_watermark) drain_ = true;
      if (drain_ && writes_pending_ < cfg_.scheduler.write_low_watermark) drain_ = false;

      if (auto idx = schedule_next(pending_, banks_, now, drain_)) {
        const PendingRequest p = pending_[*idx];
        pending_.erase(pending_.begin() + static_cast<std::ptrdiff_t>(*idx));
        service(p, now);
        if (rolling_back()) drain_rollback(cfg_.scheduler.rollback_rate);
        ++now;
        continue;
      }

      std::uint64_t t = kNever;
      if (!blocked) t = std::min(t, next_arrival);
      if (!inflight_.empty()) t = std::min(t, inflight_.top().done);
      for (const auto& p : pending_) {
        t = std::min(t, std::max(banks_[p.loc.bank].ready_for(p.loc.row), now + 1));
      }
      if (t == kNever) throw std::logic_error("simulation stalled");
      now = t;
    }

    // Whatever is left of a rollback drains after the last request.
    while (rolling_back()) drain_rollback(std::numeric_limits<std::size_t>::max());

    finish();
    return std::move(report_);
  }

 private:
  static constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();

  bool rolling_back() const { return engine_ && engine_->rolling_back(); }

  RowLocation where(PhysAddr addr) const {
    if (migration_ && migration_->active()) return migration_->locate(addr);
    return current_.locate(addr);
  }

  void refresh_locations() {
    for (auto& p : pending_) p.loc = where(p.address);
  }

  void admit(const MemoryRequest& r) {
    PendingRequest p;
    p.seq = seq_++;
    p.op = r.op;
    p.address = r.address;
    p.thread_id = r.thread_id;
    p.loc = where(r.address);
    pending_.push_back(p);
    if (r.op == Op::Read) {
      ++outstanding_[r.thread_id];
      ++report_.reads;
    } else {
      ++writes_pending_;
      ++report_.writes;
    }
    if (monitor_) {
      monitor_->observe(r.address);
      if (monitor_->window_full()) end_window();
    }
  }

  void end_window() {
    BitChangeSignature sig = monitor_->finalize_window();
    Decision d = engine_->step(sig);
    report_.windows.push_back(std::move(sig));

    if (d.action == Action::Adopt) {
      if (migration_) {
        migration_->activate(*d.adopted);
      } else {
        switch_mapping(*d.adopted);
      }
    } else if (d.action == Action::Rollback) {
      if (migration_) {
        migration_->begin_rollback();
        drain_rollback(0);  // retires at once when nothing has moved
      } else {
        switch_mapping(pams_.scheme());
        engine_->rollback_completed();
      }
    }
    report_.decisions.push_back(std::move(d));
    if (migration_ && cfg_.verify_integrity) migration_->check_integrity();
    report_.migrated_after_window.push_back(migration_ ? migration_->migrated_rows() : 0);
  }

  // Bulk remap through NVDIMM: the whole memory is saved and restored.
  void switch_mapping(const MappingScheme& scheme) {
    current_ = AddressTranslator(scheme, cfg_.geometry);
    const Charge c = mapping_change_cost(cfg_.cost, cfg_.geometry);
    report_.mapping_change_seconds += c.seconds;
    mapping_cpu_cycles_ += c.cpu_cycles;
    ++report_.mapping_changes;
    refresh_locations();
  }

  void drain_rollback(std::size_t budget) {
    const auto events = migration_->rollback_step(budget);
    apply_events(events, last_service_);
    if (!migration_->active()) {
      engine_->rollback_completed();
      refresh_locations();
    }
  }

  void apply_events(const std::vector<RelocationEvent>& events, std::uint64_t now) {
    bool moved = false;
    for (const auto& e : events) {
      report_.relocation_log.push_back(e);
      if (!e.executed) continue;
      moved = true;
      const bool overlap = cfg_.cost.overlap && cfg_.cost.scenario == CostScenario::InDram;
      if (overlap) {
        // The transfer occupies both banks instead of stalling the processor.
        for (std::uint32_t b : {e.src.bank, e.dst.bank}) {
          BankState& bank = banks_[b];
          bank.busy_until = std::max({bank.busy_until, bank.data_until, now}) + e.mem_cycles;
          bank.data_until = bank.busy_until;
          bank.open_row.reset();
        }
      } else if (cfg_.charge_relocations) {
        report_.relocation_cpu_cycles += relocation_cost(e, cfg_.cost, cfg_.geometry).cpu_cycles;
      }
    }
    if (moved) refresh_locations();
    if (migration_) {
      report_.migrated_rows_peak =
          std::max(report_.migrated_rows_peak, migration_->migrated_rows());
    }
  }

  void service(const PendingRequest& p, std::uint64_t now) {
    last_service_ = now;
    RowLocation loc = p.loc;
    std::vector<RelocationEvent> events;
    if (migration_ && migration_->active()) {
      ResolveResult res = migration_->resolve(p.address);
      loc = res.service;
      events = std::move(res.events);
    }

    BankState& bank = banks_[loc.bank];
    const Classification c = classify(loc.row, bank, cfg_.timing);
    switch (c.outcome) {
      case PageOutcome::Hit: ++report_.page_hits; break;
      case PageOutcome::Empty: ++report_.page_empties; break;
      case PageOutcome::Conflict: ++report_.page_conflicts; break;
    }
    const std::uint32_t burst = cfg_.timing.burst_cycles;
    const std::uint64_t data_start = std::max(now + c.latency, bus_free_);
    const std::uint64_t data_end = data_start + burst;
    bus_free_ = data_end;
    bank.busy_until = now + (c.latency - cfg_.timing.t_cas) + burst;
    bank.data_until = data_end;
    completion_ = std::max(completion_, data_end);
    if (p.op == Op::Read) {
      inflight_.push({data_end, p.thread_id});
    } else {
      --writes_pending_;
    }
    ++report_.requests;
    if (!events.empty()) apply_events(events, data_end);
  }

  void finish() {
    report_.completion_mem_cycles = completion_;
    report_.total_cpu_cycles = static_cast<double>(completion_) * ratio_ +
                               report_.relocation_cpu_cycles + mapping_cpu_cycles_;
    report_.final_scheme_id = current_.scheme().scheme_id;
    if (migration_) {
      const auto& s = migration_->stats();
      report_.relocations = {s.inter_bank, s.intra_bank, s.swaps, s.rollback_moves};
      report_.migrated_rows_final = migration_->migrated_rows();
      if (migration_->active()) report_.final_scheme_id = migration_->eams()->scheme().scheme_id;
    }
  }

  std::span<const MemoryRequest> trace_;
  const SimConfig& cfg_;
  std::uint64_t ratio_;
  AddressTranslator pams_;
  AddressTranslator current_;
  std::vector<BankState> banks_;

  std::optional<BitChangeMonitor> monitor_;
  std::optional<DecisionEngine> engine_;
  std::optional<MigrationState> migration_;

  std::vector<PendingRequest> pending_;
  std::vector<std::uint32_t> outstanding_;
  std::priority_queue<InFlight, std::vector<InFlight>, std::greater<>> inflight_;
  std::uint32_t writes_pending_ = 0;
  bool drain_ = false;
  std::uint64_t seq_ = 0;
  std::uint64_t bus_free_ = 0;
  std::uint64_t completion_ = 0;
  std::uint64_t last_service_ = 0;
  double mapping_cpu_cycles_ = 0.0;

  SimReport report_;
};

}  // namespace

SimReport run(std::span<const MemoryRequest> trace, const ControllerSpec& controller,
              const SimConfig& cfg) {
  cfg.check();
  if (trace.empty()) throw std::invalid_argument("no requests observed");
  check_trace(trace, cfg.geometry);
  if (const auto v = validate(controller.scheme, cfg.geometry); !v.empty()) {
    throw std::invalid_argument("scheme " + controller.scheme.scheme_id + ": " + v.front());
  }

  SimReport report;
  if (controller.kind == ControllerKind::DreamOffline) {
    BitChangeSignature roi;
    MappingScheme eams = offline_scheme(trace, controller.scheme, cfg, &roi);
    report = Simulator(trace, ControllerKind::Fixed, eams, cfg).run();
    report.pams_id = controller.scheme.scheme_id;
    report.roi_signature = std::move(roi);
    report.offline_scheme = std::move(eams);
    report.reboot_penalty_s = cfg.cost.reboot_penalty_s;
  } else {
    report = Simulator(trace, controller.kind, controller.scheme, cfg).run();
  }
  report.controller = controller.label();
  return report;
}

CompareTable compare(std::span<const NamedRun> runs, const std::string& baseline) {
  const auto base = std::find_if(runs.begin(), runs.end(),
                                 [&](const NamedRun& r) { return r.name == baseline; });
  if (base == runs.end()) throw std::invalid_argument("baseline run '" + baseline + "' missing");
  if (!(base->cpu_cycles > 0.0)) throw std::invalid_argument("baseline has no cycles");

  CompareTable t;
  t.baseline = baseline;
  t.rows.push_back({base->name, base->cpu_cycles, 1.0});
  double log_sum = 0.0;
  for (const auto& r : runs) {
    if (&r == &*base) continue;
    const double norm = r.cpu_cycles / base->cpu_cycles;
    t.rows.push_back({r.name, r.cpu_cycles, norm});
    log_sum += std::log(norm);
  }
  t.gmean = std::exp(log_sum / static_cast<double>(t.rows.size()));
  return t;
}

void write_compare_csv(std::ostream& out, const CompareTable& table) {
  out << "name,cpu_cycles,normalized\n";
  for (const auto& r : table.rows) out << r.name << ',' << r.cpu_cycles << ',' << r.normalized << '\n';
  if (table.gmean) out << "GMEAN,," << *table.gmean << '\n';
}

namespace {

nlohmann::ordered_json signature_json(const BitChangeSignature& s) {
  return {{"window_id", s.window_id},
          {"requests", s.requests_observed},
          {"saturated", s.saturated},
          {"counters", s.counters}};
}

}  // namespace

std::string report_to_json(const SimReport& r, int indent) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["controller"] = r.controller;
  j["pams"] = r.pams_id;
  j["final_scheme"] = r.final_scheme_id;
  j["requests"] = r.requests;
  j["reads"] = r.reads;
  j["writes"] = r.writes;
  j["page_hits"] = r.page_hits;
  j["page_empties"] = r.page_empties;
  j["page_conflicts"] = r.page_conflicts;
  j["completion_mem_cycles"] = r.completion_mem_cycles;
  j["total_cpu_cycles"] = r.total_cpu_cycles;
  j["relocation_cpu_cycles"] = r.relocation_cpu_cycles;
  j["mapping_changes"] = r.mapping_changes;
  j["mapping_change_seconds"] = r.mapping_change_seconds;
  j["reboot_penalty_s"] = r.reboot_penalty_s;
  j["relocations"] = {{"inter", r.relocations.inter_bank},
                      {"intra", r.relocations.intra_bank},
                      {"swaps", r.relocations.swaps},
                      {"rollbacks", r.relocations.rollbacks}};
  j["migrated_rows_final"] = r.migrated_rows_final;
  j["migrated_rows_peak"] = r.migrated_rows_peak;

  ordered_json decisions = ordered_json::array();
  for (std::size_t i = 0; i < r.decisions.size(); ++i) {
    const auto& d = r.decisions[i];
    ordered_json e = {{"window_id", d.window_id},
                      {"action", action_name(d.action)},
                      {"improvement", d.improvement},
                      {"streak", d.streak},
                      {"scheme_id", d.scheme_id}};
    if (i < r.migrated_after_window.size()) e["migrated_rows"] = r.migrated_after_window[i];
    decisions.push_back(std::move(e));
  }
  j["decisions"] = std::move(decisions);

  ordered_json windows = ordered_json::array();
  for (const auto& w : r.windows) windows.push_back(signature_json(w));
  j["windows"] = std::move(windows);
  if (r.roi_signature) j["roi_signature"] = signature_json(*r.roi_signature);
  if (r.offline_scheme) j["offline_scheme"] = ordered_json::parse(scheme_to_json(*r.offline_scheme));
  return j.dump(indent);
}

}  // namespace dream
