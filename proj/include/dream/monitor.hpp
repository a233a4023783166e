#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dream/addrmap.hpp"

namespace dream {

struct WindowConfig {
  std::uint64_t window_len = 250'000;  // requests per window
  unsigned counter_bits = 18;

  void check() const;
};

/// Per-address-bit change counts over one window.
struct BitChangeSignature {
  std::vector<std::uint64_t> counters;
  std::uint64_t requests_observed = 0;
  std::uint64_t window_id = 0;
  bool saturated = false;

  bool operator==(const BitChangeSignature&) const = default;
};

/// History register plus one saturating counter per address bit. A counter
/// increments when its bit differs from the previously observed address.
class BitChangeMonitor {
 public:
  BitChangeMonitor(unsigned address_bits, WindowConfig cfg = {});

  void observe(PhysAddr addr);
  bool window_full() const { return requests_ >= cfg_.window_len; }

  /// Emits the current window and starts the next one. The history register
  /// keeps its value. Throws std::logic_error when nothing was observed.
  BitChangeSignature finalize_window();

  /// Forget the history register (replay from a clean state).
  void reset_history() { has_history_ = false; history_ = 0; }

  std::span<const std::uint32_t> counters() const { return counters_; }
  std::uint64_t requests_observed() const { return requests_; }
  std::uint64_t next_window_id() const { return window_id_; }
  unsigned address_bits() const { return static_cast<unsigned>(counters_.size()); }
  const WindowConfig& config() const { return cfg_; }

 private:
  WindowConfig cfg_;
  std::vector<std::uint32_t> counters_;
  std::uint32_t counter_max_;
  PhysAddr history_ = 0;
  bool has_history_ = false;
  bool window_started_ = false;
  bool saturated_ = false;
  std::uint64_t requests_ = 0;
  std::uint64_t window_id_ = 0;
};

/// counters[i] / (requests - 1). Throws std::invalid_argument below 2 requests.
std::vector<double> change_rates(const BitChangeSignature& sig);

/// Sums windows into one region-of-interest signature.
BitChangeSignature aggregate(std::span<const BitChangeSignature> windows);

/// ceil(address_bits * counter_bits / 8) + ceil(address_bits / 8).
std::uint64_t monitor_storage_bytes(unsigned address_bits, unsigned counter_bits);

/// CSV `window_id,bit,count,requests`, one row per bit per window.
void write_signature_csv(std::ostream& out, std::span<const BitChangeSignature> sigs);
std::vector<BitChangeSignature> read_signature_csv(std::istream& in);

}  // namespace dream
