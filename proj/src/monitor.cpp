#include "dream/monitor.hpp"

#include <algorithm>
#include <bit>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dream {

void WindowConfig::check() const {
  if (window_len < 2) throw std::invalid_argument("window_len must be >= 2");
  if (counter_bits < 1 || counter_bits > 32) {
    throw std::invalid_argument("counter_bits must be in [1, 32]");
  }
}

BitChangeMonitor::BitChangeMonitor(unsigned address_bits, WindowConfig cfg)
    : cfg_(cfg),
      counters_(address_bits, 0),
      counter_max_(cfg.counter_bits >= 32 ? UINT32_MAX : (1u << cfg.counter_bits) - 1) {
  cfg_.check();
  if (address_bits < 1 || address_bits > 64) {
    throw std::invalid_argument("monitor address width must be in [1, 64]");
  }
}

void BitChangeMonitor::observe(PhysAddr addr) {
  // Only transitions inside the window are counted, so a window of n requests
  // never exceeds n - 1 changes per bit.
  if (has_history_ && window_started_) {
    std::uint64_t diff = addr ^ history_;
    if (counters_.size() < 64) diff &= (std::uint64_t{1} << counters_.size()) - 1;
    while (diff) {
      const int bit = std::countr_zero(diff);
      diff &= diff - 1;
      if (counters_[bit] < counter_max_) {
        ++counters_[bit];
      } else {
        saturated_ = true;
      }
    }
  }
  history_ = addr;
  has_history_ = true;
  window_started_ = true;
  ++requests_;
}

BitChangeSignature BitChangeMonitor::finalize_window() {
  if (requests_ == 0) throw std::logic_error("no requests observed");
  BitChangeSignature sig;
  sig.counters.assign(counters_.begin(), counters_.end());
  sig.requests_observed = requests_;
  sig.window_id = window_id_++;
  sig.saturated = saturated_;
  std::fill(counters_.begin(), counters_.end(), 0u);
  requests_ = 0;
  saturated_ = false;
  window_started_ = false;
  return sig;
}

std::vector<double> change_rates(const BitChangeSignature& sig) {
  if (sig.requests_observed < 2) {
    throw std::invalid_argument("change rates need at least 2 requests");
  }
  const double denom = static_cast<double>(sig.requests_observed - 1);
  std::vector<double> rates;
  rates.reserve(sig.counters.size());
  for (auto c : sig.counters) rates.push_back(static_cast<double>(c) / denom);
  return rates;
}

BitChangeSignature aggregate(std::span<const BitChangeSignature> windows) {
  if (windows.empty()) throw std::invalid_argument("no windows to aggregate");
  BitChangeSignature out;
  out.counters.assign(windows.front().counters.size(), 0);
  out.window_id = windows.front().window_id;
  for (const auto& w : windows) {
    if (w.counters.size() != out.counters.size()) {
      throw std::invalid_argument("signature widths differ");
    }
    for (std::size_t i = 0; i < w.counters.size(); ++i) out.counters[i] += w.counters[i];
    out.requests_observed += w.requests_observed;
    out.saturated = out.saturated || w.saturated;
  }
  return out;
}

std::uint64_t monitor_storage_bytes(unsigned address_bits, unsigned counter_bits) {
  const std::uint64_t counter_bits_total =
      static_cast<std::uint64_t>(address_bits) * counter_bits;
  return (counter_bits_total + 7) / 8 + (address_bits + 7) / 8;
}

void write_signature_csv(std::ostream& out, std::span<const BitChangeSignature> sigs) {
  out << "window_id,bit,count,requests\n";
  for (const auto& s : sigs) {
    for (std::size_t bit = 0; bit < s.counters.size(); ++bit) {
      out << s.window_id << ',' << bit << ',' << s.counters[bit] << ',' << s.requests_observed
          << '\n';
    }
  }
}

std::vector<BitChangeSignature> read_signature_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("window_id,bit,count,requests", 0) != 0) {
    throw std::invalid_argument("signature CSV: missing header");
  }
  std::map<std::uint64_t, BitChangeSignature> by_window;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::uint64_t window = 0, bit = 0, count = 0, requests = 0;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(ss >> window >> c1 >> bit >> c2 >> count >> c3 >> requests) || c1 != ',' ||
        c2 != ',' || c3 != ',' || bit >= 64) {
      throw std::invalid_argument("signature CSV: malformed line " + std::to_string(line_no));
    }
    auto& sig = by_window[window];
    sig.window_id = window;
    sig.requests_observed = requests;
    if (sig.counters.size() <= bit) sig.counters.resize(bit + 1, 0);
    sig.counters[bit] = count;
  }
  std::vector<BitChangeSignature> out;
  for (auto& [id, sig] : by_window) out.push_back(std::move(sig));
  return out;
}

}  // namespace dream
