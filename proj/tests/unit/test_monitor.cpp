#include <random>
#include <sstream>

#include "doctest.h"
#include "dream/monitor.hpp"
#include "oracles.hpp"

using namespace dream;

namespace {

BitChangeSignature run_window(const std::vector<PhysAddr>& addrs, unsigned bits = 32,
                              WindowConfig cfg = {}) {
  BitChangeMonitor m(bits, cfg);
  for (auto a : addrs) m.observe(a);
  return m.finalize_window();
}

}  // namespace

TEST_CASE("observe examples") {
  const auto one = run_window({0xdeadbeef});
  CHECK(one.requests_observed == 1);
  for (auto c : one.counters) CHECK(c == 0);

  const auto s = run_window({0x0, 0x1, 0x2, 0x3});
  CHECK(s.counters[0] == 3);
  CHECK(s.counters[1] == 1);
  for (std::size_t b = 2; b < s.counters.size(); ++b) CHECK(s.counters[b] == 0);
  CHECK(s.window_id == 0);
  CHECK_FALSE(s.saturated);
}

TEST_CASE("five requests bound every counter by four") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    std::vector<PhysAddr> a;
    for (int i = 0; i < 5; ++i) a.push_back(rng() & 0xffffffffu);
    for (auto c : run_window(a).counters) CHECK(c <= 4);
  }
}

TEST_CASE("windows restart their counts") {
  BitChangeMonitor m(32);
  for (PhysAddr a : {0x0, 0x1, 0x2, 0x3}) m.observe(a);
  const auto w0 = m.finalize_window();
  CHECK(w0.counters[0] == 3);
  CHECK(m.requests_observed() == 0);
  for (auto c : m.counters()) CHECK(c == 0);

  m.observe(0xff);  // differs from the history register, but opens the window
  for (auto c : m.counters()) CHECK(c == 0);
  m.observe(0xfe);
  const auto w1 = m.finalize_window();
  CHECK(w1.window_id == 1);
  CHECK(w1.counters[0] == 1);
  CHECK(w1.requests_observed == 2);
}

TEST_CASE("empty window is an error") {
  BitChangeMonitor m(32);
  CHECK_THROWS_WITH_AS(m.finalize_window(), "no requests observed", std::logic_error);
}

TEST_CASE("replay with history reset is deterministic") {
  std::vector<PhysAddr> seq;
  std::mt19937_64 rng(9);
  for (int i = 0; i < 1000; ++i) seq.push_back(rng() & 0xffffffffu);
  BitChangeMonitor m(32);
  for (auto a : seq) m.observe(a);
  auto first = m.finalize_window();
  m.reset_history();
  for (auto a : seq) m.observe(a);
  auto second = m.finalize_window();
  second.window_id = first.window_id;
  CHECK(first == second);
}

TEST_CASE("sequential lines flip bit 6 every request") {
  WindowConfig cfg;
  BitChangeMonitor m(32, cfg);
  for (std::uint64_t i = 0; i < cfg.window_len; ++i) m.observe(i * 64);
  REQUIRE(m.window_full());
  const auto s = m.finalize_window();
  CHECK(s.counters[6] == 249'999);
  CHECK(s.counters[7] == 124'999);
  for (unsigned b = 0; b < 6; ++b) CHECK(s.counters[b] == 0);
}

TEST_CASE("change rates") {
  BitChangeSignature s;
  s.counters = {3, 0, 1};
  s.requests_observed = 4;
  auto r = change_rates(s);
  CHECK(r[0] == doctest::Approx(1.0));
  CHECK(r[1] == 0.0);
  s.counters = {1};
  s.requests_observed = 5;
  CHECK(change_rates(s)[0] == doctest::Approx(0.25));
  s.requests_observed = 1;
  CHECK_THROWS_AS(change_rates(s), std::invalid_argument);
}

TEST_CASE("saturation is flagged") {
  WindowConfig cfg;
  cfg.window_len = 100;
  cfg.counter_bits = 3;
  BitChangeMonitor m(8, cfg);
  for (int i = 0; i < 20; ++i) m.observe(i & 1);
  const auto s = m.finalize_window();
  CHECK(s.counters[0] == 7);
  CHECK(s.saturated);
}

TEST_CASE("window config validation") {
  WindowConfig cfg;
  cfg.window_len = 1;
  CHECK_THROWS_AS(cfg.check(), std::invalid_argument);
  cfg.window_len = 2;
  cfg.counter_bits = 0;
  CHECK_THROWS_AS(BitChangeMonitor(32, cfg), std::invalid_argument);
  CHECK_THROWS_AS(BitChangeMonitor(0), std::invalid_argument);
}

TEST_CASE("counters match a brute-force recount") {
  std::mt19937_64 rng(2024);
  WindowConfig cfg;
  cfg.window_len = 1u << 20;
  cfg.counter_bits = 32;
  for (int t = 0; t < 20; ++t) {
    std::vector<PhysAddr> a;
    const int n = 1 + static_cast<int>(rng() % 5000);
    const PhysAddr mask = (rng() & 1) ? 0xffffffffu : 0xffffu;
    for (int i = 0; i < n; ++i) a.push_back(rng() & mask);
    const auto s = run_window(a, 32, cfg);
    CHECK(s.counters == oracle::recount(a, 32));
  }
}

TEST_CASE("counters never decrease inside a window") {
  std::mt19937_64 rng(4);
  BitChangeMonitor m(32);
  std::vector<std::uint32_t> prev(32, 0);
  for (int i = 0; i < 2000; ++i) {
    m.observe(rng() & 0xffffffffu);
    const auto c = m.counters();
    for (std::size_t b = 0; b < c.size(); ++b) {
      REQUIRE(c[b] >= prev[b]);
      REQUIRE(c[b] <= m.requests_observed() - 1);
      prev[b] = c[b];
    }
  }
}

TEST_CASE("permuting address bits permutes the counters") {
  std::mt19937_64 rng(8);
  std::vector<unsigned> pi(32);
  for (unsigned i = 0; i < 32; ++i) pi[i] = i;
  std::shuffle(pi.begin(), pi.end(), rng);
  std::vector<PhysAddr> a, b;
  for (int i = 0; i < 3000; ++i) {
    const PhysAddr x = (rng() & 0xffffffffu) & (rng() | 0xff00u);
    PhysAddr y = 0;
    for (unsigned k = 0; k < 32; ++k) y |= ((x >> k) & 1) << pi[k];
    a.push_back(x);
    b.push_back(y);
  }
  const auto sa = run_window(a);
  const auto sb = run_window(b);
  for (unsigned k = 0; k < 32; ++k) CHECK(sb.counters[pi[k]] == sa.counters[k]);
}

TEST_CASE("storage formula") {
  CHECK(monitor_storage_bytes(32, 18) == 76);
  CHECK(monitor_storage_bytes(1, 8) == 2);
  CHECK(monitor_storage_bytes(39, 18) == 93);
}

TEST_CASE("aggregate sums windows") {
  BitChangeSignature a, b;
  a.counters = {1, 2};
  a.requests_observed = 10;
  b.counters = {3, 4};
  b.requests_observed = 5;
  b.window_id = 1;
  b.saturated = true;
  const std::vector<BitChangeSignature> v{a, b};
  const auto s = aggregate(v);
  CHECK(s.counters == std::vector<std::uint64_t>{4, 6});
  CHECK(s.requests_observed == 15);
  CHECK(s.saturated);
  CHECK_THROWS_AS(aggregate(std::span<const BitChangeSignature>{}), std::invalid_argument);
}

TEST_CASE("signature csv round trip") {
  std::vector<BitChangeSignature> sigs(2);
  sigs[0].counters = {5, 0, 7};
  sigs[0].requests_observed = 9;
  sigs[1].counters = {1, 1, 1};
  sigs[1].requests_observed = 3;
  sigs[1].window_id = 1;
  std::stringstream ss;
  write_signature_csv(ss, sigs);
  CHECK(ss.str().rfind("window_id,bit,count,requests\n0,0,5,9\n", 0) == 0);
  const auto back = read_signature_csv(ss);
  CHECK(back == sigs);

  std::istringstream bad("window_id,bit,count,requests\n0;1;2;3\n");
  CHECK_THROWS_AS(read_signature_csv(bad), std::invalid_argument);
}
