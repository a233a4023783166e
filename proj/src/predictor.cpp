#include "dream/predictor.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace dream {

void PredictorConfig::check() const {
  if (!(improvement_threshold > 0.0 && improvement_threshold < 1.0)) {
    throw std::invalid_argument("improvement_threshold must lie in (0, 1)");
  }
  if (consistency_windows < 1) throw std::invalid_argument("consistency_windows must be >= 1");
}

std::uint64_t row_change_sum(const BitChangeSignature& sig, const MappingScheme& scheme) {
  std::uint64_t sum = 0;
  for (unsigned b : scheme.bits(Field::Row)) {
    if (b >= sig.counters.size()) {
      throw std::invalid_argument("scheme bit " + std::to_string(b) + " outside the " +
                                  std::to_string(sig.counters.size()) + "-bit signature");
    }
    sum += sig.counters[b];
  }
  return sum;
}

double score(const BitChangeSignature& sig, const MappingScheme& scheme) {
  const std::uint64_t sum = row_change_sum(sig, scheme);
  const auto width = scheme.bits(Field::Row).size();
  if (sig.requests_observed < 2 || width == 0) return 0.0;
  return static_cast<double>(sum) /
         (static_cast<double>(sig.requests_observed - 1) * static_cast<double>(width));
}

double improvement(const BitChangeSignature& sig, const MappingScheme& base,
                   const MappingScheme& candidate) {
  const std::uint64_t b = row_change_sum(sig, base);
  const std::uint64_t c = row_change_sum(sig, candidate);
  if (b == 0) return 0.0;
  return (static_cast<double>(b) - static_cast<double>(c)) / static_cast<double>(b);
}

MappingScheme estimate_mapping(const BitChangeSignature& sig, const MappingScheme& base,
                               const PredictorConfig& cfg, std::string scheme_id) {
  std::vector<Field> order = {Field::Row, Field::Bank, Field::Rank, Field::Channel};
  if (!cfg.freeze_column_bits) order.push_back(Field::Column);

  struct PoolBit {
    unsigned bit;
    std::size_t slot;  // position in the base slot sequence
  };
  std::vector<PoolBit> pool;
  for (Field f : order) {
    for (unsigned b : base.bits(f)) {
      if (b >= sig.counters.size()) {
        throw std::invalid_argument("scheme bit " + std::to_string(b) +
                                    " outside the signature");
      }
      pool.push_back({b, pool.size()});
    }
  }
  std::stable_sort(pool.begin(), pool.end(), [&](const PoolBit& a, const PoolBit& b) {
    if (sig.counters[a.bit] != sig.counters[b.bit]) {
      return sig.counters[a.bit] < sig.counters[b.bit];
    }
    if (a.slot != b.slot) return a.slot < b.slot;
    return a.bit < b.bit;
  });

  MappingScheme out = base;
  out.scheme_id = std::move(scheme_id);
  std::size_t next = 0;
  for (Field f : order) {
    const auto& base_bits = base.bits(f);
    std::vector<unsigned> chosen;
    for (std::size_t i = 0; i < base_bits.size(); ++i) chosen.push_back(pool[next++].bit);

    // Bits already in this field keep their slot; newcomers fill the vacated
    // slots in ascending bit order.
    std::vector<unsigned> incoming;
    for (unsigned b : chosen) {
      if (std::find(base_bits.begin(), base_bits.end(), b) == base_bits.end()) {
        incoming.push_back(b);
      }
    }
    std::sort(incoming.begin(), incoming.end());
    auto& dst = out.bits(f);
    std::size_t k = 0;
    for (auto& slot : dst) {
      if (std::find(chosen.begin(), chosen.end(), slot) == chosen.end()) slot = incoming[k++];
    }
  }

  if (base.has_xor()) {
    const auto& base_row = base.bits(Field::Row);
    const auto& new_row = out.bits(Field::Row);
    for (auto& src : out.xor_bank_sources) {
      const auto it = std::find(base_row.begin(), base_row.end(), src);
      if (it == base_row.end()) throw std::invalid_argument("base xor source outside row field");
      src = new_row[static_cast<std::size_t>(it - base_row.begin())];
    }
  }
  return out;
}

std::string_view action_name(Action a) {
  switch (a) {
    case Action::Keep: return "keep";
    case Action::Adopt: return "adopt";
    case Action::Rollback: return "rollback";
  }
  return "?";
}

DecisionEngine::DecisionEngine(MappingScheme pams, PredictorConfig cfg)
    : pams_(std::move(pams)), cfg_(cfg) {
  cfg_.check();
}

Decision DecisionEngine::step(const BitChangeSignature& sig) {
  Decision d;
  d.window_id = sig.window_id;

  if (rolling_back_) {
    d.improvement = improvement(sig, pams_, *active_);
    d.scheme_id = pams_.scheme_id;
    return d;
  }

  if (active_) {
    d.improvement = improvement(sig, pams_, *active_);
    if (d.improvement <= cfg_.improvement_threshold) {
      d.action = Action::Rollback;
      d.scheme_id = pams_.scheme_id;
      rolling_back_ = true;
    } else {
      d.scheme_id = active_->scheme_id;
    }
    return d;
  }

  MappingScheme eams =
      estimate_mapping(sig, pams_, cfg_, "eams-w" + std::to_string(sig.window_id));
  d.improvement = improvement(sig, pams_, eams);
  streak_ = d.improvement > cfg_.improvement_threshold ? streak_ + 1 : 0;
  d.streak = streak_;
  if (streak_ >= cfg_.consistency_windows) {
    d.action = Action::Adopt;
    d.scheme_id = eams.scheme_id;
    d.adopted = eams;
    active_ = std::move(eams);
    streak_ = 0;
  } else {
    d.scheme_id = pams_.scheme_id;
  }
  return d;
}

void DecisionEngine::rollback_completed() {
  if (!rolling_back_) throw std::logic_error("no rollback in progress");
  rolling_back_ = false;
  active_.reset();
  streak_ = 0;
}

std::vector<Decision> decide(std::span<const BitChangeSignature> windows,
                             const MappingScheme& base, const PredictorConfig& cfg) {
  DecisionEngine engine(base, cfg);
  std::vector<Decision> out;
  out.reserve(windows.size());
  for (const auto& w : windows) {
    out.push_back(engine.step(w));
    if (out.back().action == Action::Rollback) engine.rollback_completed();
  }
  return out;
}

void write_decision_csv(std::ostream& out, std::span<const Decision> decisions) {
  out << "window_id,action,improvement,streak,scheme_id\n";
  for (const auto& d : decisions) {
    out << d.window_id << ',' << action_name(d.action) << ',' << d.improvement << ','
        << d.streak << ',' << d.scheme_id << '\n';
  }
}

}  // namespace dream
