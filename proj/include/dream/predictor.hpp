#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dream/addrmap.hpp"
#include "dream/monitor.hpp"

namespace dream {

struct PredictorConfig {
  double improvement_threshold = 0.07;
  unsigned consistency_windows = 3;
  bool freeze_column_bits = true;

  void check() const;
};

/// Sum of counters over the scheme's row bits. Throws std::invalid_argument if
/// a scheme bit lies outside the signature.
std::uint64_t row_change_sum(const BitChangeSignature& sig, const MappingScheme& scheme);

/// Row-field change rate: row_change_sum / ((requests - 1) * row_width).
/// Lower is better; 0 for windows with fewer than two requests.
double score(const BitChangeSignature& sig, const MappingScheme& scheme);

/// (sum(base) - sum(candidate)) / sum(base), or 0 when sum(base) is 0.
double improvement(const BitChangeSignature& sig, const MappingScheme& base,
                   const MappingScheme& candidate);

/// Estimated mapping: the least-changing reorderable bits go to the row field,
/// the next ones to bank, rank and channel. Offset bits never move and column
/// bits stay put when cfg.freeze_column_bits. Bits keep their base slot when
/// they stay in the same field.
MappingScheme estimate_mapping(const BitChangeSignature& sig, const MappingScheme& base,
                               const PredictorConfig& cfg, std::string scheme_id = "eams");

enum class Action { Keep, Adopt, Rollback };
std::string_view action_name(Action a);

struct Decision {
  std::uint64_t window_id = 0;
  Action action = Action::Keep;
  double improvement = 0.0;
  unsigned streak = 0;
  /// Scheme in effect after this decision.
  std::string scheme_id;
  /// Present on Adopt.
  std::optional<MappingScheme> adopted;
};

/// Adopt / keep / rollback state machine. The predefined scheme stays the
/// reference for every comparison.
class DecisionEngine {
 public:
  DecisionEngine(MappingScheme pams, PredictorConfig cfg);

  Decision step(const BitChangeSignature& sig);

  /// Data movement for a rollback finished; a new scheme may be adopted.
  void rollback_completed();

  bool eams_active() const { return active_.has_value() && !rolling_back_; }
  bool rolling_back() const { return rolling_back_; }
  const MappingScheme& pams() const { return pams_; }
  const std::optional<MappingScheme>& active_eams() const { return active_; }
  const PredictorConfig& config() const { return cfg_; }

 private:
  MappingScheme pams_;
  PredictorConfig cfg_;
  std::optional<MappingScheme> active_;
  bool rolling_back_ = false;
  unsigned streak_ = 0;
};

/// Runs the engine over a window stream, completing each rollback at once.
std::vector<Decision> decide(std::span<const BitChangeSignature> windows,
                             const MappingScheme& base, const PredictorConfig& cfg);

/// CSV `window_id,action,improvement,streak,scheme_id`.
void write_decision_csv(std::ostream& out, std::span<const Decision> decisions);

}  // namespace dream
