#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memfp/bitmap_features.hpp"
#include "memfp/types.hpp"

namespace memfp {

/// Conjunction of atomic conditions over one bitmap. At least one
/// condition must be present; absent fields do not constrain.
struct RiskyPatternRule {
  std::string rule_id;
  std::optional<int> min_error_dqs;
  std::optional<int> min_error_beats;
  std::optional<int> min_adjacent_pairs;
  bool spans_beat_halves = false;  // set bits in beats 0-3 and 4-7
  bool spans_dq_halves = false;    // set bits in both DQ index halves
  std::optional<std::uint64_t> mask_match;  // all mask bits must be set

  bool has_condition() const {
    return min_error_dqs || min_error_beats || min_adjacent_pairs || spans_beat_halves ||
           spans_dq_halves || mask_match;
  }
  bool matches(const ErrorBitmap& bitmap, Adjacency adjacency) const;
};

using RuleSet = std::vector<RiskyPatternRule>;

/// RULE_A: bits span both beat halves (the bounded-half correctability
/// boundary). RULE_B: >=3 error DQs. RULE_C: >=2 adjacent pairs across
/// >=2 beats.
RuleSet default_rules();

RuleSet load_rules(std::istream& in);
RuleSet load_rules_file(const std::string& path);
void serialize_rules(const RuleSet& rules, std::ostream& out);

/// Matched rule ids, in rule-set order.
std::vector<std::string> match_rules(const ErrorBitmap& bitmap, const RuleSet& rules,
                                     Adjacency adjacency = Adjacency::FourNeighbor);

struct IndicatorSnapshot {
  long long r1_risky_ce_cnt = 0;         // CEs matching >=1 rule in window
  long long r2_risky_pattern_cnt = 0;    // sum of matched-rule counts
  long long r3_max_risky_pattern_cnt = 0;  // max unique matched rules per CE
  Timestamp window_end = 0;

  bool operator==(const IndicatorSnapshot&) const = default;
};

/// Indicators over CE events with ts in (t - window, t]. Events must be
/// sorted by ts; bitmap-less events never match.
IndicatorSnapshot windowed_indicators(std::span<const CEEvent> ce_events, const RuleSet& rules,
                                      Timestamp t, Duration window = 24 * kHour,
                                      Adjacency adjacency = Adjacency::FourNeighbor);

}  // namespace memfp
