#include "memfp/risk_indicators.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace memfp {

using nlohmann::json;

bool RiskyPatternRule::matches(const ErrorBitmap& bitmap, Adjacency adjacency) const {
  const SpatialBitStats st = spatial_features(bitmap, adjacency);
  if (min_error_dqs && st.dq_count < *min_error_dqs) return false;
  if (min_error_beats && st.beat_count < *min_error_beats) return false;
  if (min_adjacent_pairs && st.adjacent_pairs < *min_adjacent_pairs) return false;
  const int w = bitmap.dq_width();
  if (spans_beat_halves) {
    const std::uint64_t lower = (w == 4) ? 0xffffull : 0xffffffffull;
    const std::uint64_t bits = bitmap.raw();
    if (!(bits & lower) || !(bits & ~lower)) return false;
  }
  if (spans_dq_halves) {
    std::uint32_t dq_mask = 0;
    for (int beat = 0; beat < kBeats; ++beat)
      dq_mask |= static_cast<std::uint32_t>((bitmap.raw() >> (beat * w)) & ((1ull << w) - 1));
    const std::uint32_t lower = (1u << (w / 2)) - 1;
    if (!(dq_mask & lower) || !(dq_mask & ~lower)) return false;
  }
  if (mask_match && (bitmap.raw() & *mask_match) != *mask_match) return false;
  return true;
}

RuleSet default_rules() {
  RuleSet rules;
  {
    RiskyPatternRule r;
    r.rule_id = "RULE_A";
    r.spans_beat_halves = true;
    rules.push_back(r);
  }
  {
    RiskyPatternRule r;
    r.rule_id = "RULE_B";
    r.min_error_dqs = 3;
    rules.push_back(r);
  }
  {
    RiskyPatternRule r;
    r.rule_id = "RULE_C";
    r.min_adjacent_pairs = 2;
    r.min_error_beats = 2;
    rules.push_back(r);
  }
  return rules;
}

RuleSet load_rules(std::istream& in) {
  if (!in.good()) throw IoError("unreadable rule stream");
  RuleSet rules;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw IoError("rule line " + std::to_string(line_no) + ": not a valid record");
    RiskyPatternRule r;
    if (!j.contains("rule_id") || !j["rule_id"].is_string())
      throw IoError("rule line " + std::to_string(line_no) + ": missing rule_id");
    r.rule_id = j["rule_id"].get<std::string>();
    if (j.contains("min_error_dqs")) r.min_error_dqs = j["min_error_dqs"].get<int>();
    if (j.contains("min_error_beats")) r.min_error_beats = j["min_error_beats"].get<int>();
    if (j.contains("min_adjacent_pairs")) r.min_adjacent_pairs = j["min_adjacent_pairs"].get<int>();
    if (j.contains("spans_beat_halves")) r.spans_beat_halves = j["spans_beat_halves"].get<bool>();
    if (j.contains("spans_dq_halves")) r.spans_dq_halves = j["spans_dq_halves"].get<bool>();
    if (j.contains("mask_match"))
      r.mask_match = std::stoull(j["mask_match"].get<std::string>(), nullptr, 16);
    if (!r.has_condition())
      throw IoError("rule " + r.rule_id + ": no atomic condition");
    for (const auto& prev : rules)
      if (prev.rule_id == r.rule_id) throw IoError("duplicate rule_id: " + r.rule_id);
    rules.push_back(std::move(r));
  }
  return rules;
}

RuleSet load_rules_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rule set: " + path);
  return load_rules(in);
}

void serialize_rules(const RuleSet& rules, std::ostream& out) {
  for (const auto& r : rules) {
    json j;
    j["rule_id"] = r.rule_id;
    if (r.min_error_dqs) j["min_error_dqs"] = *r.min_error_dqs;
    if (r.min_error_beats) j["min_error_beats"] = *r.min_error_beats;
    if (r.min_adjacent_pairs) j["min_adjacent_pairs"] = *r.min_adjacent_pairs;
    if (r.spans_beat_halves) j["spans_beat_halves"] = true;
    if (r.spans_dq_halves) j["spans_dq_halves"] = true;
    if (r.mask_match) {
      std::ostringstream os;
      os << std::hex << *r.mask_match;
      j["mask_match"] = os.str();
    }
    out << j.dump() << '\n';
  }
}

std::vector<std::string> match_rules(const ErrorBitmap& bitmap, const RuleSet& rules,
                                     Adjacency adjacency) {
  std::vector<std::string> matched;
  for (const auto& r : rules)
    if (r.matches(bitmap, adjacency)) matched.push_back(r.rule_id);
  return matched;
}

IndicatorSnapshot windowed_indicators(std::span<const CEEvent> ce_events, const RuleSet& rules,
                                      Timestamp t, Duration window, Adjacency adjacency) {
  IndicatorSnapshot snap;
  snap.window_end = t;
  for (const auto& ev : ce_events) {
    if (ev.ts <= t - window || ev.ts > t || !ev.bitmap) continue;
    long long n = 0;
    for (const auto& r : rules)
      if (r.matches(*ev.bitmap, adjacency)) ++n;
    if (n > 0) {
      ++snap.r1_risky_ce_cnt;
      snap.r2_risky_pattern_cnt += n;
      snap.r3_max_risky_pattern_cnt = std::max(snap.r3_max_risky_pattern_cnt, n);
    }
  }
  return snap;
}

}  // namespace memfp
