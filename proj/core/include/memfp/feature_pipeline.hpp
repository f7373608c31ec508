#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "memfp/fault_classifier.hpp"
#include "memfp/log_ingest.hpp"
#include "memfp/risk_indicators.hpp"

namespace memfp {

struct WindowConfig {
  Duration observation_window = 5 * kDay;   // trailing feature horizon
  Duration prediction_window = 30 * kDay;   // forward validity of an alarm
  Duration lead_time = 15 * kMinute;        // gap between alarm and failure, (0, 3h]
  Duration prediction_interval = 5 * kMinute;
  Duration aggregation_window = 24 * kHour; // bit/indicator aggregates
  Duration labeling_interval = 24 * kHour;  // t_i

  void validate() const;
};

struct StormConfig {
  int storm_ces = 10;             // CEs within storm_window
  Duration storm_window = kHour;
  long long overflow_threshold = 1000;  // cumulative CE count
  int storm_suppress_count = 3;   // storm episodes before suppression
};

struct FeatureVector {
  std::string dimm_id;
  Timestamp ts = 0;
  std::vector<double> values;
};

struct LabeledSample {
  FeatureVector vec;
  bool positive = false;
};

struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<LabeledSample> samples;

  std::uint64_t manifest_hash() const;
};

/// Fixed feature ordering shared by every sample of a run.
const std::vector<std::string>& feature_names();
std::uint64_t feature_manifest_hash();

int manufacturer_code(const std::string& manufacturer);
int process_code(const std::string& process_class);

/// Per-DIMM precomputation (per-event bit stats, matched-rule counts,
/// cumulative fault counts, storm episodes) so that building a vector
/// at a timestamp is a window scan, not a history scan.
class DimmFeatureContext {
 public:
  DimmFeatureContext(const DimmSpec& spec, std::vector<CEEvent> ce_events, const RuleSet& rules,
                     const FaultThresholds& thresholds = {}, const StormConfig& storm = {},
                     Adjacency adjacency = Adjacency::FourNeighbor,
                     Duration fault_window = 0);

  /// Features from data in (t - observation_window, t] only.
  FeatureVector build(Timestamp t, const WindowConfig& cfg) const;

  const std::vector<CEEvent>& events() const { return events_; }
  const DimmSpec& spec() const { return spec_; }

 private:
  DimmSpec spec_;
  std::vector<CEEvent> events_;
  FaultThresholds thresholds_;
  StormConfig storm_;
  Duration fault_window_;
  std::vector<SpatialBitStats> bit_stats_;   // per event; total_bits 0 if no bitmap
  std::vector<std::uint64_t> raw_bits_;      // 0 if no bitmap
  std::vector<int> matched_rule_cnt_;        // per event
  std::vector<FaultCounts> fault_prefix_;    // counts after event i (fault_window == 0)
  std::vector<int> storm_episode_prefix_;    // episodes started up to event i
  std::vector<char> storm_flag_;             // event i closes a >=storm_ces 1h burst
  int dq_width_;
};

/// One-shot convenience used by tests and oracles.
FeatureVector build_feature_vector(const DimmSpec& spec, std::span<const CEEvent> ce_history,
                                   Timestamp t, const WindowConfig& cfg, const RuleSet& rules,
                                   const FaultThresholds& thresholds = {},
                                   const StormConfig& storm = {});

/// Positive iff ts in [u - t_i, u) for the DIMM's first UE at u; samples
/// at ts < u - t_i or ts >= u on UE DIMMs are excluded. No-UE DIMMs are
/// all negative.
std::vector<LabeledSample> label_samples(const std::vector<FeatureVector>& vectors,
                                         const std::vector<UEEvent>& ue_events,
                                         Duration t_i);

/// Duplicate positives uniformly at random (seeded) until
/// positives/negatives >= target_ratio.
Dataset oversample(Dataset dataset, double target_ratio, std::uint64_t seed);

enum class SelectionMethod { pearson, impurity, rfe };

std::vector<std::string> select_features(const Dataset& dataset, SelectionMethod method,
                                         std::size_t k, std::uint64_t seed = 0);

void save_dataset(const Dataset& dataset, std::ostream& out, const std::string& meta = "");
void save_dataset_file(const Dataset& dataset, const std::string& path,
                       const std::string& meta = "");
Dataset load_dataset(std::istream& in);
Dataset load_dataset_file(const std::string& path);

}  // namespace memfp
