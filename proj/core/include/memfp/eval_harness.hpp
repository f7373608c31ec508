#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "memfp/feature_pipeline.hpp"
#include "memfp/model.hpp"

namespace memfp {

enum class Verdict { TP, FP, FN, TN };

const char* verdict_name(Verdict v);

struct DimOutcome {
  std::string dimm_id;
  std::vector<Timestamp> alarms;
  std::vector<Timestamp> ue_times;
  Verdict verdict = Verdict::TN;
};

struct ConfusionCounts {
  long long tp = 0, fp = 0, fn = 0, tn = 0;
};

struct Metrics {
  double precision = 0, recall = 0, f1 = 0;
};

struct EvaluationReport {
  ConfusionCounts counts;
  Metrics metrics;
  double virr = 0;
  bool virr_defined = false;  // false when precision == 0
  Duration lead_time = 0;
  std::vector<DimOutcome> outcomes;
};

/// Per-DIMM test data: CE history plus UE times, already sorted by ts.
struct DimmTimeline {
  DimmSpec spec;
  std::vector<CEEvent> ce_events;
  std::vector<Timestamp> ue_times;
};

using Fleet = std::vector<DimmTimeline>;

Fleet assemble_fleet(const EventLog& log, const DimmSpecTable& specs);

/// Scores one DIMM at a prediction tick. Returns a probability.
using Scorer = std::function<double(const DimmFeatureContext&, Timestamp)>;

Scorer model_scorer(const TreeEnsemble& model, const WindowConfig& cfg);

/// Rule-indicator baseline: probability 1 when the indicator predicate
/// holds over the trailing 24h window, else 0. Default: alarm iff R1 > 0.
Scorer indicator_scorer(const RuleSet& rules, const WindowConfig& cfg,
                        long long min_r1 = 1, long long min_r2 = 0, long long min_r3 = 0);

struct SimulateOptions {
  double threshold = 0.3;
  unsigned threads = 0;          // 0 = hardware concurrency
  bool stop_at_first_valid = true;  // verdicts only; full alarm lists when false
  RuleSet rules;                 // rules used for feature contexts
  FaultThresholds fault_thresholds;
  StormConfig storm;
  Adjacency adjacency = Adjacency::FourNeighbor;
};

/// Online protocol: lazy prediction ticks at every CE plus the
/// prediction-interval grid for one aggregation window after it. An
/// alarm at t is valid for a UE at u iff u in [t + lead, t + lead + pred].
/// One verdict per DIMM; sudden-UE DIMMs (no CE before the UE) are
/// excluded from the population.
std::vector<DimOutcome> simulate_online(const Fleet& fleet, const Scorer& scorer,
                                        const WindowConfig& cfg, const SimulateOptions& opts);

Metrics metrics(const ConfusionCounts& counts);

/// (1 - y_c / precision) * recall; negative when precision < y_c.
/// precision == 0 is an error (division undefined).
double virr(double precision, double recall, double y_c = 0.1);

EvaluationReport evaluate(const Fleet& fleet, const Scorer& scorer, const WindowConfig& cfg,
                          const SimulateOptions& opts, double y_c = 0.1);

struct RateBucket {
  std::string label;
  std::size_t dimms = 0;
  std::size_t ue_dimms = 0;
  double relative_rate = 0;  // normalized so the hottest bucket reads 1.0
};

/// Fraction of DIMMs with >=1 UE per bucket, normalized by the max
/// fraction. Empty buckets are absent from the result.
std::vector<RateBucket> relative_ue_rate(
    const Fleet& fleet, const std::function<std::string(const DimmTimeline&)>& bucket_of);

void write_report_csv(const EvaluationReport& report, std::ostream& out,
                      const std::string& meta = "");
void write_report_summary(const EvaluationReport& report, std::ostream& out);
void write_rate_table_csv(const std::string& key, const std::vector<RateBucket>& table,
                          std::ostream& out, const std::string& meta = "");

}  // namespace memfp
