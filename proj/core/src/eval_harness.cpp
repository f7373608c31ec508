#include "memfp/eval_harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace memfp {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::TP: return "TP";
    case Verdict::FP: return "FP";
    case Verdict::FN: return "FN";
    case Verdict::TN: return "TN";
  }
  return "?";
}

Fleet assemble_fleet(const EventLog& log, const DimmSpecTable& specs) {
  std::map<std::string, DimmTimeline> by_dimm;
  for (const auto& [id, spec] : specs) by_dimm[id].spec = spec;
  for (const auto& ce : log.ce_events) {
    auto it = by_dimm.find(ce.dimm_id);
    if (it == by_dimm.end()) throw ConfigError("CE for unknown DIMM: " + ce.dimm_id);
    it->second.ce_events.push_back(ce);
  }
  for (const auto& ue : log.ue_events) {
    auto it = by_dimm.find(ue.dimm_id);
    if (it == by_dimm.end()) throw ConfigError("UE for unknown DIMM: " + ue.dimm_id);
    it->second.ue_times.push_back(ue.ts);
  }
  Fleet fleet;
  fleet.reserve(by_dimm.size());
  for (auto& [id, tl] : by_dimm) fleet.push_back(std::move(tl));
  return fleet;
}

Scorer model_scorer(const TreeEnsemble& model, const WindowConfig& cfg) {
  model.check_manifest(feature_manifest_hash());
  return [&model, cfg](const DimmFeatureContext& ctx, Timestamp t) {
    const FeatureVector v = ctx.build(t, cfg);
    return model.predict_proba(v.values);
  };
}

Scorer indicator_scorer(const RuleSet& rules, const WindowConfig& cfg, long long min_r1,
                        long long min_r2, long long min_r3) {
  return [rules, cfg, min_r1, min_r2, min_r3](const DimmFeatureContext& ctx, Timestamp t) {
    const auto& events = ctx.events();
    auto lo = std::partition_point(events.begin(), events.end(), [&](const CEEvent& e) {
      return e.ts <= t - cfg.aggregation_window;
    });
    auto hi = std::partition_point(lo, events.end(),
                                   [&](const CEEvent& e) { return e.ts <= t; });
    const IndicatorSnapshot snap = windowed_indicators(
        std::span<const CEEvent>(events.data() + (lo - events.begin()),
                                 static_cast<std::size_t>(hi - lo)),
        rules, t, cfg.aggregation_window);
    const bool alarm = snap.r1_risky_ce_cnt >= min_r1 && snap.r2_risky_pattern_cnt >= min_r2 &&
                       snap.r3_max_risky_pattern_cnt >= min_r3;
    return alarm ? 1.0 : 0.0;
  };
}

namespace {

// Sudden UE: the first UE has no CE before it.
bool is_sudden_ue(const DimmTimeline& tl) {
  if (tl.ue_times.empty()) return false;
  const Timestamp u = *std::min_element(tl.ue_times.begin(), tl.ue_times.end());
  for (const auto& ce : tl.ce_events)
    if (ce.ts < u) return false;
  return true;
}

DimOutcome run_dimm(const DimmTimeline& tl, const Scorer& scorer, const WindowConfig& cfg,
                    const SimulateOptions& opts) {
  DimOutcome out;
  out.dimm_id = tl.spec.dimm_id;
  out.ue_times = tl.ue_times;
  std::sort(out.ue_times.begin(), out.ue_times.end());
  const bool has_ue = !out.ue_times.empty();
  const Timestamp first_ue = has_ue ? out.ue_times.front() : 0;

  DimmFeatureContext ctx(tl.spec, tl.ce_events, opts.rules, opts.fault_thresholds, opts.storm,
                         opts.adjacency, 0);
  const auto& events = ctx.events();

  auto alarm_is_valid = [&](Timestamp t) {
    for (Timestamp u : out.ue_times)
      if (u >= t + cfg.lead_time && u <= t + cfg.lead_time + cfg.prediction_window) return true;
    return false;
  };

  bool valid_alarm = false;
  bool done = false;
  for (std::size_t i = 0; i < events.size() && !done; ++i) {
    Timestamp t = events[i].ts;
    const Timestamp cover_end = t + cfg.aggregation_window;
    const Timestamp next_ce =
        i + 1 < events.size() ? events[i + 1].ts : std::numeric_limits<Timestamp>::max();
    for (; t <= cover_end && t < next_ce; t += cfg.prediction_interval) {
      if (has_ue && t >= first_ue) break;  // alarms at/after the UE cannot be valid
      if (scorer(ctx, t) < opts.threshold) continue;
      out.alarms.push_back(t);
      if (has_ue) {
        if (alarm_is_valid(t)) {
          valid_alarm = true;
          if (opts.stop_at_first_valid) done = true;
        }
      } else if (opts.stop_at_first_valid) {
        done = true;  // any alarm on a no-UE DIMM settles the verdict
      }
      if (done) break;
    }
  }

  if (has_ue)
    out.verdict = valid_alarm ? Verdict::TP : Verdict::FN;
  else
    out.verdict = out.alarms.empty() ? Verdict::TN : Verdict::FP;
  return out;
}

}  // namespace

std::vector<DimOutcome> simulate_online(const Fleet& fleet, const Scorer& scorer,
                                        const WindowConfig& cfg, const SimulateOptions& opts) {
  cfg.validate();
  if (opts.threshold < 0 || opts.threshold > 1)
    throw ConfigError("simulate_online: threshold must be in [0, 1]");
  std::vector<std::optional<DimOutcome>> slots(fleet.size());
  parallel_for(fleet.size(), opts.threads, [&](std::size_t i) {
    if (is_sudden_ue(fleet[i])) return;  // excluded from the population
    slots[i] = run_dimm(fleet[i], scorer, cfg, opts);
  });
  std::vector<DimOutcome> out;
  out.reserve(fleet.size());
  for (auto& s : slots)
    if (s) out.push_back(std::move(*s));
  return out;
}

Metrics metrics(const ConfusionCounts& c) {
  if (c.tp < 0 || c.fp < 0 || c.fn < 0 || c.tn < 0)
    throw ConfigError("metrics: negative counts");
  Metrics m;
  m.precision = (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
  m.recall = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
  m.f1 = (m.precision + m.recall) > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall)
                                      : 0.0;
  return m;
}

double virr(double precision, double recall, double y_c) {
  if (precision <= 0 || precision > 1)
    throw ConfigError("virr: precision must be in (0, 1]");
  if (recall < 0 || recall > 1) throw ConfigError("virr: recall must be in [0, 1]");
  if (y_c < 0 || y_c > 1) throw ConfigError("virr: y_c must be in [0, 1]");
  return (1.0 - y_c / precision) * recall;
}

EvaluationReport evaluate(const Fleet& fleet, const Scorer& scorer, const WindowConfig& cfg,
                          const SimulateOptions& opts, double y_c) {
  EvaluationReport report;
  report.lead_time = cfg.lead_time;
  report.outcomes = simulate_online(fleet, scorer, cfg, opts);
  for (const auto& o : report.outcomes) {
    switch (o.verdict) {
      case Verdict::TP: ++report.counts.tp; break;
      case Verdict::FP: ++report.counts.fp; break;
      case Verdict::FN: ++report.counts.fn; break;
      case Verdict::TN: ++report.counts.tn; break;
    }
  }
  report.metrics = metrics(report.counts);
  if (report.metrics.precision > 0) {
    report.virr = virr(report.metrics.precision, report.metrics.recall, y_c);
    report.virr_defined = true;
  }
  return report;
}

std::vector<RateBucket> relative_ue_rate(
    const Fleet& fleet, const std::function<std::string(const DimmTimeline&)>& bucket_of) {
  std::map<std::string, RateBucket> buckets;
  for (const auto& tl : fleet) {
    RateBucket& b = buckets[bucket_of(tl)];
    ++b.dimms;
    if (!tl.ue_times.empty()) ++b.ue_dimms;
  }
  double max_frac = 0;
  for (const auto& [label, b] : buckets)
    max_frac = std::max(max_frac, static_cast<double>(b.ue_dimms) / b.dimms);
  std::vector<RateBucket> out;
  for (auto& [label, b] : buckets) {
    b.label = label;
    const double frac = static_cast<double>(b.ue_dimms) / b.dimms;
    b.relative_rate = max_frac > 0 ? frac / max_frac : 0.0;
    out.push_back(b);
  }
  return out;
}

void write_report_csv(const EvaluationReport& r, std::ostream& out, const std::string& meta) {
  if (!meta.empty()) out << "# " << meta << '\n';
  out << "lead_s,tp,fp,fn,tn,precision,recall,f1,virr\n";
  out << r.lead_time << ',' << r.counts.tp << ',' << r.counts.fp << ',' << r.counts.fn << ','
      << r.counts.tn << ',' << format_double(r.metrics.precision) << ','
      << format_double(r.metrics.recall) << ',' << format_double(r.metrics.f1) << ','
      << (r.virr_defined ? format_double(r.virr) : "nan") << '\n';
}

void write_report_summary(const EvaluationReport& r, std::ostream& out) {
  out << "lead time:  " << format_duration(r.lead_time) << '\n';
  out << "population: " << r.outcomes.size() << " DIMMs\n";
  out << "TP " << r.counts.tp << "  FP " << r.counts.fp << "  FN " << r.counts.fn << "  TN "
      << r.counts.tn << '\n';
  char buf[128];
  std::snprintf(buf, sizeof(buf), "precision %.4f  recall %.4f  f1 %.4f\n", r.metrics.precision,
                r.metrics.recall, r.metrics.f1);
  out << buf;
  if (r.virr_defined) {
    std::snprintf(buf, sizeof(buf), "virr %.4f\n", r.virr);
    out << buf;
  } else {
    out << "virr not computable (precision = 0)\n";
  }
}

void write_rate_table_csv(const std::string& key, const std::vector<RateBucket>& table,
                          std::ostream& out, const std::string& meta) {
  if (!meta.empty()) out << "# " << meta << '\n';
  out << key << ",dimms,ue_dimms,relative_ue_rate\n";
  for (const auto& b : table)
    out << b.label << ',' << b.dimms << ',' << b.ue_dimms << ','
        << format_double(b.relative_rate) << '\n';
}

}  // namespace memfp
