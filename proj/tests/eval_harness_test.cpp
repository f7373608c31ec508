#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "memfp/eval_harness.hpp"
#include "memfp/synthgen.hpp"

using namespace memfp;

namespace {

DimmSpec spec(const std::string& id) {
  DimmSpec s;
  s.dimm_id = id;
  s.manufacturer = "A";
  s.capacity_gb = 16;
  s.data_width = DataWidth::x4;
  s.frequency_mhz = 2400;
  s.process_class = "other";
  s.server_age_days = 100;
  return s;
}

CEEvent ce(const std::string& id, Timestamp ts, std::uint64_t bits = 1) {
  CEEvent e;
  e.ts = ts;
  e.dimm_id = id;
  e.bitmap = ErrorBitmap(4, bits);
  return e;
}

// risky x4 bitmap: spans beat halves, 3 DQs, adjacent bits
constexpr std::uint64_t kRisky = 0x01000033ull;

DimmTimeline timeline(const std::string& id, std::vector<CEEvent> ces,
                      std::vector<Timestamp> ues = {}) {
  DimmTimeline tl;
  tl.spec = spec(id);
  tl.ce_events = std::move(ces);
  tl.ue_times = std::move(ues);
  return tl;
}

}  // namespace

TEST_CASE("metrics: standard formulas with 0/0 -> 0") {
  Metrics m = metrics({0, 0, 0, 10});
  CHECK(m.precision == 0);
  CHECK(m.recall == 0);
  CHECK(m.f1 == 0);

  Metrics m2 = metrics({8, 2, 4, 0});
  CHECK(m2.precision == doctest::Approx(0.8));
  CHECK(m2.recall == doctest::Approx(8.0 / 12.0));
}

TEST_CASE("F1 algebra reproduces the published (P, R) pairs") {
  auto f1_of = [](double p, double r) { return 2 * p * r / (p + r); };
  CHECK(std::fabs(f1_of(0.53, 0.82) - 0.64) <= 0.005 + 1e-12);
  CHECK(std::fabs(f1_of(0.46, 0.75) - 0.57) <= 0.005 + 1e-12);
}

TEST_CASE("virr formula, fixed points and error cases") {
  CHECK(std::fabs(virr(0.53, 0.82) - 0.67) <= 0.005 + 1e-12);
  CHECK(std::fabs(virr(0.46, 0.75) - 0.59) <= 0.005 + 1e-12);
  CHECK(std::fabs(virr(0.36, 0.45) - 0.33) <= 0.005 + 1e-12);
  CHECK(virr(0.05, 1.0) == doctest::Approx(-1.0));  // precision < y_c goes negative
  CHECK(virr(0.7, 0.4, 0.0) == doctest::Approx(0.4));  // y_c = 0 -> recall
  CHECK(virr(0.1, 0.9, 0.1) == doctest::Approx(0.0));  // zero-benefit fixed point
  CHECK_THROWS_AS(virr(0.0, 0.5), ConfigError);
}

TEST_CASE("verdicts: TN for quiet DIMM, lead-gap alarm does not count") {
  WindowConfig cfg;
  SimulateOptions opts;
  opts.threshold = 0.5;

  // scorer alarms only at the exact CE tick of D2
  Scorer scorer = [](const DimmFeatureContext& ctx, Timestamp t) {
    return ctx.spec().dimm_id == "D2" && t == ctx.events().front().ts ? 1.0 : 0.0;
  };

  Fleet fleet;
  fleet.push_back(timeline("D1", {ce("D1", 1000)}));  // CEs, no alarm, no UE -> TN
  // alarm at t, UE at t + lead/2: inside the lead gap, not valid -> FN
  const Timestamp t2 = 10'000;
  fleet.push_back(timeline("D2", {ce("D2", t2)}, {t2 + cfg.lead_time / 2}));

  auto outcomes = simulate_online(fleet, scorer, cfg, opts);
  REQUIRE(outcomes.size() == 2);
  CHECK(outcomes[0].verdict == Verdict::TN);
  CHECK(outcomes[1].verdict == Verdict::FN);

  // move the UE just past the lead gap -> valid -> TP
  fleet[1].ue_times = {t2 + cfg.lead_time};
  auto outcomes2 = simulate_online(fleet, scorer, cfg, opts);
  CHECK(outcomes2[1].verdict == Verdict::TP);

  // UE beyond lead + prediction window -> no longer valid
  fleet[1].ue_times = {t2 + cfg.lead_time + cfg.prediction_window + 1};
  auto outcomes3 = simulate_online(fleet, scorer, cfg, opts);
  CHECK(outcomes3[1].verdict == Verdict::FN);
}

TEST_CASE("alarm with no UE is FP; sudden-UE DIMMs leave the population") {
  WindowConfig cfg;
  SimulateOptions opts;
  Scorer always = [](const DimmFeatureContext&, Timestamp) { return 1.0; };

  Fleet fleet;
  fleet.push_back(timeline("D1", {ce("D1", 5000)}));            // alarm, no UE -> FP
  fleet.push_back(timeline("D2", {}, {9000}));                  // sudden UE -> excluded
  fleet.push_back(timeline("D3", {ce("D3", 20'000)}, {10'000}));  // UE before any CE -> excluded

  auto outcomes = simulate_online(fleet, always, cfg, opts);
  REQUIRE(outcomes.size() == 1);
  CHECK(outcomes[0].dimm_id == "D1");
  CHECK(outcomes[0].verdict == Verdict::FP);
}

TEST_CASE("verdicts equal a brute-force pairwise window checker on a synthetic fleet") {
  GeneratorConfig gcfg;
  gcfg.n_dimms = 120;
  gcfg.duration_days = 60;
  gcfg.seed = 21;
  SyntheticFleet sf = generate(gcfg);
  EventLog log;
  log.ce_events = sf.ce_events;
  log.ue_events = sf.ue_events;
  Fleet fleet = assemble_fleet(log, sf.specs);

  WindowConfig cfg;
  SimulateOptions opts;
  opts.stop_at_first_valid = false;  // need the full alarm list for the oracle
  Scorer scorer = indicator_scorer(default_rules(), cfg);
  auto outcomes = simulate_online(fleet, scorer, cfg, opts);

  std::map<std::string, const DimmTimeline*> by_id;
  for (const auto& tl : fleet) by_id[tl.spec.dimm_id] = &tl;
  for (const auto& o : outcomes) {
    const DimmTimeline& tl = *by_id.at(o.dimm_id);
    bool any_valid = false;
    for (Timestamp a : o.alarms)
      for (Timestamp u : o.ue_times)
        any_valid |= u >= a + cfg.lead_time && u <= a + cfg.lead_time + cfg.prediction_window;
    Verdict want;
    if (!tl.ue_times.empty())
      want = any_valid ? Verdict::TP : Verdict::FN;
    else
      want = o.alarms.empty() ? Verdict::TN : Verdict::FP;
    REQUIRE(o.verdict == want);
  }

  // early-exit mode must produce identical verdicts
  opts.stop_at_first_valid = true;
  auto fast = simulate_online(fleet, scorer, cfg, opts);
  REQUIRE(fast.size() == outcomes.size());
  for (std::size_t i = 0; i < fast.size(); ++i) CHECK(fast[i].verdict == outcomes[i].verdict);
}

TEST_CASE("report bookkeeping: verdicts partition the population") {
  GeneratorConfig gcfg;
  gcfg.n_dimms = 80;
  gcfg.seed = 5;
  SyntheticFleet sf = generate(gcfg);
  EventLog log;
  log.ce_events = sf.ce_events;
  log.ue_events = sf.ue_events;
  Fleet fleet = assemble_fleet(log, sf.specs);
  WindowConfig cfg;
  EvaluationReport r = evaluate(fleet, indicator_scorer(default_rules(), cfg), cfg, {});
  CHECK(r.counts.tp + r.counts.fp + r.counts.fn + r.counts.tn ==
        static_cast<long long>(r.outcomes.size()));
  if (r.virr_defined) CHECK(r.virr <= r.metrics.recall);
  CHECK(r.metrics.f1 >= 0);
  CHECK(r.metrics.f1 <= 1);
}

TEST_CASE("raising the threshold never adds alarms") {
  GeneratorConfig gcfg;
  gcfg.n_dimms = 40;
  gcfg.seed = 77;
  SyntheticFleet sf = generate(gcfg);
  EventLog log;
  log.ce_events = sf.ce_events;
  log.ue_events = sf.ue_events;
  Fleet fleet = assemble_fleet(log, sf.specs);
  WindowConfig cfg;
  // graded scorer so the threshold actually bites
  Scorer scorer = [](const DimmFeatureContext& ctx, Timestamp t) {
    double last = 0;
    for (const auto& e : ctx.events())
      if (e.ts <= t && e.bitmap) last = std::min(1.0, e.bitmap->popcount() / 8.0);
    return last;
  };
  SimulateOptions lo, hi;
  lo.threshold = 0.2;
  hi.threshold = 0.6;
  lo.stop_at_first_valid = hi.stop_at_first_valid = false;
  auto a = simulate_online(fleet, scorer, cfg, lo);
  auto b = simulate_online(fleet, scorer, cfg, hi);
  REQUIRE(a.size() == b.size());
  long long fp_lo = 0, fp_hi = 0, fn_lo = 0, fn_hi = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(b[i].alarms.size() <= a[i].alarms.size());
    fp_lo += a[i].verdict == Verdict::FP;
    fp_hi += b[i].verdict == Verdict::FP;
    fn_lo += a[i].verdict == Verdict::FN;
    fn_hi += b[i].verdict == Verdict::FN;
  }
  CHECK(fp_hi <= fp_lo);
  CHECK(fn_hi >= fn_lo);
}

TEST_CASE("assemble_fleet rejects events for unknown DIMMs") {
  EventLog log;
  log.ce_events.push_back(ce("mystery", 1));
  CHECK_THROWS_AS(assemble_fleet(log, {}), ConfigError);
}

TEST_CASE("relative UE rate: normalization") {
  Fleet fleet;
  // bucket "a": 1 of 10 DIMMs with UE; bucket "b": 2 of 10
  for (int i = 0; i < 10; ++i) {
    fleet.push_back(timeline("A" + std::to_string(i), {}, i == 0 ? std::vector<Timestamp>{5}
                                                                 : std::vector<Timestamp>{}));
    fleet.push_back(timeline("B" + std::to_string(i), {}, i < 2 ? std::vector<Timestamp>{5}
                                                               : std::vector<Timestamp>{}));
  }
  auto table = relative_ue_rate(
      fleet, [](const DimmTimeline& tl) { return tl.spec.dimm_id.substr(0, 1); });
  REQUIRE(table.size() == 2);
  CHECK(table[0].label == "A");
  CHECK(table[0].relative_rate == doctest::Approx(0.5));
  CHECK(table[1].label == "B");
  CHECK(table[1].relative_rate == doctest::Approx(1.0));

  // single bucket with >=1 UE self-normalizes to 1.0
  Fleet solo;
  solo.push_back(timeline("X1", {}, {9}));
  solo.push_back(timeline("X2", {}));
  auto one = relative_ue_rate(solo, [](const DimmTimeline&) { return std::string("all"); });
  REQUIRE(one.size() == 1);
  CHECK(one[0].relative_rate == doctest::Approx(1.0));
}

TEST_CASE("report writers emit meta line and a virr column") {
  EvaluationReport r;
  r.counts = {3, 1, 1, 5};
  r.metrics = metrics(r.counts);
  r.virr = virr(r.metrics.precision, r.metrics.recall);
  r.virr_defined = true;
  r.lead_time = 15 * kMinute;
  std::ostringstream csv, txt;
  write_report_csv(r, csv, "seed=7 config_hash=aa");
  write_report_summary(r, txt);
  CHECK(csv.str().find("# seed=7 config_hash=aa") != std::string::npos);
  CHECK(csv.str().find("virr") != std::string::npos);
  CHECK(txt.str().find("precision") != std::string::npos);
}
