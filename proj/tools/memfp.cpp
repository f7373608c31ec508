#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "memfp/config.hpp"
#include "memfp/eval_harness.hpp"
#include "memfp/log_ingest.hpp"
#include "memfp/synthgen.hpp"

namespace fs = std::filesystem;
using namespace memfp;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> lead;
  std::optional<double> threshold;
  std::optional<std::string> t_i;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run config file (JSON)");
  cmd->add_option("--out-dir", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "override config seed");
  cmd->add_option("--threads", args.threads, "worker thread cap (0 = all cores)");
  cmd->add_option("--lead", args.lead, "lead time, s/m/h/d suffix");
  cmd->add_option("--threshold", args.threshold, "classification threshold");
  cmd->add_option("--t-i", args.t_i, "labeling interval, s/m/h/d suffix");
}

RunConfig effective_config(const CommonArgs& args) {
  RunConfig cfg;
  if (!args.config_path.empty()) cfg = load_run_config_file(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  if (args.threads) cfg.threads = *args.threads;
  if (args.lead) cfg.window.lead_time = parse_duration(*args.lead);
  if (args.threshold) cfg.threshold = *args.threshold;
  if (args.t_i) cfg.window.labeling_interval = parse_duration(*args.t_i);
  cfg.generator.seed = cfg.seed;
  cfg.hyperparams.seed = cfg.seed;
  cfg.validate();
  std::cout << "effective config (seed " << cfg.seed << ", hash " << hash_hex(cfg.hash())
            << "):\n";
  save_run_config(cfg, std::cout);
  return cfg;
}

RuleSet rules_of(const RunConfig& cfg) {
  return cfg.rules_path.empty() ? default_rules() : load_rules_file(cfg.rules_path);
}

void write_fleet(const SyntheticFleet& fleet, const fs::path& dir, const std::string& prefix,
                 const std::string& meta) {
  std::ofstream ev(dir / (prefix + "events.log"));
  ev << "# " << meta << '\n';
  serialize_events(fleet.ce_events, fleet.ue_events, ev);
  std::ofstream sp(dir / (prefix + "dimm_specs.csv"));
  sp << "# " << meta << '\n';
  serialize_dimm_specs(fleet.specs, sp);
  std::ofstream gt(dir / (prefix + "ground_truth.log"));
  write_ground_truth(fleet.truth, gt, meta);
}

Dataset build_labeled_dataset(const EventLog& log, const DimmSpecTable& specs,
                              const RuleSet& rules, const RunConfig& cfg) {
  struct Run {
    std::size_t begin, end;
  };
  std::vector<Run> runs;
  for (std::size_t i = 0; i < log.ce_events.size();) {
    std::size_t j = i;
    while (j < log.ce_events.size() && log.ce_events[j].dimm_id == log.ce_events[i].dimm_id) ++j;
    runs.push_back({i, j});
    i = j;
  }
  std::vector<std::vector<FeatureVector>> slots(runs.size());
  parallel_for(runs.size(), cfg.threads, [&](std::size_t r) {
    const auto& [begin, end] = runs[r];
    const std::string& id = log.ce_events[begin].dimm_id;
    auto it = specs.find(id);
    if (it == specs.end()) throw ConfigError("DIMM missing from spec table: " + id);
    DimmFeatureContext ctx(
        it->second,
        std::vector<CEEvent>(log.ce_events.begin() + begin, log.ce_events.begin() + end), rules,
        cfg.thresholds, cfg.storm, cfg.adjacency);
    for (std::size_t k = begin; k < end; ++k)
      slots[r].push_back(ctx.build(log.ce_events[k].ts, cfg.window));
  });
  std::vector<FeatureVector> vectors;
  for (auto& s : slots) vectors.insert(vectors.end(), std::make_move_iterator(s.begin()),
                                       std::make_move_iterator(s.end()));
  Dataset d;
  d.feature_names = feature_names();
  d.samples = label_samples(vectors, log.ue_events, cfg.window.labeling_interval);
  return d;
}

SimulateOptions simulate_options(const RunConfig& cfg, const RuleSet& rules) {
  SimulateOptions opts;
  opts.threshold = cfg.threshold;
  opts.threads = cfg.threads;
  opts.rules = rules;
  opts.fault_thresholds = cfg.thresholds;
  opts.storm = cfg.storm;
  opts.adjacency = cfg.adjacency;
  return opts;
}

void write_evaluation(const EvaluationReport& report, const fs::path& dir,
                      const std::string& stem, const std::string& meta) {
  {
    std::ofstream out(dir / (stem + "_metrics.csv"));
    write_report_csv(report, out, meta);
  }
  {
    std::ofstream out(dir / (stem + "_summary.txt"));
    write_report_summary(report, out);
  }
  {
    std::ofstream out(dir / (stem + "_outcomes.csv"));
    out << "# " << meta << '\n';
    out << "dimm_id,verdict,alarms,ue_times\n";
    for (const auto& o : report.outcomes) {
      out << o.dimm_id << ',' << verdict_name(o.verdict) << ',';
      for (std::size_t i = 0; i < o.alarms.size(); ++i) out << (i ? ";" : "") << o.alarms[i];
      out << ',';
      for (std::size_t i = 0; i < o.ue_times.size(); ++i) out << (i ? ";" : "") << o.ue_times[i];
      out << '\n';
    }
  }
}

int cmd_gen(const CommonArgs& args) {
  RunConfig cfg = effective_config(args);
  fs::create_directories(args.out_dir);
  SyntheticFleet fleet = generate(cfg.generator);
  write_fleet(fleet, args.out_dir, "", cfg.meta_line());
  std::cout << "generated " << fleet.specs.size() << " DIMMs, " << fleet.ce_events.size()
            << " CEs, " << fleet.ue_events.size() << " UEs\n";
  return 0;
}

int cmd_featurize(const CommonArgs& args, const std::string& events_path,
                  const std::string& specs_path) {
  RunConfig cfg = effective_config(args);
  fs::create_directories(args.out_dir);
  EventLog log = parse_events_file(events_path);
  for (const auto& w : log.warnings) std::cerr << "warning: " << w << '\n';
  if (log.ce_events.empty())
    std::cerr << "warning: event log contains no CE events; dataset will be empty\n";
  DimmSpecTable specs = load_dimm_specs_file(specs_path);
  Dataset dataset = build_labeled_dataset(log, specs, rules_of(cfg), cfg);
  save_dataset_file(dataset, (fs::path(args.out_dir) / "dataset.csv").string(), cfg.meta_line());
  std::size_t pos = 0;
  for (const auto& s : dataset.samples) pos += s.positive;
  std::cout << "dataset: " << dataset.samples.size() << " samples (" << pos << " positive)\n";
  return 0;
}

int cmd_train(const CommonArgs& args, const std::string& dataset_path) {
  RunConfig cfg = effective_config(args);
  fs::create_directories(args.out_dir);
  Dataset dataset = load_dataset_file(dataset_path);
  dataset = oversample(std::move(dataset), cfg.oversample_ratio, cfg.seed);
  DataMatrix m;
  m.rows = dataset.samples.size();
  m.cols = dataset.feature_names.size();
  for (const auto& s : dataset.samples) {
    m.x.insert(m.x.end(), s.vec.values.begin(), s.vec.values.end());
    m.y.push_back(s.positive ? 1 : 0);
  }
  TreeEnsemble model = train(m, dataset.feature_names, cfg.hyperparams, cfg.mode);
  save_model_file(model, (fs::path(args.out_dir) / "model.txt").string(), cfg.meta_line());
  std::cout << "trained " << model.trees().size() << " trees on " << m.rows << " samples\n";
  return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& model_path,
                 const std::string& events_path, const std::string& specs_path, bool baseline) {
  RunConfig cfg = effective_config(args);
  fs::create_directories(args.out_dir);
  EventLog log = parse_events_file(events_path);
  DimmSpecTable specs = load_dimm_specs_file(specs_path);
  Fleet fleet = assemble_fleet(log, specs);
  RuleSet rules = rules_of(cfg);
  SimulateOptions opts = simulate_options(cfg, rules);

  if (!model_path.empty()) {
    TreeEnsemble model = load_model_file(model_path);
    EvaluationReport report =
        evaluate(fleet, model_scorer(model, cfg.window), cfg.window, opts, cfg.y_c);
    write_evaluation(report, args.out_dir, "model", cfg.meta_line());
    write_report_summary(report, std::cout);
  }
  if (baseline) {
    EvaluationReport report =
        evaluate(fleet, indicator_scorer(rules, cfg.window), cfg.window, opts, cfg.y_c);
    write_evaluation(report, args.out_dir, "baseline", cfg.meta_line());
    std::cout << "baseline (alarm iff R1 > 0):\n";
    write_report_summary(report, std::cout);
  }
  return 0;
}

int cmd_analyze(const CommonArgs& args, const std::string& events_path,
                const std::string& specs_path) {
  RunConfig cfg = effective_config(args);
  fs::create_directories(args.out_dir);
  EventLog log = parse_events_file(events_path);
  DimmSpecTable specs = load_dimm_specs_file(specs_path);
  Fleet fleet = assemble_fleet(log, specs);
  RuleSet rules = rules_of(cfg);
  const std::string meta = cfg.meta_line();

  auto emit = [&](const std::string& key,
                  const std::function<std::string(const DimmTimeline&)>& bucket) {
    auto table = relative_ue_rate(fleet, bucket);
    std::ofstream out(fs::path(args.out_dir) / ("rate_by_" + key + ".csv"));
    write_rate_table_csv(key, table, out, meta);
  };
  emit("manufacturer", [](const DimmTimeline& tl) { return tl.spec.manufacturer; });
  emit("width", [](const DimmTimeline& tl) {
    return tl.spec.data_width == DataWidth::x4 ? std::string("x4") : std::string("x8");
  });
  emit("frequency", [](const DimmTimeline& tl) { return std::to_string(tl.spec.frequency_mhz); });
  emit("process", [](const DimmTimeline& tl) { return tl.spec.process_class; });
  emit("capacity", [](const DimmTimeline& tl) { return std::to_string(tl.spec.capacity_gb); });
  emit("age", [](const DimmTimeline& tl) {
    if (tl.spec.server_age_days <= 365) return std::string("0-1y");
    if (tl.spec.server_age_days <= 730) return std::string("1-2y");
    return std::string("2y+");
  });
  emit("fault_level", [&](const DimmTimeline& tl) {
    Timestamp t = 0;
    for (const auto& ce : tl.ce_events) t = std::max(t, ce.ts);
    const FaultCounts ex =
        exclusive_faults(classify_faults(tl.ce_events, cfg.thresholds, t));
    if (ex.rank) return std::string("rank");
    if (ex.device) return std::string("device");
    if (ex.bank) return std::string("bank");
    if (ex.row || ex.column) return ex.row >= ex.column ? std::string("row")
                                                        : std::string("column");
    if (ex.cell) return std::string("cell");
    return std::string("none");
  });

  // Rule-indicator threshold sweep under the online protocol.
  std::ofstream sweep(fs::path(args.out_dir) / "indicator_sweep.csv");
  sweep << "# " << meta << '\n';
  sweep << "indicator,min_count,tp,fp,fn,tn,precision,recall,f1\n";
  SimulateOptions opts = simulate_options(cfg, rules);
  for (int which = 0; which < 3; ++which) {
    for (long long k = 1; k <= 3; ++k) {
      Scorer scorer = indicator_scorer(rules, cfg.window, which == 0 ? k : 0,
                                       which == 1 ? k : 0, which == 2 ? k : 0);
      EvaluationReport r = evaluate(fleet, scorer, cfg.window, opts, cfg.y_c);
      sweep << "R" << (which + 1) << ',' << k << ',' << r.counts.tp << ',' << r.counts.fp << ','
            << r.counts.fn << ',' << r.counts.tn << ',' << format_double(r.metrics.precision)
            << ',' << format_double(r.metrics.recall) << ',' << format_double(r.metrics.f1)
            << '\n';
    }
  }
  std::cout << "analysis tables written to " << args.out_dir << '\n';
  return 0;
}

int cmd_pipeline(const CommonArgs& args) {
  RunConfig cfg = effective_config(args);
  fs::create_directories(args.out_dir);
  const fs::path dir(args.out_dir);
  const std::string meta = cfg.meta_line();

  GeneratorConfig train_gen = cfg.generator;
  train_gen.seed = cfg.seed;
  GeneratorConfig test_gen = cfg.generator;
  test_gen.seed = cfg.seed + 1;  // disjoint held-out fleet

  SyntheticFleet train_fleet = generate(train_gen);
  SyntheticFleet test_fleet = generate(test_gen);
  write_fleet(train_fleet, dir, "train_", meta);
  write_fleet(test_fleet, dir, "test_", meta);
  std::cout << "train fleet: " << train_fleet.ce_events.size() << " CEs, "
            << train_fleet.ue_events.size() << " UEs; test fleet: "
            << test_fleet.ce_events.size() << " CEs, " << test_fleet.ue_events.size()
            << " UEs\n";

  RuleSet rules = rules_of(cfg);
  EventLog train_log;
  train_log.ce_events = train_fleet.ce_events;
  train_log.ue_events = train_fleet.ue_events;
  Dataset dataset = build_labeled_dataset(train_log, train_fleet.specs, rules, cfg);
  save_dataset_file(dataset, (dir / "dataset.csv").string(), meta);

  Dataset training = oversample(dataset, cfg.oversample_ratio, cfg.seed);
  DataMatrix m;
  m.rows = training.samples.size();
  m.cols = training.feature_names.size();
  for (const auto& s : training.samples) {
    m.x.insert(m.x.end(), s.vec.values.begin(), s.vec.values.end());
    m.y.push_back(s.positive ? 1 : 0);
  }
  TreeEnsemble model = train(m, training.feature_names, cfg.hyperparams, cfg.mode);
  save_model_file(model, (dir / "model.txt").string(), meta);

  EventLog test_log;
  test_log.ce_events = test_fleet.ce_events;
  test_log.ue_events = test_fleet.ue_events;
  Fleet fleet = assemble_fleet(test_log, test_fleet.specs);
  SimulateOptions opts = simulate_options(cfg, rules);
  EvaluationReport report =
      evaluate(fleet, model_scorer(model, cfg.window), cfg.window, opts, cfg.y_c);
  write_evaluation(report, dir, "model", meta);
  write_report_summary(report, std::cout);

  EvaluationReport baseline =
      evaluate(fleet, indicator_scorer(rules, cfg.window), cfg.window, opts, cfg.y_c);
  write_evaluation(baseline, dir, "baseline", meta);
  std::cout << "baseline (alarm iff R1 > 0):\n";
  write_report_summary(baseline, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DRAM CE/UE telemetry pipeline: synthetic fleets, feature extraction, "
               "tree-ensemble training and windowed failure-prediction evaluation"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string events_path, specs_path, dataset_path, model_path;
  bool baseline = false;

  auto* gen = app.add_subcommand("gen", "generate a synthetic fleet");
  add_common(gen, args);

  auto* featurize = app.add_subcommand("featurize", "event logs -> labeled dataset");
  add_common(featurize, args);
  featurize->add_option("--events", events_path, "event log")->required();
  featurize->add_option("--specs", specs_path, "DIMM spec table")->required();

  auto* train_cmd = app.add_subcommand("train", "dataset -> model");
  add_common(train_cmd, args);
  train_cmd->add_option("--dataset", dataset_path, "labeled dataset CSV")->required();

  auto* evaluate_cmd = app.add_subcommand("evaluate", "model + logs -> metrics");
  add_common(evaluate_cmd, args);
  evaluate_cmd->add_option("--model", model_path, "model file");
  evaluate_cmd->add_option("--events", events_path, "event log")->required();
  evaluate_cmd->add_option("--specs", specs_path, "DIMM spec table")->required();
  evaluate_cmd->add_flag("--baseline", baseline, "also evaluate the R1>0 rule baseline");

  auto* analyze = app.add_subcommand("analyze", "relative-UE-rate tables and indicator sweeps");
  add_common(analyze, args);
  analyze->add_option("--events", events_path, "event log")->required();
  analyze->add_option("--specs", specs_path, "DIMM spec table")->required();

  auto* pipeline = app.add_subcommand("pipeline", "gen -> featurize -> train -> evaluate");
  add_common(pipeline, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(args);
    if (featurize->parsed()) return cmd_featurize(args, events_path, specs_path);
    if (train_cmd->parsed()) return cmd_train(args, dataset_path);
    if (evaluate_cmd->parsed())
      return cmd_evaluate(args, model_path, events_path, specs_path, baseline);
    if (analyze->parsed()) return cmd_analyze(args, events_path, specs_path);
    if (pipeline->parsed()) return cmd_pipeline(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
