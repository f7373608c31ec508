#include "memfp/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace memfp {

using nlohmann::json;

namespace {

json to_json(const RunConfig& c) {
  json j;
  j["window"] = {{"observation", format_duration(c.window.observation_window)},
                 {"prediction", format_duration(c.window.prediction_window)},
                 {"lead", format_duration(c.window.lead_time)},
                 {"prediction_interval", format_duration(c.window.prediction_interval)},
                 {"aggregation", format_duration(c.window.aggregation_window)},
                 {"t_i", format_duration(c.window.labeling_interval)}};
  j["thresholds"] = {{"cell", c.thresholds.cell},     {"row", c.thresholds.row},
                     {"column", c.thresholds.column}, {"bank", c.thresholds.bank},
                     {"device", c.thresholds.device}, {"rank", c.thresholds.rank}};
  j["storm"] = {{"storm_ces", c.storm.storm_ces},
                {"storm_window", format_duration(c.storm.storm_window)},
                {"overflow_threshold", c.storm.overflow_threshold},
                {"storm_suppress_count", c.storm.storm_suppress_count}};
  j["hyperparams"] = {{"n_trees", c.hyperparams.n_trees},
                      {"max_depth", c.hyperparams.max_depth},
                      {"learning_rate", c.hyperparams.learning_rate},
                      {"min_samples_leaf", c.hyperparams.min_samples_leaf},
                      {"feature_subsample", c.hyperparams.feature_subsample}};
  j["mode"] = c.mode == EnsembleMode::boosted ? "boosted" : "forest";
  const auto& g = c.generator;
  json weights, rates, escal, risky;
  for (std::size_t i = 0; i < kFaultTypes; ++i) {
    const char* name = fault_type_name(static_cast<FaultType>(i));
    weights[name] = g.mixture_weights[i];
    rates[name] = g.ce_rate_per_day[i];
    escal[name] = g.escalation_probability[i];
    risky[name] = g.risky_bitmap_probability[i];
  }
  j["generator"] = {{"n_dimms", g.n_dimms},
                    {"duration_days", g.duration_days},
                    {"start_ts", g.start_ts},
                    {"fault_probability", g.fault_probability},
                    {"mixture_weights", weights},
                    {"ce_rate_per_day", rates},
                    {"escalation_probability", escal},
                    {"risky_bitmap_probability", risky},
                    {"escalation_delay_min_days", g.escalation_delay_min_days},
                    {"escalation_delay_max_days", g.escalation_delay_max_days},
                    {"ramp_window", format_duration(g.ramp_window)},
                    {"ramp_risky_probability", g.ramp_risky_probability},
                    {"ramp_rate_multiplier", g.ramp_rate_multiplier},
                    {"bitmap_omission_probability", g.bitmap_omission_probability}};
  j["rules_path"] = c.rules_path;
  j["adjacency"] = c.adjacency == Adjacency::FourNeighbor ? "four"
                   : c.adjacency == Adjacency::HorizontalOnly ? "horizontal"
                                                              : "vertical";
  j["threshold"] = c.threshold;
  j["y_c"] = c.y_c;
  j["oversample_ratio"] = c.oversample_ratio;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  return j;
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigError("unknown config key: " + where + key);
}

template <typename T>
void opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j[key].template get<T>();
}

void opt_duration(const json& j, const char* key, Duration& out) {
  if (j.contains(key)) out = parse_duration(j[key].template get<std::string>());
}

}  // namespace

void RunConfig::validate() const {
  window.validate();
  hyperparams.validate();
  generator.validate();
  if (threshold < 0 || threshold > 1) throw ConfigError("threshold must be in [0, 1]");
  if (y_c < 0 || y_c > 1) throw ConfigError("y_c must be in [0, 1]");
  if (oversample_ratio <= 0) throw ConfigError("oversample_ratio must be positive");
  if (thresholds.cell < 1 || thresholds.row < 1 || thresholds.column < 1 ||
      thresholds.bank < 1 || thresholds.device < 1 || thresholds.rank < 1)
    throw ConfigError("fault thresholds must be >= 1");
}

std::uint64_t RunConfig::hash() const {
  std::ostringstream os;
  save_run_config(*this, os);
  return fnv1a(os.str());
}

std::string RunConfig::meta_line() const {
  return "seed=" + std::to_string(seed) + " config_hash=" + hash_hex(hash());
}

void save_run_config(const RunConfig& cfg, std::ostream& out) {
  out << to_json(cfg).dump(2) << '\n';
}

RunConfig load_run_config(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  RunConfig c;
  reject_unknown(j, {"window", "thresholds", "storm", "hyperparams", "mode", "generator",
                     "rules_path", "adjacency", "threshold", "y_c", "oversample_ratio", "seed",
                     "threads"},
                 "");
  if (j.contains("window")) {
    const json& w = j["window"];
    reject_unknown(w, {"observation", "prediction", "lead", "prediction_interval", "aggregation",
                       "t_i"},
                   "window.");
    opt_duration(w, "observation", c.window.observation_window);
    opt_duration(w, "prediction", c.window.prediction_window);
    opt_duration(w, "lead", c.window.lead_time);
    opt_duration(w, "prediction_interval", c.window.prediction_interval);
    opt_duration(w, "aggregation", c.window.aggregation_window);
    opt_duration(w, "t_i", c.window.labeling_interval);
  }
  if (j.contains("thresholds")) {
    const json& t = j["thresholds"];
    reject_unknown(t, {"cell", "row", "column", "bank", "device", "rank"}, "thresholds.");
    opt(t, "cell", c.thresholds.cell);
    opt(t, "row", c.thresholds.row);
    opt(t, "column", c.thresholds.column);
    opt(t, "bank", c.thresholds.bank);
    opt(t, "device", c.thresholds.device);
    opt(t, "rank", c.thresholds.rank);
  }
  if (j.contains("storm")) {
    const json& s = j["storm"];
    reject_unknown(s, {"storm_ces", "storm_window", "overflow_threshold", "storm_suppress_count"},
                   "storm.");
    opt(s, "storm_ces", c.storm.storm_ces);
    opt_duration(s, "storm_window", c.storm.storm_window);
    opt(s, "overflow_threshold", c.storm.overflow_threshold);
    opt(s, "storm_suppress_count", c.storm.storm_suppress_count);
  }
  if (j.contains("hyperparams")) {
    const json& h = j["hyperparams"];
    reject_unknown(h, {"n_trees", "max_depth", "learning_rate", "min_samples_leaf",
                       "feature_subsample"},
                   "hyperparams.");
    opt(h, "n_trees", c.hyperparams.n_trees);
    opt(h, "max_depth", c.hyperparams.max_depth);
    opt(h, "learning_rate", c.hyperparams.learning_rate);
    opt(h, "min_samples_leaf", c.hyperparams.min_samples_leaf);
    opt(h, "feature_subsample", c.hyperparams.feature_subsample);
  }
  if (j.contains("mode")) {
    const std::string m = j["mode"].get<std::string>();
    if (m == "boosted") c.mode = EnsembleMode::boosted;
    else if (m == "forest") c.mode = EnsembleMode::forest;
    else throw ConfigError("unknown mode: " + m);
  }
  if (j.contains("generator")) {
    const json& g = j["generator"];
    reject_unknown(g, {"n_dimms", "duration_days", "start_ts", "fault_probability",
                       "mixture_weights", "ce_rate_per_day", "escalation_probability",
                       "risky_bitmap_probability", "escalation_delay_min_days",
                       "escalation_delay_max_days", "ramp_window", "ramp_risky_probability",
                       "ramp_rate_multiplier", "bitmap_omission_probability"},
                   "generator.");
    opt(g, "n_dimms", c.generator.n_dimms);
    opt(g, "duration_days", c.generator.duration_days);
    opt(g, "start_ts", c.generator.start_ts);
    opt(g, "fault_probability", c.generator.fault_probability);
    auto load_array = [&](const char* key, std::array<double, kFaultTypes>& out) {
      if (!g.contains(key)) return;
      for (std::size_t i = 0; i < kFaultTypes; ++i) {
        const char* name = fault_type_name(static_cast<FaultType>(i));
        if (g[key].contains(name)) out[i] = g[key][name].get<double>();
      }
      reject_unknown(g[key],
                     {"transient_cell", "stuck_cell", "row", "column", "bank", "device"},
                     std::string("generator.") + key + ".");
    };
    load_array("mixture_weights", c.generator.mixture_weights);
    load_array("ce_rate_per_day", c.generator.ce_rate_per_day);
    load_array("escalation_probability", c.generator.escalation_probability);
    load_array("risky_bitmap_probability", c.generator.risky_bitmap_probability);
    opt(g, "escalation_delay_min_days", c.generator.escalation_delay_min_days);
    opt(g, "escalation_delay_max_days", c.generator.escalation_delay_max_days);
    opt_duration(g, "ramp_window", c.generator.ramp_window);
    opt(g, "ramp_risky_probability", c.generator.ramp_risky_probability);
    opt(g, "ramp_rate_multiplier", c.generator.ramp_rate_multiplier);
    opt(g, "bitmap_omission_probability", c.generator.bitmap_omission_probability);
  }
  opt(j, "rules_path", c.rules_path);
  if (j.contains("adjacency")) {
    const std::string a = j["adjacency"].get<std::string>();
    if (a == "four") c.adjacency = Adjacency::FourNeighbor;
    else if (a == "horizontal") c.adjacency = Adjacency::HorizontalOnly;
    else if (a == "vertical") c.adjacency = Adjacency::VerticalOnly;
    else throw ConfigError("unknown adjacency: " + a);
  }
  opt(j, "threshold", c.threshold);
  opt(j, "y_c", c.y_c);
  opt(j, "oversample_ratio", c.oversample_ratio);
  opt(j, "seed", c.seed);
  opt(j, "threads", c.threads);
  c.generator.seed = c.seed;
  c.hyperparams.seed = c.seed;
  return c;
}

RunConfig load_run_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  return load_run_config(in);
}

}  // namespace memfp
