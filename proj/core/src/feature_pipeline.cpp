#include "memfp/feature_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "memfp/model.hpp"

namespace memfp {

void WindowConfig::validate() const {
  if (observation_window <= 0 || prediction_window <= 0 || lead_time <= 0 ||
      prediction_interval <= 0 || aggregation_window <= 0 || labeling_interval <= 0)
    throw ConfigError("window config: all durations must be positive");
  if (lead_time > 3 * kHour) throw ConfigError("window config: lead_time exceeds 3h");
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    // Static
    n.insert(n.end(), {"server_age_days", "manufacturer", "data_width", "frequency_mhz",
                       "process", "capacity_gb"});
    // CE error rate
    n.insert(n.end(), {"ce_cnt_1h", "ce_cnt_6h", "ce_cnt_24h", "ce_cnt_obs",
                       "secs_since_first_ce", "secs_since_last_ce"});
    // DQ-beat error bits: per-event stats aggregated over 24h
    const char* fields[] = {"error_bits", "adjacent_bits", "error_dqs",
                            "error_beats", "dq_interval", "beat_interval"};
    const char* aggs[] = {"sum", "max", "min", "avg", "std"};
    for (const char* f : fields)
      for (const char* a : aggs) n.push_back(std::string(f) + "_" + a + "_24h");
    // Window-union bit features
    n.insert(n.end(), {"error_dq_counts_24h", "error_beat_cnt_24h", "max_adjacent_bits_24h",
                       "min_dq_interval", "max_beat_interval"});
    // Error-bit pattern indicators
    n.insert(n.end(), {"risky_ce_cnt", "risky_pattern_cnt", "max_risky_pattern_cnt"});
    // Fault counts
    n.insert(n.end(), {"fault_cell", "fault_row", "fault_column", "fault_bank", "fault_device",
                       "fault_rank"});
    // Memory events
    n.insert(n.end(), {"ce_storm", "ce_overflow", "ce_storm_suppressed"});
    return n;
  }();
  return names;
}

std::uint64_t manifest_hash_of(const std::vector<std::string>& names) {
  std::uint64_t h = fnv1a("memfp-manifest-v1");
  for (const auto& n : names) {
    h = fnv1a(n, h);
    h = fnv1a("|", h);
  }
  return h;
}

std::uint64_t feature_manifest_hash() { return manifest_hash_of(feature_names()); }

std::uint64_t Dataset::manifest_hash() const { return manifest_hash_of(feature_names); }

int manufacturer_code(const std::string& m) {
  if (m == "A") return 0;
  if (m == "B") return 1;
  if (m == "C") return 2;
  if (m == "D") return 3;
  return 4;
}

int process_code(const std::string& p) { return p == "p20nm" ? 0 : 1; }

DimmFeatureContext::DimmFeatureContext(const DimmSpec& spec, std::vector<CEEvent> ce_events,
                                       const RuleSet& rules, const FaultThresholds& thresholds,
                                       const StormConfig& storm, Adjacency adjacency,
                                       Duration fault_window)
    : spec_(spec),
      events_(std::move(ce_events)),
      thresholds_(thresholds),
      storm_(storm),
      fault_window_(fault_window),
      dq_width_(dq_width_of(spec.data_width)) {
  const std::size_t n = events_.size();
  bit_stats_.resize(n);
  raw_bits_.resize(n, 0);
  matched_rule_cnt_.resize(n, 0);
  storm_flag_.resize(n, 0);
  storm_episode_prefix_.resize(n, 0);
  fault_prefix_.resize(n);

  FaultAccumulator acc(thresholds_);
  std::size_t storm_lo = 0;
  int episodes = 0;
  Timestamp last_flagged = std::numeric_limits<Timestamp>::min();
  for (std::size_t i = 0; i < n; ++i) {
    const CEEvent& ev = events_[i];
    // Bitmaps whose width disagrees with the DIMM spec carry no bit info.
    if (ev.bitmap && ev.bitmap->dq_width() == dq_width_) {
      bit_stats_[i] = spatial_features(*ev.bitmap, adjacency);
      raw_bits_[i] = ev.bitmap->raw();
      int cnt = 0;
      for (const auto& r : rules)
        if (r.matches(*ev.bitmap, adjacency)) ++cnt;
      matched_rule_cnt_[i] = cnt;
    }
    if (fault_window_ == 0) {
      acc.add(ev.address);
      fault_prefix_[i] = acc.counts();
    }
    while (events_[storm_lo].ts <= ev.ts - storm_.storm_window) ++storm_lo;
    if (static_cast<int>(i - storm_lo + 1) >= storm_.storm_ces) {
      storm_flag_[i] = 1;
      if (last_flagged <= ev.ts - storm_.storm_window) ++episodes;
      last_flagged = ev.ts;
    }
    storm_episode_prefix_[i] = episodes;
  }
}

FeatureVector DimmFeatureContext::build(Timestamp t, const WindowConfig& cfg) const {
  FeatureVector out;
  out.dimm_id = spec_.dimm_id;
  out.ts = t;
  auto& v = out.values;
  v.reserve(feature_names().size());

  // Static
  v.push_back(spec_.server_age_days);
  v.push_back(manufacturer_code(spec_.manufacturer));
  v.push_back(dq_width_);
  v.push_back(spec_.frequency_mhz);
  v.push_back(process_code(spec_.process_class));
  v.push_back(spec_.capacity_gb);

  auto lower = [&](Timestamp after) {  // first index with ts > after
    return static_cast<std::size_t>(
        std::upper_bound(events_.begin(), events_.end(), after,
                         [](Timestamp x, const CEEvent& e) { return x < e.ts; }) -
        events_.begin());
  };
  const std::size_t end = lower(t);  // first index with ts > t
  const std::size_t obs_lo = lower(t - cfg.observation_window);
  const std::size_t agg_lo = std::max(obs_lo, lower(t - cfg.aggregation_window));

  // CE error rate
  v.push_back(static_cast<double>(end - std::max(obs_lo, lower(t - kHour))));
  v.push_back(static_cast<double>(end - std::max(obs_lo, lower(t - 6 * kHour))));
  v.push_back(static_cast<double>(end - std::max(obs_lo, lower(t - 24 * kHour))));
  v.push_back(static_cast<double>(end - obs_lo));
  if (end > obs_lo) {
    v.push_back(static_cast<double>(t - events_[obs_lo].ts));
    v.push_back(static_cast<double>(t - events_[end - 1].ts));
  } else {
    v.push_back(0);
    v.push_back(0);
  }

  // Per-event bit stats aggregated over the 24h window
  struct Agg {
    double sum = 0, mx = 0, mn = 0, sumsq = 0;
  };
  Agg agg[6];
  std::size_t nbits = 0;
  std::uint64_t union_bits = 0;
  for (std::size_t i = agg_lo; i < end; ++i) {
    if (raw_bits_[i] == 0) continue;
    const SpatialBitStats& st = bit_stats_[i];
    const int f[6] = {st.total_bits, st.adjacent_pairs, st.dq_count,
                      st.beat_count, st.dq_interval, st.beat_interval};
    for (int k = 0; k < 6; ++k) {
      if (nbits == 0) {
        agg[k].mx = agg[k].mn = f[k];
      } else {
        agg[k].mx = std::max<double>(agg[k].mx, f[k]);
        agg[k].mn = std::min<double>(agg[k].mn, f[k]);
      }
      agg[k].sum += f[k];
      agg[k].sumsq += static_cast<double>(f[k]) * f[k];
    }
    union_bits |= raw_bits_[i];
    ++nbits;
  }
  for (int k = 0; k < 6; ++k) {
    if (nbits == 0) {
      v.insert(v.end(), {0, 0, 0, 0, 0});
      continue;
    }
    const double mean = agg[k].sum / static_cast<double>(nbits);
    double var = agg[k].sumsq / static_cast<double>(nbits) - mean * mean;
    if (var < 0) var = 0;  // rounding
    v.push_back(agg[k].sum);
    v.push_back(agg[k].mx);
    v.push_back(agg[k].mn);
    v.push_back(mean);
    v.push_back(nbits == 1 ? 0.0 : std::sqrt(var));
  }

  // Union features over the merged 24h bitmap
  if (union_bits != 0) {
    const SpatialBitStats u = spatial_features(ErrorBitmap(dq_width_, union_bits));
    v.push_back(u.dq_count);
    v.push_back(u.beat_count);
    v.push_back(u.adjacent_pairs);
    v.push_back(agg[4].mn);  // min per-event DQ interval
    v.push_back(agg[5].mx);  // max per-event beat interval
  } else {
    v.insert(v.end(), {0, 0, 0, 0, 0});
  }

  // Risky pattern indicators over the 24h window
  long long r1 = 0, r2 = 0, r3 = 0;
  for (std::size_t i = agg_lo; i < end; ++i) {
    const int cnt = matched_rule_cnt_[i];
    if (cnt > 0) {
      ++r1;
      r2 += cnt;
      r3 = std::max<long long>(r3, cnt);
    }
  }
  v.push_back(static_cast<double>(r1));
  v.push_back(static_cast<double>(r2));
  v.push_back(static_cast<double>(r3));

  // Fault counts (full history up to t unless a finite window is set)
  FaultCounts fc;
  if (fault_window_ == 0) {
    if (end > 0) fc = fault_prefix_[end - 1];
  } else {
    fc = counts_of(classify_faults(std::span<const CEEvent>(events_.data(), end), thresholds_, t,
                                   fault_window_));
  }
  v.push_back(static_cast<double>(fc.cell));
  v.push_back(static_cast<double>(fc.row));
  v.push_back(static_cast<double>(fc.column));
  v.push_back(static_cast<double>(fc.bank));
  v.push_back(static_cast<double>(fc.device));
  v.push_back(static_cast<double>(fc.rank));

  // Memory events
  bool storm_in_window = false;
  for (std::size_t i = obs_lo; i < end && !storm_in_window; ++i)
    if (storm_flag_[i]) storm_in_window = true;
  v.push_back(storm_in_window ? 1.0 : 0.0);
  v.push_back(static_cast<long long>(end) >= storm_.overflow_threshold ? 1.0 : 0.0);
  v.push_back(end > 0 && storm_episode_prefix_[end - 1] >= storm_.storm_suppress_count ? 1.0
                                                                                       : 0.0);
  return out;
}

FeatureVector build_feature_vector(const DimmSpec& spec, std::span<const CEEvent> ce_history,
                                   Timestamp t, const WindowConfig& cfg, const RuleSet& rules,
                                   const FaultThresholds& thresholds, const StormConfig& storm) {
  DimmFeatureContext ctx(spec, std::vector<CEEvent>(ce_history.begin(), ce_history.end()), rules,
                         thresholds, storm);
  return ctx.build(t, cfg);
}

std::vector<LabeledSample> label_samples(const std::vector<FeatureVector>& vectors,
                                         const std::vector<UEEvent>& ue_events, Duration t_i) {
  if (t_i <= 0) throw ConfigError("labeling interval t_i must be positive");
  std::map<std::string, Timestamp> first_ue;
  for (const auto& ue : ue_events) {
    auto [it, inserted] = first_ue.emplace(ue.dimm_id, ue.ts);
    if (!inserted) it->second = std::min(it->second, ue.ts);
  }
  std::vector<LabeledSample> out;
  out.reserve(vectors.size());
  for (const auto& vec : vectors) {
    auto it = first_ue.find(vec.dimm_id);
    if (it == first_ue.end()) {
      out.push_back({vec, false});
      continue;
    }
    const Timestamp u = it->second;
    if (vec.ts >= u - t_i && vec.ts < u) out.push_back({vec, true});
    // Earlier or later samples of a UE DIMM are excluded outright.
  }
  return out;
}

Dataset oversample(Dataset dataset, double target_ratio, std::uint64_t seed) {
  std::vector<std::size_t> pos;
  std::size_t neg = 0;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    if (dataset.samples[i].positive) pos.push_back(i);
    else ++neg;
  }
  if (pos.empty()) throw ConfigError("oversample: no positive samples, dataset is unlearnable");
  const auto target =
      static_cast<std::size_t>(std::ceil(target_ratio * static_cast<double>(neg)));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pos.size() - 1);
  while (pos.size() < target) {
    dataset.samples.push_back(dataset.samples[pos[pick(rng)]]);
    pos.push_back(dataset.samples.size() - 1);
  }
  return dataset;
}

namespace {

DataMatrix to_matrix(const Dataset& d) {
  DataMatrix m;
  m.rows = d.samples.size();
  m.cols = d.feature_names.size();
  m.x.reserve(m.rows * m.cols);
  m.y.reserve(m.rows);
  for (const auto& s : d.samples) {
    m.x.insert(m.x.end(), s.vec.values.begin(), s.vec.values.end());
    m.y.push_back(s.positive ? 1 : 0);
  }
  return m;
}

std::vector<std::string> rank_by_score(const std::vector<std::string>& names,
                                       const std::vector<double>& score, std::size_t k) {
  std::vector<std::size_t> order(names.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return names[a] < names[b];
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(names[order[i]]);
  return out;
}

}  // namespace

std::vector<std::string> select_features(const Dataset& dataset, SelectionMethod method,
                                         std::size_t k, std::uint64_t seed) {
  const std::size_t f = dataset.feature_names.size();
  if (k > f) throw ConfigError("select_features: k exceeds feature count");
  std::size_t npos = 0;
  for (const auto& s : dataset.samples)
    if (s.positive) ++npos;
  if (npos < 2 || dataset.samples.size() - npos < 2)
    throw ConfigError("select_features: need >=2 samples per class");

  if (method == SelectionMethod::pearson) {
    const std::size_t n = dataset.samples.size();
    const double ybar = static_cast<double>(npos) / static_cast<double>(n);
    std::vector<double> score(f);
    for (std::size_t j = 0; j < f; ++j) {
      double sx = 0, sxx = 0, sxy = 0;
      for (const auto& s : dataset.samples) {
        const double x = s.vec.values[j];
        sx += x;
        sxx += x * x;
        sxy += x * (s.positive ? 1.0 : 0.0);
      }
      const double xbar = sx / static_cast<double>(n);
      const double varx = sxx / static_cast<double>(n) - xbar * xbar;
      const double vary = ybar * (1 - ybar);
      if (varx <= 0 || vary <= 0) {
        score[j] = -1;  // constant column ranks last, reported correlation 0
        continue;
      }
      const double cov = sxy / static_cast<double>(n) - xbar * ybar;
      score[j] = std::fabs(cov / std::sqrt(varx * vary));
    }
    return rank_by_score(dataset.feature_names, score, k);
  }

  const DataMatrix m = to_matrix(dataset);
  Hyperparams hp;
  hp.n_trees = 50;
  hp.seed = seed;
  if (method == SelectionMethod::impurity) {
    TreeEnsemble forest = train(m, dataset.feature_names, hp, EnsembleMode::forest);
    return rank_by_score(dataset.feature_names, forest.feature_gain(), k);
  }

  // RFE: retrain, drop the weakest feature (zeroing it out) until k remain.
  std::vector<char> active(f, 1);
  std::size_t remaining = f;
  DataMatrix work = m;
  std::vector<double> final_gain;
  while (true) {
    TreeEnsemble model = train(work, dataset.feature_names, hp, EnsembleMode::boosted);
    const auto& gain = model.feature_gain();
    if (remaining == k) {
      final_gain = gain;
      break;
    }
    std::size_t worst = f;
    for (std::size_t j = 0; j < f; ++j) {
      if (!active[j]) continue;
      if (worst == f || gain[j] < gain[worst] ||
          (gain[j] == gain[worst] && dataset.feature_names[j] > dataset.feature_names[worst]))
        worst = j;
    }
    active[worst] = 0;
    --remaining;
    for (std::size_t i = 0; i < work.rows; ++i) work.x[i * f + worst] = 0.0;
  }
  std::vector<double> score(f, -1);
  for (std::size_t j = 0; j < f; ++j)
    if (active[j]) score[j] = final_gain[j];
  return rank_by_score(dataset.feature_names, score, k);
}

void save_dataset(const Dataset& dataset, std::ostream& out, const std::string& meta) {
  if (!meta.empty()) out << "# " << meta << '\n';
  out << "dimm_id,ts";
  for (const auto& n : dataset.feature_names) out << ',' << n;
  out << ",label\n";
  for (const auto& s : dataset.samples) {
    out << s.vec.dimm_id << ',' << s.vec.ts;
    for (double x : s.vec.values) out << ',' << format_double(x);
    out << ',' << (s.positive ? 1 : 0) << '\n';
  }
}

void save_dataset_file(const Dataset& dataset, const std::string& path, const std::string& meta) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset: " + path);
  save_dataset(dataset, out, meta);
  std::ofstream mf(path + ".manifest");
  if (!mf) throw IoError("cannot write manifest: " + path + ".manifest");
  mf << "# manifest_hash=" << hash_hex(dataset.manifest_hash()) << '\n';
  for (const auto& n : dataset.feature_names) mf << n << '\n';
}

Dataset load_dataset(std::istream& in) {
  Dataset d;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto fields = split(line, ',');
    if (!have_header) {
      if (fields.size() < 3 || fields[0] != "dimm_id" || fields[1] != "ts" ||
          fields.back() != "label")
        throw IoError("dataset: bad header");
      d.feature_names.assign(fields.begin() + 2, fields.end() - 1);
      have_header = true;
      continue;
    }
    if (fields.size() != d.feature_names.size() + 3)
      throw IoError("dataset: row width mismatch");
    LabeledSample s;
    s.vec.dimm_id = fields[0];
    s.vec.ts = std::stoll(fields[1]);
    for (std::size_t j = 0; j < d.feature_names.size(); ++j)
      s.vec.values.push_back(std::stod(fields[2 + j]));
    s.positive = fields.back() == "1";
    d.samples.push_back(std::move(s));
  }
  return d;
}

Dataset load_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset: " + path);
  return load_dataset(in);
}

}  // namespace memfp
