#include "memfp/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "memfp/util.hpp"

namespace memfp {

using nlohmann::json;

const char* fault_type_name(FaultType t) {
  switch (t) {
    case FaultType::transient_cell: return "transient_cell";
    case FaultType::stuck_cell: return "stuck_cell";
    case FaultType::row: return "row";
    case FaultType::column: return "column";
    case FaultType::bank: return "bank";
    case FaultType::device: return "device";
  }
  return "?";
}

FaultType fault_type_from_name(const std::string& name) {
  for (std::size_t i = 0; i < kFaultTypes; ++i)
    if (name == fault_type_name(static_cast<FaultType>(i))) return static_cast<FaultType>(i);
  throw ConfigError("unknown fault type: " + name);
}

void GeneratorConfig::validate() const {
  if (n_dimms == 0) throw ConfigError("generator: n_dimms must be positive");
  if (duration_days <= 0) throw ConfigError("generator: zero duration");
  const double wsum = std::accumulate(mixture_weights.begin(), mixture_weights.end(), 0.0);
  if (std::fabs(wsum - 1.0) > 1e-9) throw ConfigError("generator: mixture weights must sum to 1");
  for (double r : ce_rate_per_day)
    if (r <= 0) throw ConfigError("generator: CE rates must be positive");
  for (double p : escalation_probability)
    if (p < 0 || p > 1) throw ConfigError("generator: escalation probability out of [0, 1]");
  for (double p : risky_bitmap_probability)
    if (p < 0 || p > 1) throw ConfigError("generator: risky bitmap probability out of [0, 1]");
  if (fault_probability < 0 || fault_probability > 1)
    throw ConfigError("generator: fault_probability out of [0, 1]");
  if (escalation_delay_min_days <= 0 || escalation_delay_max_days < escalation_delay_min_days)
    throw ConfigError("generator: bad escalation delay bounds");
  if (ramp_rate_multiplier < 1) throw ConfigError("generator: ramp_rate_multiplier must be >= 1");
}

namespace {

constexpr int kMaxDevice = 18;
constexpr int kMaxBankGroup = 4;
constexpr int kMaxBank = 4;
constexpr int kMaxRow = 65536;
constexpr int kMaxColumn = 1024;

struct DimmRng {
  std::mt19937_64 rng;
  explicit DimmRng(std::uint64_t seed) : rng(seed) {}
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
  int below(int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); }
};

DimmSpec sample_spec(const std::string& id, DimmRng& r) {
  DimmSpec s;
  s.dimm_id = id;
  const char* manufacturers[] = {"A", "B", "C", "D", "other"};
  const double mweights[] = {0.30, 0.25, 0.20, 0.15, 0.10};
  double u = r.uniform(), acc = 0;
  s.manufacturer = "other";
  for (int i = 0; i < 5; ++i) {
    acc += mweights[i];
    if (u < acc) {
      s.manufacturer = manufacturers[i];
      break;
    }
  }
  const int capacities[] = {16, 32, 64};
  s.capacity_gb = capacities[r.below(3)];
  s.data_width = r.uniform() < 0.7 ? DataWidth::x4 : DataWidth::x8;
  const int freqs[] = {2400, 2666, 2933, 3200};
  s.frequency_mhz = freqs[r.below(4)];
  s.process_class = r.uniform() < 0.4 ? "p20nm" : "other";
  s.server_age_days = 100 + r.below(1900);
  return s;
}

MemoryAddress random_address(DimmRng& r) {
  MemoryAddress a;
  a.socket = r.below(2);
  a.channel = r.below(6);
  a.slot = r.below(2);
  a.rank = r.below(2);
  a.device = r.below(kMaxDevice);
  a.bank_group = r.below(kMaxBankGroup);
  a.bank = r.below(kMaxBank);
  a.row = r.below(kMaxRow);
  a.column = r.below(kMaxColumn);
  return a;
}

/// Distinct draws from [0, n) in a random order, wrapping when exhausted.
class DistinctPool {
 public:
  DistinctPool(int n, DimmRng& r) : values_(n) {
    std::iota(values_.begin(), values_.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(values_[i], values_[r.below(i + 1)]);
  }
  int next() { return values_[pos_++ % values_.size()]; }

 private:
  std::vector<int> values_;
  std::size_t pos_ = 0;
};

std::uint64_t risky_bits(int w, DimmRng& r) {
  // Spans both beat halves and touches >=3 DQs.
  std::uint64_t bits = 0;
  int dqs[3];
  dqs[0] = r.below(w);
  do { dqs[1] = r.below(w); } while (dqs[1] == dqs[0]);
  do { dqs[2] = r.below(w); } while (dqs[2] == dqs[0] || dqs[2] == dqs[1]);
  const int beats[3] = {r.below(4), 4 + r.below(4), r.below(8)};
  for (int i = 0; i < 3; ++i) bits |= 1ull << (beats[i] * w + dqs[i]);
  const int extra = r.below(3);
  for (int i = 0; i < extra; ++i) bits |= 1ull << (r.below(8) * w + r.below(w));
  return bits;
}

std::uint64_t benign_bits(int w, DimmRng& r) {
  // 1-2 bits confined to one beat half and at most 2 DQs.
  const int half = r.below(2) * 4;
  const int dq = r.below(w);
  const int beat = half + r.below(4);
  std::uint64_t bits = 1ull << (beat * w + dq);
  if (r.uniform() < 0.4) {
    const int dq2 = r.below(w);
    const int beat2 = half + r.below(4);
    bits |= 1ull << (beat2 * w + dq2);
  }
  return bits;
}

struct AddressPlan {
  FaultType type;
  MemoryAddress anchor;
  // row/column faults draw the varying coordinate without repeats
  std::vector<DistinctPool> pools;
  std::vector<MemoryAddress> hot_rows, hot_cols;  // bank/device faults
  std::size_t counter = 0;

  MemoryAddress next(DimmRng& r) {
    MemoryAddress a = anchor;
    switch (type) {
      case FaultType::transient_cell:
        return random_address(r);
      case FaultType::stuck_cell:
        return a;
      case FaultType::row:
        a.column = pools[0].next();
        return a;
      case FaultType::column:
        a.row = pools[0].next();
        return a;
      case FaultType::bank:
      case FaultType::device: {
        if (type == FaultType::device) {
          // rotate across 4 banks of the device; two consecutive hits per
          // bank so each one sees both the row-style and column-style hit
          const std::size_t b = counter / 2 % 4;
          a.bank_group = static_cast<int>(b % kMaxBankGroup);
          a.bank = static_cast<int>(b / kMaxBankGroup);
        }
        // alternate hot-row hits (fresh column) and hot-column hits (fresh row)
        if (counter++ % 2 == 0) {
          a.row = hot_rows[r.below(static_cast<int>(hot_rows.size()))].row;
          a.column = pools[0].next();
        } else {
          a.column = hot_cols[r.below(static_cast<int>(hot_cols.size()))].column;
          a.row = pools[1].next();
        }
        return a;
      }
    }
    return a;
  }
};

AddressPlan make_plan(FaultType type, DimmRng& r) {
  AddressPlan plan;
  plan.type = type;
  plan.anchor = random_address(r);
  switch (type) {
    case FaultType::row:
      plan.pools.emplace_back(kMaxColumn, r);
      break;
    case FaultType::column:
      plan.pools.emplace_back(kMaxRow, r);
      break;
    case FaultType::bank:
    case FaultType::device:
      plan.pools.emplace_back(kMaxColumn, r);
      plan.pools.emplace_back(kMaxRow, r);
      for (int i = 0; i < 6; ++i) {
        MemoryAddress h = plan.anchor;
        h.row = r.below(kMaxRow);
        plan.hot_rows.push_back(h);
        h = plan.anchor;
        h.column = r.below(kMaxColumn);
        plan.hot_cols.push_back(h);
      }
      break;
    default:
      break;
  }
  return plan;
}

}  // namespace

SyntheticFleet generate(const GeneratorConfig& cfg) {
  cfg.validate();
  SyntheticFleet fleet;

  const Timestamp end_ts = cfg.start_ts + static_cast<Timestamp>(cfg.duration_days) * kDay;
  const int id_width = static_cast<int>(std::to_string(cfg.n_dimms).size());

  for (std::size_t d = 0; d < cfg.n_dimms; ++d) {
    std::string id = std::to_string(d + 1);
    id.insert(0, std::string(static_cast<std::size_t>(id_width) - id.size() + 1, '0'));
    id = "D" + id;

    DimmRng r(fnv1a(id, cfg.seed ^ 0x9e3779b97f4a7c15ULL));
    fleet.specs.emplace(id, sample_spec(id, r));

    if (r.uniform() >= cfg.fault_probability) continue;

    const auto& spec = fleet.specs.at(id);
    const int w = dq_width_of(spec.data_width);

    double u = r.uniform(), acc = 0;
    FaultType type = FaultType::transient_cell;
    for (std::size_t i = 0; i < kFaultTypes; ++i) {
      acc += cfg.mixture_weights[i];
      if (u < acc) {
        type = static_cast<FaultType>(i);
        break;
      }
    }
    const auto ti = static_cast<std::size_t>(type);

    InjectedFault fault;
    fault.dimm_id = id;
    fault.type = type;
    fault.onset = cfg.start_ts + static_cast<Timestamp>(
        r.uniform() * 0.7 * static_cast<double>(cfg.duration_days) * kDay);

    if (r.uniform() < cfg.escalation_probability[ti]) {
      fault.escalated = true;
      const double delay_days =
          cfg.escalation_delay_min_days +
          r.uniform() * (cfg.escalation_delay_max_days - cfg.escalation_delay_min_days);
      fault.scheduled_ue = fault.onset + static_cast<Timestamp>(delay_days * kDay);
      if (fault.scheduled_ue <= end_ts) fault.observed_ue = fault.scheduled_ue;
    }

    AddressPlan plan = make_plan(type, r);
    fault.anchor = plan.anchor;

    const Timestamp stream_end = fault.observed_ue ? fault.observed_ue : end_ts;
    const double rate = cfg.ce_rate_per_day[ti] / static_cast<double>(kDay);
    const double ramp_start = fault.escalated
        ? static_cast<double>(fault.scheduled_ue - cfg.ramp_window)
        : std::numeric_limits<double>::infinity();
    double t = static_cast<double>(fault.onset);
    while (true) {
      const double cur_rate = t >= ramp_start ? rate * cfg.ramp_rate_multiplier : rate;
      t += std::exponential_distribution<double>(cur_rate)(r.rng);
      const auto ts = static_cast<Timestamp>(t);
      if (ts >= stream_end) break;
      CEEvent ev;
      ev.ts = ts;
      ev.dimm_id = id;
      ev.address = plan.next(r);
      if (r.uniform() >= cfg.bitmap_omission_probability) {
        const bool in_ramp = fault.escalated && fault.scheduled_ue - ts <= cfg.ramp_window;
        const double p_risky =
            in_ramp ? cfg.ramp_risky_probability : cfg.risky_bitmap_probability[ti];
        const std::uint64_t bits =
            r.uniform() < p_risky ? risky_bits(w, r) : benign_bits(w, r);
        ev.bitmap = ErrorBitmap(w, bits);
      }
      fleet.ce_events.push_back(std::move(ev));
    }
    if (fault.observed_ue) fleet.ue_events.push_back(UEEvent{fault.observed_ue, id});
    fleet.truth.faults.push_back(std::move(fault));
  }

  auto order = [](const auto& a, const auto& b) {
    if (a.dimm_id != b.dimm_id) return a.dimm_id < b.dimm_id;
    return a.ts < b.ts;
  };
  std::stable_sort(fleet.ce_events.begin(), fleet.ce_events.end(), order);
  std::stable_sort(fleet.ue_events.begin(), fleet.ue_events.end(), order);
  return fleet;
}

void write_ground_truth(const GroundTruth& truth, std::ostream& out, const std::string& meta) {
  if (!meta.empty()) out << "# " << meta << '\n';
  for (const auto& f : truth.faults) {
    json j;
    j["dimm"] = f.dimm_id;
    j["fault_type"] = fault_type_name(f.type);
    j["onset"] = f.onset;
    j["rank"] = f.anchor.rank;
    j["device"] = f.anchor.device;
    j["bankgroup"] = f.anchor.bank_group;
    j["bank"] = f.anchor.bank;
    j["row"] = f.anchor.row;
    j["col"] = f.anchor.column;
    j["escalated"] = f.escalated;
    if (f.scheduled_ue) j["scheduled_ue"] = f.scheduled_ue;
    if (f.observed_ue) j["observed_ue"] = f.observed_ue;
    out << j.dump() << '\n';
  }
}

GroundTruth load_ground_truth(std::istream& in) {
  GroundTruth truth;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    json j = json::parse(line);
    InjectedFault f;
    f.dimm_id = j["dimm"].get<std::string>();
    f.type = fault_type_from_name(j["fault_type"].get<std::string>());
    f.onset = j["onset"].get<Timestamp>();
    f.anchor.rank = j["rank"].get<int>();
    f.anchor.device = j["device"].get<int>();
    f.anchor.bank_group = j["bankgroup"].get<int>();
    f.anchor.bank = j["bank"].get<int>();
    f.anchor.row = j["row"].get<int>();
    f.anchor.column = j["col"].get<int>();
    f.escalated = j["escalated"].get<bool>();
    if (j.contains("scheduled_ue")) f.scheduled_ue = j["scheduled_ue"].get<Timestamp>();
    if (j.contains("observed_ue")) f.observed_ue = j["observed_ue"].get<Timestamp>();
    truth.faults.push_back(std::move(f));
  }
  return truth;
}

}  // namespace memfp
