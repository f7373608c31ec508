#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "memfp/log_ingest.hpp"

namespace memfp {

enum class FaultType { transient_cell, stuck_cell, row, column, bank, device };
constexpr std::size_t kFaultTypes = 6;

const char* fault_type_name(FaultType t);
FaultType fault_type_from_name(const std::string& name);

struct GeneratorConfig {
  std::size_t n_dimms = 500;
  int duration_days = 90;
  Timestamp start_ts = 1'600'000'000;
  double fault_probability = 0.7;  // per DIMM; the rest stay silent

  // Indexed by FaultType: transient_cell, stuck_cell, row, column, bank, device.
  std::array<double, kFaultTypes> mixture_weights = {0.25, 0.20, 0.20, 0.15, 0.10, 0.10};
  std::array<double, kFaultTypes> ce_rate_per_day = {1.5, 1.5, 2.0, 2.0, 3.0, 4.0};
  std::array<double, kFaultTypes> escalation_probability = {0.05, 0.05, 0.3, 0.3, 0.5, 0.8};
  // Per-CE chance of a risky-profile bitmap outside the pre-UE ramp.
  std::array<double, kFaultTypes> risky_bitmap_probability = {0.01, 0.01, 0.03, 0.03, 0.06, 0.08};

  double escalation_delay_min_days = 2.0;  // bounded uniform
  double escalation_delay_max_days = 20.0;
  Duration ramp_window = 48 * kHour;  // risky bitmaps intensify before the UE
  double ramp_risky_probability = 0.85;
  double ramp_rate_multiplier = 6.0;  // CE arrivals accelerate inside the ramp
  double bitmap_omission_probability = 0.05;

  std::uint64_t seed = 1;

  void validate() const;
};

struct InjectedFault {
  std::string dimm_id;
  FaultType type = FaultType::transient_cell;
  Timestamp onset = 0;
  MemoryAddress anchor;          // fixed coordinates of the fault
  bool escalated = false;
  Timestamp scheduled_ue = 0;    // 0 when not escalated
  Timestamp observed_ue = 0;     // 0 when the UE falls past the horizon
};

struct GroundTruth {
  std::vector<InjectedFault> faults;
};

struct SyntheticFleet {
  std::vector<CEEvent> ce_events;  // sorted by (dimm_id, ts)
  std::vector<UEEvent> ue_events;
  DimmSpecTable specs;
  GroundTruth truth;
};

/// Fully deterministic given cfg.seed; per-DIMM streams use derived
/// sub-seeds so generation order never changes the output.
SyntheticFleet generate(const GeneratorConfig& cfg);

void write_ground_truth(const GroundTruth& truth, std::ostream& out, const std::string& meta = "");
GroundTruth load_ground_truth(std::istream& in);

}  // namespace memfp
