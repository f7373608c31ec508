#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "memfp/types.hpp"

namespace memfp {

struct ParseStats {
  std::size_t accepted = 0;
  std::size_t dropped = 0;  // malformed + duplicate lines
};

struct EventLog {
  std::vector<CEEvent> ce_events;  // sorted by (dimm_id, ts), input order on ties
  std::vector<UEEvent> ue_events;
  std::vector<std::string> warnings;
  ParseStats stats;
};

using DimmSpecTable = std::map<std::string, DimmSpec>;

/// Parse a line-delimited event log. Malformed lines become warnings,
/// exact duplicates are dropped with a warning; only an unreadable
/// stream is fatal. Lines starting with '#' are metadata and skipped.
EventLog parse_events(std::istream& in);
EventLog parse_events_file(const std::string& path);

void serialize_events(const std::vector<CEEvent>& ce, const std::vector<UEEvent>& ue,
                      std::ostream& out);

/// CSV with header dimm_id,manufacturer,capacity_gb,width,freq_mhz,process,server_age_days.
/// Duplicate ids, missing columns and unknown width tokens are fatal.
DimmSpecTable load_dimm_specs(std::istream& in);
DimmSpecTable load_dimm_specs_file(const std::string& path);

void serialize_dimm_specs(const DimmSpecTable& specs, std::ostream& out);

}  // namespace memfp
