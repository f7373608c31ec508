#include "memfp/log_ingest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace memfp {

using nlohmann::json;

namespace {

struct PendingCE {
  CEEvent ev;
  std::size_t line_no;
};
struct PendingUE {
  UEEvent ev;
  std::size_t line_no;
};

int require_int(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer())
    throw std::invalid_argument(std::string("missing/non-integer field '") + key + "'");
  return j[key].get<int>();
}

}  // namespace

EventLog parse_events(std::istream& in) {
  if (!in.good()) throw IoError("unreadable event stream");

  EventLog log;
  std::vector<PendingCE> ces;
  std::vector<PendingUE> ues;
  std::string line;
  std::size_t line_no = 0;

  auto warn = [&](const std::string& msg) {
    log.warnings.push_back("line " + std::to_string(line_no) + ": " + msg);
    ++log.stats.dropped;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      warn("not a valid record");
      continue;
    }
    try {
      if (!j.contains("type") || !j["type"].is_string())
        throw std::invalid_argument("missing record type");
      const std::string type = j["type"].get<std::string>();
      const Timestamp ts = j.contains("ts") && j["ts"].is_number_integer()
                               ? j["ts"].get<Timestamp>()
                               : throw std::invalid_argument("missing/non-integer ts");
      if (ts <= 0) throw std::invalid_argument("non-positive ts");
      if (!j.contains("dimm") || !j["dimm"].is_string() || j["dimm"].get<std::string>().empty())
        throw std::invalid_argument("missing dimm id");
      const std::string dimm = j["dimm"].get<std::string>();

      if (type == "CE") {
        CEEvent ev;
        ev.ts = ts;
        ev.dimm_id = dimm;
        ev.address.socket = require_int(j, "socket");
        ev.address.channel = require_int(j, "channel");
        ev.address.slot = require_int(j, "slot");
        ev.address.rank = require_int(j, "rank");
        ev.address.device = require_int(j, "device");
        ev.address.bank_group = require_int(j, "bankgroup");
        ev.address.bank = require_int(j, "bank");
        ev.address.row = require_int(j, "row");
        ev.address.column = require_int(j, "col");
        if (ev.address.rank < 0 || ev.address.device < 0 || ev.address.bank_group < 0 ||
            ev.address.bank < 0 || ev.address.row < 0 || ev.address.column < 0)
          throw std::invalid_argument("negative address field");
        if (j.contains("bitmap")) {
          if (!j["bitmap"].is_string()) throw std::invalid_argument("bitmap not a string");
          std::string hex = j["bitmap"].get<std::string>();
          std::string_view digits(hex);
          if (digits.substr(0, 2) == "0x") digits.remove_prefix(2);
          // Width is carried by the hex length: 8 digits = x4, 16 = x8.
          int width;
          if (digits.size() == 8) width = 4;
          else if (digits.size() == 16) width = 8;
          else throw std::invalid_argument("bitmap hex of wrong length");
          ev.bitmap = ErrorBitmap::from_hex(width, hex);
        }
        ces.push_back({std::move(ev), line_no});
      } else if (type == "UE") {
        ues.push_back({UEEvent{ts, dimm}, line_no});
      } else {
        throw std::invalid_argument("unknown record type '" + type + "'");
      }
      ++log.stats.accepted;
    } catch (const std::exception& e) {
      warn(e.what());
    }
  }
  if (in.bad()) throw IoError("unreadable event stream");

  auto order = [](const auto& a, const auto& b) {
    if (a.ev.dimm_id != b.ev.dimm_id) return a.ev.dimm_id < b.ev.dimm_id;
    return a.ev.ts < b.ev.ts;
  };
  std::stable_sort(ces.begin(), ces.end(), order);
  std::stable_sort(ues.begin(), ues.end(), order);

  // Exact duplicates share a (dimm, ts) tie group after the stable sort.
  std::vector<std::size_t> dup_lines;
  auto dedup = [&](auto& pending, auto& out) {
    std::vector<char> dup(pending.size(), 0);
    for (std::size_t i = 0; i < pending.size(); ++i) {
      for (std::size_t k = i; k-- > 0;) {
        if (pending[k].ev.dimm_id != pending[i].ev.dimm_id ||
            pending[k].ev.ts != pending[i].ev.ts)
          break;
        if (!dup[k] && pending[k].ev == pending[i].ev) {
          dup[i] = 1;
          break;
        }
      }
    }
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (dup[i])
        dup_lines.push_back(pending[i].line_no);
      else
        out.push_back(std::move(pending[i].ev));
    }
  };
  dedup(ces, log.ce_events);
  dedup(ues, log.ue_events);
  std::sort(dup_lines.begin(), dup_lines.end());
  for (std::size_t ln : dup_lines) {
    log.warnings.push_back("line " + std::to_string(ln) + ": duplicate event dropped");
    ++log.stats.dropped;
    --log.stats.accepted;
  }
  return log;
}

EventLog parse_events_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open event log: " + path);
  return parse_events(in);
}

void serialize_events(const std::vector<CEEvent>& ce, const std::vector<UEEvent>& ue,
                      std::ostream& out) {
  std::size_t ci = 0, ui = 0;
  auto emit_ce = [&](const CEEvent& ev) {
    json j;
    j["ts"] = ev.ts;
    j["dimm"] = ev.dimm_id;
    j["type"] = "CE";
    j["socket"] = ev.address.socket;
    j["channel"] = ev.address.channel;
    j["slot"] = ev.address.slot;
    j["rank"] = ev.address.rank;
    j["device"] = ev.address.device;
    j["bankgroup"] = ev.address.bank_group;
    j["bank"] = ev.address.bank;
    j["row"] = ev.address.row;
    j["col"] = ev.address.column;
    if (ev.bitmap) j["bitmap"] = ev.bitmap->to_hex();
    out << j.dump() << '\n';
  };
  auto emit_ue = [&](const UEEvent& ev) {
    json j;
    j["ts"] = ev.ts;
    j["dimm"] = ev.dimm_id;
    j["type"] = "UE";
    out << j.dump() << '\n';
  };
  // Interleave so the stream stays ordered by (dimm, ts).
  while (ci < ce.size() || ui < ue.size()) {
    bool take_ce;
    if (ci == ce.size()) take_ce = false;
    else if (ui == ue.size()) take_ce = true;
    else if (ce[ci].dimm_id != ue[ui].dimm_id) take_ce = ce[ci].dimm_id < ue[ui].dimm_id;
    else take_ce = ce[ci].ts <= ue[ui].ts;
    if (take_ce) emit_ce(ce[ci++]);
    else emit_ue(ue[ui++]);
  }
}

DimmSpecTable load_dimm_specs(std::istream& in) {
  if (!in.good()) throw IoError("unreadable spec stream");
  std::string line;
  std::vector<std::string> header;
  DimmSpecTable table;
  const std::vector<std::string> required = {"dimm_id",   "manufacturer", "capacity_gb",
                                             "width",     "freq_mhz",     "process",
                                             "server_age_days"};
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto fields = split(line, ',');
    if (!have_header) {
      header = fields;
      for (const auto& col : required)
        if (std::find(header.begin(), header.end(), col) == header.end())
          throw IoError("spec table missing required column: " + col);
      have_header = true;
      continue;
    }
    if (fields.size() != header.size())
      throw IoError("spec row has " + std::to_string(fields.size()) + " fields, expected " +
                    std::to_string(header.size()));
    auto get = [&](const std::string& col) -> const std::string& {
      auto it = std::find(header.begin(), header.end(), col);
      return fields[static_cast<std::size_t>(it - header.begin())];
    };
    DimmSpec spec;
    spec.dimm_id = get("dimm_id");
    spec.manufacturer = get("manufacturer");
    spec.capacity_gb = std::stoi(get("capacity_gb"));
    const std::string& width = get("width");
    if (width == "x4") spec.data_width = DataWidth::x4;
    else if (width == "x8") spec.data_width = DataWidth::x8;
    else throw IoError("unknown width token: " + width);
    spec.frequency_mhz = std::stoi(get("freq_mhz"));
    spec.process_class = get("process");
    spec.server_age_days = std::stoi(get("server_age_days"));
    if (spec.server_age_days < 0) throw IoError("negative server_age_days: " + spec.dimm_id);
    if (!table.emplace(spec.dimm_id, spec).second)
      throw IoError("duplicate dimm_id in spec table: " + spec.dimm_id);
  }
  if (!have_header && in.eof()) return table;  // empty stream -> empty table
  return table;
}

DimmSpecTable load_dimm_specs_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spec table: " + path);
  return load_dimm_specs(in);
}

void serialize_dimm_specs(const DimmSpecTable& specs, std::ostream& out) {
  out << "dimm_id,manufacturer,capacity_gb,width,freq_mhz,process,server_age_days\n";
  for (const auto& [id, s] : specs) {
    out << id << ',' << s.manufacturer << ',' << s.capacity_gb << ','
        << (s.data_width == DataWidth::x4 ? "x4" : "x8") << ',' << s.frequency_mhz << ','
        << s.process_class << ',' << s.server_age_days << '\n';
  }
}

}  // namespace memfp
